// Command-line experiment runner: reachability runs, the pendulum
// control-synthesis demo, benchmark tables, and Monte Carlo re-checks of
// stored bounds.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "ivreach/runner.hpp"
#include "ivreach/synthesis.hpp"

namespace {

ivreach::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ivreach::ConfigError("cannot open config " + path);
    ivreach::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ivreach::ConfigError("invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"interval reachability and robust synthesis experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    unsigned workers = 0;
    std::uint64_t seed = 0;
    std::string format;

    auto add_common = [&](CLI::App* cmd, bool needs_config = true) {
        auto* opt = cmd->add_option("--config", config_path, "config file (JSON)");
        if (needs_config) opt->required();
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--workers", workers, "worker threads (0 = hardware)");
        cmd->add_option("--seed", seed, "RNG seed");
        cmd->add_option("--format", format, "csv|json (overrides config)");
    };

    auto* reach = app.add_subcommand("reach", "partitioned reachable-set run");
    add_common(reach);
    auto* synth = app.add_subcommand("synth", "pendulum robust swing-up synthesis");
    add_common(synth);
    auto* bench = app.add_subcommand("bench", "partition-count timing table");
    add_common(bench);
    bool smoke = false;
    bench->add_flag("--smoke", smoke, "single repetition per row");
    auto* mc = app.add_subcommand("mc-check", "Monte Carlo re-check of stored bounds");
    add_common(mc);

    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(out_dir);
        if (reach->parsed()) {
            auto cfg = load_json(config_path).get<ivreach::ExperimentConfig>();
            if (workers) cfg.workers = workers;
            if (!format.empty()) cfg.format = format;
            const auto summary = ivreach::run_reach(cfg, out_dir, seed);
            std::printf("cells=%zu failed=%zu rollout=%.3fs mc=%d/%d containment=%s\n",
                        summary.cells, summary.failed_cells, summary.rollout_seconds,
                        summary.mc_samples - summary.mc_violations, summary.mc_samples,
                        summary.containment_ok ? "ok" : "VIOLATED");
            return summary.containment_ok ? 0 : 2;
        }
        if (synth->parsed()) {
            auto scfg = load_json(config_path).get<ivreach::SynthesisConfigFile>();
            auto opts = scfg.optimizer;
            if (workers) opts.workers = workers;
            const auto problem = scfg.build();
            const auto res =
                ivreach::run_pendulum_synthesis(problem, opts, scfg.initial_guess, seed);
            std::printf("margin=%.6g feasible=%d mc_failures=%d certified=%d objective=%.6g\n",
                        res.margin, int(res.feasible), res.mc_failures, int(res.certified),
                        res.objective);
            ivreach::json jout{{"u_ff", res.u_ff},
                               {"K", {res.K(0, 0), res.K(0, 1)}},
                               {"objective", res.objective},
                               {"margin", res.margin},
                               {"feasible", res.feasible},
                               {"mc_failures", res.mc_failures},
                               {"certified", res.certified},
                               {"times", res.times},
                               {"tube", res.tube_ut},
                               {"nominal", res.nominal},
                               {"seed", seed}};
            std::ofstream out(std::filesystem::path(out_dir) / "synthesis.json");
            out << jout.dump(1) << "\n";
            // tube as the standard bounds CSV
            ivreach::Trajectory tr;
            tr.times = res.times;
            tr.states = res.tube_ut;
            tr.integrator = "euler";
            tr.dt = problem.dt;
            ivreach::write_cell_csv(std::filesystem::path(out_dir) / "tube.csv", tr,
                                    problem.sys.xlen);
            return res.certified ? 0 : 2;
        }
        if (bench->parsed()) {
            auto cfg = load_json(config_path).get<ivreach::ExperimentConfig>();
            if (workers) cfg.workers = workers;
            const auto rows = ivreach::run_benchmark(cfg, out_dir, smoke);
            std::printf("partitions integrator workers mean_s ratio\n");
            for (const auto& r : rows)
                std::printf("%10zu %10s %7u %8.4f %7.2f\n", r.cells, r.integrator.c_str(),
                            r.workers, r.mean_seconds, r.ratio_vs_single);
            return 0;
        }
        if (mc->parsed()) {
            auto cfg = load_json(config_path).get<ivreach::ExperimentConfig>();
            if (workers) cfg.workers = workers;
            if (!format.empty()) cfg.format = format;
            const auto rep = ivreach::run_mc_check(cfg, out_dir, seed);
            std::printf("samples=%d violations=%d %s\n", rep.samples, rep.violations,
                        rep.ok() ? "ok" : "VIOLATED");
            return rep.ok() ? 0 : 2;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
