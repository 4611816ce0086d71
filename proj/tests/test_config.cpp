#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "ivreach/runner.hpp"

using namespace ivreach;
using Catch::Approx;

namespace {

json sample_config() {
    return json::parse(R"json({
      "system": {"builtin": "pendulum"},
      "method": {"kind": "nat"},
      "initial": {"lower": [0.25, -0.05], "upper": [0.35, 0.05]},
      "disturbance": {"lower": [-0.01], "upper": [0.01]},
      "controller": {"kind": "none", "open_loop_lower": [0.0], "open_loop_upper": [0.1]},
      "integrator": "euler",
      "dt": 0.01,
      "horizon": 0.5,
      "partitions": [2, 1],
      "mc_samples": 40,
      "format": "csv"
    })json");
}

}  // namespace

TEST_CASE("config parse -> serialize -> parse is the identity") {
    const auto cfg1 = sample_config().get<ExperimentConfig>();
    const json j1 = cfg1;
    const auto cfg2 = j1.get<ExperimentConfig>();
    const json j2 = cfg2;
    CHECK(j1 == j2);

    SynthesisConfigFile s1;
    s1.N = 20;
    s1.Ne = 15;
    s1.initial_guess = std::vector<double>(22, 0.1);
    const json js1 = s1;
    const auto s2 = js1.get<SynthesisConfigFile>();
    const json js2 = s2;
    CHECK(js1 == js2);
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(json::parse(R"({"systemm": {}})").get<ExperimentConfig>(), ConfigError);
    json bad = sample_config();
    bad["dt"] = -1.0;
    CHECK_THROWS_AS(bad.get<ExperimentConfig>(), ConfigError);
    json unk = sample_config();
    unk["extra_key"] = 1;
    CHECK_THROWS_AS(unk.get<ExperimentConfig>(), ConfigError);
    json fmt = sample_config();
    fmt["format"] = "xml";
    CHECK_THROWS_AS(fmt.get<ExperimentConfig>(), ConfigError);
}

TEST_CASE("expression systems come from the textual form") {
    json cfg = sample_config();
    cfg["system"] = json{{"expr", "[x2, -sin(x1) - 0.2*x2 + w1]"}};
    const auto parsed = cfg.get<ExperimentConfig>();
    const System sys = parsed.system.build();
    CHECK(sys.xlen == 2);
    CHECK(sys.wlen() == 1);
    CHECK(sys.ulen() == 0);
}

TEST_CASE("reach run writes bounds, summary and passes its own mc check") {
    const auto out_dir = std::filesystem::temp_directory_path() / "ivreach_test_run";
    std::filesystem::remove_all(out_dir);
    std::filesystem::create_directories(out_dir);
    auto cfg = sample_config().get<ExperimentConfig>();
    cfg.workers = 1;
    const auto summary = run_reach(cfg, out_dir, 7);
    CHECK(summary.cells == 2);
    CHECK(summary.failed_cells == 0);
    CHECK(summary.containment_ok);
    CHECK(std::filesystem::exists(out_dir / "summary.json"));
    CHECK(std::filesystem::exists(out_dir / "cells" / "cell_000000.csv"));

    SECTION("csv bounds round-trip exactly") {
        const Trajectory tr = read_cell_csv(out_dir / "cells" / "cell_000000.csv", 2);
        const ReachSetup rs = build_reach_setup(cfg);
        const auto grid = grid_partition(rs.initial, cfg.partitions);
        const Trajectory direct = rollout_embedding(rs.emb, grid.cells[0], rs.disturbance,
                                                    rs.settings);
        REQUIRE(tr.states.size() == direct.states.size());
        for (std::size_t k = 0; k < tr.states.size(); ++k) {
            REQUIRE(tr.times[k] == direct.times[k]);
            for (std::size_t i = 0; i < 4; ++i) REQUIRE(tr.states[k][i] == direct.states[k][i]);
        }
    }

    SECTION("stored bounds validate under mc-check") {
        const auto rep = run_mc_check(cfg, out_dir, 11);
        CHECK(rep.samples > 0);
        CHECK(rep.ok());
        CHECK(std::filesystem::exists(out_dir / "mc_report.json"));
    }

    SECTION("json format mirrors the data") {
        auto jcfg = cfg;
        jcfg.format = "json";
        const auto jdir = std::filesystem::temp_directory_path() / "ivreach_test_run_json";
        std::filesystem::remove_all(jdir);
        std::filesystem::create_directories(jdir);
        (void)run_reach(jcfg, jdir, 7);
        CHECK(std::filesystem::exists(jdir / "trajectories.json"));
        const auto rep = run_mc_check(jcfg, jdir, 11);
        CHECK(rep.ok());
    }
}

TEST_CASE("thin initial state and disturbance reproduce the nominal rollout") {
    json cfg = sample_config();
    cfg["initial"] = json{{"lower", {0.3, 0.0}}, {"upper", {0.3, 0.0}}};
    cfg["disturbance"] = json{{"lower", {0.0}}, {"upper", {0.0}}};
    cfg["controller"] = json{{"kind", "none"},
                             {"open_loop_lower", {0.05}},
                             {"open_loop_upper", {0.05}}};
    cfg["partitions"] = {1, 1};
    const auto parsed = cfg.get<ExperimentConfig>();
    const ReachSetup rs = build_reach_setup(parsed);
    const Trajectory tube = rollout_embedding(rs.emb, rs.initial, rs.disturbance, rs.settings);
    // nominal rollout of the real field under the same grid
    const System sys = parsed.system.build();
    Field f = [&](double, const std::vector<double>& xs) {
        const auto out = eval_real(sys.f, std::vector<Tensor>{Tensor::vec(xs),
                                                              Tensor::vec({0.05}),
                                                              Tensor::vec({0.0})});
        return out[0].data();
    };
    const Trajectory nominal = euler_rollout(f, {0.3, 0.0}, parsed.t0, parsed.horizon, parsed.dt);
    REQUIRE(tube.times.size() == nominal.times.size());
    for (std::size_t k = 0; k < tube.times.size(); ++k)
        for (int i = 0; i < 2; ++i) {
            REQUIRE(std::abs(tube.states[k][i] - nominal.states[k][i]) < 1e-9);
            REQUIRE(std::abs(tube.states[k][2 + i] - nominal.states[k][i]) < 1e-9);
        }
}

TEST_CASE("linear feedback controller configs run end to end") {
    json cfg = sample_config();
    cfg["method"] = json{{"kind", "mjac"}};
    cfg["controller"] = json{{"kind", "linear"},
                             {"K", {{-0.5, -0.2}}},
                             {"u_ff", {{0.05}}}};
    const auto parsed = cfg.get<ExperimentConfig>();
    const auto out_dir = std::filesystem::temp_directory_path() / "ivreach_test_linear";
    std::filesystem::remove_all(out_dir);
    std::filesystem::create_directories(out_dir);
    const auto summary = run_reach(parsed, out_dir, 3);
    CHECK(summary.failed_cells == 0);
    CHECK(summary.containment_ok);
}
