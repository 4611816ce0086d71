#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ivreach/config.hpp"
#include "ivreach/neural.hpp"
#include "ivreach/partition.hpp"

namespace ivreach {

namespace runner_detail {

inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::size_t step_index(double t, double t0, double dt, std::size_t max_index) {
    const double k = (t - t0) / dt;
    const long idx = std::lround(std::floor(k + 1e-9));
    return static_cast<std::size_t>(std::clamp<long>(idx, 0, static_cast<long>(max_index)));
}

}  // namespace runner_detail

// Everything needed to run one reachability experiment: the embedding, the
// boxes, and a matching simulator of the true (sampled) closed loop.
struct ReachSetup {
    System sys;
    EmbeddingSystem emb;
    Interval initial;
    Interval disturbance;
    RolloutSettings settings;
    // step the true system over one grid interval:
    // (t, step width, x, sampled w, rng for open-loop control draws)
    std::function<Tensor(double, double, const Tensor&, const Tensor&, std::mt19937_64&)>
        true_step;
};

namespace runner_detail {

inline Tensor rk_or_euler_step(const ExprGraph& g, const System& sys, const Tensor& x,
                               const Tensor& u, const Tensor& w, double t, double dt,
                               RolloutSettings::Integrator integ) {
    Field f = [&](double, const std::vector<double>& xs) {
        std::vector<Tensor> slots(g.inputs().size());
        slots[sys.slot_x] = Tensor::vec(xs);
        if (sys.slot_u >= 0) slots[sys.slot_u] = u;
        if (sys.slot_w >= 0) slots[sys.slot_w] = w;
        if (sys.slot_t >= 0) slots[sys.slot_t] = Tensor::vec({t});
        auto out = eval_real(g, slots);
        return out[0].data();
    };
    std::vector<double> x0 = x.data();
    Trajectory tr = integ == RolloutSettings::Integrator::euler
                        ? euler_rollout(f, std::move(x0), t, t + dt, dt)
                        : tsit5_rollout(f, std::move(x0), t, t + dt, dt);
    return Tensor::vec(tr.back());
}

}  // namespace runner_detail

inline ReachSetup build_reach_setup(const ExperimentConfig& cfg) {
    cfg.validate();
    ReachSetup rs;
    rs.sys = cfg.system.build();
    const System& sys = rs.sys;
    const std::size_t n = sys.xlen;
    if (cfg.initial_lower.size() != n)
        throw ConfigError("initial box dimension != state dimension " + std::to_string(n));
    rs.initial = make_interval(cfg.initial_lower, cfg.initial_upper);
    if (cfg.dist_lower.size() != sys.wlen())
        throw ConfigError("disturbance box dimension != w dimension " +
                          std::to_string(sys.wlen()));
    rs.disturbance = cfg.dist_lower.empty()
                         ? Interval::unchecked(Tensor::vec({}), Tensor::vec({}))
                         : make_interval(cfg.dist_lower, cfg.dist_upper);
    rs.settings.t0 = cfg.t0;
    rs.settings.horizon = cfg.horizon;
    rs.settings.dt = cfg.dt;
    rs.settings.integrator = cfg.integrator == "euler" ? RolloutSettings::Integrator::euler
                                                       : RolloutSettings::Integrator::tsit5;

    const std::string& ckind = cfg.controller.kind;
    if (ckind == "network") {
        NeuralNetwork net = load_network(cfg.controller.network_path);
        CornerSigns corner = CornerSigns::lower(n);
        if (!cfg.method.corner.empty()) {
            if (cfg.method.corner.size() != n) throw ConfigError("corner length != state dim");
            corner.x_upper.assign(cfg.method.corner.size(), false);
            for (std::size_t i = 0; i < n; ++i) corner.x_upper[i] = cfg.method.corner[i] != 0;
        }
        Ordering ord = Ordering::identity(sys.f.total_input_dim());
        if (!cfg.method.orderings.empty()) ord.perm = cfg.method.orderings.front();
        if (cfg.method.kind != "clnn" && cfg.method.kind != "mjac")
            throw ConfigError("a network controller uses the mixed-cornered closed-loop method");
        auto cl = closed_loop_nn_inclusion(sys, net, corner, ord);
        rs.emb = induced_embedding(sys, cl.field());
        rs.true_step = [sys, net, integ = rs.settings.integrator](
                           double t, double h, const Tensor& x, const Tensor& w,
                           std::mt19937_64&) {
            const Tensor u = net.forward(x);
            return runner_detail::rk_or_euler_step(sys.f, sys, x, u, w, t, h, integ);
        };
        return rs;
    }

    if (ckind == "linear") {
        if (cfg.controller.K.empty()) throw ConfigError("linear controller needs K");
        const std::size_t p = sys.ulen();
        Tensor K(Shape{p, n});
        if (cfg.controller.K.size() != p) throw ConfigError("K row count != control dimension");
        for (std::size_t i = 0; i < p; ++i) {
            if (cfg.controller.K[i].size() != n) throw ConfigError("K column count != state dim");
            for (std::size_t j = 0; j < n; ++j) K(i, j) = cfg.controller.K[i][j];
        }
        const std::size_t steps = static_cast<std::size_t>(
            std::ceil((cfg.horizon - cfg.t0) / cfg.dt - 1e-9));
        std::vector<Tensor> uff(steps, Tensor::zeros(Shape{p}));
        for (std::size_t k = 0; k < steps; ++k) {
            if (!cfg.controller.u_ff.empty()) {
                const auto& row = cfg.controller.u_ff[std::min(k, cfg.controller.u_ff.size() - 1)];
                if (row.size() != p) throw ConfigError("u_ff row length != control dimension");
                for (std::size_t i = 0; i < p; ++i) uff[k][i] = row[i];
            }
        }
        // nominal trajectory from the initial-box midpoint, undisturbed
        std::vector<Tensor> xnom{rs.initial.midpoint()};
        const Tensor w0 = Tensor::zeros(Shape{sys.wlen()});
        for (std::size_t k = 0; k < steps; ++k) {
            std::vector<Tensor> slots(sys.f.inputs().size());
            slots[sys.slot_x] = xnom.back();
            if (sys.slot_u >= 0) slots[sys.slot_u] = uff[k];
            if (sys.slot_w >= 0) slots[sys.slot_w] = w0;
            if (sys.slot_t >= 0) slots[sys.slot_t] = Tensor::vec({cfg.t0 + cfg.dt * double(k)});
            auto f = eval_real(sys.f, slots);
            Tensor nx = xnom.back();
            for (std::size_t i = 0; i < n; ++i) nx[i] += cfg.dt * f[0][i];
            xnom.push_back(std::move(nx));
        }
        const Interval Kiv = Interval::thin(K);
        const double t0 = cfg.t0, dt = cfg.dt;
        IntervalField F = [sys, Kiv, uff, xnom, t0, dt](double t, const Interval& x,
                                                        const Interval& w) -> Interval {
            const std::size_t k = runner_detail::step_index(t, t0, dt, uff.size() - 1);
            std::vector<Interval> box(sys.f.inputs().size());
            std::vector<Tensor> center(sys.f.inputs().size());
            box[sys.slot_x] = x;
            center[sys.slot_x] = xnom[k];
            // control argument covers the feedback range, not just u_ff
            box[sys.slot_u] =
                iv_matmul(Kiv, x - Interval::thin(xnom[k])) + Interval::thin(uff[k]);
            center[sys.slot_u] = uff[k];
            if (sys.slot_w >= 0) {
                box[sys.slot_w] = w;
                center[sys.slot_w] = Tensor::zeros(Shape{w.size()});
            }
            if (sys.slot_t >= 0) {
                box[sys.slot_t] = Interval::thin(Tensor::vec({t}));
                center[sys.slot_t] = Tensor::vec({t});
            }
            const auto M = detail::mjac_columns(sys.f, box, center,
                                                Ordering::identity(sys.f.total_input_dim()));
            const Interval MxK = M[sys.slot_x] + iv_matmul(M[sys.slot_u], Kiv);
            Interval acc = iv_matmul(MxK, x - Interval::thin(xnom[k])) +
                           Interval::thin(detail::eval_flat_at(sys.f, center));
            if (sys.slot_w >= 0 && w.size() > 0)
                acc = acc + iv_matmul(M[sys.slot_w], w - Interval::thin(center[sys.slot_w]));
            return acc;
        };
        rs.emb = induced_embedding(sys, std::move(F));
        rs.true_step = [sys, K, uff, xnom, t0, dt, integ = rs.settings.integrator](
                           double t, double h, const Tensor& x, const Tensor& w,
                           std::mt19937_64&) {
            const std::size_t k = runner_detail::step_index(t, t0, dt, uff.size() - 1);
            Tensor u = uff[k];
            for (std::size_t i = 0; i < u.size(); ++i)
                for (std::size_t j = 0; j < x.size(); ++j)
                    u[i] += K(i, j) * (x[j] - xnom[k][j]);
            return runner_detail::rk_or_euler_step(sys.f, sys, x, u, w, t, h, integ);
        };
        return rs;
    }

    if (ckind != "none") throw ConfigError("unknown controller kind '" + ckind + "'");

    // open loop: optional constant control interval
    ControlInput u;
    Interval ubox = Interval::unchecked(Tensor::vec({}), Tensor::vec({}));
    if (sys.ulen() > 0) {
        if (cfg.controller.open_loop_lower.size() != sys.ulen())
            throw ConfigError("system has a control slot; provide open_loop_lower/upper bounds");
        ubox = make_interval(cfg.controller.open_loop_lower, cfg.controller.open_loop_upper);
        u = ControlInput(ubox);
    }
    InclusionMethod method;
    if (cfg.method.kind == "nat")
        method = InclusionMethod::natural;
    else if (cfg.method.kind == "jac")
        method = InclusionMethod::jacobian;
    else if (cfg.method.kind == "mjac")
        method = InclusionMethod::mixed;
    else
        throw ConfigError("method kind must be nat|jac|mjac for open-loop systems");
    EmbeddingOptions opts;
    for (const auto& cmap : cfg.method.centers) {
        std::vector<Tensor> pts(sys.f.inputs().size());
        for (std::size_t s = 0; s < sys.f.inputs().size(); ++s) {
            const auto& name = sys.f.inputs()[s].name;
            auto it = cmap.find(name);
            if (it == cmap.end())
                throw ConfigError("center misses slot '" + name + "'");
            pts[s] = Tensor::vec(it->second);
        }
        opts.centers.push_back(Center::point(std::move(pts)));
    }
    for (const auto& perm : cfg.method.orderings) opts.orderings.push_back(Ordering{perm});
    rs.emb = make_embedding(sys, method, opts, u);
    rs.true_step = [sys, ubox, integ = rs.settings.integrator](
                       double t, double h, const Tensor& x, const Tensor& w,
                       std::mt19937_64& rng) {
        Tensor u_draw(Shape{ubox.size()});
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        for (std::size_t i = 0; i < u_draw.size(); ++i)
            u_draw[i] = ubox.lower()[i] + u01(rng) * (ubox.upper()[i] - ubox.lower()[i]);
        return runner_detail::rk_or_euler_step(sys.f, sys, x, u_draw, w, t, h, integ);
    };
    return rs;
}

struct McReport {
    int samples = 0;
    int violations = 0;
    bool ok() const { return violations == 0; }
};

// Check sampled true trajectories of one cell against its tube.
inline McReport mc_check_cell(const ReachSetup& rs, const Interval& cell, const Trajectory& tube,
                              int samples, std::uint64_t seed, std::size_t cell_index) {
    McReport rep;
    rep.samples = samples;
    const std::size_t n = rs.sys.xlen;
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL + cell_index * 0xbf58476d1ce4e5b9ULL));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int s = 0; s < samples; ++s) {
        Tensor x(Shape{n});
        for (std::size_t i = 0; i < n; ++i)
            x[i] = cell.lower()[i] + u01(rng) * (cell.upper()[i] - cell.lower()[i]);
        bool violated = false;
        for (std::size_t k = 0; k + 1 < tube.times.size() && !violated; ++k) {
            const double t = tube.times[k];
            const double h = tube.times[k + 1] - t;
            Tensor w(Shape{rs.sys.wlen()});
            for (std::size_t i = 0; i < w.size(); ++i)
                w[i] = rs.disturbance.lower()[i] +
                       u01(rng) * (rs.disturbance.upper()[i] - rs.disturbance.lower()[i]);
            // step on the tube's exact grid (the last step may be truncated)
            x = rs.true_step(t, h, x, w, rng);
            const auto& ut = tube.states[k + 1];
            for (std::size_t i = 0; i < n; ++i) {
                if (x[i] < ut[i] - 1e-9 || x[i] > ut[n + i] + 1e-9) {
                    violated = true;
                    break;
                }
            }
        }
        if (violated) ++rep.violations;
    }
    return rep;
}

struct ReachSummary {
    std::size_t cells = 0;
    std::size_t failed_cells = 0;
    int mc_samples = 0;
    int mc_violations = 0;
    double rollout_seconds = 0.0;
    bool containment_ok = false;
    std::vector<std::string> cell_errors;
};

inline void write_cell_csv(const std::filesystem::path& path, const Trajectory& tr,
                           std::size_t n) {
    std::ofstream out(path);
    out << "t";
    for (std::size_t i = 1; i <= n; ++i) out << ",xl_" << i;
    for (std::size_t i = 1; i <= n; ++i) out << ",xu_" << i;
    out << "\n";
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        out << runner_detail::fmt_g17(tr.times[k]);
        for (std::size_t i = 0; i < 2 * n; ++i)
            out << "," << runner_detail::fmt_g17(tr.states[k][i]);
        out << "\n";
    }
}

inline json trajectory_to_json(const Trajectory& tr, std::size_t n) {
    json lo = json::array(), hi = json::array(), times = json::array();
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        times.push_back(tr.times[k]);
        json l = json::array(), h = json::array();
        for (std::size_t i = 0; i < n; ++i) {
            l.push_back(tr.states[k][i]);
            h.push_back(tr.states[k][n + i]);
        }
        lo.push_back(std::move(l));
        hi.push_back(std::move(h));
    }
    return json{{"times", std::move(times)}, {"lower", std::move(lo)}, {"upper", std::move(hi)}};
}

// Full reach experiment: partition, parallel embedding rollouts, trajectory
// files, and the Monte Carlo containment report.
inline ReachSummary run_reach(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                              std::uint64_t seed) {
    const ReachSetup rs = build_reach_setup(cfg);
    std::vector<std::size_t> divisions = cfg.partitions;
    if (divisions.empty()) divisions.assign(rs.sys.xlen, 1);
    const PartitionGrid grid = grid_partition(rs.initial, divisions);

    const auto t_start = std::chrono::steady_clock::now();
    const auto results = run_partitions(rs.emb, grid, rs.disturbance, rs.settings, cfg.workers);
    const auto t_end = std::chrono::steady_clock::now();

    ReachSummary summary;
    summary.cells = grid.cells.size();
    summary.rollout_seconds = std::chrono::duration<double>(t_end - t_start).count();
    summary.cell_errors.resize(results.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!results[i].ok()) {
            ++summary.failed_cells;
            summary.cell_errors[i] = results[i].error;
        }
    }

    std::filesystem::create_directories(out_dir / "cells");
    json jcells = json::array();
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!results[i].ok()) continue;
        if (cfg.format == "csv") {
            char name[32];
            std::snprintf(name, sizeof name, "cell_%06zu.csv", i);
            write_cell_csv(out_dir / "cells" / name, *results[i].trajectory, rs.sys.xlen);
        } else {
            json jc = trajectory_to_json(*results[i].trajectory, rs.sys.xlen);
            jc["cell"] = i;
            jcells.push_back(std::move(jc));
        }
    }
    if (cfg.format == "json") {
        std::ofstream out(out_dir / "trajectories.json");
        out << json{{"cells", std::move(jcells)}}.dump(1) << "\n";
    }

    // Monte Carlo containment, split across cells
    const int per_cell = summary.cells == 0
                             ? 0
                             : static_cast<int>((cfg.mc_samples + summary.cells - 1) / summary.cells);
    std::vector<McReport> reports(results.size());
    parallel_for_slots(results.size(), cfg.workers, [&](std::size_t i) {
        if (results[i].ok() && per_cell > 0)
            reports[i] = mc_check_cell(rs, grid.cells[i], *results[i].trajectory, per_cell, seed, i);
    });
    for (const auto& r : reports) {
        summary.mc_samples += r.samples;
        summary.mc_violations += r.violations;
    }
    summary.containment_ok = summary.mc_violations == 0 && summary.failed_cells == 0;

    json jsummary{{"config", cfg},
                  {"cells", summary.cells},
                  {"failed_cells", summary.failed_cells},
                  {"rollout_seconds", summary.rollout_seconds},
                  {"mc_samples", summary.mc_samples},
                  {"mc_violations", summary.mc_violations},
                  {"containment_ok", summary.containment_ok},
                  {"seed", seed}};
    json jerr = json::array();
    for (std::size_t i = 0; i < results.size(); ++i)
        if (!results[i].ok()) jerr.push_back(json{{"cell", i}, {"error", summary.cell_errors[i]}});
    jsummary["cell_errors"] = std::move(jerr);
    std::ofstream out(out_dir / "summary.json");
    out << jsummary.dump(1) << "\n";
    return summary;
}

struct BenchRow {
    std::size_t cells = 0;
    std::string integrator;
    unsigned workers = 0;
    double mean_seconds = 0.0;
    double ratio_vs_single = 0.0;
};

// Timing table over partition counts and integrators: one warm-up run, then
// the mean over `repetitions` timed runs.
inline std::vector<BenchRow> run_benchmark(const ExperimentConfig& cfg,
                                           const std::filesystem::path& out_dir, bool smoke) {
    ReachSetup rs = build_reach_setup(cfg);
    std::vector<BenchRow> rows;
    const int reps = smoke ? 1 : cfg.bench_repetitions;
    for (const std::string& integ : cfg.bench_integrators) {
        rs.settings.integrator = integ == "euler" ? RolloutSettings::Integrator::euler
                                                  : RolloutSettings::Integrator::tsit5;
        double single_time = 0.0;
        for (std::size_t k : cfg.bench_axis_divisions) {
            const PartitionGrid grid =
                grid_partition(rs.initial, std::vector<std::size_t>(rs.sys.xlen, k));
            auto run_once = [&] {
                const auto t0 = std::chrono::steady_clock::now();
                auto res = run_partitions(rs.emb, grid, rs.disturbance, rs.settings, cfg.workers);
                const auto t1 = std::chrono::steady_clock::now();
                for (const auto& r : res)
                    if (!r.ok()) throw NonFiniteState("benchmark cell failed: " + r.error);
                return std::chrono::duration<double>(t1 - t0).count();
            };
            run_once();  // warm-up
            double total = 0.0;
            for (int r = 0; r < reps; ++r) total += run_once();
            BenchRow row;
            row.cells = grid.cells.size();
            row.integrator = integ;
            row.workers = cfg.workers == 0 ? std::thread::hardware_concurrency() : cfg.workers;
            row.mean_seconds = total / reps;
            if (k == 1) single_time = row.mean_seconds;
            row.ratio_vs_single = single_time > 0.0 ? row.mean_seconds / single_time : 0.0;
            rows.push_back(row);
        }
    }
    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir / "bench.csv");
    out << "partitions,integrator,workers,mean_seconds,ratio_vs_single\n";
    for (const auto& r : rows)
        out << r.cells << "," << r.integrator << "," << r.workers << ","
            << runner_detail::fmt_g17(r.mean_seconds) << ","
            << runner_detail::fmt_g17(r.ratio_vs_single) << "\n";
    return rows;
}

inline Trajectory read_cell_csv(const std::filesystem::path& path, std::size_t n) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    Trajectory tr;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> row;
        while (std::getline(ss, tok, ',')) row.push_back(std::stod(tok));
        if (row.size() != 1 + 2 * n) throw ConfigError("malformed row in " + path.string());
        tr.times.push_back(row[0]);
        tr.states.emplace_back(row.begin() + 1, row.end());
    }
    return tr;
}

// Validate a previous run's stored bounds against fresh Monte Carlo
// trajectories.
inline McReport run_mc_check(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                             std::uint64_t seed) {
    const ReachSetup rs = build_reach_setup(cfg);
    std::vector<std::size_t> divisions = cfg.partitions;
    if (divisions.empty()) divisions.assign(rs.sys.xlen, 1);
    const PartitionGrid grid = grid_partition(rs.initial, divisions);

    std::vector<Trajectory> tubes(grid.cells.size());
    if (cfg.format == "csv") {
        for (std::size_t i = 0; i < grid.cells.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "cell_%06zu.csv", i);
            tubes[i] = read_cell_csv(out_dir / "cells" / name, rs.sys.xlen);
        }
    } else {
        std::ifstream in(out_dir / "trajectories.json");
        if (!in) throw ConfigError("cannot open trajectories.json");
        json doc;
        in >> doc;
        for (const auto& jc : doc.at("cells")) {
            const std::size_t i = jc.at("cell").get<std::size_t>();
            Trajectory tr;
            tr.times = jc.at("times").get<std::vector<double>>();
            const auto lo = jc.at("lower").get<std::vector<std::vector<double>>>();
            const auto hi = jc.at("upper").get<std::vector<std::vector<double>>>();
            for (std::size_t k = 0; k < tr.times.size(); ++k) {
                std::vector<double> ut = lo[k];
                ut.insert(ut.end(), hi[k].begin(), hi[k].end());
                tr.states.push_back(std::move(ut));
            }
            tubes[i] = std::move(tr);
        }
    }

    const int per_cell =
        static_cast<int>((cfg.mc_samples + grid.cells.size() - 1) / grid.cells.size());
    std::vector<McReport> reports(grid.cells.size());
    parallel_for_slots(grid.cells.size(), cfg.workers, [&](std::size_t i) {
        if (!tubes[i].times.empty())
            reports[i] = mc_check_cell(rs, grid.cells[i], tubes[i], per_cell, seed, i);
    });
    McReport total;
    for (const auto& r : reports) {
        total.samples += r.samples;
        total.violations += r.violations;
    }
    json jrep{{"samples", total.samples}, {"violations", total.violations}, {"ok", total.ok()}};
    std::ofstream out(out_dir / "mc_report.json");
    out << jrep.dump(1) << "\n";
    return total;
}

}  // namespace ivreach
