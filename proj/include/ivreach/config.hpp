#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ivreach/expr_parse.hpp"
#include "ivreach/synthesis.hpp"
#include "ivreach/systems.hpp"

namespace ivreach {

using nlohmann::json;

// ---------------------------------------------------------------------------
// reach / bench / mc-check configuration

struct SystemSpec {
    std::string builtin;  // "vehicle" | "pendulum" | "" (expression)
    std::string expr;     // textual vector field when builtin is empty
    long xlen = -1, ulen = -1, wlen = -1;  // optional dimension overrides for expr
    double vehicle_lr = 1.0;

    System build() const {
        if (builtin == "vehicle") return vehicle_system(vehicle_lr);
        if (builtin == "pendulum") return pendulum_system();
        if (!builtin.empty()) throw ConfigError("unknown builtin system '" + builtin + "'");
        if (expr.empty()) throw ConfigError("system needs either a builtin name or an expression");
        exprtext::SlotDims dims;
        dims.x = xlen;
        dims.u = ulen;
        dims.w = wlen;
        ExprGraph g = exprtext::parse(expr, dims);
        const std::size_t n = g.slot_dim("x");
        return System::from_graph(std::move(g), n);
    }
};

struct MethodSpec {
    std::string kind = "nat";  // nat | jac | mjac | clnn
    // explicit centers: one map per center, slot name -> point
    std::vector<std::map<std::string, std::vector<double>>> centers;
    std::vector<std::vector<std::size_t>> orderings;  // 0-based permutations
    std::vector<int> corner;                          // clnn: 0 = lower, 1 = upper per state coord
};

struct ControllerSpec {
    std::string kind = "none";  // none | network | linear
    std::string network_path;
    std::vector<std::vector<double>> K;     // linear: (p x n)
    std::vector<std::vector<double>> u_ff;  // linear: one p-vector per step (zero-order hold)
    std::vector<double> open_loop_lower, open_loop_upper;  // optional interval control
};

struct ExperimentConfig {
    SystemSpec system;
    MethodSpec method;
    std::vector<double> initial_lower, initial_upper;
    std::vector<double> dist_lower, dist_upper;
    ControllerSpec controller;
    std::string integrator = "euler";  // euler | tsit5
    double t0 = 0.0;
    double dt = 0.01;
    double horizon = 1.0;
    std::vector<std::size_t> partitions;  // per-axis division counts; empty -> all 1
    unsigned workers = 0;                 // 0 -> hardware concurrency
    int mc_samples = 100;
    std::string format = "csv";  // csv | json

    // bench-only knobs
    std::vector<std::size_t> bench_axis_divisions = {1, 2, 3, 4, 5};
    std::vector<std::string> bench_integrators = {"euler"};
    int bench_repetitions = 10;

    void validate() const {
        if (initial_lower.size() != initial_upper.size() || initial_lower.empty())
            throw ConfigError("initial box must have matching non-empty bounds");
        if (dist_lower.size() != dist_upper.size())
            throw ConfigError("disturbance bounds must have matching lengths");
        if (!(dt > 0.0)) throw ConfigError("dt must be positive");
        if (!(horizon > t0)) throw ConfigError("horizon must exceed t0");
        if (integrator != "euler" && integrator != "tsit5")
            throw ConfigError("integrator must be euler or tsit5");
        if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
        if (mc_samples < 0) throw ConfigError("mc_samples must be >= 0");
    }
};

// ---------------------------------------------------------------------------
// synthesis configuration

struct SynthesisConfigFile {
    int N = 60;
    double dt = 0.05;
    int Ne = 40;
    std::vector<double> terminal_center = {3.141592653589793, 0.0};
    std::vector<double> terminal_pert = {10.0 * 3.141592653589793 / 360.0, 0.1};
    double w_lo = -0.02, w_hi = 0.02;
    double weight_u = 1.0, weight_K = 1.0, weight_tube = 1.0;
    SynthesisOptions optimizer;
    std::vector<double> initial_guess;  // empty -> zeros

    SynthesisProblem build() const {
        SynthesisProblem p;
        p.sys = pendulum_system();
        p.N = N;
        p.dt = dt;
        p.Ne = Ne;
        p.x0 = Tensor::vec({0.0, 0.0});
        p.terminal = center_pert(terminal_center, terminal_pert);
        p.w_lo = w_lo;
        p.w_hi = w_hi;
        p.weight_u = weight_u;
        p.weight_K = weight_K;
        p.weight_tube = weight_tube;
        p.validate();
        return p;
    }
};

// ---------------------------------------------------------------------------
// JSON (de)serialization; unknown keys are rejected to keep configs honest.

namespace cfgdetail {

inline void expect_keys(const json& j, std::initializer_list<const char*> keys,
                        const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : keys)
            if (it.key() == k) known = true;
        if (!known) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

template <class T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace cfgdetail

inline void to_json(json& j, const SystemSpec& s) {
    j = json::object();
    if (!s.builtin.empty()) j["builtin"] = s.builtin;
    if (!s.expr.empty()) j["expr"] = s.expr;
    if (s.xlen >= 0) j["xlen"] = s.xlen;
    if (s.ulen >= 0) j["ulen"] = s.ulen;
    if (s.wlen >= 0) j["wlen"] = s.wlen;
    if (s.builtin == "vehicle") j["lr"] = s.vehicle_lr;
}
inline void from_json(const json& j, SystemSpec& s) {
    cfgdetail::expect_keys(j, {"builtin", "expr", "xlen", "ulen", "wlen", "lr"}, "system");
    cfgdetail::maybe(j, "builtin", s.builtin);
    cfgdetail::maybe(j, "expr", s.expr);
    cfgdetail::maybe(j, "xlen", s.xlen);
    cfgdetail::maybe(j, "ulen", s.ulen);
    cfgdetail::maybe(j, "wlen", s.wlen);
    cfgdetail::maybe(j, "lr", s.vehicle_lr);
}

inline void to_json(json& j, const MethodSpec& m) {
    j = json{{"kind", m.kind}};
    if (!m.centers.empty()) j["centers"] = m.centers;
    if (!m.orderings.empty()) j["orderings"] = m.orderings;
    if (!m.corner.empty()) j["corner"] = m.corner;
}
inline void from_json(const json& j, MethodSpec& m) {
    cfgdetail::expect_keys(j, {"kind", "centers", "orderings", "corner"}, "method");
    cfgdetail::maybe(j, "kind", m.kind);
    cfgdetail::maybe(j, "centers", m.centers);
    cfgdetail::maybe(j, "orderings", m.orderings);
    cfgdetail::maybe(j, "corner", m.corner);
}

inline void to_json(json& j, const ControllerSpec& c) {
    j = json{{"kind", c.kind}};
    if (!c.network_path.empty()) j["network"] = c.network_path;
    if (!c.K.empty()) j["K"] = c.K;
    if (!c.u_ff.empty()) j["u_ff"] = c.u_ff;
    if (!c.open_loop_lower.empty()) {
        j["open_loop_lower"] = c.open_loop_lower;
        j["open_loop_upper"] = c.open_loop_upper;
    }
}
inline void from_json(const json& j, ControllerSpec& c) {
    cfgdetail::expect_keys(j, {"kind", "network", "K", "u_ff", "open_loop_lower", "open_loop_upper"},
                           "controller");
    cfgdetail::maybe(j, "kind", c.kind);
    cfgdetail::maybe(j, "network", c.network_path);
    cfgdetail::maybe(j, "K", c.K);
    cfgdetail::maybe(j, "u_ff", c.u_ff);
    cfgdetail::maybe(j, "open_loop_lower", c.open_loop_lower);
    cfgdetail::maybe(j, "open_loop_upper", c.open_loop_upper);
}

inline void to_json(json& j, const ExperimentConfig& c) {
    j = json{{"system", c.system},
             {"method", c.method},
             {"initial", json{{"lower", c.initial_lower}, {"upper", c.initial_upper}}},
             {"controller", c.controller},
             {"integrator", c.integrator},
             {"t0", c.t0},
             {"dt", c.dt},
             {"horizon", c.horizon},
             {"workers", c.workers},
             {"mc_samples", c.mc_samples},
             {"format", c.format}};
    if (!c.dist_lower.empty())
        j["disturbance"] = json{{"lower", c.dist_lower}, {"upper", c.dist_upper}};
    if (!c.partitions.empty()) j["partitions"] = c.partitions;
    j["bench"] = json{{"axis_divisions", c.bench_axis_divisions},
                      {"integrators", c.bench_integrators},
                      {"repetitions", c.bench_repetitions}};
}
inline void from_json(const json& j, ExperimentConfig& c) {
    cfgdetail::expect_keys(j,
                           {"system", "method", "initial", "disturbance", "controller",
                            "integrator", "t0", "dt", "horizon", "partitions", "workers",
                            "mc_samples", "format", "bench"},
                           "config");
    c.system = j.at("system").get<SystemSpec>();
    if (j.contains("method")) c.method = j.at("method").get<MethodSpec>();
    const json& init = j.at("initial");
    c.initial_lower = init.at("lower").get<std::vector<double>>();
    c.initial_upper = init.at("upper").get<std::vector<double>>();
    if (j.contains("disturbance")) {
        c.dist_lower = j.at("disturbance").at("lower").get<std::vector<double>>();
        c.dist_upper = j.at("disturbance").at("upper").get<std::vector<double>>();
    }
    if (j.contains("controller")) c.controller = j.at("controller").get<ControllerSpec>();
    cfgdetail::maybe(j, "integrator", c.integrator);
    cfgdetail::maybe(j, "t0", c.t0);
    cfgdetail::maybe(j, "dt", c.dt);
    cfgdetail::maybe(j, "horizon", c.horizon);
    if (j.contains("partitions")) c.partitions = j.at("partitions").get<std::vector<std::size_t>>();
    cfgdetail::maybe(j, "workers", c.workers);
    cfgdetail::maybe(j, "mc_samples", c.mc_samples);
    cfgdetail::maybe(j, "format", c.format);
    if (j.contains("bench")) {
        const json& b = j.at("bench");
        cfgdetail::expect_keys(b, {"axis_divisions", "integrators", "repetitions"}, "bench");
        cfgdetail::maybe(b, "axis_divisions", c.bench_axis_divisions);
        cfgdetail::maybe(b, "integrators", c.bench_integrators);
        cfgdetail::maybe(b, "repetitions", c.bench_repetitions);
    }
    c.validate();
}

inline void to_json(json& j, const SynthesisOptions& o) {
    j = json{{"outer_iters", o.outer_iters}, {"inner_iters", o.inner_iters},
             {"mu0", o.mu0},                 {"mu_growth", o.mu_growth},
             {"step0", o.step0},             {"grad_tol", o.grad_tol},
             {"warm_start", o.warm_start},   {"warm_iters", o.warm_iters},
             {"mc_samples", o.mc_samples},   {"workers", o.workers}};
}
inline void from_json(const json& j, SynthesisOptions& o) {
    cfgdetail::expect_keys(j,
                           {"outer_iters", "inner_iters", "mu0", "mu_growth", "step0", "grad_tol",
                            "warm_start", "warm_iters", "mc_samples", "workers"},
                           "optimizer");
    cfgdetail::maybe(j, "outer_iters", o.outer_iters);
    cfgdetail::maybe(j, "inner_iters", o.inner_iters);
    cfgdetail::maybe(j, "mu0", o.mu0);
    cfgdetail::maybe(j, "mu_growth", o.mu_growth);
    cfgdetail::maybe(j, "step0", o.step0);
    cfgdetail::maybe(j, "grad_tol", o.grad_tol);
    cfgdetail::maybe(j, "warm_start", o.warm_start);
    cfgdetail::maybe(j, "warm_iters", o.warm_iters);
    cfgdetail::maybe(j, "mc_samples", o.mc_samples);
    cfgdetail::maybe(j, "workers", o.workers);
}

inline void to_json(json& j, const SynthesisConfigFile& s) {
    j = json{{"N", s.N},
             {"dt", s.dt},
             {"Ne", s.Ne},
             {"terminal", json{{"center", s.terminal_center}, {"pert", s.terminal_pert}}},
             {"disturbance", json{{"lower", s.w_lo}, {"upper", s.w_hi}}},
             {"weights",
              json{{"u", s.weight_u}, {"K", s.weight_K}, {"tube", s.weight_tube}}},
             {"optimizer", s.optimizer}};
    if (!s.initial_guess.empty()) j["initial_guess"] = s.initial_guess;
}
inline void from_json(const json& j, SynthesisConfigFile& s) {
    cfgdetail::expect_keys(
        j, {"N", "dt", "Ne", "terminal", "disturbance", "weights", "optimizer", "initial_guess"},
        "synthesis config");
    cfgdetail::maybe(j, "N", s.N);
    cfgdetail::maybe(j, "dt", s.dt);
    cfgdetail::maybe(j, "Ne", s.Ne);
    if (j.contains("terminal")) {
        s.terminal_center = j.at("terminal").at("center").get<std::vector<double>>();
        s.terminal_pert = j.at("terminal").at("pert").get<std::vector<double>>();
    }
    if (j.contains("disturbance")) {
        s.w_lo = j.at("disturbance").at("lower").get<double>();
        s.w_hi = j.at("disturbance").at("upper").get<double>();
    }
    if (j.contains("weights")) {
        const json& w = j.at("weights");
        cfgdetail::maybe(w, "u", s.weight_u);
        cfgdetail::maybe(w, "K", s.weight_K);
        cfgdetail::maybe(w, "tube", s.weight_tube);
    }
    if (j.contains("optimizer")) s.optimizer = j.at("optimizer").get<SynthesisOptions>();
    cfgdetail::maybe(j, "initial_guess", s.initial_guess);
}

}  // namespace ivreach
