#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ivreach/errors.hpp"

namespace ivreach {

struct Trajectory {
    std::vector<double> times;                // strictly increasing, starts at t0
    std::vector<std::vector<double>> states;  // one state vector per time
    std::string integrator;
    double dt = 0.0;
    double max_embedded_error = 0.0;  // Tsit5 only: max norm of the 4th-order defect

    const std::vector<double>& front() const { return states.front(); }
    const std::vector<double>& back() const { return states.back(); }
};

using Field = std::function<std::vector<double>(double, const std::vector<double>&)>;

namespace detail {

inline void check_finite(const std::vector<double>& x, double t) {
    for (double v : x)
        if (!std::isfinite(v))
            throw NonFiniteState("state diverged at t = " + std::to_string(t));
}

inline void check_rollout_args(double t0, double T, double dt) {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(T > t0)) throw ConfigError("horizon must satisfy T > t0");
}

}  // namespace detail

// Fixed-step forward Euler; the last step is truncated to land exactly on T.
inline Trajectory euler_rollout(const Field& f, std::vector<double> x0, double t0, double T,
                                double dt) {
    detail::check_rollout_args(t0, T, dt);
    Trajectory traj;
    traj.integrator = "euler";
    traj.dt = dt;
    double t = t0;
    detail::check_finite(x0, t);
    traj.times.push_back(t);
    traj.states.push_back(x0);
    while (t < T - 1e-12 * std::max(1.0, std::abs(T))) {
        const double h = std::min(dt, T - t);
        const auto dx = f(t, x0);
        for (std::size_t i = 0; i < x0.size(); ++i) x0[i] += h * dx[i];
        t += h;
        detail::check_finite(x0, t);
        traj.times.push_back(t);
        traj.states.push_back(x0);
    }
    return traj;
}

// Fixed-step Tsitouras 5(4). Only the 5th-order solution propagates; the
// embedded 4th-order value is kept as a defect diagnostic.
inline Trajectory tsit5_rollout(const Field& f, std::vector<double> x0, double t0, double T,
                                double dt) {
    detail::check_rollout_args(t0, T, dt);
    static const double c[6] = {0.161, 0.327, 0.9, 0.9800255409045097, 1.0, 1.0};
    static const double a21 = 0.161;
    static const double a31 = -0.008480655492356992, a32 = 0.3354806554923570;
    static const double a41 = 2.897153057105495, a42 = -6.359448489975075,
                        a43 = 4.362295432869581;
    static const double a51 = 5.32586482843926, a52 = -11.74888356406283,
                        a53 = 7.495539342889836, a54 = -0.09249506636175525;
    static const double a61 = 5.86145544294642, a62 = -12.92096931784711,
                        a63 = 8.159367898576159, a64 = -0.07158497328140100,
                        a65 = -0.02826905039406838;
    static const double b[6] = {0.09646076681806523, 0.01,          0.4798896504144996,
                                1.379008574103742,   -3.290069515436081, 2.324710524099774};
    static const double bhat[7] = {0.09824077787029123, 0.010816434459657,  0.4720087724042376,
                                   1.5237195812770048,  -3.872426680888636, 2.7827926300289607,
                                   -1.0 / 66.0};

    Trajectory traj;
    traj.integrator = "tsit5";
    traj.dt = dt;
    const std::size_t n = x0.size();
    double t = t0;
    detail::check_finite(x0, t);
    traj.times.push_back(t);
    traj.states.push_back(x0);
    std::vector<std::vector<double>> k(7, std::vector<double>(n));
    std::vector<double> stage(n);
    auto combine = [&](std::initializer_list<std::pair<const std::vector<double>*, double>> terms,
                       double h) {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = x0[i];
            for (const auto& [kv, w] : terms) acc += h * w * (*kv)[i];
            stage[i] = acc;
        }
    };
    while (t < T - 1e-12 * std::max(1.0, std::abs(T))) {
        const double h = std::min(dt, T - t);
        k[0] = f(t, x0);
        combine({{&k[0], a21}}, h);
        k[1] = f(t + c[0] * h, stage);
        combine({{&k[0], a31}, {&k[1], a32}}, h);
        k[2] = f(t + c[1] * h, stage);
        combine({{&k[0], a41}, {&k[1], a42}, {&k[2], a43}}, h);
        k[3] = f(t + c[2] * h, stage);
        combine({{&k[0], a51}, {&k[1], a52}, {&k[2], a53}, {&k[3], a54}}, h);
        k[4] = f(t + c[3] * h, stage);
        combine({{&k[0], a61}, {&k[1], a62}, {&k[2], a63}, {&k[3], a64}, {&k[4], a65}}, h);
        k[5] = f(t + c[4] * h, stage);
        std::vector<double> xnext(n);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = x0[i];
            for (int s = 0; s < 6; ++s) acc += h * b[s] * k[s][i];
            xnext[i] = acc;
        }
        k[6] = f(t + h, xnext);  // FSAL stage, used by the embedded estimate
        double defect = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double e = 0.0;
            for (int s = 0; s < 7; ++s)
                e += h * (bhat[s] - (s < 6 ? b[s] : 0.0)) * k[s][i];
            defect += e * e;
        }
        traj.max_embedded_error = std::max(traj.max_embedded_error, std::sqrt(defect));
        x0 = std::move(xnext);
        t += h;
        detail::check_finite(x0, t);
        traj.times.push_back(t);
        traj.states.push_back(x0);
    }
    return traj;
}

}  // namespace ivreach
