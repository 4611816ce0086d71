#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "ivreach/partition.hpp"
#include "ivreach/systems.hpp"

namespace ivreach {

// Robust swing-up problem: find a feedforward schedule u_ff(t_i) and a
// static gain K so the embedding tube of the closed loop
// u = K (x - x_nom(t)) + u_ff(t) enters the terminal box and stays there
// for steps Ne..N under the multiplicative torque disturbance.
struct SynthesisProblem {
    System sys;               // slots (x, u, w), u and w scalar
    int N = 60;               // control steps
    double dt = 0.05;
    int Ne = 40;              // first constrained step index (1-based over steps)
    Tensor x0;                // initial state, tube starts thin here
    Interval terminal;        // [xf]
    double w_lo = -0.02, w_hi = 0.02;
    double weight_u = 1.0, weight_K = 1.0, weight_tube = 1.0;
    // The optimizer targets the terminal box shrunk by this amount so the
    // penalty method's residual violation still lands strictly inside the
    // real constraints; the certificate always checks the unshrunk box.
    double constraint_shrink = 1e-3;

    void validate() const {
        if (N < 1 || Ne < 1 || Ne > N) throw ConfigError("need 1 <= Ne <= N");
        if (!(dt > 0.0)) throw ConfigError("dt must be positive");
        if (terminal.size() != sys.xlen) throw ConfigError("terminal box dimension");
        if (!(w_lo <= w_hi)) throw ConfigError("disturbance bounds out of order");
        if (sys.ulen() != 1 || sys.wlen() != 1)
            throw ConfigError("synthesis expects scalar control and disturbance slots");
    }
};

struct SynthesisOptions {
    int outer_iters = 5;
    int inner_iters = 200;
    double mu0 = 100.0;
    double mu_growth = 10.0;
    double step0 = 2e-3;
    double grad_tol = 1e-7;
    bool warm_start = true;
    int warm_iters = 400;
    int mc_samples = 500;
    unsigned workers = 0;
};

struct SynthesisResult {
    std::vector<double> u_ff;  // N values
    Tensor K;                  // (1 x n)
    double objective = 0.0;
    double margin = 0.0;  // min over constrained steps/coordinates of g(u)
    bool feasible = false;             // margin >= -1e-6
    bool mc_ok = false;                // all disturbed rollouts satisfy the constraints
    bool certified = false;            // feasible && mc_ok
    int mc_failures = 0;
    std::vector<double> times;                 // N+1 grid times
    std::vector<std::vector<double>> tube_ut;  // embedding trajectory, 2n per step
    std::vector<std::vector<double>> nominal;  // nominal trajectory, n per step
    std::string message;
};

namespace detail {

template <class T>
struct ClosedLoopRollout {
    std::vector<TensorT<T>> xnom;      // N+1 entries
    std::vector<TensorT<T>> xlo, xhi;  // N+1 entries
};

// Inclusion function of the closed loop at one time step, evaluated on one
// face box: (Mx + Mu K)([x] - x_nom) + Mw ([w] - 0) + f(x_nom, u_ff, 0),
// with the mixed Jacobian matrices centered at the nominal point. The
// control argument handed to the matrix builder spans the whole feedback
// range u_ff + K ([x] - x_nom); a thin u_ff argument would evaluate the
// disturbance column at the feedforward value only and lose soundness by a
// K (x - x_nom) w cross term.
template <class T>
IntervalT<T> closed_loop_face(const SynthesisProblem& P, const IntervalT<T>& xface,
                              const TensorT<T>& xnom, const T& uff, const IntervalT<T>& Kiv) {
    const ExprGraph& g = P.sys.f;
    std::vector<IntervalT<T>> box(g.inputs().size());
    std::vector<TensorT<T>> center(g.inputs().size());
    if (P.sys.slot_t >= 0) {
        box[P.sys.slot_t] = IntervalT<T>::thin(TensorT<T>::vec({T(0.0)}));
        center[P.sys.slot_t] = TensorT<T>::vec({T(0.0)});
    }
    box[P.sys.slot_x] = xface;
    center[P.sys.slot_x] = xnom;
    box[P.sys.slot_u] = iv_matmul(Kiv, xface - IntervalT<T>::thin(xnom)) +
                        IntervalT<T>::thin(TensorT<T>::vec({uff}));
    center[P.sys.slot_u] = TensorT<T>::vec({uff});
    box[P.sys.slot_w] = IntervalT<T>::unchecked(TensorT<T>::vec({T(P.w_lo)}),
                                                TensorT<T>::vec({T(P.w_hi)}));
    center[P.sys.slot_w] = TensorT<T>::vec({T(0.0)});
    const auto M = mjac_columns(g, box, center, Ordering::identity(g.total_input_dim()));

    const IntervalT<T> MxK = M[P.sys.slot_x] + iv_matmul(M[P.sys.slot_u], Kiv);
    const IntervalT<T> dev = xface - IntervalT<T>::thin(xnom);
    const IntervalT<T> wdev = box[P.sys.slot_w];  // w_nom = 0
    const TensorT<T> fnom = eval_flat_at(g, center);
    return iv_matmul(MxK, dev) + iv_matmul(M[P.sys.slot_w], wdev) + IntervalT<T>::thin(fnom);
}

template <class T>
ClosedLoopRollout<T> rollout_closed_loop(const SynthesisProblem& P, const std::vector<T>& dec) {
    const std::size_t n = P.sys.xlen;
    const std::size_t N = static_cast<std::size_t>(P.N);
    if (dec.size() != N + n) throw ConfigError("decision vector must have N + n entries");
    const IntervalT<T> Kiv = IntervalT<T>::thin(
        TensorT<T>(Shape{1, n}, std::vector<T>(dec.begin() + static_cast<long>(N), dec.end())));

    ClosedLoopRollout<T> out;
    out.xnom.push_back(tensor_cast<T>(P.x0));
    out.xlo.push_back(tensor_cast<T>(P.x0));
    out.xhi.push_back(tensor_cast<T>(P.x0));
    const TensorT<T> wnom = TensorT<T>::vec({T(0.0)});

    for (std::size_t k = 0; k < N; ++k) {
        const T& uk = dec[k];
        const TensorT<T>& xnom = out.xnom.back();
        const TensorT<T>& xlo = out.xlo.back();
        const TensorT<T>& xhi = out.xhi.back();
        for (std::size_t i = 0; i < n; ++i) {
            const double lo = num::value_of(xlo[i]), hi = num::value_of(xhi[i]);
            if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
                throw NonFiniteState("embedding tube degenerated at step " + std::to_string(k));
        }

        TensorT<T> dlo(Shape{n}), dhi(Shape{n});
        for (std::size_t i = 0; i < n; ++i) {
            TensorT<T> hi_face = xhi;
            hi_face[i] = xlo[i];
            dlo[i] = closed_loop_face(P, IntervalT<T>::unchecked(xlo, std::move(hi_face)), xnom,
                                      uk, Kiv)
                         .lower()[i];
            TensorT<T> lo_face = xlo;
            lo_face[i] = xhi[i];
            dhi[i] = closed_loop_face(P, IntervalT<T>::unchecked(std::move(lo_face), xhi), xnom,
                                      uk, Kiv)
                         .upper()[i];
        }
        const auto fnom =
            eval_real(P.sys.f, std::vector<TensorT<T>>{xnom, TensorT<T>::vec({uk}), wnom});

        TensorT<T> nnom(Shape{n}), nlo(Shape{n}), nhi(Shape{n});
        for (std::size_t i = 0; i < n; ++i) {
            nnom[i] = xnom[i] + T(P.dt) * fnom[0][i];
            nlo[i] = xlo[i] + T(P.dt) * dlo[i];
            nhi[i] = xhi[i] + T(P.dt) * dhi[i];
        }
        out.xnom.push_back(std::move(nnom));
        out.xlo.push_back(std::move(nlo));
        out.xhi.push_back(std::move(nhi));
    }
    return out;
}

// Objective of the synthesis problem (decision regularization + tube area).
template <class T>
T synthesis_objective(const SynthesisProblem& P, const std::vector<T>& dec,
                      const ClosedLoopRollout<T>& roll) {
    const std::size_t N = static_cast<std::size_t>(P.N);
    const std::size_t n = P.sys.xlen;
    T obj(0.0);
    for (std::size_t k = 0; k < N; ++k) obj += T(P.weight_u) * dec[k] * dec[k];
    for (std::size_t j = 0; j < n; ++j) obj += T(P.weight_K) * dec[N + j] * dec[N + j];
    for (std::size_t k = 1; k <= N; ++k)
        for (std::size_t i = 0; i < n; ++i) {
            const T gap = roll.xhi[k][i] - roll.xlo[k][i];
            obj += T(P.weight_tube) * gap * gap;
        }
    return obj;
}

// Inequality constraints g(u) >= 0 over the constrained window; `shrink`
// tightens the box symmetrically (used by the optimizer, not the
// certificate).
template <class T>
std::vector<T> synthesis_constraints(const SynthesisProblem& P, const ClosedLoopRollout<T>& roll,
                                     double shrink = 0.0) {
    const std::size_t n = P.sys.xlen;
    std::vector<T> g;
    for (std::size_t k = static_cast<std::size_t>(P.Ne); k <= static_cast<std::size_t>(P.N); ++k) {
        for (std::size_t i = 0; i < n; ++i)
            g.push_back(roll.xlo[k][i] - T(P.terminal.lower()[i] + shrink));
        for (std::size_t i = 0; i < n; ++i)
            g.push_back(T(P.terminal.upper()[i] - shrink) - roll.xhi[k][i]);
    }
    return g;
}

template <class T>
T quadratic_penalty(const SynthesisProblem& P, const std::vector<T>& dec, double mu) {
    const auto roll = rollout_closed_loop(P, dec);
    T val = synthesis_objective(P, dec, roll);
    for (const T& gi : synthesis_constraints(P, roll, P.constraint_shrink)) {
        if (num::value_of(gi) < 0.0) val += T(mu) * gi * gi;
    }
    return val;
}

// Nominal-only tracking objective used for the warm start: drive the
// undisturbed trajectory into the constrained window.
template <class T>
T nominal_tracking_objective(const SynthesisProblem& P, const std::vector<T>& dec, double mu) {
    const std::size_t n = P.sys.xlen;
    const std::size_t N = static_cast<std::size_t>(P.N);
    std::vector<TensorT<T>> xnom{tensor_cast<T>(P.x0)};
    const TensorT<T> wnom = TensorT<T>::vec({T(0.0)});
    for (std::size_t k = 0; k < N; ++k) {
        const auto f = eval_real(
            P.sys.f, std::vector<TensorT<T>>{xnom.back(), TensorT<T>::vec({dec[k]}), wnom});
        TensorT<T> nx(Shape{n});
        for (std::size_t i = 0; i < n; ++i) nx[i] = xnom.back()[i] + T(P.dt) * f[0][i];
        xnom.push_back(std::move(nx));
    }
    T val(0.0);
    for (std::size_t k = 0; k < N; ++k) val += T(P.weight_u) * dec[k] * dec[k];
    const Tensor target = P.terminal.midpoint();
    for (std::size_t k = static_cast<std::size_t>(P.Ne); k <= N; ++k)
        for (std::size_t i = 0; i < n; ++i) {
            const T d = xnom[k][i] - T(target[i]);
            val += T(mu) * d * d;
        }
    return val;
}

struct GradEval {
    double value = 0.0;
    std::vector<double> grad;
};

template <class Fn>
GradEval forward_gradient(const std::vector<double>& dec, Fn&& fn) {
    std::vector<Dual> d;
    d.reserve(dec.size());
    for (std::size_t i = 0; i < dec.size(); ++i) d.push_back(Dual::seed(dec[i], dec.size(), i));
    const Dual out = fn(d);
    GradEval ge;
    ge.value = out.value();
    ge.grad.assign(dec.size(), 0.0);
    for (std::size_t i = 0; i < dec.size(); ++i) ge.grad[i] = out.grad(i);
    return ge;
}

// Gradient descent with Armijo backtracking; evaluation failures reject the
// step.
template <class Value, class Grad>
void descend(std::vector<double>& dec, int iters, double step0, double grad_tol, Value&& value,
             Grad&& gradient) {
    double step = step0;
    for (int it = 0; it < iters; ++it) {
        GradEval ge;
        try {
            ge = gradient(dec);
        } catch (const std::exception&) {
            return;  // current iterate is not evaluable; keep the last good one
        }
        double gnorm2 = 0.0;
        for (double g : ge.grad) gnorm2 += g * g;
        if (std::sqrt(gnorm2) < grad_tol) return;
        bool accepted = false;
        double alpha = step;
        for (int bt = 0; bt < 40 && !accepted; ++bt) {
            std::vector<double> cand(dec.size());
            for (std::size_t i = 0; i < dec.size(); ++i) cand[i] = dec[i] - alpha * ge.grad[i];
            double fc;
            try {
                fc = value(cand);
            } catch (const std::exception&) {
                alpha *= 0.5;
                continue;
            }
            if (fc <= ge.value - 1e-4 * alpha * gnorm2) {
                dec = std::move(cand);
                accepted = true;
                step = std::min(alpha * 2.0, step0 * 64.0);
            } else {
                alpha *= 0.5;
            }
        }
        if (!accepted) return;  // stuck: no descent direction at any tried step
    }
}

}  // namespace detail

// Default initial guess: a feedforward schedule that follows a smooth ramp
// from x0 to the terminal midpoint over the unconstrained window, obtained
// by inverting the (control-affine) acceleration channel along the ramp;
// K starts at zero.
inline std::vector<double> default_swing_up_guess(const SynthesisProblem& P) {
    const std::size_t n = P.sys.xlen;
    const std::size_t N = static_cast<std::size_t>(P.N);
    std::vector<double> dec(N + n, 0.0);
    if (n != 2) return dec;  // ramp inversion targets one-dof mechanisms
    const double th0 = P.x0[0];
    const double thf = P.terminal.midpoint()[0];
    // finish the swing well before the constrained window: while u_ff is
    // near zero the multiplicative disturbance vanishes and the tube
    // contracts under the feedback before the constraints bind
    const double t_reach = 0.6 * P.dt * static_cast<double>(P.Ne);
    auto plan = [&](double t) {
        const double tau = std::min(std::max(t / t_reach, 0.0), 1.0);
        const double s = tau * tau * (3.0 - 2.0 * tau);
        const double ds = 6.0 * tau * (1.0 - tau) / t_reach;
        const double dds = (6.0 - 12.0 * tau) / (t_reach * t_reach);
        const bool inside = t >= 0.0 && t <= t_reach;
        return std::array<double, 3>{th0 + (thf - th0) * s, inside ? (thf - th0) * ds : 0.0,
                                     inside ? (thf - th0) * dds : 0.0};
    };
    // PD-tracked inverse dynamics along the integrated nominal, so replaying
    // the schedule open loop stays on the ramp despite Euler drift.
    const double kp = 40.0, kd = 12.0;
    Tensor x = P.x0;
    for (std::size_t k = 0; k < N; ++k) {
        const auto [th, om, acc] = plan(P.dt * static_cast<double>(k));
        const double target_acc = acc + kp * (th - x[0]) + kd * (om - x[1]);
        // acceleration channel is affine in u: solve f2(x, u, 0) = target_acc
        const std::vector<TensorT<Dual>> slots_for = [&] {
            std::vector<TensorT<Dual>> s(P.sys.f.inputs().size());
            s[P.sys.slot_x] = TensorT<Dual>::vec({Dual(x[0]), Dual(x[1])});
            s[P.sys.slot_u] = TensorT<Dual>::vec({Dual::seed(0.0, 1, 0)});
            s[P.sys.slot_w] = TensorT<Dual>::vec({Dual(0.0)});
            if (P.sys.slot_t >= 0) s[P.sys.slot_t] = TensorT<Dual>::vec({Dual(0.0)});
            return s;
        }();
        const auto f = eval_real(P.sys.f, slots_for);
        const double base = f[0][1].value();
        const double slope = f[0][1].grad(0);
        dec[k] = std::abs(slope) > 1e-12 ? (target_acc - base) / slope : 0.0;
        if (k + 1 == N && std::abs(slope) > 1e-12) {
            // stabilizing initial gain about the upright, scaled like the PD pair
            dec[N] = -20.0 / slope;
            dec[N + 1] = -20.0 / slope;
        }
        // advance the nominal with the chosen control
        std::vector<Tensor> adv(P.sys.f.inputs().size());
        adv[P.sys.slot_x] = x;
        adv[P.sys.slot_u] = Tensor::vec({dec[k]});
        adv[P.sys.slot_w] = Tensor::vec({0.0});
        if (P.sys.slot_t >= 0) adv[P.sys.slot_t] = Tensor::vec({0.0});
        const auto fx = eval_real(P.sys.f, adv);
        for (std::size_t i = 0; i < n; ++i) x[i] += P.dt * fx[0][i];
    }
    return dec;
}

// Quadratic-penalty gradient-descent solve of the robust swing-up problem,
// followed by an embedding certificate and a Monte Carlo cross-check of the
// returned policy.
inline SynthesisResult run_pendulum_synthesis(const SynthesisProblem& problem,
                                              const SynthesisOptions& opts,
                                              std::vector<double> initial_guess = {},
                                              std::uint64_t seed = 0) {
    problem.validate();
    const std::size_t n = problem.sys.xlen;
    const std::size_t N = static_cast<std::size_t>(problem.N);
    const std::size_t dim = N + n;
    std::vector<double> dec = std::move(initial_guess);
    if (dec.empty()) dec = default_swing_up_guess(problem);
    if (dec.size() != dim) throw ConfigError("initial guess must have N + n entries");

    if (opts.warm_start) {
        double mu = opts.mu0;
        for (int outer = 0; outer < opts.outer_iters; ++outer) {
            detail::descend(
                dec, opts.warm_iters / std::max(1, opts.outer_iters), 1e-2, opts.grad_tol,
                [&](const std::vector<double>& d) {
                    return detail::nominal_tracking_objective(problem, d, mu);
                },
                [&](const std::vector<double>& d) {
                    return detail::forward_gradient(d, [&](const std::vector<Dual>& dd) {
                        return detail::nominal_tracking_objective(problem, dd, mu);
                    });
                });
            mu *= opts.mu_growth;
        }
    }

    double mu = opts.mu0;
    for (int outer = 0; outer < opts.outer_iters; ++outer) {
        detail::descend(
            dec, opts.inner_iters, opts.step0, opts.grad_tol,
            [&](const std::vector<double>& d) { return detail::quadratic_penalty(problem, d, mu); },
            [&](const std::vector<double>& d) {
                return detail::forward_gradient(d, [&](const std::vector<Dual>& dd) {
                    return detail::quadratic_penalty(problem, dd, mu);
                });
            });
        mu *= opts.mu_growth;
    }

    SynthesisResult res;
    res.u_ff.assign(dec.begin(), dec.begin() + static_cast<long>(N));
    res.K = Tensor(Shape{1, n}, std::vector<double>(dec.begin() + static_cast<long>(N), dec.end()));

    const auto roll = detail::rollout_closed_loop(problem, dec);
    res.objective = detail::synthesis_objective(problem, dec, roll);
    const auto g = detail::synthesis_constraints(problem, roll);
    res.margin = std::numeric_limits<double>::infinity();
    for (double gi : g) res.margin = std::min(res.margin, gi);
    res.feasible = res.margin >= -1e-6;

    for (std::size_t k = 0; k <= N; ++k) {
        res.times.push_back(problem.dt * static_cast<double>(k));
        std::vector<double> ut(2 * n);
        for (std::size_t i = 0; i < n; ++i) {
            ut[i] = roll.xlo[k][i];
            ut[n + i] = roll.xhi[k][i];
        }
        res.tube_ut.push_back(std::move(ut));
        res.nominal.push_back(
            std::vector<double>(roll.xnom[k].data().begin(), roll.xnom[k].data().end()));
    }

    // Monte Carlo cross-check: disturbed closed-loop rollouts must satisfy
    // the terminal-window constraints (a necessary condition; the embedding
    // certificate is the sufficient one).
    std::vector<int> failures(static_cast<std::size_t>(opts.mc_samples), 0);
    parallel_for_slots(static_cast<std::size_t>(opts.mc_samples), opts.workers, [&](std::size_t s) {
        std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL * (s + 1));
        std::uniform_real_distribution<double> uw(problem.w_lo, problem.w_hi);
        Tensor x = problem.x0;
        for (std::size_t k = 0; k < N; ++k) {
            const double w = uw(rng);
            Tensor dxn(Shape{n});
            double u = res.u_ff[k];
            for (std::size_t i = 0; i < n; ++i)
                u += res.K(0, i) * (x[i] - res.nominal[k][i]);
            const auto f = eval_real(problem.sys.f,
                                     std::vector<Tensor>{x, Tensor::vec({u}), Tensor::vec({w})});
            for (std::size_t i = 0; i < n; ++i) x[i] += problem.dt * f[0][i];
            if (k + 1 >= static_cast<std::size_t>(problem.Ne) && !contains(problem.terminal, x))
                failures[s] = 1;
        }
    });
    res.mc_failures = 0;
    for (int fail : failures) res.mc_failures += fail;
    res.mc_ok = res.mc_failures == 0;
    res.certified = res.feasible && res.mc_ok;
    res.message = res.certified
                      ? "certified"
                      : (res.feasible ? "embedding feasible, Monte Carlo failure" : "infeasible");
    return res;
}

}  // namespace ivreach
