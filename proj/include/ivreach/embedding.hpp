#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "ivreach/inclusion.hpp"

namespace ivreach {

// Continuous-time system x' = f(x[,u][,w][,t]) given as an expression graph
// whose slots are discovered by name.
struct System {
    ExprGraph f;
    std::size_t xlen = 0;
    int slot_x = -1, slot_u = -1, slot_w = -1, slot_t = -1;

    std::size_t ulen() const { return slot_u < 0 ? 0 : f.inputs()[slot_u].dim; }
    std::size_t wlen() const { return slot_w < 0 ? 0 : f.inputs()[slot_w].dim; }

    static System from_graph(ExprGraph graph, std::size_t xlen) {
        System s;
        s.slot_x = graph.slot_id("x");
        s.slot_u = graph.slot_id("u");
        s.slot_w = graph.slot_id("w");
        s.slot_t = graph.slot_id("t");
        if (s.slot_x < 0) throw SignatureMismatch("system graph has no state slot 'x'");
        if (graph.inputs()[s.slot_x].dim != xlen)
            throw SignatureMismatch("state slot dimension " +
                                    std::to_string(graph.inputs()[s.slot_x].dim) +
                                    " != declared xlen " + std::to_string(xlen));
        if (graph.output_dim() != xlen)
            throw SignatureMismatch("vector field output dimension " +
                                    std::to_string(graph.output_dim()) + " != xlen " +
                                    std::to_string(xlen));
        s.f = std::move(graph);
        s.xlen = xlen;
        return s;
    }
};

// Interval vector field over (t, [x], [w]); the shape every embedding is
// built from. Control inputs, schedules and nominal trajectories live
// inside the closure.
using IntervalField = std::function<Interval(double, const Interval&, const Interval&)>;

// Control slot binding for the convenience constructors: absent, a constant
// interval (open loop), or a state-feedback callback.
struct ControlInput {
    std::variant<std::monostate, Interval, std::function<Interval(double, const Interval&)>> v;

    ControlInput() = default;
    ControlInput(Interval iv) : v(std::move(iv)) {}  // NOLINT
    ControlInput(std::function<Interval(double, const Interval&)> fn) : v(std::move(fn)) {}  // NOLINT

    Interval resolve(double t, const Interval& x, std::size_t ulen) const {
        if (std::holds_alternative<std::monostate>(v)) {
            if (ulen != 0) throw SignatureMismatch("system has a control slot but no control was bound");
            return Interval::unchecked(Tensor::vec({}), Tensor::vec({}));
        }
        if (const auto* iv = std::get_if<Interval>(&v)) {
            if (iv->size() != ulen) throw SignatureMismatch("control binding dimension mismatch");
            return *iv;
        }
        auto out = std::get<2>(v)(t, x);
        if (out.size() != ulen) throw SignatureMismatch("control policy output dimension mismatch");
        return out;
    }
};

// The 2n-state system of the embedding construction: coordinate i of the
// lower bound moves with F evaluated on the face where the upper state is
// clamped to the lower one at i, and symmetrically for the upper bound.
class EmbeddingSystem {
public:
    EmbeddingSystem() = default;
    EmbeddingSystem(System sys, IntervalField F) : sys_(std::move(sys)), F_(std::move(F)) {}

    const System& system() const { return sys_; }
    const IntervalField& inclusion() const { return F_; }

    std::pair<Tensor, Tensor> rates(double t, const Tensor& xlo, const Tensor& xhi,
                                    const Interval& w) const {
        const std::size_t n = sys_.xlen;
        if (xlo.size() != n || xhi.size() != n)
            throw SignatureMismatch("embedding state dimension mismatch");
        Tensor dlo(Shape{n}), dhi(Shape{n});
        for (std::size_t i = 0; i < n; ++i) {
            Tensor hi_face = xhi;
            hi_face[i] = xlo[i];
            const Interval lower_face = Interval::unchecked(xlo, std::move(hi_face));
            dlo[i] = F_(t, lower_face, w).lower()[i];

            Tensor lo_face = xlo;
            lo_face[i] = xhi[i];
            const Interval upper_face = Interval::unchecked(std::move(lo_face), xhi);
            dhi[i] = F_(t, upper_face, w).upper()[i];
        }
        return {std::move(dlo), std::move(dhi)};
    }

    // Upper-triangle coded field for the integrators. Runge-Kutta stage
    // combinations may transiently invert a bound pair; each pair is
    // re-ordered before the face evaluations.
    std::vector<double> field_ut(double t, const std::vector<double>& ut,
                                 const Interval& w) const {
        const std::size_t n = sys_.xlen;
        if (ut.size() != 2 * n) throw SignatureMismatch("upper-triangle state must have length 2n");
        Tensor xlo(Shape{n}), xhi(Shape{n});
        for (std::size_t i = 0; i < n; ++i) {
            xlo[i] = std::min(ut[i], ut[n + i]);
            xhi[i] = std::max(ut[i], ut[n + i]);
        }
        auto [dlo, dhi] = rates(t, xlo, xhi, w);
        std::vector<double> out(2 * n);
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = dlo[i];
            out[n + i] = dhi[i];
        }
        return out;
    }

private:
    System sys_;
    IntervalField F_;
};

namespace detail {

// Bind an InclusionFn-style slot evaluation into an IntervalField.
template <class Eval>
IntervalField bind_slots(const System& sys, Eval eval, ControlInput u) {
    return [sys, eval = std::move(eval), u = std::move(u)](double t, const Interval& x,
                                                           const Interval& w) -> Interval {
        std::vector<Interval> slots(sys.f.inputs().size());
        slots[static_cast<std::size_t>(sys.slot_x)] = x;
        if (sys.slot_u >= 0)
            slots[static_cast<std::size_t>(sys.slot_u)] = u.resolve(t, x, sys.ulen());
        if (sys.slot_w >= 0) {
            if (w.size() != sys.wlen())
                throw SignatureMismatch("disturbance dimension mismatch");
            slots[static_cast<std::size_t>(sys.slot_w)] = w;
        }
        if (sys.slot_t >= 0)
            slots[static_cast<std::size_t>(sys.slot_t)] = Interval::thin(Tensor::vec({t}));
        auto out = eval(slots);
        if (out.size() != 1 || out[0].size() != sys.xlen)
            throw SignatureMismatch("inclusion function output is not the state vector");
        return out[0];
    };
}

}  // namespace detail

inline EmbeddingSystem induced_embedding(System sys, IntervalField F) {
    return EmbeddingSystem(std::move(sys), std::move(F));
}

inline EmbeddingSystem induced_embedding(System sys, InclusionFn F, ControlInput u = {}) {
    auto field = detail::bind_slots(
        sys, [F = std::move(F)](const std::vector<Interval>& slots) { return F(slots); },
        std::move(u));
    return EmbeddingSystem(std::move(sys), std::move(field));
}

enum class InclusionMethod { natural, jacobian, mixed };

struct EmbeddingOptions {
    CenterSpec centers;                // empty -> midpoint
    std::vector<Ordering> orderings;   // empty -> identity
};

inline EmbeddingSystem make_embedding(const System& sys, InclusionMethod method,
                                      EmbeddingOptions opts = {}, ControlInput u = {}) {
    switch (method) {
        case InclusionMethod::natural:
            return induced_embedding(sys, natural_inclusion(sys.f), std::move(u));
        case InclusionMethod::jacobian: {
            CenterSpec cs = opts.centers.empty() ? CenterSpec{Center::midpoint()} : opts.centers;
            return induced_embedding(sys, jacobian_inclusion(sys.f, std::move(cs)), std::move(u));
        }
        case InclusionMethod::mixed: {
            // Face evaluations put explicit centers outside the face box, which
            // the mixed form tolerates; bypass the strict membership check.
            CenterSpec cs = opts.centers.empty() ? CenterSpec{Center::midpoint()} : opts.centers;
            std::vector<Ordering> ords = opts.orderings.empty()
                                             ? std::vector<Ordering>{Ordering::identity(
                                                   sys.f.total_input_dim())}
                                             : opts.orderings;
            const ExprGraph g = sys.f;
            auto eval = [g, cs, ords](const std::vector<Interval>& box) {
                std::vector<Interval> acc;
                bool first = true;
                for (const Center& c : cs) {
                    auto pts = c.resolve(box);
                    for (const Ordering& o : ords) {
                        Interval enc = detail::mixed_enclosure(g, box, pts, o);
                        if (first) {
                            acc = detail::split_outputs(g, enc);
                            first = false;
                        } else {
                            auto cur = detail::split_outputs(g, enc);
                            for (std::size_t i = 0; i < acc.size(); ++i)
                                acc[i] = iv_intersect(acc[i], cur[i]);
                        }
                    }
                }
                return acc;
            };
            return EmbeddingSystem(sys, detail::bind_slots(sys, std::move(eval), std::move(u)));
        }
    }
    throw ConfigError("unknown inclusion method");
}

// Decomposition function of the thin-inclusion special case: evaluates the
// lower bound when (x,w) <= (xhat,what) and the upper bound on the reversed
// arguments.
inline Tensor decomposition(const EmbeddingSystem& emb, const Tensor& x, const Tensor& xhat,
                            const Tensor& w, const Tensor& what, double t = 0.0) {
    const std::size_t n = emb.system().xlen;
    if (x.size() != n || xhat.size() != n) throw SignatureMismatch("state dimension mismatch");
    auto leq = [](const Tensor& a, const Tensor& b) {
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a[i] > b[i]) return false;
        return true;
    };
    const bool fwd = leq(x, xhat) && leq(w, what);
    const bool rev = leq(xhat, x) && leq(what, w);
    if (!fwd && !rev)
        throw UnorderedArguments("decomposition arguments are not componentwise ordered");
    Tensor out(Shape{n});
    if (fwd) {
        const Interval wiv = Interval::unchecked(w, what);
        for (std::size_t i = 0; i < n; ++i) {
            Tensor hi = xhat;
            hi[i] = x[i];
            out[i] = emb.inclusion()(t, Interval::unchecked(x, std::move(hi)), wiv).lower()[i];
        }
    } else {
        const Interval wiv = Interval::unchecked(what, w);
        for (std::size_t i = 0; i < n; ++i) {
            Tensor lo = xhat;
            lo[i] = x[i];
            out[i] = emb.inclusion()(t, Interval::unchecked(std::move(lo), x), wiv).upper()[i];
        }
    }
    return out;
}

}  // namespace ivreach
