#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "ivreach/expr.hpp"
#include "ivreach/interval.hpp"

namespace ivreach {

template <class T>
TensorT<T> tensor_cast(const Tensor& a) {
    TensorT<T> out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = T(a[i]);
    return out;
}

namespace detail {

inline void check_slot_shapes(const ExprGraph& g, std::size_t bound, const Shape& shape,
                              std::size_t slot) {
    const auto& decl = g.inputs()[slot];
    if (shape != Shape{decl.dim})
        throw ShapeMismatch("binding for slot '" + decl.name + "' has shape " + shape_str(shape) +
                            ", declared (" + std::to_string(decl.dim) + ")");
    (void)bound;
}

template <class V>
void check_bindings(const ExprGraph& g, const std::vector<V>& slots) {
    if (slots.size() != g.inputs().size())
        throw ShapeMismatch("expected " + std::to_string(g.inputs().size()) +
                            " slot bindings, got " + std::to_string(slots.size()));
    for (std::size_t s = 0; s < slots.size(); ++s) check_slot_shapes(g, s, slots[s].shape(), s);
}

}  // namespace detail

// Name-based slot bindings; produces the slot-ordered vector the evaluators
// take, enforcing that every declared input is bound exactly once with the
// declared shape.
template <class V>
class EvalContextT {
public:
    explicit EvalContextT(const ExprGraph& g) : g_(&g), bound_(g.inputs().size()) {}

    EvalContextT& bind(std::string_view name, V value) {
        const int s = g_->slot_id(name);
        if (s < 0) throw ShapeMismatch("no input slot named '" + std::string(name) + "'");
        if (bound_[static_cast<std::size_t>(s)])
            throw ShapeMismatch("slot '" + std::string(name) + "' bound twice");
        bound_[static_cast<std::size_t>(s)] = std::move(value);
        return *this;
    }

    std::vector<V> values() const {
        std::vector<V> out;
        out.reserve(bound_.size());
        for (std::size_t s = 0; s < bound_.size(); ++s) {
            if (!bound_[s])
                throw ShapeMismatch("slot '" + g_->inputs()[s].name + "' is unbound");
            out.push_back(*bound_[s]);
        }
        return out;
    }

private:
    const ExprGraph* g_;
    std::vector<std::optional<V>> bound_;
};

template <class T = double>
using EvalContext = EvalContextT<TensorT<T>>;
template <class T = double>
using IntervalEvalContext = EvalContextT<IntervalT<T>>;

// Plain forward evaluation on real (or dual) arrays.
template <class T>
std::vector<TensorT<T>> eval_real(const ExprGraph& g, const std::vector<TensorT<T>>& slots) {
    detail::check_bindings(g, slots);
    std::vector<TensorT<T>> vals;
    vals.reserve(g.nodes().size());
    for (const ExprNode& n : g.nodes()) {
        auto A = [&](std::size_t i) -> const TensorT<T>& {
            return vals[static_cast<std::size_t>(n.args[i])];
        };
        switch (n.op) {
            case Op::input: vals.push_back(slots[static_cast<std::size_t>(n.slot)]); break;
            case Op::constant: vals.push_back(tensor_cast<T>(n.payload)); break;
            case Op::index: vals.push_back(TensorT<T>::scalar(A(0)[n.index])); break;
            case Op::add:
                vals.push_back(tensor_zip(A(0), A(1), [](const T& a, const T& b) { return a + b; }));
                break;
            case Op::sub:
                vals.push_back(tensor_zip(A(0), A(1), [](const T& a, const T& b) { return a - b; }));
                break;
            case Op::mul:
                vals.push_back(tensor_zip(A(0), A(1), [](const T& a, const T& b) { return a * b; }));
                break;
            case Op::div:
                vals.push_back(tensor_zip(A(0), A(1), [](const T& a, const T& b) { return a / b; }));
                break;
            case Op::neg:
                vals.push_back(tensor_map(A(0), [](const T& a) { return -a; }));
                break;
            case Op::sin:
                vals.push_back(tensor_map(A(0), [](const T& a) {
                    using std::sin;
                    return sin(a);
                }));
                break;
            case Op::cos:
                vals.push_back(tensor_map(A(0), [](const T& a) {
                    using std::cos;
                    return cos(a);
                }));
                break;
            case Op::tan:
                vals.push_back(tensor_map(A(0), [](const T& a) {
                    using std::tan;
                    return tan(a);
                }));
                break;
            case Op::atan:
                vals.push_back(tensor_map(A(0), [](const T& a) {
                    using std::atan;
                    return atan(a);
                }));
                break;
            case Op::sqrt:
                vals.push_back(tensor_map(A(0), [](const T& a) {
                    using std::sqrt;
                    if (num::value_of(a) < 0.0) throw DomainError("sqrt of negative value");
                    return sqrt(a);
                }));
                break;
            case Op::exp:
                vals.push_back(tensor_map(A(0), [](const T& a) {
                    using std::exp;
                    return exp(a);
                }));
                break;
            case Op::tanh:
                vals.push_back(tensor_map(A(0), [](const T& a) {
                    using std::tanh;
                    return tanh(a);
                }));
                break;
            case Op::abs:
                vals.push_back(tensor_map(A(0), [](const T& a) {
                    using std::abs;
                    return abs(a);
                }));
                break;
            case Op::pow_int:
                vals.push_back(
                    tensor_map(A(0), [&](const T& a) { return num::pow_i(a, n.exponent); }));
                break;
            case Op::matmul: vals.push_back(tensor_matmul(A(0), A(1))); break;
            case Op::concat: {
                std::vector<T> out;
                out.reserve(shape_size(n.shape));
                for (int a : n.args)
                    for (const T& x : vals[static_cast<std::size_t>(a)].data()) out.push_back(x);
                vals.push_back(TensorT<T>::vec(std::move(out)));
                break;
            }
        }
    }
    std::vector<TensorT<T>> out;
    out.reserve(g.outputs().size());
    for (int id : g.outputs()) out.push_back(vals[static_cast<std::size_t>(id)]);
    return out;
}

// Natural-inclusion evaluation: every primitive replaced by its minimal
// inclusion function. Sound, monotone in the inputs, thin on thin inputs.
template <class T>
std::vector<IntervalT<T>> eval_interval(const ExprGraph& g,
                                        const std::vector<IntervalT<T>>& slots) {
    detail::check_bindings(g, slots);
    std::vector<IntervalT<T>> vals;
    vals.reserve(g.nodes().size());
    for (const ExprNode& n : g.nodes()) {
        auto A = [&](std::size_t i) -> const IntervalT<T>& {
            return vals[static_cast<std::size_t>(n.args[i])];
        };
        switch (n.op) {
            case Op::input: vals.push_back(slots[static_cast<std::size_t>(n.slot)]); break;
            case Op::constant: vals.push_back(IntervalT<T>::thin(tensor_cast<T>(n.payload))); break;
            case Op::index:
                vals.push_back(IntervalT<T>::unchecked(
                    TensorT<T>::scalar(A(0).lower()[n.index]),
                    TensorT<T>::scalar(A(0).upper()[n.index])));
                break;
            case Op::add: vals.push_back(A(0) + A(1)); break;
            case Op::sub: vals.push_back(A(0) - A(1)); break;
            case Op::mul: vals.push_back(A(0) * A(1)); break;
            case Op::div: vals.push_back(iv_div(A(0), A(1))); break;
            case Op::neg: vals.push_back(-A(0)); break;
            case Op::sin: vals.push_back(iv_sin(A(0))); break;
            case Op::cos: vals.push_back(iv_cos(A(0))); break;
            case Op::tan: vals.push_back(iv_tan(A(0))); break;
            case Op::atan: vals.push_back(iv_atan(A(0))); break;
            case Op::sqrt: vals.push_back(iv_sqrt(A(0))); break;
            case Op::exp: vals.push_back(iv_exp(A(0))); break;
            case Op::tanh: vals.push_back(iv_tanh(A(0))); break;
            case Op::abs: vals.push_back(iv_abs(A(0))); break;
            case Op::pow_int: vals.push_back(iv_pow_int(A(0), n.exponent)); break;
            case Op::matmul: vals.push_back(iv_matmul(A(0), A(1))); break;
            case Op::concat: {
                std::vector<T> lo, hi;
                lo.reserve(shape_size(n.shape));
                hi.reserve(shape_size(n.shape));
                for (int a : n.args) {
                    const auto& v = vals[static_cast<std::size_t>(a)];
                    for (const T& x : v.lower().data()) lo.push_back(x);
                    for (const T& x : v.upper().data()) hi.push_back(x);
                }
                vals.push_back(IntervalT<T>::unchecked(TensorT<T>::vec(std::move(lo)),
                                                       TensorT<T>::vec(std::move(hi))));
                break;
            }
        }
    }
    std::vector<IntervalT<T>> out;
    out.reserve(g.outputs().size());
    for (int id : g.outputs()) out.push_back(vals[static_cast<std::size_t>(id)]);
    return out;
}

template <class T>
struct IntervalJacobian {
    std::vector<IntervalT<T>> outputs;   // value enclosures, one per graph output
    std::vector<int> wrt;                // differentiated slot ids
    std::vector<IntervalT<T>> per_slot;  // (m x dim_slot) enclosure of each Jacobian block
    IntervalT<T> full;                   // (m x sum of selected dims), columns in slot order
};

// Forward-mode evaluation carrying interval tangents: the natural inclusion
// of the Jacobian program. Thin inputs give the exact Jacobian.
template <class T>
IntervalJacobian<T> eval_jacobian_interval(const ExprGraph& g,
                                           const std::vector<IntervalT<T>>& slots,
                                           std::vector<int> wrt = {}) {
    detail::check_bindings(g, slots);
    if (wrt.empty())
        for (std::size_t s = 0; s < g.inputs().size(); ++s) wrt.push_back(static_cast<int>(s));
    std::vector<std::size_t> offset(g.inputs().size(), static_cast<std::size_t>(-1));
    std::size_t nsel = 0;
    for (int s : wrt) {
        if (s < 0 || s >= static_cast<int>(g.inputs().size()) ||
            offset[static_cast<std::size_t>(s)] != static_cast<std::size_t>(-1))
            throw ShapeMismatch("invalid or repeated wrt slot id " + std::to_string(s));
        offset[static_cast<std::size_t>(s)] = nsel;
        nsel += g.inputs()[static_cast<std::size_t>(s)].dim;
    }

    struct NodeVal {
        IntervalT<T> val;
        TensorT<T> tlo, thi;  // tangent rows: {value size, nsel}
    };
    std::vector<NodeVal> vals(g.nodes().size());

    auto zero_tangent = [&](std::size_t rows) {
        return std::make_pair(TensorT<T>::zeros(Shape{rows, nsel}),
                              TensorT<T>::zeros(Shape{rows, nsel}));
    };

    for (std::size_t ni = 0; ni < g.nodes().size(); ++ni) {
        const ExprNode& n = g.nodes()[ni];
        NodeVal& out = vals[ni];
        auto A = [&](std::size_t i) -> const NodeVal& {
            return vals[static_cast<std::size_t>(n.args[i])];
        };
        switch (n.op) {
            case Op::input: {
                const auto s = static_cast<std::size_t>(n.slot);
                out.val = slots[s];
                auto [tlo, thi] = zero_tangent(out.val.size());
                if (offset[s] != static_cast<std::size_t>(-1)) {
                    for (std::size_t i = 0; i < out.val.size(); ++i) {
                        tlo(i, offset[s] + i) = T(1.0);
                        thi(i, offset[s] + i) = T(1.0);
                    }
                }
                out.tlo = std::move(tlo);
                out.thi = std::move(thi);
                break;
            }
            case Op::constant: {
                out.val = IntervalT<T>::thin(tensor_cast<T>(n.payload));
                auto [tlo, thi] = zero_tangent(out.val.size());
                out.tlo = std::move(tlo);
                out.thi = std::move(thi);
                break;
            }
            case Op::index: {
                const NodeVal& a = A(0);
                out.val = IntervalT<T>::unchecked(TensorT<T>::scalar(a.val.lower()[n.index]),
                                                  TensorT<T>::scalar(a.val.upper()[n.index]));
                out.tlo = TensorT<T>(Shape{1, nsel});
                out.thi = TensorT<T>(Shape{1, nsel});
                for (std::size_t c = 0; c < nsel; ++c) {
                    out.tlo(0, c) = a.tlo(n.index, c);
                    out.thi(0, c) = a.thi(n.index, c);
                }
                break;
            }
            case Op::add:
            case Op::sub:
            case Op::mul:
            case Op::div: {
                const NodeVal& a = A(0);
                const NodeVal& b = A(1);
                switch (n.op) {
                    case Op::add: out.val = a.val + b.val; break;
                    case Op::sub: out.val = a.val - b.val; break;
                    case Op::mul: out.val = a.val * b.val; break;
                    default: out.val = iv_div(a.val, b.val); break;
                }
                const Shape& os = n.shape;
                const auto ma = broadcast_index_map(os, a.val.shape());
                const auto mb = broadcast_index_map(os, b.val.shape());
                const std::size_t rows = shape_size(os);
                out.tlo = TensorT<T>(Shape{rows, nsel});
                out.thi = TensorT<T>(Shape{rows, nsel});
                for (std::size_t e = 0; e < rows; ++e) {
                    const std::size_t ea = ma[e], eb = mb[e];
                    for (std::size_t c = 0; c < nsel; ++c) {
                        const T &dal = a.tlo(ea, c), &dah = a.thi(ea, c);
                        const T &dbl = b.tlo(eb, c), &dbh = b.thi(eb, c);
                        std::pair<T, T> r;
                        switch (n.op) {
                            case Op::add: r = ivkern::add(dal, dah, dbl, dbh); break;
                            case Op::sub: r = ivkern::sub(dal, dah, dbl, dbh); break;
                            case Op::mul: {
                                // d(ab) = da*b + a*db
                                auto t1 = ivkern::mul(dal, dah, b.val.lower()[eb],
                                                      b.val.upper()[eb]);
                                auto t2 = ivkern::mul(a.val.lower()[ea], a.val.upper()[ea], dbl,
                                                      dbh);
                                r = ivkern::add(t1.first, t1.second, t2.first, t2.second);
                                break;
                            }
                            default: {
                                // d(a/b) = da/b - (a/b)*(db/b)
                                auto q1 = ivkern::div(dal, dah, b.val.lower()[eb],
                                                      b.val.upper()[eb]);
                                auto q2 = ivkern::div(dbl, dbh, b.val.lower()[eb],
                                                      b.val.upper()[eb]);
                                auto t2 = ivkern::mul(out.val.lower()[e], out.val.upper()[e],
                                                      q2.first, q2.second);
                                r = ivkern::sub(q1.first, q1.second, t2.first, t2.second);
                                break;
                            }
                        }
                        out.tlo(e, c) = std::move(r.first);
                        out.thi(e, c) = std::move(r.second);
                    }
                }
                break;
            }
            case Op::neg:
            case Op::sin:
            case Op::cos:
            case Op::tan:
            case Op::atan:
            case Op::sqrt:
            case Op::exp:
            case Op::tanh:
            case Op::abs:
            case Op::pow_int: {
                const NodeVal& a = A(0);
                const std::size_t rows = a.val.size();
                out.tlo = TensorT<T>(Shape{rows, nsel});
                out.thi = TensorT<T>(Shape{rows, nsel});
                // value and per-element derivative factor interval
                TensorT<T> flo(a.val.shape()), fhi(a.val.shape());
                switch (n.op) {
                    case Op::neg:
                        out.val = -a.val;
                        for (std::size_t e = 0; e < rows; ++e) {
                            flo[e] = T(-1.0);
                            fhi[e] = T(-1.0);
                        }
                        break;
                    case Op::sin:
                        out.val = iv_sin(a.val);
                        for (std::size_t e = 0; e < rows; ++e) {
                            auto d = ivkern::cos(a.val.lower()[e], a.val.upper()[e]);
                            flo[e] = d.first;
                            fhi[e] = d.second;
                        }
                        break;
                    case Op::cos:
                        out.val = iv_cos(a.val);
                        for (std::size_t e = 0; e < rows; ++e) {
                            auto d = ivkern::sin(a.val.lower()[e], a.val.upper()[e]);
                            auto nd = ivkern::neg(d.first, d.second);
                            flo[e] = nd.first;
                            fhi[e] = nd.second;
                        }
                        break;
                    case Op::tan: {
                        out.val = iv_tan(a.val);
                        for (std::size_t e = 0; e < rows; ++e) {
                            // d tan = 1 + tan^2
                            auto sq = ivkern::pow_int(out.val.lower()[e], out.val.upper()[e], 2);
                            auto d = ivkern::add(T(1.0), T(1.0), sq.first, sq.second);
                            flo[e] = d.first;
                            fhi[e] = d.second;
                        }
                        break;
                    }
                    case Op::atan: {
                        out.val = iv_atan(a.val);
                        for (std::size_t e = 0; e < rows; ++e) {
                            // d atan = 1 / (1 + x^2)
                            auto sq = ivkern::pow_int(a.val.lower()[e], a.val.upper()[e], 2);
                            auto den = ivkern::add(T(1.0), T(1.0), sq.first, sq.second);
                            auto d = ivkern::div(T(1.0), T(1.0), den.first, den.second);
                            flo[e] = d.first;
                            fhi[e] = d.second;
                        }
                        break;
                    }
                    case Op::sqrt: {
                        out.val = iv_sqrt(a.val);
                        for (std::size_t e = 0; e < rows; ++e) {
                            if (num::value_of(a.val.lower()[e]) <= 0.0)
                                throw DomainError("sqrt is not differentiable at 0");
                            auto den = ivkern::mul(T(2.0), T(2.0), out.val.lower()[e],
                                                   out.val.upper()[e]);
                            auto d = ivkern::div(T(1.0), T(1.0), den.first, den.second);
                            flo[e] = d.first;
                            fhi[e] = d.second;
                        }
                        break;
                    }
                    case Op::exp:
                        out.val = iv_exp(a.val);
                        for (std::size_t e = 0; e < rows; ++e) {
                            flo[e] = out.val.lower()[e];
                            fhi[e] = out.val.upper()[e];
                        }
                        break;
                    case Op::tanh: {
                        out.val = iv_tanh(a.val);
                        for (std::size_t e = 0; e < rows; ++e) {
                            // d tanh = 1 - tanh^2
                            auto sq = ivkern::pow_int(out.val.lower()[e], out.val.upper()[e], 2);
                            auto d = ivkern::sub(T(1.0), T(1.0), sq.first, sq.second);
                            flo[e] = d.first;
                            fhi[e] = d.second;
                        }
                        break;
                    }
                    case Op::abs: {
                        out.val = iv_abs(a.val);
                        for (std::size_t e = 0; e < rows; ++e) {
                            const double l = num::value_of(a.val.lower()[e]);
                            const double u = num::value_of(a.val.upper()[e]);
                            if (l < 0.0 && u > 0.0)
                                throw NonDifferentiablePrimitiveOnPath(
                                    "abs over an interval with 0 in the interior");
                            const double s = (l >= 0.0) ? 1.0 : -1.0;
                            flo[e] = T(s);
                            fhi[e] = T(s);
                        }
                        break;
                    }
                    default: {  // pow_int
                        out.val = iv_pow_int(a.val, n.exponent);
                        for (std::size_t e = 0; e < rows; ++e) {
                            if (n.exponent == 0) {
                                flo[e] = T(0.0);
                                fhi[e] = T(0.0);
                                continue;
                            }
                            auto p = ivkern::pow_int(a.val.lower()[e], a.val.upper()[e],
                                                     n.exponent - 1);
                            auto d = ivkern::mul(T(double(n.exponent)), T(double(n.exponent)),
                                                 p.first, p.second);
                            flo[e] = d.first;
                            fhi[e] = d.second;
                        }
                        break;
                    }
                }
                for (std::size_t e = 0; e < rows; ++e)
                    for (std::size_t c = 0; c < nsel; ++c) {
                        auto r = ivkern::mul(flo[e], fhi[e], a.tlo(e, c), a.thi(e, c));
                        out.tlo(e, c) = std::move(r.first);
                        out.thi(e, c) = std::move(r.second);
                    }
                break;
            }
            case Op::matmul: {
                const NodeVal& a = A(0);
                const NodeVal& b = A(1);
                out.val = iv_matmul(a.val, b.val);
                const std::size_t rows = out.val.size();
                out.tlo = TensorT<T>(Shape{rows, nsel});
                out.thi = TensorT<T>(Shape{rows, nsel});
                // d(AB) column c = dA_c B + A dB_c
                const Shape sa2 = a.val.rank() == 1 ? Shape{1, a.val.shape()[0]} : a.val.shape();
                const Shape sb2 = b.val.rank() == 1 ? Shape{b.val.shape()[0], 1} : b.val.shape();
                for (std::size_t c = 0; c < nsel; ++c) {
                    TensorT<T> dalo(sa2), dahi(sa2), dblo(sb2), dbhi(sb2);
                    for (std::size_t e = 0; e < a.val.size(); ++e) {
                        dalo[e] = a.tlo(e, c);
                        dahi[e] = a.thi(e, c);
                    }
                    for (std::size_t e = 0; e < b.val.size(); ++e) {
                        dblo[e] = b.tlo(e, c);
                        dbhi[e] = b.thi(e, c);
                    }
                    auto av2 = IntervalT<T>::unchecked(a.val.lower().reshaped(sa2),
                                                       a.val.upper().reshaped(sa2));
                    auto bv2 = IntervalT<T>::unchecked(b.val.lower().reshaped(sb2),
                                                       b.val.upper().reshaped(sb2));
                    auto t1 = iv_matmul(IntervalT<T>::unchecked(dalo, dahi), bv2);
                    auto t2 = iv_matmul(av2, IntervalT<T>::unchecked(dblo, dbhi));
                    auto sum = t1 + t2;
                    for (std::size_t e = 0; e < rows; ++e) {
                        out.tlo(e, c) = sum.lower()[e];
                        out.thi(e, c) = sum.upper()[e];
                    }
                }
                break;
            }
            case Op::concat: {
                std::vector<T> lo, hi;
                lo.reserve(shape_size(n.shape));
                hi.reserve(shape_size(n.shape));
                for (int arg : n.args) {
                    const auto& v = vals[static_cast<std::size_t>(arg)].val;
                    for (const T& x : v.lower().data()) lo.push_back(x);
                    for (const T& x : v.upper().data()) hi.push_back(x);
                }
                out.val = IntervalT<T>::unchecked(TensorT<T>::vec(std::move(lo)),
                                                  TensorT<T>::vec(std::move(hi)));
                const std::size_t rows = out.val.size();
                out.tlo = TensorT<T>(Shape{rows, nsel});
                out.thi = TensorT<T>(Shape{rows, nsel});
                std::size_t r = 0;
                for (int arg : n.args) {
                    const NodeVal& v = vals[static_cast<std::size_t>(arg)];
                    for (std::size_t e = 0; e < v.val.size(); ++e, ++r)
                        for (std::size_t c = 0; c < nsel; ++c) {
                            out.tlo(r, c) = v.tlo(e, c);
                            out.thi(r, c) = v.thi(e, c);
                        }
                }
                break;
            }
        }
    }

    IntervalJacobian<T> res;
    res.wrt = wrt;
    const std::size_t m = g.output_dim();
    TensorT<T> jlo(Shape{m, nsel}), jhi(Shape{m, nsel});
    std::size_t row = 0;
    for (int id : g.outputs()) {
        const NodeVal& v = vals[static_cast<std::size_t>(id)];
        res.outputs.push_back(v.val);
        for (std::size_t e = 0; e < v.val.size(); ++e, ++row)
            for (std::size_t c = 0; c < nsel; ++c) {
                jlo(row, c) = v.tlo(e, c);
                jhi(row, c) = v.thi(e, c);
            }
    }
    res.full = IntervalT<T>::unchecked(jlo, jhi);
    for (int s : wrt) {
        const std::size_t dim = g.inputs()[static_cast<std::size_t>(s)].dim;
        const std::size_t off = offset[static_cast<std::size_t>(s)];
        TensorT<T> blo(Shape{m, dim}), bhi(Shape{m, dim});
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < dim; ++j) {
                blo(i, j) = jlo(i, off + j);
                bhi(i, j) = jhi(i, off + j);
            }
        res.per_slot.push_back(IntervalT<T>::unchecked(std::move(blo), std::move(bhi)));
    }
    return res;
}

}  // namespace ivreach
