#pragma once

#include <atomic>
#include <cmath>
#include <limits>
#include <utility>

#include "ivreach/dual.hpp"
#include "ivreach/errors.hpp"
#include "ivreach/tensor.hpp"

namespace ivreach {

// Global arithmetic modes. Endpoint arithmetic is round-to-nearest by
// default; `inflate_ulps` widens every primitive result outward by k ulps
// for users who want enclosures robust to floating-point rounding.
// Extended division (0 in the denominator yields infinite endpoints) is
// off by default and must be enabled explicitly.
struct ArithmeticMode {
    static std::atomic<int>& inflate_ulps() {
        static std::atomic<int> k{0};
        return k;
    }
    static std::atomic<bool>& extended_division() {
        static std::atomic<bool> on{false};
        return on;
    }
};

namespace ivkern {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline double step_ulps(double x, int k, bool up) {
    const double inf = std::numeric_limits<double>::infinity();
    for (int i = 0; i < k; ++i) x = std::nextafter(x, up ? inf : -inf);
    return x;
}

template <class T>
std::pair<T, T> post(T lo, T hi) {
    if constexpr (std::is_same_v<T, double>) {
        const int k = ArithmeticMode::inflate_ulps().load(std::memory_order_relaxed);
        if (k > 0) return {step_ulps(lo, k, false), step_ulps(hi, k, true)};
    }
    return {std::move(lo), std::move(hi)};
}

template <class T>
std::pair<T, T> add(const T& al, const T& ah, const T& bl, const T& bh) {
    return post(al + bl, ah + bh);
}

template <class T>
std::pair<T, T> sub(const T& al, const T& ah, const T& bl, const T& bh) {
    return post(al - bh, ah - bl);
}

template <class T>
std::pair<T, T> mul(const T& al, const T& ah, const T& bl, const T& bh) {
    const T p1 = al * bl, p2 = al * bh, p3 = ah * bl, p4 = ah * bh;
    return post(num::vmin(num::vmin(p1, p2), num::vmin(p3, p4)),
                num::vmax(num::vmax(p1, p2), num::vmax(p3, p4)));
}

template <class T>
std::pair<T, T> div(const T& al, const T& ah, const T& bl, const T& bh) {
    const double l = num::value_of(bl), u = num::value_of(bh);
    if (l <= 0.0 && 0.0 <= u) {
        if (!ArithmeticMode::extended_division().load(std::memory_order_relaxed))
            throw DivisionByIntervalContainingZero("denominator [" + std::to_string(l) + ", " +
                                                   std::to_string(u) + "]");
        const T inf = T(std::numeric_limits<double>::infinity());
        if (l == 0.0 && u > 0.0) {
            // 1/b in [1/u, +inf)
            if (num::value_of(al) >= 0.0) return {num::vmin(al / bh, ah / bh), inf};
            if (num::value_of(ah) <= 0.0) return {-inf, num::vmax(al / bh, ah / bh)};
        } else if (u == 0.0 && l < 0.0) {
            // 1/b in (-inf, 1/l]
            if (num::value_of(al) >= 0.0) return {-inf, num::vmax(al / bl, ah / bl)};
            if (num::value_of(ah) <= 0.0) return {num::vmin(al / bl, ah / bl), inf};
        }
        return {-inf, inf};
    }
    return mul(al, ah, T(1.0) / bh, T(1.0) / bl);
}

template <class T>
std::pair<T, T> neg(const T& al, const T& ah) {
    return {-ah, -al};
}

template <class T>
std::pair<T, T> sin(const T& al, const T& ah) {
    using num::value_of;
    using std::sin;
    const double l = value_of(al), u = value_of(ah);
    if (u - l >= 2.0 * kPi) return {T(-1.0), T(1.0)};
    T mn = num::vmin(sin(al), sin(ah));
    T mx = num::vmax(sin(al), sin(ah));
    // interior critical points (m + 1/2)*pi, where sin = (-1)^m
    const long m0 = static_cast<long>(std::ceil(l / kPi - 0.5));
    const long m1 = static_cast<long>(std::floor(u / kPi - 0.5));
    for (long m = m0; m <= m1; ++m) {
        if ((m % 2 + 2) % 2 == 0)
            mx = T(1.0);
        else
            mn = T(-1.0);
    }
    return post(std::move(mn), std::move(mx));
}

template <class T>
std::pair<T, T> cos(const T& al, const T& ah) {
    using num::value_of;
    using std::cos;
    const double l = value_of(al), u = value_of(ah);
    if (u - l >= 2.0 * kPi) return {T(-1.0), T(1.0)};
    T mn = num::vmin(cos(al), cos(ah));
    T mx = num::vmax(cos(al), cos(ah));
    // interior critical points m*pi, where cos = (-1)^m
    const long m0 = static_cast<long>(std::ceil(l / kPi));
    const long m1 = static_cast<long>(std::floor(u / kPi));
    for (long m = m0; m <= m1; ++m) {
        if ((m % 2 + 2) % 2 == 0)
            mx = T(1.0);
        else
            mn = T(-1.0);
    }
    return post(std::move(mn), std::move(mx));
}

template <class T>
std::pair<T, T> tan(const T& al, const T& ah) {
    using num::value_of;
    using std::tan;
    const double l = value_of(al), u = value_of(ah);
    // singular at (m + 1/2)*pi
    if (std::ceil(l / kPi - 0.5) <= std::floor(u / kPi - 0.5))
        throw DomainError("tan over an interval containing an odd multiple of pi/2");
    return post(tan(al), tan(ah));
}

template <class T>
std::pair<T, T> atan(const T& al, const T& ah) {
    using std::atan;
    return post(atan(al), atan(ah));
}

template <class T>
std::pair<T, T> sqrt(const T& al, const T& ah) {
    using std::sqrt;
    if (num::value_of(al) < 0.0) throw DomainError("sqrt of an interval with negative lower bound");
    return post(sqrt(al), sqrt(ah));
}

template <class T>
std::pair<T, T> exp(const T& al, const T& ah) {
    using std::exp;
    return post(exp(al), exp(ah));
}

template <class T>
std::pair<T, T> tanh(const T& al, const T& ah) {
    using std::tanh;
    return post(tanh(al), tanh(ah));
}

template <class T>
std::pair<T, T> abs(const T& al, const T& ah) {
    const double l = num::value_of(al), u = num::value_of(ah);
    if (l >= 0.0) return {al, ah};
    if (u <= 0.0) return {-ah, -al};
    return post(T(0.0), num::vmax(-al, ah));
}

template <class T>
std::pair<T, T> pow_int(const T& al, const T& ah, int k) {
    if (k == 0) return {T(1.0), T(1.0)};
    if (k < 0) {
        const double l = num::value_of(al), u = num::value_of(ah);
        if (l <= 0.0 && 0.0 <= u)
            throw DomainError("negative integer power of an interval containing zero");
        auto [rl, rh] = pow_int(al, ah, -k);
        return post(T(1.0) / std::move(rh), T(1.0) / std::move(rl));
    }
    const T pl = num::pow_i(al, k), ph = num::pow_i(ah, k);
    if (k % 2 == 1) return post(pl, ph);
    const double l = num::value_of(al), u = num::value_of(ah);
    if (l >= 0.0) return post(pl, ph);
    if (u <= 0.0) return post(ph, pl);
    return post(T(0.0), num::vmax(pl, ph));
}

}  // namespace ivkern

// Pair of equally shaped lower/upper bound arrays with lower <= upper
// element-wise; the array form of a box in IR^n.
template <class T>
class IntervalT {
public:
    IntervalT() = default;

    static IntervalT make(TensorT<T> lo, TensorT<T> hi) {
        if (!lo.same_shape(hi))
            throw ShapeMismatch("interval bounds " + shape_str(lo.shape()) + " vs " +
                                shape_str(hi.shape()));
        const bool extended = ArithmeticMode::extended_division().load(std::memory_order_relaxed);
        for (std::size_t i = 0; i < lo.size(); ++i) {
            const double l = num::value_of(lo[i]), u = num::value_of(hi[i]);
            if (std::isnan(l) || std::isnan(u))
                throw NonFiniteValue("NaN interval endpoint");
            if (!extended && (!std::isfinite(l) || !std::isfinite(u)))
                throw NonFiniteValue("infinite endpoint outside extended mode");
            if (!(l <= u))
                throw OrderViolation("lower > upper at flat index " + std::to_string(i) + " (" +
                                     std::to_string(l) + " > " + std::to_string(u) + ")");
        }
        return IntervalT(std::move(lo), std::move(hi));
    }

    static IntervalT thin(TensorT<T> v) {
        TensorT<T> lo = v;
        return make(std::move(lo), std::move(v));
    }

    // No invariant checks; for internal hot paths building from data that is
    // valid by construction.
    static IntervalT unchecked(TensorT<T> lo, TensorT<T> hi) {
        return IntervalT(std::move(lo), std::move(hi));
    }

    const TensorT<T>& lower() const { return lo_; }
    const TensorT<T>& upper() const { return hi_; }
    TensorT<T>& lower_mut() { return lo_; }
    TensorT<T>& upper_mut() { return hi_; }

    const Shape& shape() const { return lo_.shape(); }
    std::size_t rank() const { return lo_.rank(); }
    std::size_t size() const { return lo_.size(); }

    TensorT<T> width() const {
        return tensor_zip(hi_, lo_, [](const T& u, const T& l) { return u - l; });
    }
    TensorT<T> midpoint() const {
        return tensor_zip(hi_, lo_, [](const T& u, const T& l) { return (u + l) * T(0.5); });
    }
    bool is_thin(double tol = 0.0) const {
        for (std::size_t i = 0; i < size(); ++i)
            if (num::value_of(hi_[i]) - num::value_of(lo_[i]) > tol) return false;
        return true;
    }

private:
    IntervalT(TensorT<T> lo, TensorT<T> hi) : lo_(std::move(lo)), hi_(std::move(hi)) {}

    TensorT<T> lo_, hi_;
};

using Interval = IntervalT<double>;

template <class T>
IntervalT<T> make_interval(TensorT<T> lo, TensorT<T> hi) {
    return IntervalT<T>::make(std::move(lo), std::move(hi));
}

inline Interval make_interval(std::vector<double> lo, std::vector<double> hi) {
    return Interval::make(Tensor::vec(std::move(lo)), Tensor::vec(std::move(hi)));
}

// [center - pert, center + pert] with pert broadcast over center's shape.
template <class T>
IntervalT<T> center_pert(const TensorT<T>& center, const TensorT<T>& pert) {
    for (std::size_t i = 0; i < pert.size(); ++i)
        if (num::value_of(pert[i]) < 0.0)
            throw NegativePerturbation("pert[" + std::to_string(i) + "] = " +
                                       std::to_string(num::value_of(pert[i])));
    auto lo = tensor_zip(center, pert, [](const T& c, const T& p) { return c - p; });
    auto hi = tensor_zip(center, pert, [](const T& c, const T& p) { return c + p; });
    return IntervalT<T>::make(std::move(lo), std::move(hi));
}

inline Interval center_pert(std::vector<double> center, double pert) {
    return center_pert(Tensor::vec(std::move(center)), Tensor::scalar(pert));
}
inline Interval center_pert(std::vector<double> center, std::vector<double> pert) {
    return center_pert(Tensor::vec(std::move(center)), Tensor::vec(std::move(pert)));
}

// Upper-triangle coding: (lower, upper) flattened into one vector of length 2n.
template <class T>
TensorT<T> to_ut(const IntervalT<T>& x) {
    std::vector<T> out;
    out.reserve(2 * x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out.push_back(x.lower()[i]);
    for (std::size_t i = 0; i < x.size(); ++i) out.push_back(x.upper()[i]);
    return TensorT<T>::vec(std::move(out));
}

template <class T>
IntervalT<T> from_ut(const TensorT<T>& v) {
    if (v.rank() != 1 || v.size() % 2 != 0)
        throw ShapeMismatch("upper-triangle vector must be rank-1 with even length, got " +
                            shape_str(v.shape()));
    const std::size_t n = v.size() / 2;
    std::vector<T> lo(v.data().begin(), v.data().begin() + n);
    std::vector<T> hi(v.data().begin() + n, v.data().end());
    return IntervalT<T>::make(TensorT<T>::vec(std::move(lo)), TensorT<T>::vec(std::move(hi)));
}

template <class T>
bool contains(const IntervalT<T>& a, const TensorT<T>& x) {
    if (!a.lower().same_shape(x))
        throw ShapeMismatch("contains: " + shape_str(a.shape()) + " vs " + shape_str(x.shape()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = num::value_of(x[i]);
        if (v < num::value_of(a.lower()[i]) || v > num::value_of(a.upper()[i])) return false;
    }
    return true;
}

template <class T>
bool subset_of(const IntervalT<T>& a, const IntervalT<T>& b) {
    if (!a.lower().same_shape(b.lower()))
        throw ShapeMismatch("subset_of: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (num::value_of(a.lower()[i]) < num::value_of(b.lower()[i])) return false;
        if (num::value_of(a.upper()[i]) > num::value_of(b.upper()[i])) return false;
    }
    return true;
}

// Southeast order: (xl,xu) <=_SE (yl,yu)  iff  xl <= yl and yu <= xu.
template <class T>
bool se_less_equal(const IntervalT<T>& a, const IntervalT<T>& b) {
    if (!a.lower().same_shape(b.lower()))
        throw ShapeMismatch("se_less_equal: " + shape_str(a.shape()) + " vs " +
                            shape_str(b.shape()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (num::value_of(a.lower()[i]) > num::value_of(b.lower()[i])) return false;
        if (num::value_of(b.upper()[i]) > num::value_of(a.upper()[i])) return false;
    }
    return true;
}

template <class T, class K>
IntervalT<T> iv_zip(const IntervalT<T>& a, const IntervalT<T>& b, K&& kernel) {
    const Shape os = broadcast_shapes(a.shape(), b.shape());
    TensorT<T> lo(os), hi(os);
    if (a.shape() == os && b.shape() == os) {
        for (std::size_t i = 0; i < lo.size(); ++i) {
            auto [l, h] = kernel(a.lower()[i], a.upper()[i], b.lower()[i], b.upper()[i]);
            lo[i] = std::move(l);
            hi[i] = std::move(h);
        }
    } else {
        const auto ma = broadcast_index_map(os, a.shape());
        const auto mb = broadcast_index_map(os, b.shape());
        for (std::size_t i = 0; i < lo.size(); ++i) {
            auto [l, h] =
                kernel(a.lower()[ma[i]], a.upper()[ma[i]], b.lower()[mb[i]], b.upper()[mb[i]]);
            lo[i] = std::move(l);
            hi[i] = std::move(h);
        }
    }
    return IntervalT<T>::unchecked(std::move(lo), std::move(hi));
}

template <class T, class K>
IntervalT<T> iv_map(const IntervalT<T>& a, K&& kernel) {
    TensorT<T> lo(a.shape()), hi(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto [l, h] = kernel(a.lower()[i], a.upper()[i]);
        lo[i] = std::move(l);
        hi[i] = std::move(h);
    }
    return IntervalT<T>::unchecked(std::move(lo), std::move(hi));
}

template <class T>
IntervalT<T> operator+(const IntervalT<T>& a, const IntervalT<T>& b) {
    return iv_zip(a, b, [](const T& al, const T& ah, const T& bl, const T& bh) {
        return ivkern::add(al, ah, bl, bh);
    });
}
template <class T>
IntervalT<T> operator-(const IntervalT<T>& a, const IntervalT<T>& b) {
    return iv_zip(a, b, [](const T& al, const T& ah, const T& bl, const T& bh) {
        return ivkern::sub(al, ah, bl, bh);
    });
}
template <class T>
IntervalT<T> operator*(const IntervalT<T>& a, const IntervalT<T>& b) {
    return iv_zip(a, b, [](const T& al, const T& ah, const T& bl, const T& bh) {
        return ivkern::mul(al, ah, bl, bh);
    });
}
template <class T>
IntervalT<T> iv_div(const IntervalT<T>& a, const IntervalT<T>& b) {
    return iv_zip(a, b, [](const T& al, const T& ah, const T& bl, const T& bh) {
        return ivkern::div(al, ah, bl, bh);
    });
}
template <class T>
IntervalT<T> operator-(const IntervalT<T>& a) {
    return iv_map(a, [](const T& l, const T& h) { return ivkern::neg(l, h); });
}

template <class T>
IntervalT<T> iv_sin(const IntervalT<T>& a) {
    return iv_map(a, [](const T& l, const T& h) { return ivkern::sin(l, h); });
}
template <class T>
IntervalT<T> iv_cos(const IntervalT<T>& a) {
    return iv_map(a, [](const T& l, const T& h) { return ivkern::cos(l, h); });
}
template <class T>
IntervalT<T> iv_tan(const IntervalT<T>& a) {
    return iv_map(a, [](const T& l, const T& h) { return ivkern::tan(l, h); });
}
template <class T>
IntervalT<T> iv_atan(const IntervalT<T>& a) {
    return iv_map(a, [](const T& l, const T& h) { return ivkern::atan(l, h); });
}
template <class T>
IntervalT<T> iv_sqrt(const IntervalT<T>& a) {
    return iv_map(a, [](const T& l, const T& h) { return ivkern::sqrt(l, h); });
}
template <class T>
IntervalT<T> iv_exp(const IntervalT<T>& a) {
    return iv_map(a, [](const T& l, const T& h) { return ivkern::exp(l, h); });
}
template <class T>
IntervalT<T> iv_tanh(const IntervalT<T>& a) {
    return iv_map(a, [](const T& l, const T& h) { return ivkern::tanh(l, h); });
}
template <class T>
IntervalT<T> iv_abs(const IntervalT<T>& a) {
    return iv_map(a, [](const T& l, const T& h) { return ivkern::abs(l, h); });
}
template <class T>
IntervalT<T> iv_pow_int(const IntervalT<T>& a, int k) {
    return iv_map(a, [&](const T& l, const T& h) { return ivkern::pow_int(l, h, k); });
}

// Entry-wise sum over k of [A_ik]*[B_kj], with the same rank promotion as
// the real matrix product.
template <class T>
IntervalT<T> iv_matmul(const IntervalT<T>& a, const IntervalT<T>& b) {
    if (a.rank() == 0 || b.rank() == 0 || a.rank() > 2 || b.rank() > 2)
        throw ShapeMismatch("iv_matmul requires rank-1 or rank-2 operands, got " +
                            shape_str(a.shape()) + " @ " + shape_str(b.shape()));
    const bool avec = a.rank() == 1, bvec = b.rank() == 1;
    const std::size_t m = avec ? 1 : a.shape()[0];
    const std::size_t p = avec ? a.shape()[0] : a.shape()[1];
    const std::size_t pb = b.shape()[0];
    const std::size_t n = bvec ? 1 : b.shape()[1];
    if (p != pb)
        throw ShapeMismatch("iv_matmul inner dimensions " + shape_str(a.shape()) + " @ " +
                            shape_str(b.shape()));
    TensorT<T> lo(Shape{m, n}), hi(Shape{m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            T accl(0.0), acch(0.0);
            for (std::size_t k = 0; k < p; ++k) {
                auto [pl, ph] = ivkern::mul(a.lower()[i * p + k], a.upper()[i * p + k],
                                            b.lower()[k * n + j], b.upper()[k * n + j]);
                auto [sl, sh] = ivkern::add(accl, acch, pl, ph);
                accl = std::move(sl);
                acch = std::move(sh);
            }
            lo(i, j) = std::move(accl);
            hi(i, j) = std::move(acch);
        }
    Shape out = avec && bvec ? Shape{} : (avec ? Shape{n} : (bvec ? Shape{m} : Shape{m, n}));
    return IntervalT<T>::unchecked(lo.reshaped(out), hi.reshaped(out));
}

// Element-wise intersection of enclosures of the same quantity. A genuinely
// empty intersection means one operand was not a sound enclosure.
template <class T>
IntervalT<T> iv_intersect(const IntervalT<T>& a, const IntervalT<T>& b) {
    if (!a.lower().same_shape(b.lower()))
        throw ShapeMismatch("iv_intersect: " + shape_str(a.shape()) + " vs " +
                            shape_str(b.shape()));
    TensorT<T> lo(a.shape()), hi(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
        T l = num::vmax(a.lower()[i], b.lower()[i]);
        T h = num::vmin(a.upper()[i], b.upper()[i]);
        const double lv = num::value_of(l), hv = num::value_of(h);
        if (lv > hv) {
            const double slack = (lv - hv) / std::max(1.0, std::max(std::abs(lv), std::abs(hv)));
            if (slack > 1e-12)
                throw EmptyIntersection("disjoint enclosures at flat index " + std::to_string(i));
            h = l;  // touching up to rounding
        }
        lo[i] = std::move(l);
        hi[i] = std::move(h);
    }
    return IntervalT<T>::unchecked(std::move(lo), std::move(hi));
}

}  // namespace ivreach
