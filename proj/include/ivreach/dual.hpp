#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace ivreach {

// Forward-mode dual number carrying a dense gradient vector. An empty
// gradient means "identically zero tangent", which keeps constants cheap.
// Comparisons act on the value part, so min/max kinks take the one-sided
// derivative of the selected branch.
class Dual {
public:
    Dual() = default;
    Dual(double v) : v_(v) {}  // NOLINT(google-explicit-constructor)
    Dual(double v, std::vector<double> g) : v_(v), g_(std::move(g)) {}

    static Dual seed(double v, std::size_t n, std::size_t k) {
        std::vector<double> g(n, 0.0);
        g[k] = 1.0;
        return Dual(v, std::move(g));
    }

    double value() const { return v_; }
    const std::vector<double>& grad() const { return g_; }
    double grad(std::size_t k) const { return k < g_.size() ? g_[k] : 0.0; }

    Dual& operator+=(const Dual& o) {
        v_ += o.v_;
        add_grad(o.g_, 1.0);
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        v_ -= o.v_;
        add_grad(o.g_, -1.0);
        return *this;
    }

    friend Dual operator+(const Dual& a, const Dual& b) {
        Dual r(a);
        r += b;
        return r;
    }
    friend Dual operator-(const Dual& a, const Dual& b) {
        Dual r(a);
        r -= b;
        return r;
    }
    friend Dual operator-(const Dual& a) {
        Dual r(a);
        r.v_ = -r.v_;
        for (auto& g : r.g_) g = -g;
        return r;
    }
    friend Dual operator*(const Dual& a, const Dual& b) {
        Dual r;
        r.v_ = a.v_ * b.v_;
        r.g_ = combine(a.g_, b.v_, b.g_, a.v_);
        return r;
    }
    friend Dual operator/(const Dual& a, const Dual& b) {
        Dual r;
        r.v_ = a.v_ / b.v_;
        r.g_ = combine(a.g_, 1.0 / b.v_, b.g_, -a.v_ / (b.v_ * b.v_));
        return r;
    }

    friend bool operator<(const Dual& a, const Dual& b) { return a.v_ < b.v_; }
    friend bool operator>(const Dual& a, const Dual& b) { return a.v_ > b.v_; }
    friend bool operator<=(const Dual& a, const Dual& b) { return a.v_ <= b.v_; }
    friend bool operator>=(const Dual& a, const Dual& b) { return a.v_ >= b.v_; }

    // chain rule: f(a) with derivative d at a.value()
    friend Dual chain(double fv, double d, const Dual& a) {
        Dual r;
        r.v_ = fv;
        r.g_.reserve(a.g_.size());
        for (double g : a.g_) r.g_.push_back(d * g);
        return r;
    }

private:
    static std::vector<double> combine(const std::vector<double>& ga, double ca,
                                       const std::vector<double>& gb, double cb) {
        if (ga.empty() && gb.empty()) return {};
        std::vector<double> out(std::max(ga.size(), gb.size()), 0.0);
        for (std::size_t i = 0; i < ga.size(); ++i) out[i] += ca * ga[i];
        for (std::size_t i = 0; i < gb.size(); ++i) out[i] += cb * gb[i];
        return out;
    }
    void add_grad(const std::vector<double>& g, double c) {
        if (g.empty()) return;
        if (g_.size() < g.size()) g_.resize(g.size(), 0.0);
        for (std::size_t i = 0; i < g.size(); ++i) g_[i] += c * g[i];
    }

    double v_ = 0.0;
    std::vector<double> g_;
};

inline Dual sin(const Dual& a) { return chain(std::sin(a.value()), std::cos(a.value()), a); }
inline Dual cos(const Dual& a) { return chain(std::cos(a.value()), -std::sin(a.value()), a); }
inline Dual tan(const Dual& a) {
    const double c = std::cos(a.value());
    return chain(std::tan(a.value()), 1.0 / (c * c), a);
}
inline Dual atan(const Dual& a) {
    return chain(std::atan(a.value()), 1.0 / (1.0 + a.value() * a.value()), a);
}
inline Dual sqrt(const Dual& a) {
    const double s = std::sqrt(a.value());
    return chain(s, 0.5 / s, a);
}
inline Dual exp(const Dual& a) {
    const double e = std::exp(a.value());
    return chain(e, e, a);
}
inline Dual tanh(const Dual& a) {
    const double t = std::tanh(a.value());
    return chain(t, 1.0 - t * t, a);
}
inline Dual abs(const Dual& a) { return a.value() < 0.0 ? -a : a; }
inline Dual min(const Dual& a, const Dual& b) { return a.value() <= b.value() ? a : b; }
inline Dual max(const Dual& a, const Dual& b) { return a.value() >= b.value() ? a : b; }
inline bool isfinite(const Dual& a) { return std::isfinite(a.value()); }

namespace num {

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.value(); }

template <class T>
bool finite(const T& x) {
    using std::isfinite;
    return isfinite(x);
}

template <class T>
T vmin(const T& a, const T& b) {
    using std::min;
    return min(a, b);
}
template <class T>
T vmax(const T& a, const T& b) {
    using std::max;
    return max(a, b);
}

// integer power by repeated multiplication (deterministic, exact branch set)
template <class T>
T pow_i(const T& x, int k) {
    if (k == 0) return T(1.0);
    const bool negative = k < 0;
    unsigned e = negative ? static_cast<unsigned>(-static_cast<long long>(k))
                          : static_cast<unsigned>(k);
    T base = x, acc = T(1.0);
    while (e) {
        if (e & 1u) acc = acc * base;
        e >>= 1u;
        if (e) base = base * base;
    }
    if (negative) return T(1.0) / acc;
    return acc;
}

}  // namespace num

}  // namespace ivreach
