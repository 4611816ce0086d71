#pragma once

// Seeded generator of domain-safe random expression graphs plus the
// finite-difference helpers the soundness suites use. Division and sqrt
// arguments are kept away from their singular sets so every generated
// graph is differentiable on its evaluation box.

#include <random>
#include <vector>

#include "ivreach/expr_eval.hpp"
#include "ivreach/inclusion.hpp"

namespace ivtest {

using namespace ivreach;

struct RandomGraph {
    ExprGraph graph;
    Interval box;  // evaluation box for the single slot "x"
};

class GraphGen {
public:
    explicit GraphGen(std::uint64_t seed) : rng_(seed) {}

    RandomGraph next(int max_depth = 6) {
        for (;;) {
            const std::size_t n = 2 + rng_() % 3;  // x dimension 2..4
            GraphBuilder b;
            const int x = b.input("x", n);
            std::vector<int> outs;
            const std::size_t m = 1 + rng_() % 3;
            for (std::size_t i = 0; i < m; ++i) outs.push_back(scalar(b, x, n, max_depth));
            b.output(b.concat(outs));
            ExprGraph g = b.build();

            Tensor lo(Shape{n}), hi(Shape{n});
            for (std::size_t i = 0; i < n; ++i) {
                const double c = uni(-1.0, 1.0);
                const double r = uni(0.01, 0.4);
                lo[i] = c - r;
                hi[i] = c + r;
            }
            Interval box = Interval::make(std::move(lo), std::move(hi));
            if (tame(g, box)) return RandomGraph{std::move(g), std::move(box)};
        }
    }

    Tensor sample_in(const Interval& box) {
        Tensor x(box.shape());
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = uni(box.lower()[i], box.upper()[i]);
        return x;
    }

    // nested box strictly inside `box`
    Interval shrink(const Interval& box) {
        Tensor lo(box.shape()), hi(box.shape());
        for (std::size_t i = 0; i < box.size(); ++i) {
            double a = uni(box.lower()[i], box.upper()[i]);
            double b = uni(box.lower()[i], box.upper()[i]);
            lo[i] = std::min(a, b);
            hi[i] = std::max(a, b);
        }
        return Interval::make(std::move(lo), std::move(hi));
    }

    std::mt19937_64& rng() { return rng_; }

private:
    double uni(double a, double b) {
        return a + (b - a) * std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    }

    int scalar(GraphBuilder& b, int x, std::size_t n, int depth) {
        if (depth <= 0 || rng_() % 5 == 0) {
            if (rng_() % 4 == 0) return b.constant(uni(-1.5, 1.5));
            return b.index(x, rng_() % n);
        }
        switch (rng_() % 12) {
            case 0: return b.add(scalar(b, x, n, depth - 1), scalar(b, x, n, depth - 1));
            case 1: return b.sub(scalar(b, x, n, depth - 1), scalar(b, x, n, depth - 1));
            case 2: return b.mul(scalar(b, x, n, depth - 1), scalar(b, x, n, depth - 1));
            case 3: return b.neg(scalar(b, x, n, depth - 1));
            case 4: return b.sin(scalar(b, x, n, depth - 1));
            case 5: return b.cos(scalar(b, x, n, depth - 1));
            case 6: return b.tanh(scalar(b, x, n, depth - 1));
            case 7:  // exp of a bounded argument
                return b.exp(b.mul(b.constant(0.7), b.tanh(scalar(b, x, n, depth - 1))));
            case 8: {  // strictly positive sqrt argument
                const int t = scalar(b, x, n, depth - 1);
                return b.sqrt(b.add(b.constant(uni(0.5, 2.0)), b.pow_int(t, 2)));
            }
            case 9: {  // denominator bounded away from zero
                const int t = scalar(b, x, n, depth - 1);
                return b.div(scalar(b, x, n, depth - 1),
                             b.add(b.constant(uni(0.5, 2.0)), b.pow_int(t, 2)));
            }
            case 10: return b.pow_int(scalar(b, x, n, depth - 1), 2 + int(rng_() % 2));
            default: {  // tan/atan/abs with safe arguments
                const int t = scalar(b, x, n, depth - 1);
                switch (rng_() % 3) {
                    case 0: return b.tan(b.mul(b.constant(0.4), b.tanh(t)));
                    case 1: return b.atan(t);
                    default: return b.abs(b.add(b.constant(uni(0.2, 1.0)), b.pow_int(t, 2)));
                }
            }
        }
    }

    bool tame(const ExprGraph& g, const Interval& box) {
        try {
            const auto out = eval_interval(g, std::vector<Interval>{box});
            for (const auto& o : out)
                for (std::size_t i = 0; i < o.size(); ++i)
                    if (std::abs(o.lower()[i]) > 1e6 || std::abs(o.upper()[i]) > 1e6) return false;
            return true;
        } catch (const std::exception&) {
            return false;
        }
    }

    std::mt19937_64 rng_;
};

// Central finite-difference Jacobian of the flattened outputs.
inline Tensor fd_jacobian(const ExprGraph& g, const Tensor& x, double step = 1e-5) {
    const std::size_t n = x.size();
    const std::size_t m = g.output_dim();
    Tensor J(Shape{m, n});
    for (std::size_t j = 0; j < n; ++j) {
        Tensor xp = x, xm = x;
        xp[j] += step;
        xm[j] -= step;
        const auto fp = eval_real(g, std::vector<Tensor>{xp});
        const auto fm = eval_real(g, std::vector<Tensor>{xm});
        std::size_t r = 0;
        for (std::size_t o = 0; o < fp.size(); ++o)
            for (std::size_t e = 0; e < fp[o].size(); ++e, ++r)
                J(r, j) = (fp[o][e] - fm[o][e]) / (2.0 * step);
    }
    return J;
}

inline Tensor flat_outputs(const std::vector<Tensor>& outs) {
    std::vector<double> v;
    for (const auto& o : outs)
        for (double d : o.data()) v.push_back(d);
    return Tensor::vec(std::move(v));
}

inline Tensor flat_lower(const std::vector<Interval>& outs) {
    std::vector<double> v;
    for (const auto& o : outs)
        for (double d : o.lower().data()) v.push_back(d);
    return Tensor::vec(std::move(v));
}

inline Tensor flat_upper(const std::vector<Interval>& outs) {
    std::vector<double> v;
    for (const auto& o : outs)
        for (double d : o.upper().data()) v.push_back(d);
    return Tensor::vec(std::move(v));
}

}  // namespace ivtest
