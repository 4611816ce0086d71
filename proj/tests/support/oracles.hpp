#pragma once

// Implementation-independent oracles: dense sampling with golden-section
// refinement for scalar ranges, corner enumeration for bilinear ranges.

#include <cmath>
#include <functional>
#include <utility>

namespace ivtest {

// Range of a continuous scalar function over [lo, hi]: scan a dense grid,
// then refine around the best cells by golden-section search.
inline std::pair<double, double> scalar_range_oracle(const std::function<double(double)>& f,
                                                     double lo, double hi, int grid = 2001) {
    auto golden = [&](double a, double b, bool maximize) {
        const double phi = 0.6180339887498949;
        double c = b - phi * (b - a), d = a + phi * (b - a);
        for (int it = 0; it < 90; ++it) {
            const double fc = maximize ? -f(c) : f(c);
            const double fd = maximize ? -f(d) : f(d);
            if (fc < fd)
                b = d;
            else
                a = c;
            c = b - phi * (b - a);
            d = a + phi * (b - a);
        }
        return f(0.5 * (a + b));
    };
    double best_min = f(lo), best_max = f(lo);
    double argmin = lo, argmax = lo;
    for (int i = 0; i <= grid; ++i) {
        const double x = lo + (hi - lo) * double(i) / double(grid);
        const double v = f(x);
        if (v < best_min) {
            best_min = v;
            argmin = x;
        }
        if (v > best_max) {
            best_max = v;
            argmax = x;
        }
    }
    const double cell = (hi - lo) / double(grid);
    best_min = std::min(best_min,
                        golden(std::max(lo, argmin - 2 * cell), std::min(hi, argmin + 2 * cell),
                               /*maximize=*/false));
    best_max = std::max(best_max,
                        golden(std::max(lo, argmax - 2 * cell), std::min(hi, argmax + 2 * cell),
                               /*maximize=*/true));
    return {best_min, best_max};
}

// Exact range of x*y over a box: attained at a corner.
inline std::pair<double, double> product_range_oracle(double al, double ah, double bl, double bh) {
    const double c[4] = {al * bl, al * bh, ah * bl, ah * bh};
    double mn = c[0], mx = c[0];
    for (double v : c) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    return {mn, mx};
}

}  // namespace ivtest
