#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ivreach/integrate.hpp"

using namespace ivreach;
using Catch::Approx;

namespace {

const Field kDecay = [](double, const std::vector<double>& x) {
    return std::vector<double>{-x[0]};
};

double slope_fit(const std::vector<double>& dts, const std::vector<double>& errs) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(dts.size());
    for (std::size_t i = 0; i < dts.size(); ++i) {
        const double x = std::log(dts[i]), y = std::log(errs[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("euler rollout") {
    SECTION("hand-iterated decay") {
        const auto tr = euler_rollout(kDecay, {1.0}, 0.0, 1.0, 0.5);
        REQUIRE(tr.times.size() == 3);
        CHECK(tr.states[0][0] == 1.0);
        CHECK(tr.states[1][0] == 0.5);
        CHECK(tr.states[2][0] == 0.25);
    }
    SECTION("zero field stays constant") {
        const Field zero = [](double, const std::vector<double>& x) {
            return std::vector<double>(x.size(), 0.0);
        };
        const auto tr = euler_rollout(zero, {3.0, -1.0}, 0.0, 1.0, 0.3);
        CHECK(tr.back()[0] == 3.0);
        CHECK(tr.back()[1] == -1.0);
        CHECK(tr.times.back() == Approx(1.0));  // truncated final step
    }
    SECTION("divergence is reported") {
        const Field blow = [](double, const std::vector<double>& x) {
            return std::vector<double>{x[0] * x[0]};
        };
        CHECK_THROWS_AS(euler_rollout(blow, {10.0}, 0.0, 10.0, 0.5), NonFiniteState);
    }
    SECTION("argument validation") {
        CHECK_THROWS_AS(euler_rollout(kDecay, {1.0}, 0.0, 1.0, -0.1), ConfigError);
        CHECK_THROWS_AS(euler_rollout(kDecay, {1.0}, 1.0, 0.5, 0.1), ConfigError);
    }
}

TEST_CASE("tsit5 rollout accuracy") {
    SECTION("exponential decay") {
        const auto tr = tsit5_rollout(kDecay, {1.0}, 0.0, 1.0, 0.1);
        CHECK(std::abs(tr.back()[0] - std::exp(-1.0)) < 1e-8);
        CHECK(tr.max_embedded_error > 0.0);
        CHECK(tr.max_embedded_error < 1e-6);
    }
    SECTION("oscillator energy drift") {
        const Field osc = [](double, const std::vector<double>& x) {
            return std::vector<double>{x[1], -x[0]};
        };
        const auto tr = tsit5_rollout(osc, {1.0, 0.0}, 0.0, 2.0 * 3.141592653589793, 0.05);
        CHECK(std::abs(std::hypot(tr.back()[0], tr.back()[1]) - 1.0) < 1e-6);
    }
    SECTION("constant field") {
        const Field zero = [](double, const std::vector<double>& x) {
            return std::vector<double>(x.size(), 0.0);
        };
        const auto tr = tsit5_rollout(zero, {2.0}, 0.0, 0.35, 0.1);
        CHECK(tr.back()[0] == 2.0);
    }
}

TEST_CASE("integrator convergence orders") {
    const std::vector<double> grid = {0.08, 0.04, 0.02, 0.01};
    std::vector<double> e_euler, e_tsit;
    for (double dt : grid) {
        e_euler.push_back(
            std::abs(euler_rollout(kDecay, {1.0}, 0.0, 1.0, dt).back()[0] - std::exp(-1.0)));
        e_tsit.push_back(
            std::abs(tsit5_rollout(kDecay, {1.0}, 0.0, 1.0, dt).back()[0] - std::exp(-1.0)));
    }
    const double s1 = slope_fit(grid, e_euler);
    const double s5 = slope_fit(grid, e_tsit);
    CHECK(s1 == Approx(1.0).margin(0.3));
    CHECK(s5 == Approx(5.0).margin(0.3));
}

TEST_CASE("rollouts are bit-deterministic") {
    const Field osc = [](double, const std::vector<double>& x) {
        return std::vector<double>{x[1], std::sin(x[0]) - 0.1 * x[1]};
    };
    const auto a = tsit5_rollout(osc, {0.3, -0.2}, 0.0, 2.0, 0.02);
    const auto b = tsit5_rollout(osc, {0.3, -0.2}, 0.0, 2.0, 0.02);
    REQUIRE(a.states.size() == b.states.size());
    for (std::size_t k = 0; k < a.states.size(); ++k) {
        REQUIRE(a.states[k][0] == b.states[k][0]);
        REQUIRE(a.states[k][1] == b.states[k][1]);
    }
    const auto c = euler_rollout(osc, {0.3, -0.2}, 0.0, 2.0, 0.02);
    const auto d = euler_rollout(osc, {0.3, -0.2}, 0.0, 2.0, 0.02);
    for (std::size_t k = 0; k < c.states.size(); ++k) REQUIRE(c.states[k][1] == d.states[k][1]);
}
