#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ivreach/interval.hpp"
#include "support/oracles.hpp"

using namespace ivreach;
using Catch::Approx;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;

Interval rand_box(std::mt19937_64& rng, std::size_t n, double center_range = 2.0,
                  double max_radius = 1.5) {
    std::uniform_real_distribution<double> uc(-center_range, center_range);
    std::uniform_real_distribution<double> ur(0.0, max_radius);
    Tensor lo(Shape{n}), hi(Shape{n});
    for (std::size_t i = 0; i < n; ++i) {
        const double c = uc(rng), r = ur(rng);
        lo[i] = c - r;
        hi[i] = c + r;
    }
    return Interval::make(std::move(lo), std::move(hi));
}

double sample_in(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}
}  // namespace

TEST_CASE("interval construction and converters") {
    const Interval a = make_interval({0.0, 0.0}, {1.0, 2.0});
    CHECK(a.lower()[1] == 0.0);
    CHECK(a.upper()[1] == 2.0);

    const Interval thin = make_interval({1.0}, {1.0});
    CHECK(thin.is_thin());

    CHECK_THROWS_AS(make_interval({2.0}, {1.0}), OrderViolation);
    CHECK_THROWS_AS(Interval::make(Tensor::vec({0.0}), Tensor::vec({0.0, 1.0})), ShapeMismatch);

    SECTION("center and perturbation") {
        const Interval b = center_pert({0.0, 0.0}, 0.1);
        CHECK(b.lower()[0] == Approx(-0.1));
        CHECK(b.upper()[1] == Approx(0.1));
        const Interval pend = center_pert({kPi, 0.0}, {10.0 * kPi / 360.0, 0.1});
        CHECK(pend.lower()[0] == Approx(kPi - 10.0 * kPi / 360.0));
        CHECK(pend.upper()[1] == Approx(0.1));
        CHECK(center_pert({5.0}, 0.0).is_thin());
        CHECK_THROWS_AS(center_pert({0.0}, -0.5), NegativePerturbation);
    }

    SECTION("upper-triangle coding round trip") {
        const Interval b = make_interval({1.0, 3.0}, {2.0, 4.0});
        const Tensor ut = to_ut(b);
        REQUIRE(ut.size() == 4);
        CHECK(ut[0] == 1.0);
        CHECK(ut[1] == 3.0);
        CHECK(ut[2] == 2.0);
        CHECK(ut[3] == 4.0);
        const Interval back = from_ut(ut);
        CHECK(back.lower() == b.lower());
        CHECK(back.upper() == b.upper());
        CHECK_THROWS_AS(from_ut(Tensor::vec({2.0, 0.0, 1.0, 0.0})), OrderViolation);
        CHECK_THROWS_AS(from_ut(Tensor::vec({1.0, 2.0, 3.0})), ShapeMismatch);
    }
}

TEST_CASE("element-wise arithmetic on the worked examples") {
    auto iv = [](double l, double h) { return make_interval({l}, {h}); };
    const Interval m = iv(-1, 2) * iv(3, 4);
    CHECK(m.lower()[0] == Approx(-4.0));
    CHECK(m.upper()[0] == Approx(8.0));

    const Interval a = iv(1, 2) + iv(-1, 1);
    CHECK(a.lower()[0] == Approx(0.0));
    CHECK(a.upper()[0] == Approx(3.0));

    // subtracting an interval from itself is not thin
    const Interval s = iv(0, 1) - iv(0, 1);
    CHECK(s.lower()[0] == Approx(-1.0));
    CHECK(s.upper()[0] == Approx(1.0));

    SECTION("division") {
        const Interval d = iv_div(iv(1, 2), iv(2, 4));
        CHECK(d.lower()[0] == Approx(0.25));
        CHECK(d.upper()[0] == Approx(1.0));
        CHECK_THROWS_AS(iv_div(iv(1, 2), iv(-1, 1)), DivisionByIntervalContainingZero);
    }

    SECTION("extended division is feature-gated") {
        ArithmeticMode::extended_division().store(true);
        const Interval d = iv_div(iv(1, 2), iv(0, 1));
        CHECK(d.lower()[0] == Approx(1.0));
        CHECK(std::isinf(d.upper()[0]));
        const Interval whole = iv_div(iv(1, 2), iv(-1, 1));
        CHECK(std::isinf(whole.lower()[0]));
        CHECK(std::isinf(whole.upper()[0]));
        ArithmeticMode::extended_division().store(false);
    }
}

TEST_CASE("matrix product") {
    // thin operands give the ordinary product
    const Interval a = Interval::thin(Tensor::mat(1, 2, {1.0, 1.0}));
    const Interval b = Interval::thin(Tensor::mat(2, 1, {2.0, 3.0}));
    const Interval p = iv_matmul(a, b);
    REQUIRE(p.shape() == Shape{1, 1});
    CHECK(p.lower()(0, 0) == Approx(5.0));
    CHECK(p.upper()(0, 0) == Approx(5.0));

    // [0,1] row times (1,-1)
    const Interval c = make_interval(Tensor::mat(1, 2, {0.0, 0.0}), Tensor::mat(1, 2, {1.0, 1.0}));
    const Interval d = Interval::thin(Tensor::mat(2, 1, {1.0, -1.0}));
    const Interval q = iv_matmul(c, d);
    CHECK(q.lower()(0, 0) == Approx(-1.0));
    CHECK(q.upper()(0, 0) == Approx(1.0));

    // Jacobian-row example: [-0.4,0.4]*[-0.1,0.1] + [-0.4,0.4]*[-0.1,0.1]
    const Interval J = make_interval(Tensor::mat(1, 2, {-0.4, -0.4}), Tensor::mat(1, 2, {0.4, 0.4}));
    const Interval v = make_interval(Tensor::vec({-0.1, -0.1}), Tensor::vec({0.1, 0.1}));
    const Interval r = iv_matmul(J, v);
    CHECK(r.lower()[0] == Approx(-0.08));
    CHECK(r.upper()[0] == Approx(0.08));

    CHECK_THROWS_AS(iv_matmul(a, c), ShapeMismatch);
}

TEST_CASE("unary minimal ranges on the worked examples") {
    auto iv = [](double l, double h) { return make_interval({l}, {h}); };
    const Interval sq = iv_pow_int(iv(-0.2, 0.2), 2);
    CHECK(sq.lower()[0] == 0.0);
    CHECK(sq.upper()[0] == Approx(0.04));

    const Interval s = iv_sin(iv(0.0, kPi));
    CHECK(s.lower()[0] == Approx(0.0).margin(1e-15));
    CHECK(s.upper()[0] == 1.0);

    const Interval c = iv_cos(iv(0.7, 0.7));
    CHECK(c.lower()[0] == c.upper()[0]);
    CHECK(c.lower()[0] == Approx(std::cos(0.7)));

    CHECK_THROWS_AS(iv_sqrt(iv(-1.0, 1.0)), DomainError);
    CHECK_THROWS_AS(iv_pow_int(iv(-1.0, 1.0), -1), DomainError);
    CHECK_THROWS_AS(iv_tan(iv(1.0, 2.0)), DomainError);

    const Interval ab = iv_abs(iv(-2.0, 1.0));
    CHECK(ab.lower()[0] == 0.0);
    CHECK(ab.upper()[0] == 2.0);
}

TEST_CASE("element-wise broadcasting follows trailing-dimension rules") {
    const Interval scalar = make_interval(Tensor::scalar(2.0), Tensor::scalar(3.0));
    const Interval vec = make_interval({0.0, -1.0, 1.0}, {1.0, 0.0, 2.0});
    const Interval prod = scalar * vec;
    REQUIRE(prod.shape() == Shape{3});
    CHECK(prod.lower()[0] == 0.0);
    CHECK(prod.upper()[0] == 3.0);
    CHECK(prod.lower()[1] == -3.0);
    CHECK(prod.upper()[1] == 0.0);
    const Interval mat = make_interval(Tensor::mat(2, 3, std::vector<double>(6, 0.0)),
                                       Tensor::mat(2, 3, std::vector<double>(6, 1.0)));
    const Interval sum = mat + vec;  // (2,3) + (3,) -> (2,3)
    REQUIRE(sum.shape() == (Shape{2, 3}));
    CHECK(sum.upper()(1, 2) == 3.0);
    CHECK_THROWS_AS(vec + make_interval({0.0, 0.0}, {1.0, 1.0}), ShapeMismatch);
}

TEST_CASE("containment, inclusion and the southeast order") {
    const Interval a = make_interval({0.0}, {1.0});
    CHECK(contains(a, Tensor::vec({0.5})));
    CHECK_FALSE(contains(a, Tensor::vec({1.5})));
    CHECK(subset_of(make_interval({0.2}, {0.3}), a));
    CHECK_FALSE(subset_of(a, make_interval({0.2}, {0.3})));
    CHECK(se_less_equal(make_interval({1.0}, {4.0}), make_interval({2.0}, {3.0})));
    CHECK_FALSE(se_less_equal(make_interval({2.0}, {3.0}), make_interval({1.0}, {4.0})));
    CHECK_THROWS_AS(contains(a, Tensor::vec({0.0, 0.0})), ShapeMismatch);
}

namespace {
using Unary = std::pair<const char*, std::pair<Interval (*)(const Interval&),
                                               double (*)(double)>>;

double pow2d(double x) { return x * x; }
double pow3d(double x) { return x * x * x; }
Interval pow2i(const Interval& a) { return iv_pow_int(a, 2); }
Interval pow3i(const Interval& a) { return iv_pow_int(a, 3); }
Interval negi(const Interval& a) { return -a; }
double negd(double x) { return -x; }
double absd(double x) { return std::abs(x); }
}  // namespace

TEST_CASE("soundness, minimality, thinness and monotonicity per primitive") {
    std::mt19937_64 rng(12345);
    const std::vector<Unary> unary_ops = {
        {"neg", {negi, negd}},       {"sin", {iv_sin<double>, std::sin}},
        {"cos", {iv_cos<double>, std::cos}}, {"tanh", {iv_tanh<double>, std::tanh}},
        {"exp", {iv_exp<double>, std::exp}}, {"atan", {iv_atan<double>, std::atan}},
        {"abs", {iv_abs<double>, absd}},     {"pow2", {pow2i, pow2d}},
        {"pow3", {pow3i, pow3d}},
    };

    SECTION("unary ops: soundness at full scale") {
        const int boxes = 10000, samples = 1000;
        for (const auto& [name, fns] : unary_ops) {
            INFO(name);
            auto [ivf, ref] = fns;
            long violations = 0;
            for (int b = 0; b < boxes; ++b) {
                const Interval box = rand_box(rng, 1);
                const Interval out = ivf(box);
                for (int s = 0; s < samples; ++s) {
                    const double x = sample_in(rng, box.lower()[0], box.upper()[0]);
                    const double y = ref(x);
                    if (y < out.lower()[0] - 1e-12 || y > out.upper()[0] + 1e-12) ++violations;
                }
            }
            REQUIRE(violations == 0);
        }
    }

    SECTION("unary ops: minimality, thinness, nested monotonicity") {
        const int boxes = 1200;
        for (const auto& [name, fns] : unary_ops) {
            INFO(name);
            auto [ivf, ref] = fns;
            for (int b = 0; b < boxes; ++b) {
                const Interval box = rand_box(rng, 1);
                const Interval out = ivf(box);
                // minimality against the sampling + refinement oracle
                auto [mn, mx] =
                    ivtest::scalar_range_oracle(ref, box.lower()[0], box.upper()[0], 400);
                REQUIRE(out.lower()[0] == Approx(mn).margin(1e-9));
                REQUIRE(out.upper()[0] == Approx(mx).margin(1e-9));
                // thinness
                const double x0 = box.midpoint()[0];
                const Interval t = ivf(Interval::thin(Tensor::vec({x0})));
                REQUIRE(t.lower()[0] == Approx(ref(x0)).epsilon(1e-12).margin(1e-300));
                // inclusion monotonicity on a nested box
                const double c = box.midpoint()[0];
                const double r = 0.25 * (box.upper()[0] - box.lower()[0]);
                const Interval inner = make_interval({c - r}, {c + r});
                const Interval oi = ivf(inner);
                REQUIRE(oi.lower()[0] >= out.lower()[0] - 1e-12);
                REQUIRE(oi.upper()[0] <= out.upper()[0] + 1e-12);
            }
        }
    }

    SECTION("mul: minimality by corner enumeration") {
        for (int b = 0; b < 3000; ++b) {
            const Interval A = rand_box(rng, 1);
            const Interval B = rand_box(rng, 1);
            const Interval out = A * B;
            auto [mn, mx] = ivtest::product_range_oracle(A.lower()[0], A.upper()[0], B.lower()[0],
                                                         B.upper()[0]);
            REQUIRE(out.lower()[0] == Approx(mn).margin(1e-12));
            REQUIRE(out.upper()[0] == Approx(mx).margin(1e-12));
        }
    }

    SECTION("binary ops: soundness at full scale") {
        const int boxes = 10000, samples = 1000;
        long violations = 0;
        for (int b = 0; b < boxes; ++b) {
            const Interval A = rand_box(rng, 1);
            const Interval B = rand_box(rng, 1);
            const Interval sum = A + B, dif = A - B, prod = A * B;
            for (int s = 0; s < samples; ++s) {
                const double xa = sample_in(rng, A.lower()[0], A.upper()[0]);
                const double xb = sample_in(rng, B.lower()[0], B.upper()[0]);
                if (xa + xb < sum.lower()[0] - 1e-12 || xa + xb > sum.upper()[0] + 1e-12)
                    ++violations;
                if (xa - xb < dif.lower()[0] - 1e-12 || xa - xb > dif.upper()[0] + 1e-12)
                    ++violations;
                if (xa * xb < prod.lower()[0] - 1e-12 || xa * xb > prod.upper()[0] + 1e-12)
                    ++violations;
            }
        }
        REQUIRE(violations == 0);
    }

    SECTION("thin binary ops equal the real result") {
        for (int rep = 0; rep < 200; ++rep) {
            const double a = sample_in(rng, -3, 3), b = sample_in(rng, -3, 3);
            const Interval ia = Interval::thin(Tensor::vec({a}));
            const Interval ib = Interval::thin(Tensor::vec({b}));
            CHECK((ia * ib).lower()[0] == Approx(a * b).epsilon(1e-12).margin(1e-300));
            CHECK((ia + ib).lower()[0] == Approx(a + b).epsilon(1e-12).margin(1e-300));
            CHECK((ia - ib).upper()[0] == Approx(a - b).epsilon(1e-12).margin(1e-300));
        }
    }
}

TEST_CASE("inflate mode widens results outward") {
    const Interval a = make_interval({1.0}, {2.0});
    const Interval b = make_interval({3.0}, {4.0});
    const Interval plain = a * b;
    ArithmeticMode::inflate_ulps().store(4);
    const Interval wide = a * b;
    ArithmeticMode::inflate_ulps().store(0);
    CHECK(wide.lower()[0] < plain.lower()[0]);
    CHECK(wide.upper()[0] > plain.upper()[0]);
    CHECK(subset_of(plain, wide));
}

TEST_CASE("intersection of sound enclosures") {
    const Interval a = make_interval({0.0, -1.0}, {2.0, 1.0});
    const Interval b = make_interval({1.0, -2.0}, {3.0, 0.5});
    const Interval c = iv_intersect(a, b);
    CHECK(c.lower()[0] == 1.0);
    CHECK(c.upper()[0] == 2.0);
    CHECK(c.upper()[1] == 0.5);
    CHECK_THROWS_AS(iv_intersect(make_interval({0.0}, {1.0}), make_interval({2.0}, {3.0})),
                    EmptyIntersection);
}
