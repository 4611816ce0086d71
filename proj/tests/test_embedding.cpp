#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ivreach/embedding.hpp"
#include "ivreach/integrate.hpp"
#include "ivreach/systems.hpp"

using namespace ivreach;
using Catch::Approx;

namespace {

System scalar_decay() {
    GraphBuilder b;
    auto x = b.input("x", 1);
    b.output(b.concat({b.neg(b.index(x, 0))}));
    return System::from_graph(b.build(), 1);
}

System rotation() {
    GraphBuilder b;
    auto x = b.input("x", 2);
    b.output(b.concat({b.index(x, 1), b.neg(b.index(x, 0))}));
    return System::from_graph(b.build(), 2);
}

const Interval kNoW = Interval::unchecked(Tensor::vec({}), Tensor::vec({}));

}  // namespace

TEST_CASE("builtin fields evaluate to the documented values") {
    const System veh = vehicle_system();
    const auto dx = eval_real(
        veh.f, std::vector<Tensor>{Tensor::vec({0.0, 0.0, 0.0, 1.0}), Tensor::vec({0.0, 0.0}),
                                   Tensor::vec({})});
    CHECK(dx[0][0] == Approx(1.0));
    CHECK(dx[0][1] == Approx(0.0).margin(1e-15));
    CHECK(dx[0][2] == Approx(0.0).margin(1e-15));
    CHECK(dx[0][3] == Approx(0.0).margin(1e-15));

    const System pend = pendulum_system();
    const auto dp = eval_real(
        pend.f, std::vector<Tensor>{Tensor::vec({0.0, 0.0}), Tensor::vec({1.0}),
                                    Tensor::vec({0.0})});
    CHECK(dp[0][0] == 0.0);
    CHECK(dp[0][1] == Approx(1.0 / 0.0375));  // torque over m*l^2 from rest
}

TEST_CASE("system construction validates the signature") {
    CHECK_THROWS_AS(System::from_graph(scalar_decay().f, 2), SignatureMismatch);
    GraphBuilder b;
    auto u = b.input("u", 1);
    b.output(u);
    CHECK_THROWS_AS(System::from_graph(b.build(), 1), SignatureMismatch);
}

TEST_CASE("face evaluations of the induced embedding") {
    SECTION("scalar decay") {
        const auto emb = make_embedding(scalar_decay(), InclusionMethod::natural);
        const auto [dlo, dhi] = emb.rates(0.0, Tensor::vec({-1.0}), Tensor::vec({1.0}), kNoW);
        CHECK(dlo[0] == Approx(1.0));
        CHECK(dhi[0] == Approx(-1.0));
    }
    SECTION("rotation substitutes per coordinate") {
        const auto emb = make_embedding(rotation(), InclusionMethod::natural);
        const auto [dlo, dhi] =
            emb.rates(0.0, Tensor::vec({-1.0, -2.0}), Tensor::vec({1.0, 2.0}), kNoW);
        CHECK(dlo[0] == Approx(-2.0));
        CHECK(dlo[1] == Approx(-1.0));
        CHECK(dhi[0] == Approx(2.0));
        CHECK(dhi[1] == Approx(1.0));
    }
    SECTION("thin state and disturbance reproduce the field") {
        const System sys = pendulum_system();
        const auto emb = make_embedding(sys, InclusionMethod::natural, {},
                                        ControlInput(Interval::thin(Tensor::vec({0.3}))));
        const Tensor x = Tensor::vec({0.4, -0.2});
        const Interval w = Interval::thin(Tensor::vec({0.01}));
        const auto [dlo, dhi] = emb.rates(0.0, x, x, w);
        const auto f = eval_real(
            sys.f, std::vector<Tensor>{x, Tensor::vec({0.3}), Tensor::vec({0.01})});
        for (int i = 0; i < 2; ++i) {
            CHECK(dlo[i] == Approx(f[0][i]).margin(1e-14));
            CHECK(dhi[i] == Approx(f[0][i]).margin(1e-14));
        }
    }
}

TEST_CASE("decomposition function") {
    const System sys = pendulum_system();
    const auto emb = make_embedding(sys, InclusionMethod::natural, {},
                                    ControlInput(Interval::thin(Tensor::vec({0.2}))));
    const Tensor x = Tensor::vec({0.1, -0.3});
    const Tensor xh = Tensor::vec({0.4, 0.1});
    const Tensor w = Tensor::vec({-0.01});
    const Tensor wh = Tensor::vec({0.02});

    SECTION("identity on the diagonal") {
        const Tensor d = decomposition(emb, x, x, w, w);
        const auto f =
            eval_real(sys.f, std::vector<Tensor>{x, Tensor::vec({0.2}), w});
        CHECK(d[0] == Approx(f[0][0]).margin(1e-14));
        CHECK(d[1] == Approx(f[0][1]).margin(1e-14));
    }
    SECTION("ordered case equals the lower embedding face") {
        const Tensor d = decomposition(emb, x, xh, w, wh);
        const auto [dlo, dhi] = emb.rates(0.0, x, xh, Interval::make(w, wh));
        CHECK(d[0] == Approx(dlo[0]).margin(1e-14));
        CHECK(d[1] == Approx(dlo[1]).margin(1e-14));
    }
    SECTION("reversed arguments route to the upper face") {
        const Tensor d = decomposition(emb, xh, x, wh, w);
        const auto [dlo, dhi] = emb.rates(0.0, x, xh, Interval::make(w, wh));
        CHECK(d[0] == Approx(dhi[0]).margin(1e-14));
        CHECK(d[1] == Approx(dhi[1]).margin(1e-14));
    }
    SECTION("unordered arguments are rejected") {
        CHECK_THROWS_AS(decomposition(emb, Tensor::vec({0.5, -0.3}), xh, w, wh),
                        UnorderedArguments);
    }
}

TEST_CASE("embedding rollouts") {
    const auto emb = make_embedding(scalar_decay(), InclusionMethod::natural);
    Field f = [&](double t, const std::vector<double>& ut) { return emb.field_ut(t, ut, kNoW); };

    SECTION("shrinking box of the scalar decay") {
        const auto tr = euler_rollout(f, {-1.0, 1.0}, 0.0, 1.0, 0.1);
        const double expect = std::pow(0.9, 10);
        CHECK(tr.back()[0] == Approx(-expect));
        CHECK(tr.back()[1] == Approx(expect));
    }

    SECTION("upper triangle is forward invariant") {
        const auto emb2 = make_embedding(rotation(), InclusionMethod::natural);
        Field f2 = [&](double t, const std::vector<double>& ut) {
            return emb2.field_ut(t, ut, kNoW);
        };
        const auto tr = euler_rollout(f2, {-0.5, -0.1, 0.5, 0.2}, 0.0, 3.0, 0.01);
        for (const auto& s : tr.states) {
            REQUIRE(s[0] <= s[2] + 1e-12);
            REQUIRE(s[1] <= s[3] + 1e-12);
        }
    }

    SECTION("thin start reproduces the real trajectory") {
        const System sys = pendulum_system();
        const auto emb2 = make_embedding(sys, InclusionMethod::natural, {},
                                         ControlInput(Interval::thin(Tensor::vec({0.0}))));
        const Interval wthin = Interval::thin(Tensor::vec({0.0}));
        Field fe = [&](double t, const std::vector<double>& ut) {
            return emb2.field_ut(t, ut, wthin);
        };
        const auto tube = euler_rollout(fe, {0.3, 0.0, 0.3, 0.0}, 0.0, 1.0, 0.01);
        Field fr = [&](double t, const std::vector<double>& xs) {
            const auto out = eval_real(sys.f, std::vector<Tensor>{Tensor::vec(xs),
                                                                  Tensor::vec({0.0}),
                                                                  Tensor::vec({0.0})});
            return out[0].data();
        };
        const auto real = euler_rollout(fr, {0.3, 0.0}, 0.0, 1.0, 0.01);
        for (std::size_t k = 0; k < real.times.size(); ++k)
            for (int i = 0; i < 2; ++i) {
                REQUIRE(tube.states[k][i] == Approx(real.states[k][i]).margin(1e-12));
                REQUIRE(tube.states[k][2 + i] == Approx(real.states[k][i]).margin(1e-12));
            }
    }
}

TEST_CASE("southeast monotonicity of natural embeddings") {
    const auto emb = make_embedding(rotation(), InclusionMethod::natural);
    Field f = [&](double t, const std::vector<double>& ut) { return emb.field_ut(t, ut, kNoW); };
    // inner box inside outer box: trajectories stay SE-ordered
    const auto inner = euler_rollout(f, {-0.2, -0.1, 0.3, 0.2}, 0.0, 2.0, 0.01);
    const auto outer = euler_rollout(f, {-0.5, -0.4, 0.6, 0.5}, 0.0, 2.0, 0.01);
    for (std::size_t k = 0; k < inner.times.size(); ++k) {
        for (int i = 0; i < 2; ++i) {
            REQUIRE(outer.states[k][i] <= inner.states[k][i] + 1e-12);
            REQUIRE(inner.states[k][2 + i] <= outer.states[k][2 + i] + 1e-12);
        }
    }
}

TEST_CASE("reachable-set containment on the disturbed pendulum") {
    const System sys = pendulum_system();
    const Interval w = make_interval({-0.02}, {0.02});
    const Interval u = make_interval({0.1}, {0.3});
    const auto emb = make_embedding(sys, InclusionMethod::natural, {}, ControlInput(u));
    Field fe = [&](double t, const std::vector<double>& ut) { return emb.field_ut(t, ut, w); };
    const Interval x0 = center_pert({0.2, 0.0}, 0.05);
    const auto tube = euler_rollout(fe, to_ut(x0).data(), 0.0, 1.0, 0.01);

    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int s = 0; s < 100; ++s) {
        Tensor x(Shape{2});
        for (int i = 0; i < 2; ++i)
            x[i] = x0.lower()[i] + u01(rng) * (x0.upper()[i] - x0.lower()[i]);
        for (std::size_t k = 0; k + 1 < tube.times.size(); ++k) {
            // piecewise-constant disturbance and control drawn per step
            const double wk = -0.02 + 0.04 * u01(rng);
            const double uk = 0.1 + 0.2 * u01(rng);
            const auto f = eval_real(sys.f, std::vector<Tensor>{x, Tensor::vec({uk}),
                                                                Tensor::vec({wk})});
            for (int i = 0; i < 2; ++i) x[i] += 0.01 * f[0][i];
            for (int i = 0; i < 2; ++i) {
                REQUIRE(x[i] >= tube.states[k + 1][i] - 1e-9);
                REQUIRE(x[i] <= tube.states[k + 1][2 + i] + 1e-9);
            }
        }
    }
}

TEST_CASE("jacobian and mixed embeddings run with call-time centers") {
    const System sys = rotation();
    const auto embj = make_embedding(sys, InclusionMethod::jacobian);
    const auto embm = make_embedding(sys, InclusionMethod::mixed);
    Field fj = [&](double t, const std::vector<double>& ut) { return embj.field_ut(t, ut, kNoW); };
    Field fm = [&](double t, const std::vector<double>& ut) { return embm.field_ut(t, ut, kNoW); };
    const auto tj = euler_rollout(fj, {-0.1, -0.1, 0.1, 0.1}, 0.0, 1.0, 0.01);
    const auto tm = euler_rollout(fm, {-0.1, -0.1, 0.1, 0.1}, 0.0, 1.0, 0.01);
    // the rotation flow preserves the sup-norm box radius, enclosures can
    // only be wider
    for (const auto& tr : {tj, tm}) {
        CHECK(tr.back()[0] <= -0.1 + 1e-9);
        CHECK(tr.back()[2] >= 0.1 - 1e-9);
    }
}
