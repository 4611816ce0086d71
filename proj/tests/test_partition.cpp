#include <catch2/catch_amalgamated.hpp>

#include <chrono>

#include "ivreach/partition.hpp"
#include "ivreach/systems.hpp"

using namespace ivreach;
using Catch::Approx;

namespace {
const Interval kNoW = Interval::unchecked(Tensor::vec({}), Tensor::vec({}));
}

TEST_CASE("grid partitioning") {
    SECTION("2x2 grid on the unit square") {
        const auto grid = grid_partition(make_interval({0.0, 0.0}, {1.0, 1.0}), {2, 2});
        REQUIRE(grid.cells.size() == 4);
        // row-major: last axis fastest
        CHECK(grid.cells[0].lower()[0] == 0.0);
        CHECK(grid.cells[0].upper()[0] == 0.5);
        CHECK(grid.cells[1].lower()[1] == 0.5);
        for (const auto& c : grid.cells) {
            CHECK(c.upper()[0] - c.lower()[0] == Approx(0.5));
            CHECK(c.upper()[1] - c.lower()[1] == Approx(0.5));
        }
    }
    SECTION("trivial division returns the box") {
        const Interval box = make_interval({-1.0, 2.0, 0.0}, {1.0, 3.0, 0.5});
        const auto grid = grid_partition(box, {1, 1, 1});
        REQUIRE(grid.cells.size() == 1);
        CHECK(grid.cells[0].lower() == box.lower());
        CHECK(grid.cells[0].upper() == box.upper());
    }
    SECTION("5^4 cells for the vehicle initial set") {
        const Interval box = make_interval({7.9, 6.9, -2.1, 1.99}, {8.1, 7.1, -2.08, 2.01});
        const auto grid = grid_partition(box, {5, 5, 5, 5});
        CHECK(grid.cells.size() == 625);
        // cells tile the box: shared faces, exact outer endpoints
        CHECK(grid.cells.front().lower()[0] == box.lower()[0]);
        CHECK(grid.cells.back().upper()[3] == box.upper()[3]);
    }
    SECTION("validation") {
        CHECK_THROWS_AS(grid_partition(make_interval({0.0}, {1.0}), {0}), InvalidDivisions);
        CHECK_THROWS_AS(grid_partition(make_interval({0.0}, {1.0}), {2, 2}), InvalidDivisions);
    }
}

TEST_CASE("partitioned rollouts") {
    GraphBuilder b;
    auto x = b.input("x", 2);
    b.output(b.concat({b.index(x, 1), b.neg(b.sin(b.index(x, 0)))}));
    const System sys = System::from_graph(b.build(), 2);
    const auto emb = make_embedding(sys, InclusionMethod::natural);
    const Interval box = center_pert({0.3, 0.0}, 0.1);
    RolloutSettings settings;
    settings.horizon = 0.8;
    settings.dt = 0.01;

    SECTION("single cell equals the direct rollout bit-for-bit") {
        const auto grid = grid_partition(box, {1, 1});
        const auto res = run_partitions(emb, grid, kNoW, settings, 1);
        REQUIRE(res.size() == 1);
        REQUIRE(res[0].ok());
        const auto direct = rollout_embedding(emb, box, kNoW, settings);
        REQUIRE(res[0].trajectory->states.size() == direct.states.size());
        for (std::size_t k = 0; k < direct.states.size(); ++k)
            for (std::size_t i = 0; i < 4; ++i)
                REQUIRE(res[0].trajectory->states[k][i] == direct.states[k][i]);
    }

    SECTION("results do not depend on the worker count") {
        const auto grid = grid_partition(box, {3, 3});
        const auto seq = run_partitions(emb, grid, kNoW, settings, 1);
        for (unsigned workers : {2u, 4u, 7u}) {
            const auto par = run_partitions(emb, grid, kNoW, settings, workers);
            REQUIRE(par.size() == seq.size());
            for (std::size_t c = 0; c < seq.size(); ++c) {
                REQUIRE(par[c].ok() == seq[c].ok());
                for (std::size_t k = 0; k < seq[c].trajectory->states.size(); ++k)
                    for (std::size_t i = 0; i < 4; ++i)
                        REQUIRE(par[c].trajectory->states[k][i] ==
                                seq[c].trajectory->states[k][i]);
            }
        }
    }

    SECTION("refinement: finer grids tighten the final box") {
        const auto coarse = run_partitions(emb, grid_partition(box, {1, 1}), kNoW, settings, 0);
        const auto fine = run_partitions(emb, grid_partition(box, {2, 2}), kNoW, settings, 0);
        REQUIRE(coarse[0].ok());
        Tensor lo(Shape{2}), hi(Shape{2});
        lo[0] = lo[1] = 1e300;
        hi[0] = hi[1] = -1e300;
        for (const auto& cell : fine) {
            REQUIRE(cell.ok());
            const auto& last = cell.trajectory->back();
            for (int i = 0; i < 2; ++i) {
                lo[i] = std::min(lo[i], last[i]);
                hi[i] = std::max(hi[i], last[2 + i]);
            }
        }
        const auto& clast = coarse[0].trajectory->back();
        for (int i = 0; i < 2; ++i) {
            CHECK(lo[i] >= clast[i] - 1e-9);
            CHECK(hi[i] <= clast[2 + i] + 1e-9);
        }
    }

    SECTION("a divergent cell is isolated") {
        GraphBuilder quad;
        auto q = quad.input("x", 1);
        quad.output(quad.concat({quad.pow_int(quad.index(q, 0), 2)}));
        const System qsys = System::from_graph(quad.build(), 1);
        const auto qemb = make_embedding(qsys, InclusionMethod::natural);
        // far-out cells blow up in finite time, the near-zero cell survives
        const auto grid = grid_partition(make_interval({0.0}, {8.0}), {16});
        RolloutSettings s2;
        s2.horizon = 1.5;
        s2.dt = 0.05;
        const auto res = run_partitions(qemb, grid, kNoW, s2, 0);
        REQUIRE(res.size() == 16);
        CHECK(res.front().ok());
        CHECK_FALSE(res.back().ok());
        CHECK(!res.back().error.empty());
    }

    SECTION("throughput scaling stays within the sequential bound") {
        const auto grid = grid_partition(box, {4, 4});
        const unsigned cores = std::thread::hardware_concurrency();
        const auto t0 = std::chrono::steady_clock::now();
        (void)run_partitions(emb, grid, kNoW, settings, 1);
        const auto t1 = std::chrono::steady_clock::now();
        (void)run_partitions(emb, grid, kNoW, settings, 2);
        const auto t2 = std::chrono::steady_clock::now();
        const double seq = std::chrono::duration<double>(t1 - t0).count();
        const double par = std::chrono::duration<double>(t2 - t1).count();
        CHECK(par <= 1.5 * seq / std::min(2u, std::max(cores, 1u)) + 0.05);
    }
}
