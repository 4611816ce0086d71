#pragma once

#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ivreach/embedding.hpp"
#include "ivreach/integrate.hpp"

namespace ivreach {

// Uniform axis-aligned grid over an initial box; cells tile the box exactly
// and are ordered row-major over the axes.
struct PartitionGrid {
    Interval box;
    std::vector<std::size_t> divisions;
    std::vector<Interval> cells;
};

inline PartitionGrid grid_partition(const Interval& box, const std::vector<std::size_t>& divisions) {
    if (box.rank() != 1) throw InvalidDivisions("partitioning expects a rank-1 box");
    if (divisions.size() != box.size())
        throw InvalidDivisions("need one division count per axis, got " +
                               std::to_string(divisions.size()) + " for dimension " +
                               std::to_string(box.size()));
    std::size_t total = 1;
    for (std::size_t d : divisions) {
        if (d < 1) throw InvalidDivisions("division counts must be >= 1");
        total *= d;
    }
    PartitionGrid grid;
    grid.box = box;
    grid.divisions = divisions;
    grid.cells.reserve(total);
    const std::size_t n = box.size();
    std::vector<std::size_t> idx(n, 0);
    for (std::size_t c = 0; c < total; ++c) {
        Tensor lo(Shape{n}), hi(Shape{n});
        for (std::size_t i = 0; i < n; ++i) {
            const double w = (box.upper()[i] - box.lower()[i]) / static_cast<double>(divisions[i]);
            // endpoints computed from the cell index so neighbours share faces
            lo[i] = idx[i] == 0 ? box.lower()[i] : box.lower()[i] + w * static_cast<double>(idx[i]);
            hi[i] = idx[i] + 1 == divisions[i]
                        ? box.upper()[i]
                        : box.lower()[i] + w * static_cast<double>(idx[i] + 1);
        }
        grid.cells.push_back(Interval::make(std::move(lo), std::move(hi)));
        for (std::size_t axis = n; axis-- > 0;) {  // row-major: last axis fastest
            if (++idx[axis] < divisions[axis]) break;
            idx[axis] = 0;
        }
    }
    return grid;
}

struct RolloutSettings {
    enum class Integrator { euler, tsit5 };
    double t0 = 0.0;
    double horizon = 1.0;
    double dt = 0.01;
    Integrator integrator = Integrator::euler;
};

struct CellResult {
    std::optional<Trajectory> trajectory;
    std::string error;  // non-empty when the rollout failed

    bool ok() const { return trajectory.has_value(); }
};

// Deterministic parallel map: results land in pre-allocated slots and the
// work assignment depends only on (count, workers), so the output is
// identical to a sequential run for any worker count.
template <class F>
void parallel_for_slots(std::size_t count, unsigned workers, F&& body) {
    if (workers == 0) workers = std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned wkr = 0; wkr < workers; ++wkr) {
        pool.emplace_back([&, wkr] {
            for (std::size_t i = wkr; i < count; i += workers) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

inline Trajectory rollout_embedding(const EmbeddingSystem& emb, const Interval& cell,
                                    const Interval& w, const RolloutSettings& s) {
    Field field = [&emb, w](double t, const std::vector<double>& ut) {
        return emb.field_ut(t, ut, w);
    };
    std::vector<double> x0 = to_ut(cell).data();
    return s.integrator == RolloutSettings::Integrator::euler
               ? euler_rollout(field, std::move(x0), s.t0, s.horizon, s.dt)
               : tsit5_rollout(field, std::move(x0), s.t0, s.horizon, s.dt);
}

// One embedding rollout per cell; per-cell failures are recorded and do not
// stop the remaining cells.
inline std::vector<CellResult> run_partitions(const EmbeddingSystem& emb, const PartitionGrid& grid,
                                              const Interval& w, const RolloutSettings& settings,
                                              unsigned workers = 0) {
    std::vector<CellResult> results(grid.cells.size());
    parallel_for_slots(grid.cells.size(), workers, [&](std::size_t i) {
        try {
            results[i].trajectory = rollout_embedding(emb, grid.cells[i], w, settings);
        } catch (const std::exception& e) {
            results[i].error = e.what();
        }
    });
    return results;
}

}  // namespace ivreach
