// Reachable-set tube of the kinematic bicycle driven by a small relu
// network policy, with a Monte Carlo containment check.

#include <cstdio>
#include <random>

#include "ivreach/neural.hpp"
#include "ivreach/partition.hpp"
#include "ivreach/systems.hpp"

using namespace ivreach;

namespace {

NeuralNetwork demo_policy(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Layer> layers;
    const std::vector<std::size_t> widths = {4, 16, 16, 2};
    for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
        const bool last = k + 2 == widths.size();
        std::normal_distribution<double> nd(0.0, 1.0 / std::sqrt(double(widths[k])));
        std::vector<double> w(widths[k + 1] * widths[k]);
        for (auto& v : w) v = nd(rng) * (last ? 0.05 : 1.0);
        layers.push_back(Layer{Tensor::mat(widths[k + 1], widths[k], std::move(w)),
                               Tensor::vec(std::vector<double>(widths[k + 1], 0.0)),
                               last ? Activation::identity : Activation::relu});
    }
    return NeuralNetwork(std::move(layers));
}

}  // namespace

int main() {
    const System sys = vehicle_system();
    const NeuralNetwork net = demo_policy(7);
    const auto cl = closed_loop_nn_inclusion(sys, net, CornerSigns::lower(4),
                                             Ordering::identity(6));
    const EmbeddingSystem emb = induced_embedding(sys, cl.field());

    const double third = 2.0943951023931953;  // 2*pi/3
    const Interval x0 = make_interval({7.9, 6.9, -third - 0.01, 1.99},
                                      {8.1, 7.1, -third + 0.01, 2.01});
    const Interval w = Interval::unchecked(Tensor::vec({}), Tensor::vec({}));

    RolloutSettings settings;
    settings.horizon = 1.25;
    settings.dt = 0.01;
    const PartitionGrid grid = grid_partition(x0, {2, 2, 1, 1});
    const auto cells = run_partitions(emb, grid, w, settings);

    std::printf("cell  final lower/upper box\n");
    for (std::size_t c = 0; c < cells.size(); ++c) {
        if (!cells[c].ok()) {
            std::printf("%4zu  failed: %s\n", c, cells[c].error.c_str());
            continue;
        }
        const auto& last = cells[c].trajectory->back();
        std::printf("%4zu ", c);
        for (int i = 0; i < 4; ++i) std::printf("  [%7.3f, %7.3f]", last[i], last[4 + i]);
        std::printf("\n");
    }

    // sampled trajectories stay inside their cell tubes
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    int violations = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        for (int s = 0; s < 25; ++s) {
            Tensor x(Shape{4});
            for (int i = 0; i < 4; ++i)
                x[i] = grid.cells[c].lower()[i] +
                       u01(rng) * (grid.cells[c].upper()[i] - grid.cells[c].lower()[i]);
            const auto& tube = *cells[c].trajectory;
            for (std::size_t k = 0; k + 1 < tube.times.size(); ++k) {
                const Tensor u = net.forward(x);
                const auto dx =
                    eval_real(sys.f, std::vector<Tensor>{x, u, Tensor::vec({})});
                for (int i = 0; i < 4; ++i) x[i] += settings.dt * dx[0][i];
                for (int i = 0; i < 4; ++i)
                    if (x[i] < tube.states[k + 1][i] - 1e-9 ||
                        x[i] > tube.states[k + 1][4 + i] + 1e-9)
                        ++violations;
            }
        }
    }
    std::printf("monte carlo violations: %d\n", violations);
    return violations == 0 ? 0 : 1;
}
