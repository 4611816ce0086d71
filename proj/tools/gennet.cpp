// Generates weights documents for testing: seeded random relu networks and
// a couple of hand-crafted fixtures.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ivreach/neural.hpp"

using ivreach::Activation;
using ivreach::Layer;
using ivreach::NeuralNetwork;
using ivreach::Shape;
using ivreach::Tensor;

namespace {

NeuralNetwork random_network(const std::vector<std::size_t>& widths, std::uint64_t seed,
                             double output_scale) {
    if (widths.size() < 2) throw ivreach::ConfigError("need at least two widths");
    std::mt19937_64 rng(seed);
    std::vector<Layer> layers;
    for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
        const bool last = k + 2 == widths.size();
        std::normal_distribution<double> nd(0.0, 1.0 / std::sqrt(double(widths[k])));
        std::vector<double> w(widths[k + 1] * widths[k]);
        for (auto& v : w) v = nd(rng) * (last ? output_scale : 1.0);
        std::vector<double> b(widths[k + 1], 0.0);
        layers.push_back(Layer{Tensor::mat(widths[k + 1], widths[k], std::move(w)),
                               Tensor::vec(std::move(b)),
                               last ? Activation::identity : Activation::relu});
    }
    return NeuralNetwork(std::move(layers));
}

NeuralNetwork preset_network(const std::string& name) {
    if (name == "single-relu") {
        return NeuralNetwork({Layer{Tensor::mat(1, 1, {1.0}), Tensor::vec({0.0}), Activation::relu},
                              Layer{Tensor::mat(1, 1, {1.0}), Tensor::vec({0.0}),
                                    Activation::identity}});
    }
    if (name == "zero-2x2") {
        return NeuralNetwork(
            {Layer{Tensor::mat(2, 2, {0, 0, 0, 0}), Tensor::vec({0, 0}), Activation::identity}});
    }
    throw ivreach::ConfigError("unknown preset '" + name + "' (single-relu, zero-2x2)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"test-network generator"};
    std::string widths_arg = "4,16,16,2";
    std::string out_path = "net.json";
    std::string preset;
    std::uint64_t seed = 0;
    double scale = 0.1;
    app.add_option("--widths", widths_arg, "comma-separated layer widths");
    app.add_option("--seed", seed, "RNG seed");
    app.add_option("--scale", scale, "final-layer weight scale");
    app.add_option("--preset", preset, "hand-crafted fixture instead of random weights");
    app.add_option("--out", out_path, "output path")->required();
    CLI11_PARSE(app, argc, argv);

    try {
        NeuralNetwork net = [&] {
            if (!preset.empty()) return preset_network(preset);
            std::vector<std::size_t> widths;
            std::stringstream ss(widths_arg);
            std::string tok;
            while (std::getline(ss, tok, ',')) widths.push_back(std::stoul(tok));
            return random_network(widths, seed, scale);
        }();
        std::ofstream out(out_path);
        out << ivreach::network_to_json(net).dump(1) << "\n";
        std::printf("wrote %s (%zu -> %zu)\n", out_path.c_str(), net.input_dim(),
                    net.output_dim());
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
