#include "voxevo/substrate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace voxevo {

std::vector<int> Substrate::layer_sizes() const {
    std::vector<int> sizes;
    sizes.reserve(layers.size());
    for (const auto& layer : layers) sizes.push_back(static_cast<int>(layer.size()));
    return sizes;
}

namespace {

// m positions evenly spaced over [-1, 1]; a single position sits at 0.
double spaced(int index, int m) {
    return m > 1 ? -1.0 + 2.0 * index / (m - 1) : 0.0;
}

std::vector<Coord3> line_layer(int count, double z) {
    std::vector<Coord3> layer;
    layer.reserve(static_cast<std::size_t>(count));
    for (int j = 0; j < count; ++j) layer.push_back({spaced(j, count), 0.0, z});
    return layer;
}

// Grids are row-major with row 0 at y = +1, mirroring the body grid's
// row order so output node k sits over body cell k.
std::vector<Coord3> grid_layer(int side, double z) {
    std::vector<Coord3> layer;
    layer.reserve(static_cast<std::size_t>(side) * side);
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j)
            layer.push_back({spaced(j, side), spaced(side - 1 - i, side), z});
    return layer;
}

std::vector<Coord3> raster_layer(int count, double z) {
    const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(count))));
    std::vector<Coord3> layer;
    layer.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k)
        layer.push_back({spaced(k % side, side), spaced(side - 1 - k / side, side), z});
    return layer;
}

}  // namespace

std::pair<Substrate, Substrate> build_substrates(int task_input_count, int grid_size) {
    if (task_input_count < 1 || grid_size < 1)
        throw std::invalid_argument("build_substrates: non-positive sizes");

    Substrate morphology;
    morphology.role = SubstrateRole::Morphology;
    morphology.layers = {line_layer(2, 1.0), line_layer(3, 2.0), line_layer(grid_size, 3.0)};

    Substrate controller;
    controller.role = SubstrateRole::Controller;
    controller.layers = {raster_layer(task_input_count, -1.0), grid_layer(grid_size, -2.0),
                         grid_layer(grid_size, -3.0)};

    return {std::move(morphology), std::move(controller)};
}

double query_weight(const CompiledCppn& cppn, const Coord3& p1, const Coord3& p2) {
    const double inputs[7] = {p1.x, p1.y, p1.z, p2.x, p2.y, p2.z, 1.0};
    double output = 0.0;
    std::vector<double> scratch;
    cppn.activate(std::span<const double>(inputs, 7), std::span<double>(&output, 1), scratch);
    return std::clamp(output, -kWeightClip, kWeightClip);
}

namespace {

LayeredNetwork express_one(const CompiledCppn& cppn, const Substrate& substrate,
                           std::vector<double>& scratch) {
    LayeredNetwork net = LayeredNetwork::zeros(substrate.layer_sizes());
    for (std::size_t l = 0; l + 1 < substrate.layers.size(); ++l) {
        const auto& from = substrate.layers[l];
        const auto& to = substrate.layers[l + 1];
        for (std::size_t j = 0; j < to.size(); ++j) {
            for (std::size_t i = 0; i < from.size(); ++i) {
                const double inputs[7] = {from[i].x, from[i].y, from[i].z,
                                          to[j].x,   to[j].y,   to[j].z,   1.0};
                double output = 0.0;
                cppn.activate(std::span<const double>(inputs, 7), std::span<double>(&output, 1),
                              scratch);
                net.weights[l][j * from.size() + i] =
                    std::clamp(output, -kWeightClip, kWeightClip);
            }
        }
    }
    return net;
}

}  // namespace

GenomePhenotypes express(const Genome& g, const std::pair<Substrate, Substrate>& substrates) {
    if (g.input_count() != 7 || g.output_count() != 1)
        throw std::invalid_argument("express: genome is not a 7-input 1-output network");
    const CompiledCppn cppn = compile(g);
    std::vector<double> scratch;
    GenomePhenotypes phenotypes;
    phenotypes.morphology_net = express_one(cppn, substrates.first, scratch);
    phenotypes.controller_net = express_one(cppn, substrates.second, scratch);
    return phenotypes;
}

}  // namespace voxevo
