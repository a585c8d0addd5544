#pragma once

#include <utility>
#include <vector>

#include "voxevo/network.hpp"

namespace voxevo {

struct Coord3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

enum class SubstrateRole { Morphology, Controller };

// Layered node placement in 3-space. Morphology layers sit at z = 1, 2, 3,
// controller layers at z = -1, -2, -3; the two halves are never connected.
struct Substrate {
    SubstrateRole role = SubstrateRole::Morphology;
    std::vector<std::vector<Coord3>> layers;

    std::vector<int> layer_sizes() const;
};

// Morphology substrate: input layer of 2 nodes at x in {-1, 1}, hidden layer
// of 3 and output layer of grid_size nodes evenly spaced in [-1, 1] along x,
// all with y = 0. Controller substrate: input nodes on a row-major
// ceil(sqrt(n)) raster over [-1, 1]^2, hidden and output layers full
// grid_size x grid_size grids over [-1, 1]^2.
std::pair<Substrate, Substrate> build_substrates(int task_input_count, int grid_size);

inline constexpr double kWeightClip = 3.0;

// cppn(x1, y1, z1, x2, y2, z2, 1.0) clipped to [-kWeightClip, kWeightClip].
double query_weight(const CompiledCppn& cppn, const Coord3& p1, const Coord3& p2);

struct GenomePhenotypes {
    LayeredNetwork morphology_net;
    LayeredNetwork controller_net;
};

// Queries every adjacent-layer node pair of both substrates exactly once and
// fills the dense weight matrices. Pure in the genome and substrate.
GenomePhenotypes express(const Genome& g, const std::pair<Substrate, Substrate>& substrates);

}  // namespace voxevo
