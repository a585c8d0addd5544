#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "voxevo/network.hpp"

namespace voxevo {

enum class VoxelType {
    Empty = 0,
    Rigid = 1,
    Soft = 2,
    HorizontalActuator = 3,
    VerticalActuator = 4,
};

inline bool is_actuator(VoxelType t) {
    return t == VoxelType::HorizontalActuator || t == VoxelType::VerticalActuator;
}

char to_char(VoxelType t);
std::optional<VoxelType> voxel_from_char(char c);

// n x n voxel grid, row-major with row 0 on top. The physics layer treats
// larger row index as lower in the world.
struct BodyGrid {
    int n = 0;
    std::vector<VoxelType> cells;

    static BodyGrid empty(int n);

    VoxelType at(int i, int j) const { return cells[static_cast<std::size_t>(i) * n + j]; }
    VoxelType& at(int i, int j) { return cells[static_cast<std::size_t>(i) * n + j]; }

    int occupied_count() const;
    int actuator_count() const;

    // One line per row, one character per cell: . # s H V
    std::string ascii() const;
    static std::optional<BodyGrid> from_ascii(std::string_view text);

    bool operator==(const BodyGrid&) const = default;
};

enum class BodyInvalidReason { Empty, Disconnected, NoActuator };
const char* to_string(BodyInvalidReason r);

struct BodyValidity {
    bool valid = false;
    std::optional<BodyInvalidReason> reason;
};

// Valid iff at least one cell is occupied, occupied cells form a single
// 4-connected component, and at least one actuator exists. Reasons are
// reported in that order.
BodyValidity validate_body(const BodyGrid& b);

// Queries the network at each cell center with x = (j - c) / c and
// y = (c - i) / c, c = (n - 1) / 2, so the grid center maps to the origin
// and the top-right cell to (1, 1). Cell type = argmax of the five outputs,
// ties to the lowest index.
BodyGrid decode_body(const LayeredNetwork& net, int n);

// Per-cell dissimilarity summed over the grid: 0 for equal types, 0.5 for
// two occupied cells of different types, 1 when exactly one cell is empty.
double body_distance(const BodyGrid& a, const BodyGrid& b);

}  // namespace voxevo
