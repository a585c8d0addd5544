#include "voxevo/morphology.hpp"

#include <stdexcept>

namespace voxevo {

char to_char(VoxelType t) {
    switch (t) {
        case VoxelType::Empty: return '.';
        case VoxelType::Rigid: return '#';
        case VoxelType::Soft: return 's';
        case VoxelType::HorizontalActuator: return 'H';
        case VoxelType::VerticalActuator: return 'V';
    }
    return '?';
}

std::optional<VoxelType> voxel_from_char(char c) {
    switch (c) {
        case '.': return VoxelType::Empty;
        case '#': return VoxelType::Rigid;
        case 's': return VoxelType::Soft;
        case 'H': return VoxelType::HorizontalActuator;
        case 'V': return VoxelType::VerticalActuator;
    }
    return std::nullopt;
}

BodyGrid BodyGrid::empty(int n) {
    BodyGrid b;
    b.n = n;
    b.cells.assign(static_cast<std::size_t>(n) * n, VoxelType::Empty);
    return b;
}

int BodyGrid::occupied_count() const {
    int count = 0;
    for (const VoxelType t : cells) count += t != VoxelType::Empty;
    return count;
}

int BodyGrid::actuator_count() const {
    int count = 0;
    for (const VoxelType t : cells) count += is_actuator(t);
    return count;
}

std::string BodyGrid::ascii() const {
    std::string out;
    out.reserve(static_cast<std::size_t>(n) * (n + 1));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) out.push_back(to_char(at(i, j)));
        out.push_back('\n');
    }
    return out;
}

std::optional<BodyGrid> BodyGrid::from_ascii(std::string_view text) {
    std::vector<std::string_view> rows;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        if (end > start) rows.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    if (rows.empty()) return std::nullopt;
    const int n = static_cast<int>(rows.size());
    BodyGrid b = BodyGrid::empty(n);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(rows[i].size()) != n) return std::nullopt;
        for (int j = 0; j < n; ++j) {
            const auto t = voxel_from_char(rows[i][j]);
            if (!t) return std::nullopt;
            b.at(i, j) = *t;
        }
    }
    return b;
}

const char* to_string(BodyInvalidReason r) {
    switch (r) {
        case BodyInvalidReason::Empty: return "empty";
        case BodyInvalidReason::Disconnected: return "disconnected";
        case BodyInvalidReason::NoActuator: return "no_actuator";
    }
    return "?";
}

BodyValidity validate_body(const BodyGrid& b) {
    if (b.occupied_count() == 0) return {false, BodyInvalidReason::Empty};

    // Flood fill from the first occupied cell over 4-neighbours.
    std::vector<char> seen(b.cells.size(), 0);
    std::vector<int> stack;
    for (std::size_t k = 0; k < b.cells.size(); ++k)
        if (b.cells[k] != VoxelType::Empty) {
            stack.push_back(static_cast<int>(k));
            seen[k] = 1;
            break;
        }
    int reached = 0;
    while (!stack.empty()) {
        const int k = stack.back();
        stack.pop_back();
        ++reached;
        const int i = k / b.n;
        const int j = k % b.n;
        const int di[4] = {-1, 1, 0, 0};
        const int dj[4] = {0, 0, -1, 1};
        for (int d = 0; d < 4; ++d) {
            const int ni = i + di[d];
            const int nj = j + dj[d];
            if (ni < 0 || ni >= b.n || nj < 0 || nj >= b.n) continue;
            const int nk = ni * b.n + nj;
            if (!seen[nk] && b.cells[static_cast<std::size_t>(nk)] != VoxelType::Empty) {
                seen[nk] = 1;
                stack.push_back(nk);
            }
        }
    }
    if (reached != b.occupied_count()) return {false, BodyInvalidReason::Disconnected};
    if (b.actuator_count() == 0) return {false, BodyInvalidReason::NoActuator};
    return {true, std::nullopt};
}

BodyGrid decode_body(const LayeredNetwork& net, int n) {
    if (net.input_count() != 2 || net.output_count() != 5)
        throw std::invalid_argument("decode_body: network must map 2 inputs to 5 outputs");
    BodyGrid b = BodyGrid::empty(n);
    const double c = (n - 1) / 2.0;
    std::vector<double> outputs;
    std::vector<double> scratch;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double x = c > 0.0 ? (j - c) / c : 0.0;
            const double y = c > 0.0 ? (c - i) / c : 0.0;
            const double inputs[2] = {x, y};
            net.activate(std::span<const double>(inputs, 2), outputs, scratch);
            int best = 0;
            for (int t = 1; t < 5; ++t)
                if (outputs[t] > outputs[best]) best = t;
            b.at(i, j) = static_cast<VoxelType>(best);
        }
    }
    return b;
}

double body_distance(const BodyGrid& a, const BodyGrid& b) {
    if (a.n != b.n) throw std::invalid_argument("body_distance: grid sizes differ");
    double sum = 0.0;
    for (std::size_t k = 0; k < a.cells.size(); ++k) {
        const VoxelType ta = a.cells[k];
        const VoxelType tb = b.cells[k];
        if (ta == tb) continue;
        const bool ea = ta == VoxelType::Empty;
        const bool eb = tb == VoxelType::Empty;
        sum += (ea || eb) ? 1.0 : 0.5;
    }
    return sum;
}

}  // namespace voxevo
