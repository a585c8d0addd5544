#pragma once

#include <optional>
#include <span>
#include <vector>

#include "voxevo/genome.hpp"

namespace voxevo {

// Feedforward evaluation plan for a genome. Slots are stored in evaluation
// order with inputs first; a slot with no activation label passes its
// weighted sum through unchanged (every input slot does). Immutable after
// construction, safe to evaluate concurrently.
struct CompiledCppn {
    struct Term {
        int source_slot = 0;
        double weight = 0.0;
    };
    struct Slot {
        std::optional<Activation> activation;
        double bias = 0.0;
        int term_begin = 0;
        int term_end = 0;
    };

    std::vector<Slot> slots;
    std::vector<Term> terms;
    std::vector<int> output_slots;
    int input_count = 0;

    int slot_count() const { return static_cast<int>(slots.size()); }
    int output_count() const { return static_cast<int>(output_slots.size()); }

    // scratch is resized to slot_count(); outputs must hold output_count().
    void activate(std::span<const double> inputs, std::span<double> outputs,
                  std::vector<double>& scratch) const;
    std::vector<double> activate(std::span<const double> inputs) const;
};

// Evaluation order: inputs in id order, then hidden/output nodes
// topologically with smallest node id first among the ready set. Disabled
// connections are dropped; incoming terms keep innovation order.
CompiledCppn compile(const Genome& g);

// Dense feedforward network with tanh at every non-input layer.
// weights[l] maps layer l to layer l+1, row-major: entry [j * in + i] is the
// weight from node i of layer l to node j of layer l+1.
struct LayeredNetwork {
    std::vector<int> layer_sizes;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    static LayeredNetwork zeros(const std::vector<int>& sizes);

    bool shapes_ok() const;
    int input_count() const { return layer_sizes.empty() ? 0 : layer_sizes.front(); }
    int output_count() const { return layer_sizes.empty() ? 0 : layer_sizes.back(); }

    void activate(std::span<const double> inputs, std::vector<double>& outputs,
                  std::vector<double>& scratch) const;
    std::vector<double> activate(std::span<const double> inputs) const;
};

}  // namespace voxevo
