#include "voxevo/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace voxevo {

CompiledCppn compile(const Genome& g) {
    if (!g.is_acyclic()) throw std::invalid_argument("compile: genome graph has a cycle");

    std::vector<ConnectionGene> live;
    for (const auto& c : g.connections)
        if (c.enabled) live.push_back(c);

    // Kahn over enabled connections, inputs first, then smallest ready id.
    std::map<int, int> indegree;
    for (const auto& n : g.nodes)
        if (n.kind != NodeKind::Input) indegree[n.id] = 0;
    std::set<int> input_set;
    for (const int id : g.input_ids()) input_set.insert(id);
    for (const auto& c : live)
        if (indegree.count(c.target) && !input_set.count(c.source)) ++indegree[c.target];

    std::vector<int> order = g.input_ids();
    std::set<int> ready;
    for (const auto& [id, deg] : indegree)
        if (deg == 0) ready.insert(id);
    while (!ready.empty()) {
        const int node = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(node);
        for (const auto& c : live)
            if (c.source == node && indegree.count(c.target) && --indegree[c.target] == 0)
                ready.insert(c.target);
    }
    if (order.size() != g.nodes.size())
        throw std::invalid_argument("compile: genome graph has a cycle");

    std::map<int, int> slot_of;
    for (int i = 0; i < static_cast<int>(order.size()); ++i) slot_of[order[i]] = i;

    CompiledCppn net;
    net.input_count = g.input_count();
    net.slots.reserve(order.size());
    for (const int id : order) {
        const NodeGene* node = g.find_node(id);
        CompiledCppn::Slot slot;
        if (node->kind != NodeKind::Input) {
            slot.activation = node->activation;
            slot.bias = node->bias;
            slot.term_begin = static_cast<int>(net.terms.size());
            for (const auto& c : live)
                if (c.target == id) net.terms.push_back({slot_of.at(c.source), c.weight});
            slot.term_end = static_cast<int>(net.terms.size());
        }
        net.slots.push_back(slot);
    }
    for (const int id : g.output_ids()) net.output_slots.push_back(slot_of.at(id));
    return net;
}

void CompiledCppn::activate(std::span<const double> inputs, std::span<double> outputs,
                            std::vector<double>& scratch) const {
    if (static_cast<int>(inputs.size()) != input_count)
        throw std::invalid_argument("activate: input length mismatch");
    if (static_cast<int>(outputs.size()) != output_count())
        throw std::invalid_argument("activate: output length mismatch");
    scratch.resize(slots.size());
    for (int i = 0; i < input_count; ++i) scratch[i] = inputs[i];
    for (std::size_t s = static_cast<std::size_t>(input_count); s < slots.size(); ++s) {
        const Slot& slot = slots[s];
        double sum = slot.bias;
        for (int t = slot.term_begin; t < slot.term_end; ++t)
            sum += terms[t].weight * scratch[terms[t].source_slot];
        scratch[s] = slot.activation ? apply_activation(*slot.activation, sum) : sum;
    }
    for (std::size_t o = 0; o < output_slots.size(); ++o) outputs[o] = scratch[output_slots[o]];
}

std::vector<double> CompiledCppn::activate(std::span<const double> inputs) const {
    std::vector<double> outputs(output_slots.size());
    std::vector<double> scratch;
    activate(inputs, outputs, scratch);
    return outputs;
}

LayeredNetwork LayeredNetwork::zeros(const std::vector<int>& sizes) {
    LayeredNetwork net;
    net.layer_sizes = sizes;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        net.weights.emplace_back(static_cast<std::size_t>(sizes[l]) * sizes[l + 1], 0.0);
        net.biases.emplace_back(static_cast<std::size_t>(sizes[l + 1]), 0.0);
    }
    return net;
}

bool LayeredNetwork::shapes_ok() const {
    if (layer_sizes.size() < 2) return false;
    if (weights.size() != layer_sizes.size() - 1 || biases.size() != weights.size()) return false;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        if (layer_sizes[l] <= 0 || layer_sizes[l + 1] <= 0) return false;
        if (weights[l].size() != static_cast<std::size_t>(layer_sizes[l]) * layer_sizes[l + 1])
            return false;
        if (biases[l].size() != static_cast<std::size_t>(layer_sizes[l + 1])) return false;
        for (const double w : weights[l])
            if (!std::isfinite(w)) return false;
    }
    return true;
}

void LayeredNetwork::activate(std::span<const double> inputs, std::vector<double>& outputs,
                              std::vector<double>& scratch) const {
    if (layer_sizes.empty() || static_cast<int>(inputs.size()) != layer_sizes.front())
        throw std::invalid_argument("activate: input length mismatch");
    outputs.assign(inputs.begin(), inputs.end());
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const int in = layer_sizes[l];
        const int out = layer_sizes[l + 1];
        scratch.resize(static_cast<std::size_t>(out));
        for (int j = 0; j < out; ++j) {
            double sum = biases[l][j];
            const double* row = weights[l].data() + static_cast<std::size_t>(j) * in;
            for (int i = 0; i < in; ++i) sum += row[i] * outputs[i];
            scratch[j] = std::tanh(sum);
        }
        outputs.swap(scratch);
    }
}

std::vector<double> LayeredNetwork::activate(std::span<const double> inputs) const {
    std::vector<double> outputs;
    std::vector<double> scratch;
    activate(inputs, outputs, scratch);
    return outputs;
}

}  // namespace voxevo
