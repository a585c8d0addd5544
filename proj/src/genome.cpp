#include "voxevo/genome.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace voxevo {

double apply_activation(Activation a, double x) {
    switch (a) {
        case Activation::Sin: return std::sin(x);
        case Activation::Tanh: return std::tanh(x);
        case Activation::Gauss: return std::exp(-5.0 * x * x);
    }
    return x;
}

const char* to_string(NodeKind k) {
    switch (k) {
        case NodeKind::Input: return "input";
        case NodeKind::Hidden: return "hidden";
        case NodeKind::Output: return "output";
    }
    return "?";
}

const char* to_string(Activation a) {
    switch (a) {
        case Activation::Sin: return "sin";
        case Activation::Tanh: return "tanh";
        case Activation::Gauss: return "gauss";
    }
    return "?";
}

std::optional<NodeKind> node_kind_from_string(std::string_view s) {
    if (s == "input") return NodeKind::Input;
    if (s == "hidden") return NodeKind::Hidden;
    if (s == "output") return NodeKind::Output;
    return std::nullopt;
}

std::optional<Activation> activation_from_string(std::string_view s) {
    if (s == "sin") return Activation::Sin;
    if (s == "tanh") return Activation::Tanh;
    if (s == "gauss") return Activation::Gauss;
    return std::nullopt;
}

const NodeGene* Genome::find_node(int id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                               [](const NodeGene& n, int v) { return n.id < v; });
    if (it != nodes.end() && it->id == id) return &*it;
    return nullptr;
}

const ConnectionGene* Genome::find_connection(int source, int target) const {
    for (const auto& c : connections)
        if (c.source == source && c.target == target) return &c;
    return nullptr;
}

bool Genome::has_connection(int source, int target) const {
    return find_connection(source, target) != nullptr;
}

std::vector<int> Genome::input_ids() const {
    std::vector<int> ids;
    for (const auto& n : nodes)
        if (n.kind == NodeKind::Input) ids.push_back(n.id);
    return ids;
}

std::vector<int> Genome::output_ids() const {
    std::vector<int> ids;
    for (const auto& n : nodes)
        if (n.kind == NodeKind::Output) ids.push_back(n.id);
    return ids;
}

std::vector<int> Genome::hidden_ids() const {
    std::vector<int> ids;
    for (const auto& n : nodes)
        if (n.kind == NodeKind::Hidden) ids.push_back(n.id);
    return ids;
}

int Genome::input_count() const {
    int c = 0;
    for (const auto& n : nodes) c += n.kind == NodeKind::Input;
    return c;
}

int Genome::output_count() const {
    int c = 0;
    for (const auto& n : nodes) c += n.kind == NodeKind::Output;
    return c;
}

bool Genome::creates_cycle(int source, int target) const {
    if (source == target) return true;
    // Depth-first over the full gene set: a path target ->* source means the
    // new edge would close a loop.
    std::unordered_multimap<int, int> out;
    for (const auto& c : connections) out.emplace(c.source, c.target);
    std::vector<int> stack{target};
    std::unordered_set<int> seen{target};
    while (!stack.empty()) {
        const int node = stack.back();
        stack.pop_back();
        auto [lo, hi] = out.equal_range(node);
        for (auto it = lo; it != hi; ++it) {
            if (it->second == source) return true;
            if (seen.insert(it->second).second) stack.push_back(it->second);
        }
    }
    return false;
}

bool Genome::is_acyclic() const {
    // Kahn over the full gene set.
    std::unordered_map<int, int> indegree;
    for (const auto& n : nodes) indegree[n.id] = 0;
    for (const auto& c : connections) ++indegree[c.target];
    std::vector<int> ready;
    for (const auto& [id, deg] : indegree)
        if (deg == 0) ready.push_back(id);
    std::size_t visited = 0;
    while (!ready.empty()) {
        const int node = ready.back();
        ready.pop_back();
        ++visited;
        for (const auto& c : connections)
            if (c.source == node && --indegree[c.target] == 0) ready.push_back(c.target);
    }
    return visited == nodes.size();
}

bool Genome::is_valid() const {
    std::set<int> ids;
    for (const auto& n : nodes)
        if (!ids.insert(n.id).second) return false;
    for (std::size_t i = 1; i < nodes.size(); ++i)
        if (nodes[i - 1].id >= nodes[i].id) return false;
    std::set<std::pair<int, int>> pairs;
    for (const auto& c : connections) {
        if (!ids.count(c.source) || !ids.count(c.target)) return false;
        if (!pairs.insert({c.source, c.target}).second) return false;
    }
    for (std::size_t i = 1; i < connections.size(); ++i)
        if (connections[i - 1].innovation >= connections[i].innovation) return false;
    return is_acyclic();
}

void Genome::sort_genes() {
    std::sort(nodes.begin(), nodes.end(),
              [](const NodeGene& a, const NodeGene& b) { return a.id < b.id; });
    std::sort(connections.begin(), connections.end(),
              [](const ConnectionGene& a, const ConnectionGene& b) {
                  return a.innovation < b.innovation;
              });
}

bool structurally_equal(const Genome& a, const Genome& b) {
    if (a.nodes.size() != b.nodes.size() || a.connections.size() != b.connections.size())
        return false;
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
        const auto& x = a.nodes[i];
        const auto& y = b.nodes[i];
        if (x.id != y.id || x.kind != y.kind || x.activation != y.activation || x.bias != y.bias)
            return false;
    }
    for (std::size_t i = 0; i < a.connections.size(); ++i) {
        const auto& x = a.connections[i];
        const auto& y = b.connections[i];
        if (x.innovation != y.innovation || x.source != y.source || x.target != y.target ||
            x.weight != y.weight || x.enabled != y.enabled)
            return false;
    }
    return true;
}

InnovationRegistry::InnovationRegistry(int input_count, int output_count) {
    if (input_count <= 0 || output_count <= 0)
        throw std::invalid_argument("InnovationRegistry: node counts must be positive");
    // Pre-register the minimal fully connected structure with the same
    // numbering new_minimal_genome uses.
    for (int i = 0; i < input_count; ++i)
        for (int j = 0; j < output_count; ++j)
            connection_innovations_[{i, input_count + j}] = i * output_count + j;
    next_innovation_ = input_count * output_count;
    next_node_id_ = input_count + output_count;
}

int InnovationRegistry::connection_innovation(int source, int target) {
    auto [it, inserted] = connection_innovations_.try_emplace({source, target}, next_innovation_);
    if (inserted) ++next_innovation_;
    return it->second;
}

int InnovationRegistry::node_id_for_split(int source, int target, int occurrence) {
    auto [it, inserted] = split_ids_.try_emplace({source, target, occurrence}, next_node_id_);
    if (inserted) ++next_node_id_;
    return it->second;
}

Genome new_minimal_genome(int input_count, int output_count, Rng& rng) {
    if (input_count <= 0 || output_count <= 0)
        throw std::invalid_argument("new_minimal_genome: node counts must be positive");
    Genome g;
    g.nodes.reserve(static_cast<std::size_t>(input_count + output_count));
    for (int i = 0; i < input_count; ++i)
        g.nodes.push_back({i, NodeKind::Input, Activation::Tanh, 0.0});
    for (int j = 0; j < output_count; ++j)
        g.nodes.push_back({input_count + j, NodeKind::Output, Activation::Tanh, 0.0});
    g.connections.reserve(static_cast<std::size_t>(input_count) * output_count);
    for (int i = 0; i < input_count; ++i)
        for (int j = 0; j < output_count; ++j)
            g.connections.push_back(
                {i * output_count + j, i, input_count + j, rng.uniform(-1.0, 1.0), true});
    g.sort_genes();
    return g;
}

namespace {

double clamp_value(double v, double limit) { return std::clamp(v, -limit, limit); }

void mutate_add_node(Genome& g, InnovationRegistry& registry, const MutationParams& params,
                     Rng& rng) {
    std::vector<int> enabled;
    for (int i = 0; i < static_cast<int>(g.connections.size()); ++i)
        if (g.connections[i].enabled) enabled.push_back(i);
    if (enabled.empty()) return;
    const int pick = enabled[rng.uniform_int(static_cast<int>(enabled.size()))];
    const ConnectionGene split = g.connections[pick];

    int occurrence = 0;
    int node_id = registry.node_id_for_split(split.source, split.target, occurrence);
    while (g.find_node(node_id) != nullptr)
        node_id = registry.node_id_for_split(split.source, split.target, ++occurrence);

    g.connections[pick].enabled = false;
    g.nodes.push_back({node_id, NodeKind::Hidden, params.activation_default, 0.0});
    // NEAT split rule: the new incoming edge carries weight 1, the outgoing
    // edge keeps the old weight.
    g.connections.push_back(
        {registry.connection_innovation(split.source, node_id), split.source, node_id, 1.0, true});
    g.connections.push_back(
        {registry.connection_innovation(node_id, split.target), node_id, split.target,
         split.weight, true});
    g.sort_genes();
}

void mutate_delete_node(Genome& g, Rng& rng) {
    const std::vector<int> hidden = g.hidden_ids();
    if (hidden.empty()) return;
    const int victim = hidden[rng.uniform_int(static_cast<int>(hidden.size()))];
    std::erase_if(g.nodes, [victim](const NodeGene& n) { return n.id == victim; });
    std::erase_if(g.connections, [victim](const ConnectionGene& c) {
        return c.source == victim || c.target == victim;
    });
}

void mutate_add_connection(Genome& g, InnovationRegistry& registry, Rng& rng) {
    std::vector<int> sources;
    std::vector<int> targets;
    for (const auto& n : g.nodes) {
        if (n.kind != NodeKind::Output) sources.push_back(n.id);
        if (n.kind != NodeKind::Input) targets.push_back(n.id);
    }
    if (sources.empty() || targets.empty()) return;
    const int source = sources[rng.uniform_int(static_cast<int>(sources.size()))];
    const int target = targets[rng.uniform_int(static_cast<int>(targets.size()))];
    if (g.has_connection(source, target)) return;
    if (g.creates_cycle(source, target)) return;
    g.connections.push_back({registry.connection_innovation(source, target), source, target,
                             rng.uniform(-1.0, 1.0), true});
    g.sort_genes();
}

void mutate_delete_connection(Genome& g, Rng& rng) {
    if (g.connections.empty()) return;
    g.connections.erase(g.connections.begin() +
                        rng.uniform_int(static_cast<int>(g.connections.size())));
}

}  // namespace

Genome mutate(const Genome& g, InnovationRegistry& registry, const MutationParams& params,
              Rng& rng) {
    Genome child = g;
    child.fitness.reset();

    if (rng.chance(params.node_add_prob)) mutate_add_node(child, registry, params, rng);
    if (rng.chance(params.node_delete_prob)) mutate_delete_node(child, rng);
    if (rng.chance(params.conn_add_prob)) mutate_add_connection(child, registry, rng);
    if (rng.chance(params.conn_delete_prob)) mutate_delete_connection(child, rng);

    for (auto& c : child.connections) {
        const double r = rng.uniform();
        if (r < params.weight_mutate_rate) {
            c.weight = clamp_value(c.weight + rng.gaussian(0.0, params.weight_mutate_power),
                                   params.value_clamp);
        } else if (r < params.weight_mutate_rate + params.weight_replace_rate) {
            c.weight = rng.uniform(-1.0, 1.0);
        }
    }

    for (auto& n : child.nodes) {
        if (n.kind == NodeKind::Input) continue;
        const double r = rng.uniform();
        if (r < params.bias_mutate_rate) {
            n.bias = clamp_value(n.bias + rng.gaussian(0.0, params.bias_mutate_power),
                                 params.value_clamp);
        } else if (r < params.bias_mutate_rate + params.bias_replace_rate) {
            n.bias = rng.uniform(-1.0, 1.0);
        }
        if (!params.activation_options.empty() && rng.chance(params.activation_mutate_rate)) {
            n.activation = params.activation_options[rng.uniform_int(
                static_cast<int>(params.activation_options.size()))];
        }
    }
    return child;
}

Genome crossover(const Genome& fitter, const Genome& other, Rng& rng) {
    Genome child;
    child.nodes.reserve(fitter.nodes.size());
    // Structure comes from the fitter parent; matching genes mix attributes.
    for (const auto& node : fitter.nodes) {
        const NodeGene* match = other.find_node(node.id);
        if (match != nullptr && node.kind != NodeKind::Input && rng.chance(0.5))
            child.nodes.push_back(*match);
        else
            child.nodes.push_back(node);
    }
    child.connections.reserve(fitter.connections.size());
    for (const auto& conn : fitter.connections) {
        const ConnectionGene* match = nullptr;
        for (const auto& oc : other.connections)
            if (oc.innovation == conn.innovation) {
                match = &oc;
                break;
            }
        ConnectionGene inherited = (match != nullptr && rng.chance(0.5)) ? *match : conn;
        if (!conn.enabled || (match != nullptr && !match->enabled))
            inherited.enabled = rng.chance(0.25);
        else
            inherited.enabled = true;
        child.connections.push_back(inherited);
    }
    child.sort_genes();
    return child;
}

double genotypic_distance(const Genome& a, const Genome& b, const DistanceCoeffs& coeffs) {
    int max_innov_a = -1;
    int max_innov_b = -1;
    for (const auto& c : a.connections) max_innov_a = std::max(max_innov_a, c.innovation);
    for (const auto& c : b.connections) max_innov_b = std::max(max_innov_b, c.innovation);

    int excess = 0;
    int disjoint = 0;
    int matching = 0;
    double weight_diff = 0.0;

    std::size_t ia = 0;
    std::size_t ib = 0;
    while (ia < a.connections.size() || ib < b.connections.size()) {
        if (ia == a.connections.size()) {
            b.connections[ib].innovation > max_innov_a ? ++excess : ++disjoint;
            ++ib;
        } else if (ib == b.connections.size()) {
            a.connections[ia].innovation > max_innov_b ? ++excess : ++disjoint;
            ++ia;
        } else if (a.connections[ia].innovation == b.connections[ib].innovation) {
            weight_diff += std::abs(a.connections[ia].weight - b.connections[ib].weight);
            ++matching;
            ++ia;
            ++ib;
        } else if (a.connections[ia].innovation < b.connections[ib].innovation) {
            a.connections[ia].innovation > max_innov_b ? ++excess : ++disjoint;
            ++ia;
        } else {
            b.connections[ib].innovation > max_innov_a ? ++excess : ++disjoint;
            ++ib;
        }
    }

    const std::size_t larger = std::max(a.connections.size(), b.connections.size());
    const double n = larger < 20 ? 1.0 : static_cast<double>(larger);
    const double mean_weight_diff = matching > 0 ? weight_diff / matching : 0.0;
    return coeffs.excess * excess / n + coeffs.disjoint * disjoint / n +
           coeffs.weight * mean_weight_diff;
}

}  // namespace voxevo
