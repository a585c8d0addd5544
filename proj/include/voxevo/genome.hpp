#pragma once

#include <map>
#include <optional>
#include <string_view>
#include <tuple>
#include <vector>

#include "voxevo/rng.hpp"

namespace voxevo {

enum class NodeKind { Input, Hidden, Output };

enum class Activation { Sin, Tanh, Gauss };

// gauss(x) = exp(-5 x^2); sin and tanh as usual.
double apply_activation(Activation a, double x);

const char* to_string(NodeKind k);
const char* to_string(Activation a);
std::optional<NodeKind> node_kind_from_string(std::string_view s);
std::optional<Activation> activation_from_string(std::string_view s);

// Input nodes are pass-through: their activation and bias are ignored and
// kept at (tanh, 0) for serialization stability.
struct NodeGene {
    int id = 0;
    NodeKind kind = NodeKind::Hidden;
    Activation activation = Activation::Tanh;
    double bias = 0.0;
};

struct ConnectionGene {
    int innovation = 0;
    int source = 0;
    int target = 0;
    double weight = 0.0;
    bool enabled = true;
};

struct MutationParams {
    double weight_mutate_rate = 0.8;
    double weight_mutate_power = 0.2;
    double weight_replace_rate = 0.2;
    double bias_mutate_rate = 0.8;
    double bias_mutate_power = 0.2;
    double bias_replace_rate = 0.2;
    double conn_add_prob = 0.2;
    double conn_delete_prob = 0.2;
    double node_add_prob = 0.2;
    double node_delete_prob = 0.2;
    double activation_mutate_rate = 0.2;
    // Weights and biases are clamped to this magnitude after every mutation;
    // unbounded drift produces saturation-only networks.
    double value_clamp = 8.0;
    Activation activation_default = Activation::Tanh;
    std::vector<Activation> activation_options = {Activation::Sin, Activation::Tanh,
                                                  Activation::Gauss};
};

// Feedforward NEAT genome. Nodes are kept sorted by id and connections by
// innovation number so that equality, crossover and serialization are
// order-independent. The full connection set (enabled or not) stays acyclic.
struct Genome {
    std::vector<NodeGene> nodes;
    std::vector<ConnectionGene> connections;
    std::optional<double> fitness;

    const NodeGene* find_node(int id) const;
    const ConnectionGene* find_connection(int source, int target) const;
    bool has_connection(int source, int target) const;

    std::vector<int> input_ids() const;
    std::vector<int> output_ids() const;
    std::vector<int> hidden_ids() const;
    int input_count() const;
    int output_count() const;
    int gene_count() const { return static_cast<int>(connections.size()); }

    // True when adding source -> target would close a directed cycle in the
    // full connection graph.
    bool creates_cycle(int source, int target) const;
    bool is_acyclic() const;
    // Structural sanity: endpoints exist, (source, target) pairs unique,
    // canonical ordering, acyclic.
    bool is_valid() const;

    void sort_genes();
};

bool structurally_equal(const Genome& a, const Genome& b);

// Historical markings shared by every genome of one run. The same
// (source, target) pair always maps to the same innovation number, and the
// node created by splitting a given connection gets the same id in every
// genome that performs that split, so matching genes line up in crossover
// and distance computations.
class InnovationRegistry {
public:
    InnovationRegistry(int input_count, int output_count);

    int connection_innovation(int source, int target);

    // Node id for an add-node split of (source, target). `occurrence` counts
    // how many split nodes of this signature the genome already contains, so
    // a re-split after crossover re-enabled the connection still gets a
    // fresh, globally consistent id.
    int node_id_for_split(int source, int target, int occurrence);

    int next_node_id() const { return next_node_id_; }

private:
    std::map<std::pair<int, int>, int> connection_innovations_;
    std::map<std::tuple<int, int, int>, int> split_ids_;
    int next_innovation_ = 0;
    int next_node_id_ = 0;
};

// Fully connected input -> output genome with weights uniform in [-1, 1],
// zero output biases and the default activation on outputs. Innovation
// numbers follow the same convention the registry pre-seeds: the connection
// from input i to output j carries number i * output_count + j.
Genome new_minimal_genome(int input_count, int output_count, Rng& rng);

// Returns a mutated copy; the input genome is never modified. Structural
// proposals that would duplicate a connection or close a cycle are dropped
// without retry.
Genome mutate(const Genome& g, InnovationRegistry& registry, const MutationParams& params,
              Rng& rng);

// NEAT crossover. Matching genes are inherited from a random parent,
// disjoint and excess genes from `fitter`. A gene disabled in either parent
// stays disabled in the child with probability 0.75.
Genome crossover(const Genome& fitter, const Genome& other, Rng& rng);

struct DistanceCoeffs {
    double excess = 1.0;
    double disjoint = 1.0;
    double weight = 0.5;
};

// c1*E/N + c2*D/N + c3*meanWeightDiff over connection genes, N = larger gene
// count, taken as 1 when both genomes hold fewer than 20 genes.
double genotypic_distance(const Genome& a, const Genome& b, const DistanceCoeffs& coeffs);

}  // namespace voxevo
