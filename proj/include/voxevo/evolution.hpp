#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "voxevo/genome.hpp"
#include "voxevo/morphology.hpp"
#include "voxevo/network.hpp"
#include "voxevo/substrate.hpp"
#include "voxevo/tasks.hpp"

namespace voxevo {

enum class Algorithm { HyperNeat, Direct, Nested };

const char* to_string(Algorithm a);
std::optional<Algorithm> algorithm_from_string(std::string_view s);

struct EvolutionConfig {
    int generations = 250;
    int population = 128;
    int grid_size = 5;
    int repetitions = 1;

    double compat_threshold = 3.5;  // species admission radius
    double body_coefficient = 1.0;  // weight of the body term in the hybrid distance
    DistanceCoeffs coeffs;
    MutationParams mutation;

    int max_stagnation = 20;
    int species_elitism = 1;   // best species kept regardless of stagnation
    int elitism = 2;           // per-species unchanged copies
    double survival_threshold = 0.25;
    int min_species_size = 4;
    double crossover_fraction = 0.75;  // remaining offspring: crossover vs clone

    int nested_population = 12;  // both loops of the nested baseline
    int inner_generations = 8;
    long long max_evaluations = 0;  // stop after the generation that crosses it; 0 = off

    int threads = 1;
    std::uint64_t seed = 0;

    bool valid() const;
};

struct EvaluatedIndividual {
    Genome genome;
    BodyGrid body;
    bool valid = false;      // body passed the connectivity + actuator filter
    double fitness = 0.0;    // meaningful only when valid
};

// Genotypic distance plus body_coefficient times the per-voxel body
// distance. Symmetric, non-negative, zero on identical pairs.
double hybrid_distance(const EvaluatedIndividual& a, const EvaluatedIndividual& b,
                       const EvolutionConfig& cfg);

struct Species {
    int id = 0;
    Genome representative;
    BodyGrid representative_body;
    double best_ever = 0.0;
    bool scored = false;  // best_ever holds a value from some earlier generation
    int stagnation = 0;
    std::vector<int> members;  // indices into the generation's population
};

struct SpeciesSet {
    std::vector<Species> species;  // ascending id
    int next_id = 0;
};

// Assigns every individual to the first previous-generation species (by
// ascending id) whose representative lies within compat_threshold under the
// hybrid distance, founding a new species otherwise. Emptied species are
// dropped; each survivor's representative becomes the member closest to the
// old representative.
SpeciesSet speciate(const std::vector<EvaluatedIndividual>& population, const SpeciesSet& previous,
                    const EvolutionConfig& cfg);

// One round of selection and reproduction. Updates per-species stagnation
// counters, removes species stagnant for more than max_stagnation
// generations (the best species_elitism species are kept regardless),
// assigns offspring quotas by largest remainder proportional to mean member
// fitness (shifted to be non-negative) with a min_species_size floor, copies
// the top `elitism` members of each species unchanged, and fills the rest
// with mutated crossover or mutated clones of parents drawn from each
// species' top survival_threshold fraction. Only valid-bodied members can be
// parents or elites; a species whose members are all invalid is dropped. If
// every species dies the population is reseeded from minimal genomes and
// *reseeded is set. Always returns exactly cfg.population genomes.
std::vector<Genome> reproduce(SpeciesSet& species, const std::vector<EvaluatedIndividual>& population,
                              const EvolutionConfig& cfg, int genome_inputs, int genome_outputs,
                              InnovationRegistry& registry, Rng& rng, bool* reseeded = nullptr);

struct GenerationStats {
    int generation = 0;
    double best = 0.0;    // over valid individuals; fitness floor if none
    double mean = 0.0;
    double median = 0.0;
    int species_count = 0;
    double valid_fraction = 0.0;
    long long evaluations_cumulative = 0;  // episodes run since the start
};

struct Champion {
    Algorithm algorithm = Algorithm::HyperNeat;
    int generation = 0;
    double fitness = 0.0;
    Genome genome;                           // body-generating genome
    std::optional<Genome> controller_genome; // nested baseline only
    BodyGrid body;
};

// Streaming observer: called once per generation after evaluation and
// speciation, before reproduction. best_so_far is null until the first
// valid individual has been scored.
struct GenerationSink {
    virtual ~GenerationSink() = default;
    virtual void on_generation(const GenerationStats& stats, const Champion* best_so_far) = 0;
};

struct RunArtifacts {
    std::vector<GenerationStats> stats;
    std::optional<Champion> champion;  // best-ever individual
    std::vector<Genome> final_population;
    long long total_evaluations = 0;
};

// Single-genome run: each genome is a 7-input CPPN expressed over the
// two-part substrate into a body network (decoded to a voxel grid) and a
// task controller. Invalid bodies skip the episode and are barred from
// reproduction. Speciation uses the hybrid distance.
RunArtifacts evolve(const EvolutionConfig& cfg, const TaskSpec& task,
                    GenerationSink* sink = nullptr);

// Single-network baseline: one NEAT genome with 2 coordinate inputs plus
// the task sensors, and 5 type logits plus grid_size^2 action outputs.
// Sensor inputs are zero while decoding the body; coordinate inputs are
// zero while controlling.
RunArtifacts evolve_direct_baseline(const EvolutionConfig& cfg, const TaskSpec& task,
                                    GenerationSink* sink = nullptr);

// Two-loop baseline: an outer population of body-generating CPPNs (size
// nested_population, genotypic speciation) scored by evolving, for each
// distinct valid body, an inner population of direct controller networks
// for inner_generations. Inner results are cached by body content for the
// whole run.
RunArtifacts evolve_nested_baseline(const EvolutionConfig& cfg, const TaskSpec& task,
                                    GenerationSink* sink = nullptr);

// Direct-baseline phenotype mapping, shared with replay tooling.
BodyGrid direct_decode_body(const CompiledCppn& net, int n, int task_inputs);
void direct_control(const CompiledCppn& net, int n, const std::vector<double>& inputs,
                    std::vector<double>& actions, std::vector<double>& scratch);

// Content hash of a voxel grid (inner-run cache key for the nested
// baseline).
std::uint64_t body_hash(const BodyGrid& b);

}  // namespace voxevo
