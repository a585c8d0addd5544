#include "voxevo/evolution.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>

namespace voxevo {

namespace {

bool rate_ok(double r) { return r >= 0.0 && r <= 1.0; }

// Runs fn(0..count-1) across `threads` workers. Each index is handled
// exactly once and results land in caller-owned slots, so scheduling cannot
// change the outcome. The first exception is rethrown after the join.
template <typename F>
void parallel_for(int count, int threads, F&& fn) {
    if (threads <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::atomic<bool> poisoned{false};
    std::string first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (int i; (i = next.fetch_add(1)) < count;) {
            if (poisoned.load()) return;
            try {
                fn(i);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lk(error_mutex);
                if (!poisoned.exchange(true)) first_error = e.what();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int n = std::min(threads, count);
    pool.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (poisoned.load()) throw std::runtime_error("evaluation failed: " + first_error);
}

double hybrid_distance_parts(const Genome& ga, const BodyGrid& ba, const Genome& gb,
                             const BodyGrid& bb, const EvolutionConfig& cfg) {
    double d = genotypic_distance(ga, gb, cfg.coeffs);
    if (cfg.body_coefficient != 0.0) d += cfg.body_coefficient * body_distance(ba, bb);
    return d;
}

GenerationStats stats_of(int generation, const std::vector<EvaluatedIndividual>& pop,
                         const SpeciesSet& set, long long evaluations_cumulative) {
    GenerationStats st;
    st.generation = generation;
    st.species_count = static_cast<int>(set.species.size());
    st.evaluations_cumulative = evaluations_cumulative;

    std::vector<double> fits;
    fits.reserve(pop.size());
    for (const auto& ind : pop)
        if (ind.valid) fits.push_back(ind.fitness);
    st.valid_fraction = pop.empty() ? 0.0 : static_cast<double>(fits.size()) / pop.size();
    if (fits.empty()) {
        st.best = st.mean = st.median = kNanFitnessFloor;
        return st;
    }
    std::sort(fits.begin(), fits.end());
    st.best = fits.back();
    st.mean = std::accumulate(fits.begin(), fits.end(), 0.0) / fits.size();
    const std::size_t m = fits.size() / 2;
    st.median = fits.size() % 2 ? fits[m] : 0.5 * (fits[m - 1] + fits[m]);
    return st;
}

// Shared generational loop. `evaluate_generation` fills body/valid/fitness
// for every individual and advances the episode counter; `controller_of`
// supplies the separately-evolved controller genome where one exists.
RunArtifacts run_loop(
    const EvolutionConfig& cfg, Algorithm algorithm, int genome_inputs, int genome_outputs,
    const std::function<void(std::vector<EvaluatedIndividual>&, long long&)>& evaluate_generation,
    const std::function<std::optional<Genome>(const EvaluatedIndividual&)>& controller_of,
    GenerationSink* sink) {
    RunArtifacts art;
    InnovationRegistry registry(genome_inputs, genome_outputs);
    Rng master(cfg.seed);

    std::vector<Genome> genomes;
    genomes.reserve(static_cast<std::size_t>(cfg.population));
    {
        Rng init_rng = master.split(0);
        for (int i = 0; i < cfg.population; ++i)
            genomes.push_back(new_minimal_genome(genome_inputs, genome_outputs, init_rng));
    }
    if (cfg.generations == 0) {
        art.final_population = std::move(genomes);
        return art;
    }

    SpeciesSet species_set;
    for (int g = 0; g < cfg.generations; ++g) {
        std::vector<EvaluatedIndividual> pop(genomes.size());
        for (std::size_t i = 0; i < genomes.size(); ++i) pop[i].genome = std::move(genomes[i]);
        evaluate_generation(pop, art.total_evaluations);

        species_set = speciate(pop, species_set, cfg);
        const GenerationStats st = stats_of(g, pop, species_set, art.total_evaluations);
        art.stats.push_back(st);

        int best_idx = -1;
        for (std::size_t i = 0; i < pop.size(); ++i)
            if (pop[i].valid && (best_idx < 0 || pop[i].fitness > pop[best_idx].fitness))
                best_idx = static_cast<int>(i);
        if (best_idx >= 0 && (!art.champion || pop[best_idx].fitness > art.champion->fitness)) {
            Champion c;
            c.algorithm = algorithm;
            c.generation = g;
            c.fitness = pop[best_idx].fitness;
            c.genome = pop[best_idx].genome;
            c.controller_genome = controller_of(pop[best_idx]);
            c.body = pop[best_idx].body;
            art.champion = c;
        }
        if (sink) sink->on_generation(st, art.champion ? &*art.champion : nullptr);

        const bool budget_spent =
            cfg.max_evaluations > 0 && art.total_evaluations >= cfg.max_evaluations;
        if (g == cfg.generations - 1 || budget_spent) {
            art.final_population.reserve(pop.size());
            for (auto& ind : pop) art.final_population.push_back(std::move(ind.genome));
            break;
        }

        Rng repro_rng = master.split(1 + static_cast<std::uint64_t>(g));
        bool reseeded = false;
        genomes = reproduce(species_set, pop, cfg, genome_inputs, genome_outputs, registry,
                            repro_rng, &reseeded);
        if (reseeded) species_set = SpeciesSet{};
    }
    return art;
}

VoxelType argmax_type(const double* logits) {
    int best = 0;
    for (int k = 1; k < 5; ++k)
        if (logits[k] > logits[best]) best = k;
    return static_cast<VoxelType>(best);
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

const char* to_string(Algorithm a) {
    switch (a) {
        case Algorithm::HyperNeat: return "hyperneat";
        case Algorithm::Direct: return "direct";
        case Algorithm::Nested: return "nested";
    }
    return "?";
}

std::optional<Algorithm> algorithm_from_string(std::string_view s) {
    if (s == "hyperneat") return Algorithm::HyperNeat;
    if (s == "direct") return Algorithm::Direct;
    if (s == "nested") return Algorithm::Nested;
    return std::nullopt;
}

bool EvolutionConfig::valid() const {
    const bool rates = rate_ok(mutation.weight_mutate_rate) && rate_ok(mutation.weight_replace_rate) &&
                       rate_ok(mutation.bias_mutate_rate) && rate_ok(mutation.bias_replace_rate) &&
                       rate_ok(mutation.conn_add_prob) && rate_ok(mutation.conn_delete_prob) &&
                       rate_ok(mutation.node_add_prob) && rate_ok(mutation.node_delete_prob) &&
                       rate_ok(mutation.activation_mutate_rate) && rate_ok(survival_threshold) &&
                       rate_ok(crossover_fraction);
    return rates && generations >= 0 && population >= 2 * min_species_size && grid_size >= 1 &&
           repetitions >= 1 && compat_threshold >= 0.0 && body_coefficient >= 0.0 &&
           coeffs.excess >= 0.0 && coeffs.disjoint >= 0.0 && coeffs.weight >= 0.0 &&
           max_stagnation >= 1 && species_elitism >= 0 && elitism >= 0 &&
           survival_threshold > 0.0 && min_species_size >= 1 && nested_population >= 2 &&
           inner_generations >= 0 && max_evaluations >= 0 && threads >= 1 &&
           mutation.value_clamp > 0.0 && !mutation.activation_options.empty();
}

double hybrid_distance(const EvaluatedIndividual& a, const EvaluatedIndividual& b,
                       const EvolutionConfig& cfg) {
    return hybrid_distance_parts(a.genome, a.body, b.genome, b.body, cfg);
}

SpeciesSet speciate(const std::vector<EvaluatedIndividual>& population, const SpeciesSet& previous,
                    const EvolutionConfig& cfg) {
    SpeciesSet out;
    out.next_id = previous.next_id;
    out.species.reserve(previous.species.size());
    for (const auto& sp : previous.species) {
        out.species.push_back(sp);
        out.species.back().members.clear();
    }

    for (std::size_t i = 0; i < population.size(); ++i) {
        bool placed = false;
        for (auto& sp : out.species) {
            if (hybrid_distance_parts(population[i].genome, population[i].body, sp.representative,
                                      sp.representative_body, cfg) <= cfg.compat_threshold) {
                sp.members.push_back(static_cast<int>(i));
                placed = true;
                break;
            }
        }
        if (!placed) {
            Species s;
            s.id = out.next_id++;
            s.representative = population[i].genome;
            s.representative_body = population[i].body;
            s.members.push_back(static_cast<int>(i));
            out.species.push_back(std::move(s));
        }
    }

    std::erase_if(out.species, [](const Species& s) { return s.members.empty(); });

    for (auto& sp : out.species) {
        int closest = sp.members.front();
        double best = hybrid_distance_parts(population[closest].genome, population[closest].body,
                                            sp.representative, sp.representative_body, cfg);
        for (std::size_t k = 1; k < sp.members.size(); ++k) {
            const int idx = sp.members[k];
            const double d = hybrid_distance_parts(population[idx].genome, population[idx].body,
                                                   sp.representative, sp.representative_body, cfg);
            if (d < best) {
                best = d;
                closest = idx;
            }
        }
        sp.representative = population[closest].genome;
        sp.representative_body = population[closest].body;
    }
    return out;
}

std::vector<Genome> reproduce(SpeciesSet& species, const std::vector<EvaluatedIndividual>& population,
                              const EvolutionConfig& cfg, int genome_inputs, int genome_outputs,
                              InnovationRegistry& registry, Rng& rng, bool* reseeded) {
    if (reseeded) *reseeded = false;

    struct Entry {
        int species_index = 0;
        std::vector<int> ranked;  // valid members, best fitness first
        double mean = 0.0;
        double current_best = 0.0;
    };
    std::vector<Entry> alive;
    for (std::size_t si = 0; si < species.species.size(); ++si) {
        Species& sp = species.species[si];
        Entry e;
        e.species_index = static_cast<int>(si);
        for (const int idx : sp.members)
            if (population[idx].valid) e.ranked.push_back(idx);
        if (e.ranked.empty()) continue;  // no evaluable member: the species dies
        std::sort(e.ranked.begin(), e.ranked.end(), [&](int a, int b) {
            if (population[a].fitness != population[b].fitness)
                return population[a].fitness > population[b].fitness;
            return a < b;
        });
        double sum = 0.0;
        for (const int idx : e.ranked) sum += population[idx].fitness;
        e.mean = sum / e.ranked.size();
        e.current_best = population[e.ranked.front()].fitness;
        if (!sp.scored || e.current_best > sp.best_ever) {
            sp.best_ever = e.current_best;
            sp.scored = true;
            sp.stagnation = 0;
        } else {
            sp.stagnation += 1;
        }
        alive.push_back(std::move(e));
    }

    // Stagnation filter; the top species_elitism species by current best are
    // immune.
    if (!alive.empty()) {
        std::vector<int> order(alive.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (alive[a].current_best != alive[b].current_best)
                return alive[a].current_best > alive[b].current_best;
            return species.species[alive[a].species_index].id <
                   species.species[alive[b].species_index].id;
        });
        std::vector<char> keep(alive.size(), 0);
        for (std::size_t rank = 0; rank < order.size(); ++rank) {
            const int i = order[rank];
            keep[i] = rank < static_cast<std::size_t>(cfg.species_elitism) ||
                      species.species[alive[i].species_index].stagnation <= cfg.max_stagnation;
        }
        std::vector<Entry> kept;
        for (std::size_t i = 0; i < alive.size(); ++i)
            if (keep[i]) kept.push_back(std::move(alive[i]));
        alive = std::move(kept);
    }

    if (alive.empty()) {
        std::cerr << "[evolution] every species died; reseeding from minimal genomes\n";
        if (reseeded) *reseeded = true;
        species.species.clear();
        std::vector<Genome> fresh;
        fresh.reserve(static_cast<std::size_t>(cfg.population));
        for (int i = 0; i < cfg.population; ++i)
            fresh.push_back(new_minimal_genome(genome_inputs, genome_outputs, rng));
        return fresh;
    }

    {
        std::vector<char> is_alive(species.species.size(), 0);
        for (const auto& e : alive) is_alive[e.species_index] = 1;
        std::vector<Species> survivors;
        std::vector<Entry> remapped = std::move(alive);
        alive.clear();
        for (auto& e : remapped) {
            survivors.push_back(std::move(species.species[e.species_index]));
            e.species_index = static_cast<int>(survivors.size()) - 1;
            alive.push_back(std::move(e));
        }
        species.species = std::move(survivors);
    }

    // Offspring quotas: a floor per species, then the remainder split by
    // largest remainder proportional to mean fitness shifted to be
    // non-negative. Exactly cfg.population offspring in total.
    const int n = static_cast<int>(alive.size());
    const int floor_each = std::max(1, std::min(cfg.min_species_size, cfg.population / n));
    const int extra = cfg.population - n * floor_each;
    double min_mean = alive.front().mean;
    for (const auto& e : alive) min_mean = std::min(min_mean, e.mean);
    std::vector<double> weight(static_cast<std::size_t>(n));
    double total_weight = 0.0;
    for (int i = 0; i < n; ++i) {
        weight[i] = alive[i].mean - min_mean;
        total_weight += weight[i];
    }
    if (total_weight <= 0.0) {
        std::fill(weight.begin(), weight.end(), 1.0);
        total_weight = n;
    }
    std::vector<int> quota(static_cast<std::size_t>(n), floor_each);
    std::vector<double> remainder(static_cast<std::size_t>(n), 0.0);
    int handed = 0;
    for (int i = 0; i < n; ++i) {
        const double ideal = extra * weight[i] / total_weight;
        const int whole = static_cast<int>(std::floor(ideal));
        quota[i] += whole;
        handed += whole;
        remainder[i] = ideal - whole;
    }
    {
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
            return species.species[alive[a].species_index].id <
                   species.species[alive[b].species_index].id;
        });
        for (int k = 0; k < extra - handed; ++k) quota[order[static_cast<std::size_t>(k)]] += 1;
    }

    std::vector<Genome> next;
    next.reserve(static_cast<std::size_t>(cfg.population));
    for (int i = 0; i < n; ++i) {
        const auto& ranked = alive[i].ranked;
        const int q = quota[i];
        const int elites = std::min({cfg.elitism, q, static_cast<int>(ranked.size())});
        for (int e = 0; e < elites; ++e) next.push_back(population[ranked[e]].genome);

        const int parent_count = std::max(
            1, static_cast<int>(std::ceil(cfg.survival_threshold * ranked.size())));
        for (int o = elites; o < q; ++o) {
            Genome child;
            if (rng.uniform() < cfg.crossover_fraction) {
                const int a = ranked[rng.uniform_int(parent_count)];
                const int b = ranked[rng.uniform_int(parent_count)];
                const bool a_fitter = population[a].fitness >= population[b].fitness;
                child = crossover(population[a_fitter ? a : b].genome,
                                  population[a_fitter ? b : a].genome, rng);
            } else {
                child = population[ranked[rng.uniform_int(parent_count)]].genome;
            }
            next.push_back(mutate(child, registry, cfg.mutation, rng));
        }
    }
    return next;
}

RunArtifacts evolve(const EvolutionConfig& cfg, const TaskSpec& task, GenerationSink* sink) {
    if (!cfg.valid()) throw std::invalid_argument("evolve: invalid configuration");
    if (task.grid_size != cfg.grid_size)
        throw std::invalid_argument("evolve: task and config grid sizes differ");

    const auto substrates = build_substrates(task.input_count, cfg.grid_size);
    auto evaluate_generation = [&](std::vector<EvaluatedIndividual>& pop, long long& episodes) {
        parallel_for(static_cast<int>(pop.size()), cfg.threads, [&](int i) {
            EvaluatedIndividual& ind = pop[static_cast<std::size_t>(i)];
            const GenomePhenotypes ph = express(ind.genome, substrates);
            ind.body = decode_body(ph.morphology_net, cfg.grid_size);
            ind.valid = validate_body(ind.body).valid;
            if (ind.valid) ind.fitness = run_episode(ind.body, ph.controller_net, task).fitness;
        });
        for (const auto& ind : pop) episodes += ind.valid ? 1 : 0;
    };
    return run_loop(cfg, Algorithm::HyperNeat, 7, 1, evaluate_generation,
                    [](const EvaluatedIndividual&) { return std::optional<Genome>(); }, sink);
}

BodyGrid direct_decode_body(const CompiledCppn& net, int n, int task_inputs) {
    if (net.input_count != 2 + task_inputs || net.output_count() != 5 + n * n)
        throw std::invalid_argument("direct_decode_body: network shape does not fit");
    BodyGrid body = BodyGrid::empty(n);
    std::vector<double> inputs(static_cast<std::size_t>(net.input_count), 0.0);
    std::vector<double> outputs(static_cast<std::size_t>(net.output_count()), 0.0);
    std::vector<double> scratch;
    const double c = (n - 1) / 2.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            inputs[0] = c == 0.0 ? 0.0 : (j - c) / c;
            inputs[1] = c == 0.0 ? 0.0 : (c - i) / c;
            net.activate(inputs, outputs, scratch);
            body.at(i, j) = argmax_type(outputs.data());
        }
    return body;
}

void direct_control(const CompiledCppn& net, int n, const std::vector<double>& inputs,
                    std::vector<double>& actions, std::vector<double>& scratch) {
    if (net.input_count != 2 + static_cast<int>(inputs.size()) ||
        net.output_count() != 5 + n * n)
        throw std::invalid_argument("direct_control: network shape does not fit");
    std::vector<double> padded(static_cast<std::size_t>(net.input_count), 0.0);
    std::copy(inputs.begin(), inputs.end(), padded.begin() + 2);
    std::vector<double> outputs(static_cast<std::size_t>(net.output_count()), 0.0);
    net.activate(padded, outputs, scratch);
    actions.assign(outputs.begin() + 5, outputs.end());
}

RunArtifacts evolve_direct_baseline(const EvolutionConfig& cfg, const TaskSpec& task,
                                    GenerationSink* sink) {
    if (!cfg.valid()) throw std::invalid_argument("evolve_direct_baseline: invalid configuration");
    if (task.grid_size != cfg.grid_size)
        throw std::invalid_argument("evolve_direct_baseline: task and config grid sizes differ");

    const int n = cfg.grid_size;
    const int genome_inputs = 2 + task.input_count;
    const int genome_outputs = 5 + n * n;
    auto evaluate_generation = [&](std::vector<EvaluatedIndividual>& pop, long long& episodes) {
        parallel_for(static_cast<int>(pop.size()), cfg.threads, [&](int i) {
            EvaluatedIndividual& ind = pop[static_cast<std::size_t>(i)];
            const CompiledCppn net = compile(ind.genome);
            ind.body = direct_decode_body(net, n, task.input_count);
            ind.valid = validate_body(ind.body).valid;
            if (!ind.valid) return;
            std::vector<double> scratch;
            const ControlFn act = [&](const std::vector<double>& obs, std::vector<double>& actions) {
                direct_control(net, n, obs, actions, scratch);
            };
            ind.fitness = run_episode(ind.body, act, task).fitness;
        });
        for (const auto& ind : pop) episodes += ind.valid ? 1 : 0;
    };
    return run_loop(cfg, Algorithm::Direct, genome_inputs, genome_outputs, evaluate_generation,
                    [](const EvaluatedIndividual&) { return std::optional<Genome>(); }, sink);
}

std::uint64_t body_hash(const BodyGrid& b) {
    std::uint64_t h = 0xcbf29ce484222325ull ^ mix64(static_cast<std::uint64_t>(b.n));
    for (const VoxelType t : b.cells) {
        h ^= static_cast<std::uint64_t>(t) + 0x100u;
        h *= 0x100000001b3ull;
    }
    return mix64(h);
}

RunArtifacts evolve_nested_baseline(const EvolutionConfig& cfg, const TaskSpec& task,
                                    GenerationSink* sink) {
    if (!cfg.valid()) throw std::invalid_argument("evolve_nested_baseline: invalid configuration");
    if (task.grid_size != cfg.grid_size)
        throw std::invalid_argument("evolve_nested_baseline: task and config grid sizes differ");

    const int n = cfg.grid_size;
    struct InnerResult {
        double fitness = kNanFitnessFloor;
        Genome controller;
    };
    std::unordered_map<std::uint64_t, InnerResult> cache;

    // One controller evolution for a fixed body: a fresh population of
    // direct sensor->action networks under genotypic speciation, seeded from
    // the body content so cache hits and reruns agree.
    auto run_inner = [&](const BodyGrid& body, long long& episodes) {
        EvolutionConfig inner = cfg;
        inner.population = cfg.nested_population;
        inner.generations = cfg.inner_generations;
        inner.body_coefficient = 0.0;
        inner.min_species_size = std::min(cfg.min_species_size, std::max(1, inner.population / 2));
        inner.max_evaluations = 0;
        inner.seed = mix64(cfg.seed ^ body_hash(body));

        auto evaluate_inner = [&](std::vector<EvaluatedIndividual>& pop, long long& inner_eps) {
            parallel_for(static_cast<int>(pop.size()), cfg.threads, [&](int i) {
                EvaluatedIndividual& ind = pop[static_cast<std::size_t>(i)];
                const CompiledCppn net = compile(ind.genome);
                std::vector<double> scratch;
                const ControlFn act = [&](const std::vector<double>& obs,
                                          std::vector<double>& actions) {
                    net.activate(obs, actions, scratch);
                };
                ind.valid = true;
                ind.fitness = run_episode(body, act, task).fitness;
            });
            inner_eps += static_cast<long long>(pop.size());
        };
        const RunArtifacts inner_art =
            run_loop(inner, Algorithm::Nested, task.input_count, n * n, evaluate_inner,
                     [](const EvaluatedIndividual&) { return std::optional<Genome>(); }, nullptr);
        episodes += inner_art.total_evaluations;
        InnerResult r;
        if (inner_art.champion) {
            r.fitness = inner_art.champion->fitness;
            r.controller = inner_art.champion->genome;
        }
        return r;
    };

    const auto substrates = build_substrates(task.input_count, cfg.grid_size);
    auto evaluate_generation = [&](std::vector<EvaluatedIndividual>& pop, long long& episodes) {
        for (auto& ind : pop) {
            const GenomePhenotypes ph = express(ind.genome, substrates);
            ind.body = decode_body(ph.morphology_net, cfg.grid_size);
            ind.valid = validate_body(ind.body).valid;
            if (!ind.valid) continue;
            const std::uint64_t h = body_hash(ind.body);
            auto it = cache.find(h);
            if (it == cache.end()) it = cache.emplace(h, run_inner(ind.body, episodes)).first;
            ind.fitness = it->second.fitness;
        }
    };

    EvolutionConfig outer = cfg;
    outer.population = cfg.nested_population;
    outer.body_coefficient = 0.0;  // genotypic speciation in the outer loop too
    outer.min_species_size = std::min(cfg.min_species_size, std::max(1, outer.population / 2));
    return run_loop(outer, Algorithm::Nested, 7, 1, evaluate_generation,
                    [&](const EvaluatedIndividual& ind) -> std::optional<Genome> {
                        const auto it = cache.find(body_hash(ind.body));
                        if (it == cache.end()) return std::nullopt;
                        return it->second.controller;
                    },
                    sink);
}

}  // namespace voxevo
