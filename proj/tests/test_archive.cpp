#include "doctest.h"
#include "voxevo/archive.hpp"

using namespace voxevo;
using nlohmann::json;

namespace {

Genome sample_genome(std::uint64_t seed, int steps) {
    Rng rng(seed);
    InnovationRegistry registry(7, 1);
    MutationParams params;
    Genome g = new_minimal_genome(7, 1, rng);
    for (int s = 0; s < steps; ++s) g = mutate(g, registry, params, rng);
    return g;
}

}  // namespace

TEST_CASE("double formatting is stable and round-trip exact") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(-2.0) == "-2");
    CHECK(format_double(1.0 / 3.0) == "0.333333333");
    CHECK(format_double(1.25e-7) == "1.25e-07");
}

TEST_CASE("stats rows serialize to the fixed column layout") {
    CHECK(stats_csv_header() ==
          "generation,best,mean,median,species_count,valid_fraction,evaluations_cumulative");
    GenerationStats s;
    s.generation = 3;
    s.best = 1.5;
    s.mean = 0.25;
    s.median = 0.125;
    s.species_count = 4;
    s.valid_fraction = 0.75;
    s.evaluations_cumulative = 123;
    CHECK(stats_csv_row(s) == "3,1.5,0.25,0.125,4,0.75,123");
}

TEST_CASE("genomes survive a JSON round trip bit-exactly") {
    for (int k = 0; k < 20; ++k) {
        const Genome g = sample_genome(100 + k, 12);
        const Genome back = genome_from_json(genome_to_json(g));
        REQUIRE(structurally_equal(g, back));
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            CHECK(g.nodes[i].bias == back.nodes[i].bias);
            CHECK(g.nodes[i].activation == back.nodes[i].activation);
        }
        for (std::size_t i = 0; i < g.connections.size(); ++i) {
            CHECK(g.connections[i].weight == back.connections[i].weight);
            CHECK(g.connections[i].enabled == back.connections[i].enabled);
        }
    }
    CHECK_THROWS_AS(genome_from_json(json{{"nodes", json::array()}, {"junk", 1}}), ConfigError);
}

TEST_CASE("bodies and champions survive a JSON round trip") {
    const auto body = BodyGrid::from_ascii("..V..\n.sVs.\nHHHHH\n.sVs.\n..V..\n");
    REQUIRE(body.has_value());
    CHECK(body_from_json(body_to_json(*body)) == *body);

    Champion c;
    c.algorithm = Algorithm::Nested;
    c.generation = 17;
    c.fitness = 2.5;
    c.genome = sample_genome(7, 6);
    c.controller_genome = sample_genome(8, 4);
    c.body = *body;
    RunConfig run;
    run.evolution.seed = 99;
    run.steps = 200;
    const json j = champion_to_json(c, run, TaskId::Climber);
    const ChampionArchive back = champion_from_json(j);
    CHECK(back.task == TaskId::Climber);
    CHECK(back.grid_size == 5);
    CHECK(back.steps == 200);
    CHECK(back.seed == 99);
    CHECK(back.champion.generation == 17);
    CHECK(back.champion.fitness == 2.5);
    CHECK(back.champion.body == *body);
    CHECK(structurally_equal(back.champion.genome, c.genome));
    REQUIRE(back.champion.controller_genome.has_value());
    CHECK(structurally_equal(*back.champion.controller_genome, *c.controller_genome));
}

TEST_CASE("run configs parse strictly") {
    json j{{"seed", 7}};
    const RunConfig defaults = parse_run_config(j);
    CHECK(defaults.algorithm == Algorithm::HyperNeat);
    CHECK(defaults.task == TaskId::Walker);
    CHECK(defaults.evolution.seed == 7);
    CHECK(defaults.evolution.generations == 250);
    CHECK(defaults.evolution.population == 128);

    CHECK_THROWS_AS(parse_run_config(json::object()), ConfigError);  // seed required
    CHECK_THROWS_AS(parse_run_config(json{{"seed", 1}, {"populaton", 24}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config(json{{"seed", 1}, {"task", "swimmer"}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config(json{{"seed", 1}, {"algorithm", "sgd"}}), ConfigError);
    CHECK_THROWS_AS(
        parse_run_config(json{{"seed", 1}, {"evolution", {{"populaton", 24}}}}), ConfigError);
    CHECK_THROWS_AS(
        parse_run_config(json{{"seed", 1}, {"evolution", {{"survival_threshold", 0.0}}}}),
        ConfigError);
    CHECK_THROWS_AS(
        parse_run_config(json{{"seed", 1}, {"evolution", {{"population", "many"}}}}), ConfigError);

    // Full echo parses back to the same values.
    RunConfig c;
    c.algorithm = Algorithm::Direct;
    c.task = TaskId::Thrower;
    c.steps = 120;
    c.evolution.seed = 31;
    c.evolution.population = 24;
    c.evolution.generations = 12;
    c.evolution.body_coefficient = 0.5;
    const RunConfig back = parse_run_config(run_config_to_json(c));
    CHECK(back.algorithm == Algorithm::Direct);
    CHECK(back.task == TaskId::Thrower);
    CHECK(back.steps == 120);
    CHECK(back.evolution.seed == 31);
    CHECK(back.evolution.population == 24);
    CHECK(back.evolution.generations == 12);
    CHECK(back.evolution.body_coefficient == 0.5);
}

TEST_CASE("dotted overrides edit the raw configuration") {
    json j{{"seed", 1}};
    apply_override(j, "evolution.population=24");
    apply_override(j, "evolution.mutation.weight_mutate_rate=0.5");
    apply_override(j, "task=thrower");
    apply_override(j, "output_dir=out/x");
    const RunConfig c = parse_run_config(j);
    CHECK(c.evolution.population == 24);
    CHECK(c.evolution.mutation.weight_mutate_rate == 0.5);
    CHECK(c.task == TaskId::Thrower);
    CHECK(c.output_dir == "out/x");

    CHECK_THROWS_AS(apply_override(j, "no_equals_sign"), ConfigError);
    CHECK_THROWS_AS(apply_override(j, "=5"), ConfigError);
    CHECK_THROWS_AS(apply_override(j, "seed.x=1"), ConfigError);
    apply_override(j, "evolution.junk=1");
    CHECK_THROWS_AS(parse_run_config(j), ConfigError);
}
