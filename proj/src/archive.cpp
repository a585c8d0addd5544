#include "voxevo/archive.hpp"

#include <cstdio>
#include <set>

namespace voxevo {

namespace {

using nlohmann::json;

void require_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key \"" + key + "\"");
}

template <typename T>
void load(const json& j, const char* key, T& out) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key \"") + key + "\" has the wrong type");
    }
}

double number_or_throw(const json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError(where + ": expected a number");
    return j.get<double>();
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string stats_csv_header() {
    return "generation,best,mean,median,species_count,valid_fraction,evaluations_cumulative";
}

std::string stats_csv_row(const GenerationStats& s) {
    std::string row = std::to_string(s.generation);
    row += ',';
    row += format_double(s.best);
    row += ',';
    row += format_double(s.mean);
    row += ',';
    row += format_double(s.median);
    row += ',';
    row += std::to_string(s.species_count);
    row += ',';
    row += format_double(s.valid_fraction);
    row += ',';
    row += std::to_string(s.evaluations_cumulative);
    return row;
}

nlohmann::json genome_to_json(const Genome& g) {
    json nodes = json::array();
    for (const NodeGene& n : g.nodes)
        nodes.push_back({{"id", n.id},
                         {"kind", to_string(n.kind)},
                         {"activation", to_string(n.activation)},
                         {"bias", n.bias}});
    json conns = json::array();
    for (const ConnectionGene& c : g.connections)
        conns.push_back({{"innovation", c.innovation},
                         {"source", c.source},
                         {"target", c.target},
                         {"weight", c.weight},
                         {"enabled", c.enabled}});
    return json{{"nodes", std::move(nodes)}, {"connections", std::move(conns)}};
}

Genome genome_from_json(const nlohmann::json& j) {
    require_keys(j, "genome", {"nodes", "connections"});
    Genome g;
    if (!j.contains("nodes") || !j.contains("connections"))
        throw ConfigError("genome: missing nodes or connections");
    for (const json& n : j.at("nodes")) {
        require_keys(n, "genome node", {"id", "kind", "activation", "bias"});
        NodeGene node;
        node.id = n.at("id").get<int>();
        const auto kind = node_kind_from_string(n.at("kind").get<std::string>());
        const auto act = activation_from_string(n.at("activation").get<std::string>());
        if (!kind || !act) throw ConfigError("genome node: unknown kind or activation");
        node.kind = *kind;
        node.activation = *act;
        node.bias = number_or_throw(n.at("bias"), "genome node bias");
        g.nodes.push_back(node);
    }
    for (const json& c : j.at("connections")) {
        require_keys(c, "genome connection",
                     {"innovation", "source", "target", "weight", "enabled"});
        ConnectionGene conn;
        conn.innovation = c.at("innovation").get<int>();
        conn.source = c.at("source").get<int>();
        conn.target = c.at("target").get<int>();
        conn.weight = number_or_throw(c.at("weight"), "genome connection weight");
        conn.enabled = c.at("enabled").get<bool>();
        g.connections.push_back(conn);
    }
    g.sort_genes();
    if (!g.is_valid()) throw ConfigError("genome: inconsistent gene set");
    return g;
}

nlohmann::json body_to_json(const BodyGrid& b) {
    json rows = json::array();
    const std::string text = b.ascii();
    std::string row;
    for (const char ch : text) {
        if (ch == '\n') {
            rows.push_back(row);
            row.clear();
        } else {
            row.push_back(ch);
        }
    }
    return rows;
}

BodyGrid body_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ConfigError("body: expected an array of row strings");
    std::string text;
    for (const json& row : j) {
        if (!row.is_string()) throw ConfigError("body: expected an array of row strings");
        text += row.get<std::string>();
        text += '\n';
    }
    const auto body = BodyGrid::from_ascii(text);
    if (!body) throw ConfigError("body: malformed voxel grid");
    return *body;
}

RunConfig parse_run_config(const nlohmann::json& j) {
    require_keys(j, "config",
                 {"algorithm", "task", "seed", "output_dir", "record_champion_replay", "steps",
                  "evolution"});
    RunConfig c;

    if (!j.contains("seed")) throw ConfigError("config: \"seed\" is required");
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
        throw ConfigError("config: \"seed\" must be an integer");
    c.evolution.seed = j.at("seed").get<std::uint64_t>();

    if (j.contains("algorithm")) {
        const auto a = algorithm_from_string(j.at("algorithm").get<std::string>());
        if (!a) throw ConfigError("config: unknown algorithm");
        c.algorithm = *a;
    }
    if (j.contains("task")) {
        const auto t = task_from_string(j.at("task").get<std::string>());
        if (!t) throw ConfigError("config: unknown task");
        c.task = *t;
    }
    load(j, "output_dir", c.output_dir);
    load(j, "record_champion_replay", c.record_champion_replay);
    load(j, "steps", c.steps);
    if (c.steps < 0) throw ConfigError("config: steps must be non-negative");

    if (j.contains("evolution")) {
        const json& e = j.at("evolution");
        require_keys(e, "evolution",
                     {"generations", "population", "grid_size", "repetitions", "compat_threshold",
                      "body_coefficient", "c_excess", "c_disjoint", "c_weight", "max_stagnation",
                      "species_elitism", "elitism", "survival_threshold", "min_species_size",
                      "crossover_fraction", "nested_population", "inner_generations",
                      "max_evaluations", "threads", "mutation"});
        EvolutionConfig& ev = c.evolution;
        load(e, "generations", ev.generations);
        load(e, "population", ev.population);
        load(e, "grid_size", ev.grid_size);
        load(e, "repetitions", ev.repetitions);
        load(e, "compat_threshold", ev.compat_threshold);
        load(e, "body_coefficient", ev.body_coefficient);
        load(e, "c_excess", ev.coeffs.excess);
        load(e, "c_disjoint", ev.coeffs.disjoint);
        load(e, "c_weight", ev.coeffs.weight);
        load(e, "max_stagnation", ev.max_stagnation);
        load(e, "species_elitism", ev.species_elitism);
        load(e, "elitism", ev.elitism);
        load(e, "survival_threshold", ev.survival_threshold);
        load(e, "min_species_size", ev.min_species_size);
        load(e, "crossover_fraction", ev.crossover_fraction);
        load(e, "nested_population", ev.nested_population);
        load(e, "inner_generations", ev.inner_generations);
        load(e, "max_evaluations", ev.max_evaluations);
        load(e, "threads", ev.threads);
        if (e.contains("mutation")) {
            const json& m = e.at("mutation");
            require_keys(m, "mutation",
                         {"weight_mutate_rate", "weight_mutate_power", "weight_replace_rate",
                          "bias_mutate_rate", "bias_mutate_power", "bias_replace_rate",
                          "conn_add_prob", "conn_delete_prob", "node_add_prob",
                          "node_delete_prob", "activation_mutate_rate", "value_clamp"});
            MutationParams& mp = ev.mutation;
            load(m, "weight_mutate_rate", mp.weight_mutate_rate);
            load(m, "weight_mutate_power", mp.weight_mutate_power);
            load(m, "weight_replace_rate", mp.weight_replace_rate);
            load(m, "bias_mutate_rate", mp.bias_mutate_rate);
            load(m, "bias_mutate_power", mp.bias_mutate_power);
            load(m, "bias_replace_rate", mp.bias_replace_rate);
            load(m, "conn_add_prob", mp.conn_add_prob);
            load(m, "conn_delete_prob", mp.conn_delete_prob);
            load(m, "node_add_prob", mp.node_add_prob);
            load(m, "node_delete_prob", mp.node_delete_prob);
            load(m, "activation_mutate_rate", mp.activation_mutate_rate);
            load(m, "value_clamp", mp.value_clamp);
        }
    }
    if (!c.evolution.valid()) throw ConfigError("config: evolution parameters out of range");
    return c;
}

nlohmann::json run_config_to_json(const RunConfig& c) {
    const EvolutionConfig& ev = c.evolution;
    const MutationParams& mp = ev.mutation;
    return json{
        {"algorithm", to_string(c.algorithm)},
        {"task", to_string(c.task)},
        {"seed", ev.seed},
        {"output_dir", c.output_dir},
        {"record_champion_replay", c.record_champion_replay},
        {"steps", c.steps},
        {"evolution",
         {{"generations", ev.generations},
          {"population", ev.population},
          {"grid_size", ev.grid_size},
          {"repetitions", ev.repetitions},
          {"compat_threshold", ev.compat_threshold},
          {"body_coefficient", ev.body_coefficient},
          {"c_excess", ev.coeffs.excess},
          {"c_disjoint", ev.coeffs.disjoint},
          {"c_weight", ev.coeffs.weight},
          {"max_stagnation", ev.max_stagnation},
          {"species_elitism", ev.species_elitism},
          {"elitism", ev.elitism},
          {"survival_threshold", ev.survival_threshold},
          {"min_species_size", ev.min_species_size},
          {"crossover_fraction", ev.crossover_fraction},
          {"nested_population", ev.nested_population},
          {"inner_generations", ev.inner_generations},
          {"max_evaluations", ev.max_evaluations},
          {"threads", ev.threads},
          {"mutation",
           {{"weight_mutate_rate", mp.weight_mutate_rate},
            {"weight_mutate_power", mp.weight_mutate_power},
            {"weight_replace_rate", mp.weight_replace_rate},
            {"bias_mutate_rate", mp.bias_mutate_rate},
            {"bias_mutate_power", mp.bias_mutate_power},
            {"bias_replace_rate", mp.bias_replace_rate},
            {"conn_add_prob", mp.conn_add_prob},
            {"conn_delete_prob", mp.conn_delete_prob},
            {"node_add_prob", mp.node_add_prob},
            {"node_delete_prob", mp.node_delete_prob},
            {"activation_mutate_rate", mp.activation_mutate_rate},
            {"value_clamp", mp.value_clamp}}}}}};
}

void apply_override(nlohmann::json& j, std::string_view assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw ConfigError("override must look like path.to.key=value");
    const std::string path(assignment.substr(0, eq));
    const std::string raw(assignment.substr(eq + 1));

    json* node = &j;
    std::size_t begin = 0;
    while (true) {
        const std::size_t dot = path.find('.', begin);
        const std::string part = path.substr(begin, dot == std::string::npos ? dot : dot - begin);
        if (part.empty()) throw ConfigError("override path has an empty segment: " + path);
        if (dot == std::string::npos) {
            json value = json::parse(raw, nullptr, false);
            if (value.is_discarded()) value = raw;  // bare strings stay strings
            (*node)[part] = std::move(value);
            return;
        }
        node = &(*node)[part];
        if (!node->is_object() && !node->is_null())
            throw ConfigError("override path crosses a non-object: " + path);
        begin = dot + 1;
    }
}

nlohmann::json champion_to_json(const Champion& c, const RunConfig& run, TaskId task) {
    json j{{"algorithm", to_string(c.algorithm)},
           {"task", to_string(task)},
           {"generation", c.generation},
           {"fitness", c.fitness},
           {"grid_size", c.body.n},
           {"steps", run.steps},
           {"seed", run.evolution.seed},
           {"body", body_to_json(c.body)},
           {"genome", genome_to_json(c.genome)},
           {"config", run_config_to_json(run)}};
    if (c.controller_genome) j["controller_genome"] = genome_to_json(*c.controller_genome);
    return j;
}

ChampionArchive champion_from_json(const nlohmann::json& j) {
    require_keys(j, "champion",
                 {"algorithm", "task", "generation", "fitness", "grid_size", "steps", "seed",
                  "body", "genome", "controller_genome", "config"});
    ChampionArchive a;
    const auto alg = algorithm_from_string(j.at("algorithm").get<std::string>());
    const auto task = task_from_string(j.at("task").get<std::string>());
    if (!alg) throw ConfigError("champion: unknown algorithm");
    if (!task) throw ConfigError("champion: unknown task");
    a.champion.algorithm = *alg;
    a.task = *task;
    a.champion.generation = j.at("generation").get<int>();
    a.champion.fitness = number_or_throw(j.at("fitness"), "champion fitness");
    a.grid_size = j.at("grid_size").get<int>();
    if (j.contains("steps")) a.steps = j.at("steps").get<int>();
    if (j.contains("seed")) a.seed = j.at("seed").get<std::uint64_t>();
    a.champion.body = body_from_json(j.at("body"));
    if (a.champion.body.n != a.grid_size) throw ConfigError("champion: body size mismatch");
    a.champion.genome = genome_from_json(j.at("genome"));
    if (j.contains("controller_genome"))
        a.champion.controller_genome = genome_from_json(j.at("controller_genome"));
    return a;
}

}  // namespace voxevo
