#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"
#include "voxevo/evolution.hpp"

namespace voxevo {

// Raised on malformed or unknown configuration/archive content. The CLI
// maps it to exit status 2.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Shortest round-trip formatting ("%.9g"): identical input bits give
// identical text, keeping artifact files byte-stable across runs.
std::string format_double(double v);

// Stats CSV: fixed column set, one row per generation.
std::string stats_csv_header();
std::string stats_csv_row(const GenerationStats& s);

nlohmann::json genome_to_json(const Genome& g);
Genome genome_from_json(const nlohmann::json& j);

nlohmann::json body_to_json(const BodyGrid& b);
BodyGrid body_from_json(const nlohmann::json& j);

struct RunConfig {
    Algorithm algorithm = Algorithm::HyperNeat;
    TaskId task = TaskId::Walker;
    std::string output_dir = "run_out";
    bool record_champion_replay = false;
    int steps = 0;  // episode horizon override; 0 keeps the task default
    EvolutionConfig evolution;
};

// Strict parsing: every key must be known, the seed is mandatory, and
// semantic limits (rates in [0,1], population vs species floor) are
// enforced. Throws ConfigError.
RunConfig parse_run_config(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& c);

// Applies one "dotted.path=value" override onto the raw config JSON; the
// value is parsed as JSON when possible and kept as a string otherwise.
void apply_override(nlohmann::json& j, std::string_view assignment);

// Champion archives carry everything replay needs: the task, the grid, the
// body and the genome(s), plus the config echo.
nlohmann::json champion_to_json(const Champion& c, const RunConfig& run, TaskId task);
struct ChampionArchive {
    Champion champion;
    TaskId task = TaskId::Walker;
    int grid_size = 5;
    int steps = 0;
    std::uint64_t seed = 0;
};
ChampionArchive champion_from_json(const nlohmann::json& j);

}  // namespace voxevo
