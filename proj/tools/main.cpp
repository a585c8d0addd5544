#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "voxevo/archive.hpp"

namespace fs = std::filesystem;
using namespace voxevo;
using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError(path + " is not valid JSON");
    return j;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

TaskSpec task_for(TaskId id, int grid_size, int steps) {
    TaskSpec t = make_task(id, grid_size);
    if (steps > 0) t.horizon = steps;
    return t;
}

json terrain_meta(const TaskSpec& task) {
    json meta{{"voxel_size", kVoxelSize}, {"friction", task.terrain.friction}};
    if (task.terrain.has_ground) {
        json pts = json::array();
        for (const Vec2& p : task.terrain.ground_points) pts.push_back({p.x, p.y});
        meta["ground"] = std::move(pts);
    }
    if (task.terrain.has_walls)
        meta["channel"] = {{"half_width", task.terrain.channel_half_width},
                           {"step_height", task.terrain.wall_step_height},
                           {"step_depth", task.terrain.wall_step_depth}};
    if (task.has_box) meta["box_radius"] = kBoxSize / 2.0;
    return meta;
}

// Controller closure for a champion archive, shape-checked against the task.
ControlFn controller_for(const ChampionArchive& a, const TaskSpec& task,
                         std::vector<double>& scratch, std::shared_ptr<void>& keep_alive) {
    switch (a.champion.algorithm) {
        case Algorithm::HyperNeat: {
            const auto substrates = build_substrates(task.input_count, a.grid_size);
            auto ph = std::make_shared<GenomePhenotypes>(express(a.champion.genome, substrates));
            if (ph->controller_net.input_count() != task.input_count)
                throw ConfigError("champion controller does not fit the task input count");
            keep_alive = ph;
            return [ph, &scratch](const std::vector<double>& obs, std::vector<double>& actions) {
                ph->controller_net.activate(obs, actions, scratch);
            };
        }
        case Algorithm::Direct: {
            auto net = std::make_shared<CompiledCppn>(compile(a.champion.genome));
            if (net->input_count != 2 + task.input_count)
                throw ConfigError("champion controller does not fit the task input count");
            keep_alive = net;
            const int n = a.grid_size;
            return [net, n, &scratch](const std::vector<double>& obs,
                                      std::vector<double>& actions) {
                direct_control(*net, n, obs, actions, scratch);
            };
        }
        case Algorithm::Nested: {
            if (!a.champion.controller_genome)
                throw ConfigError("nested champion archive lacks a controller genome");
            auto net = std::make_shared<CompiledCppn>(compile(*a.champion.controller_genome));
            if (net->input_count != task.input_count ||
                net->output_count() != a.grid_size * a.grid_size)
                throw ConfigError("champion controller does not fit the task input count");
            keep_alive = net;
            return [net, &scratch](const std::vector<double>& obs, std::vector<double>& actions) {
                net->activate(obs, actions, scratch);
            };
        }
    }
    throw ConfigError("champion archive names an unknown algorithm");
}

void export_replay(const ChampionArchive& a, const TaskSpec& task, const fs::path& out_path) {
    std::vector<double> scratch;
    std::shared_ptr<void> keep_alive;
    const ControlFn control = controller_for(a, task, scratch, keep_alive);
    const EpisodeResult r = run_episode(a.champion.body, control, task, true);

    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + out_path.string());
    json meta{{"task", to_string(task.id)},
              {"algorithm", to_string(a.champion.algorithm)},
              {"seed", a.seed},
              {"grid_size", a.grid_size},
              {"steps", task.horizon},
              {"fitness", r.fitness},
              {"body", body_to_json(a.champion.body)},
              {"terrain", terrain_meta(task)}};
    out << json{{"meta", std::move(meta)}}.dump() << '\n';
    for (std::size_t k = 0; k < r.frames.size(); ++k) {
        const Frame& f = r.frames[k];
        json positions = json::array();
        for (const Vec2& p : f.positions) positions.push_back({p.x, p.y});
        json line{{"step", k}, {"positions", std::move(positions)}, {"actions", f.actions}};
        if (f.box) line["box"] = {f.box->x, f.box->y};
        out << line.dump() << '\n';
    }
}

// Streams one CSV row per generation and keeps the champion archive file
// current whenever the best-so-far improves.
class FileSink : public GenerationSink {
  public:
    FileSink(const fs::path& csv_path, fs::path champion_path, const RunConfig& run)
        : champion_path_(std::move(champion_path)), run_(run) {
        csv_.open(csv_path, std::ios::trunc);
        if (!csv_) throw std::runtime_error("cannot write " + csv_path.string());
        csv_ << stats_csv_header() << '\n';
        csv_.flush();
    }

    void on_generation(const GenerationStats& stats, const Champion* best) override {
        csv_ << stats_csv_row(stats) << '\n';
        csv_.flush();
        generations_completed = stats.generation + 1;
        evaluations = stats.evaluations_cumulative;
        if (best && (!has_champion_ || best->fitness > written_fitness_)) {
            write_text_file(champion_path_, champion_to_json(*best, run_, run_.task).dump(2) + "\n");
            written_fitness_ = best->fitness;
            has_champion_ = true;
        }
    }

    int generations_completed = 0;
    long long evaluations = 0;

  private:
    std::ofstream csv_;
    fs::path champion_path_;
    RunConfig run_;
    bool has_champion_ = false;
    double written_fitness_ = 0.0;
};

json manifest_json(const RunConfig& run, int repetition, const char* status,
                   const RunArtifacts* art, const FileSink* sink, bool replay_written) {
    json files{{"stats", "stats.csv"}, {"champion", "champion.json"}};
    if (replay_written) files["replay"] = "replay.jsonl";
    json m{{"algorithm", to_string(run.algorithm)},
           {"task", to_string(run.task)},
           {"seed", run.evolution.seed},
           {"repetition", repetition},
           {"status", status},
           {"config", run_config_to_json(run)},
           {"files", std::move(files)}};
    if (sink) {
        m["generations_completed"] = sink->generations_completed;
        m["total_evaluations"] = sink->evaluations;
    }
    if (art && art->champion) m["best_fitness"] = art->champion->fitness;
    return m;
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides) {
    json raw = read_json_file(config_path);
    if (const char* threads = std::getenv("VOXEVO_THREADS")) {
        try {
            const int t = std::stoi(threads);
            if (t < 1) throw ConfigError("VOXEVO_THREADS must be a positive integer");
            raw["evolution"]["threads"] = t;
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("VOXEVO_THREADS must be a positive integer");
        }
    }
    for (const std::string& o : overrides) apply_override(raw, o);
    const RunConfig base = parse_run_config(raw);

    double overall_best = -std::numeric_limits<double>::infinity();
    bool any_champion = false;
    for (int rep = 0; rep < base.evolution.repetitions; ++rep) {
        RunConfig run = base;
        run.evolution.seed = base.evolution.seed + static_cast<std::uint64_t>(rep);
        const fs::path dir = base.evolution.repetitions > 1
                                 ? fs::path(base.output_dir) / ("rep_" + std::to_string(rep))
                                 : fs::path(base.output_dir);
        fs::create_directories(dir);

        const TaskSpec task = task_for(run.task, run.evolution.grid_size, run.steps);
        FileSink sink(dir / "stats.csv", dir / "champion.json", run);
        write_text_file(dir / "manifest.json",
                        manifest_json(run, rep, "incomplete", nullptr, nullptr, false).dump(2) + "\n");

        RunArtifacts art;
        try {
            switch (run.algorithm) {
                case Algorithm::HyperNeat: art = evolve(run.evolution, task, &sink); break;
                case Algorithm::Direct:
                    art = evolve_direct_baseline(run.evolution, task, &sink);
                    break;
                case Algorithm::Nested:
                    art = evolve_nested_baseline(run.evolution, task, &sink);
                    break;
            }
        } catch (...) {
            write_text_file(
                dir / "manifest.json",
                manifest_json(run, rep, "incomplete", nullptr, &sink, false).dump(2) + "\n");
            throw;
        }

        bool replay_written = false;
        if (run.record_champion_replay && art.champion) {
            const ChampionArchive archive{*art.champion, run.task, run.evolution.grid_size,
                                          run.steps};
            export_replay(archive, task, dir / "replay.jsonl");
            replay_written = true;
        }
        write_text_file(
            dir / "manifest.json",
            manifest_json(run, rep, "complete", &art, &sink, replay_written).dump(2) + "\n");

        if (art.champion) {
            any_champion = true;
            overall_best = std::max(overall_best, art.champion->fitness);
            std::cout << "repetition " << rep << " best fitness "
                      << format_double(art.champion->fitness) << "\n";
        } else {
            std::cout << "repetition " << rep << " produced no valid individual\n";
        }
    }
    if (any_champion)
        std::cout << "final best fitness " << format_double(overall_best) << "\n";
    else
        std::cout << "no valid individual was ever produced\n";
    return 0;
}

int cmd_replay_export(const std::string& champion_path, const std::string& out_path, int steps) {
    const ChampionArchive a = champion_from_json(read_json_file(champion_path));
    const TaskSpec task = task_for(a.task, a.grid_size, steps > 0 ? steps : a.steps);
    export_replay(a, task, out_path);
    std::cout << "wrote " << task.horizon << " frames to " << out_path << "\n";
    return 0;
}

int cmd_inspect_body(const std::string& champion_path) {
    const ChampionArchive a = champion_from_json(read_json_file(champion_path));
    const BodyGrid& b = a.champion.body;
    std::cout << b.ascii();
    int counts[5] = {0, 0, 0, 0, 0};
    for (const VoxelType t : b.cells) counts[static_cast<int>(t)] += 1;
    const char* names[5] = {"empty", "rigid", "soft", "horizontal_actuator", "vertical_actuator"};
    for (int k = 0; k < 5; ++k) std::cout << names[k] << ": " << counts[k] << "\n";
    std::cout << "fitness: " << format_double(a.champion.fitness) << " (task "
              << to_string(a.task) << ", generation " << a.champion.generation << ")\n";
    return 0;
}

int cmd_compare(const std::vector<std::string>& csv_paths) {
    struct Row {
        std::string file;
        int generations = 0;
        double best = 0.0;
        long long evaluations = 0;
    };
    std::vector<Row> rows;
    for (const std::string& path : csv_paths) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open " + path);
        std::string line;
        if (!std::getline(in, line) || line != stats_csv_header())
            throw ConfigError(path + " is not a stats CSV");
        Row row{path, 0, 0.0, 0};
        bool any = false;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            std::string field;
            std::vector<std::string> fields;
            while (std::getline(ss, field, ',')) fields.push_back(field);
            if (fields.size() != 7) throw ConfigError(path + " has a malformed row");
            row.generations = std::stoi(fields[0]) + 1;
            row.best = std::max(row.best, std::stod(fields[1]));
            if (!any) row.best = std::stod(fields[1]);
            row.evaluations = std::stoll(fields[6]);
            any = true;
        }
        if (!any) throw ConfigError(path + " holds no generations");
        rows.push_back(row);
    }
    std::size_t width = 4;
    for (const Row& r : rows) width = std::max(width, r.file.size());
    std::printf("%-*s  %11s  %12s  %12s\n", static_cast<int>(width), "file", "generations",
                "best", "evaluations");
    for (const Row& r : rows)
        std::printf("%-*s  %11d  %12s  %12lld\n", static_cast<int>(width), r.file.c_str(),
                    r.generations, format_double(r.best).c_str(), r.evaluations);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"voxel soft-robot co-evolution driver"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    CLI::App* run = app.add_subcommand("run", "evolve a population and write run artifacts");
    run->add_option("--config", config_path, "JSON run configuration")->required();
    run->add_option("--set", overrides, "dotted override, e.g. evolution.population=24");

    std::string champion_path, out_path;
    int steps = 0;
    CLI::App* replay = app.add_subcommand("replay-export",
                                          "re-run a champion and write a JSONL frame trace");
    replay->add_option("--champion", champion_path, "champion archive JSON")->required();
    replay->add_option("--out", out_path, "output JSONL path")->required();
    replay->add_option("--steps", steps, "override the episode length");

    std::string inspect_path;
    CLI::App* inspect = app.add_subcommand("inspect-body", "print a champion's voxel grid");
    inspect->add_option("--champion", inspect_path, "champion archive JSON")->required();

    std::vector<std::string> csv_paths;
    CLI::App* compare = app.add_subcommand("compare", "summarize stats CSVs side by side");
    compare->add_option("csvs", csv_paths, "stats CSV files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*run) return cmd_run(config_path, overrides);
        if (*replay) return cmd_replay_export(champion_path, out_path, steps);
        if (*inspect) return cmd_inspect_body(inspect_path);
        if (*compare) return cmd_compare(csv_paths);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
