#include "voxevo/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "voxevo/rng.hpp"

namespace voxevo {

const char* to_string(TaskId id) {
    switch (id) {
        case TaskId::Walker: return "walker";
        case TaskId::ObstacleTraverser: return "obstacle_traverser";
        case TaskId::Climber: return "climber";
        case TaskId::Thrower: return "thrower";
    }
    return "?";
}

std::optional<TaskId> task_from_string(std::string_view s) {
    if (s == "walker") return TaskId::Walker;
    if (s == "obstacle_traverser") return TaskId::ObstacleTraverser;
    if (s == "climber") return TaskId::Climber;
    if (s == "thrower") return TaskId::Thrower;
    return std::nullopt;
}

namespace {

constexpr double kPositionScale = 0.5;
constexpr double kVelocityScale = 5.0;
constexpr double kGapScale = 0.5;

// Bumpy ground for the traverser: a clamped random walk sampled every
// 0.3 m, flat around the start so every robot begins identically. The seed
// is a constant, so the terrain is the same in every run and process.
std::vector<Vec2> obstacle_ground() {
    Rng rng(181);
    std::vector<Vec2> points;
    points.push_back({-1.0e6, 0.0});
    points.push_back({0.6, 0.0});
    double h = 0.0;
    for (double x = 0.9; x <= 40.0; x += 0.3) {
        h = std::clamp(h + rng.uniform(-0.06, 0.06), 0.0, 0.25);
        points.push_back({x, h});
    }
    points.push_back({1.0e6, h});
    return points;
}

}  // namespace

TaskSpec make_task(TaskId id, int grid_size) {
    if (grid_size < 1) throw std::invalid_argument("make_task: grid_size must be positive");
    TaskSpec t;
    t.id = id;
    t.grid_size = grid_size;
    const int cells = grid_size * grid_size;
    t.sensor_layout = {{"com_velocity", 2}, {"voxel_offsets", 2 * cells}};

    switch (id) {
        case TaskId::Walker:
            t.horizon = 500;
            t.terrain = TerrainSpec::flat(0.0, 0.0);
            break;
        case TaskId::ObstacleTraverser:
            t.horizon = 600;
            t.terrain = TerrainSpec::flat(0.0, 0.0);
            t.terrain.ground_points = obstacle_ground();
            t.sensor_layout.push_back({"orientation", 1});
            t.sensor_layout.push_back({"ground_gaps", kGapStations});
            break;
        case TaskId::Climber:
            t.horizon = 400;
            t.terrain = TerrainSpec::flat(0.0, -grid_size * kVoxelSize / 2.0);
            t.terrain.has_walls = true;
            t.sensor_layout.push_back({"orientation", 1});
            t.sensor_layout.push_back({"left_wall_gaps", kGapStations});
            t.sensor_layout.push_back({"right_wall_gaps", kGapStations});
            break;
        case TaskId::Thrower:
            t.horizon = 300;
            t.terrain = TerrainSpec::flat(0.0, 0.0);
            t.has_box = true;
            t.sensor_layout.push_back({"box_offset", 2});
            t.sensor_layout.push_back({"box_velocity", 2});
            break;
    }
    t.input_count = 0;
    for (const auto& [name, size] : t.sensor_layout) t.input_count += size;
    return t;
}

std::vector<double> sense(const SimWorld& w, const TaskSpec& t) {
    const KinematicsSummary obs = w.observe();
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(t.input_count));

    out.push_back(obs.com_velocity.x / kVelocityScale);
    out.push_back(obs.com_velocity.y / kVelocityScale);
    for (std::size_t cell = 0; cell < obs.voxel_centers.size(); ++cell) {
        if (w.cell_occupied(static_cast<int>(cell))) {
            out.push_back((obs.voxel_centers[cell].x - obs.com.x) / kPositionScale);
            out.push_back((obs.voxel_centers[cell].y - obs.com.y) / kPositionScale);
        } else {
            out.push_back(0.0);
            out.push_back(0.0);
        }
    }

    if (t.id == TaskId::ObstacleTraverser || t.id == TaskId::Climber) {
        out.push_back(obs.orientation);

        Vec2 lo{1.0e30, 1.0e30};
        Vec2 hi{-1.0e30, -1.0e30};
        for (const auto& p : w.points()) {
            lo.x = std::min(lo.x, p.position.x);
            lo.y = std::min(lo.y, p.position.y);
            hi.x = std::max(hi.x, p.position.x);
            hi.y = std::max(hi.y, p.position.y);
        }
        if (t.id == TaskId::ObstacleTraverser) {
            for (int k = 0; k < kGapStations; ++k) {
                const double x = lo.x + (hi.x - lo.x) * k / (kGapStations - 1);
                out.push_back((lo.y - w.terrain().ground_height(x)) / kGapScale);
            }
        } else {
            for (int k = 0; k < kGapStations; ++k) {
                const double y = lo.y + (hi.y - lo.y) * k / (kGapStations - 1);
                out.push_back((lo.x - w.terrain().left_wall(y)) / kGapScale);
            }
            for (int k = 0; k < kGapStations; ++k) {
                const double y = lo.y + (hi.y - lo.y) * k / (kGapStations - 1);
                out.push_back((w.terrain().right_wall(y) - hi.x) / kGapScale);
            }
        }
    }

    if (t.id == TaskId::Thrower) {
        out.push_back((obs.box_position.x - obs.com.x) / kPositionScale);
        out.push_back((obs.box_position.y - obs.com.y) / kPositionScale);
        out.push_back(obs.box_velocity.x / kVelocityScale);
        out.push_back(obs.box_velocity.y / kVelocityScale);
    }
    return out;
}

double reward(const KinematicsSummary& prev, const KinematicsSummary& next, const TaskSpec& t) {
    switch (t.id) {
        case TaskId::Walker:
        case TaskId::ObstacleTraverser: return next.com.x - prev.com.x;
        case TaskId::Climber: return next.com.y - prev.com.y;
        case TaskId::Thrower: return next.box_position.x - prev.box_position.x;
    }
    return 0.0;
}

EpisodeResult run_episode(const BodyGrid& body, const LayeredNetwork& controller,
                          const TaskSpec& t, bool record) {
    if (controller.input_count() != t.input_count ||
        controller.output_count() != t.grid_size * t.grid_size)
        throw std::invalid_argument("run_episode: controller shape does not fit the task");
    std::vector<double> scratch;
    return run_episode(
        body,
        ControlFn([&](const std::vector<double>& inputs, std::vector<double>& actions) {
            controller.activate(inputs, actions, scratch);
        }),
        t, record);
}

EpisodeResult run_episode(const BodyGrid& body, const ControlFn& controller, const TaskSpec& t,
                          bool record) {
    SimWorld world(body, t.terrain);
    if (t.has_box) world.add_box();

    EpisodeResult result;
    if (record) result.frames.reserve(static_cast<std::size_t>(t.horizon));

    std::vector<double> actions(static_cast<std::size_t>(t.grid_size) * t.grid_size, 0.0);
    KinematicsSummary prev = world.observe();
    for (int step = 0; step < t.horizon; ++step) {
        const std::vector<double> inputs = sense(world, t);
        controller(inputs, actions);

        if (record) {
            Frame frame;
            frame.positions.reserve(world.points().size());
            for (const auto& p : world.points()) frame.positions.push_back(p.position);
            frame.actions = actions;
            if (world.box()) frame.box = world.box()->position;
            result.frames.push_back(std::move(frame));
        }

        world.apply_actions(actions);
        if (!world.step()) {
            result.fitness = kNanFitnessFloor;
            result.termination = EpisodeResult::Termination::NanAbort;
            result.steps = step;
            return result;
        }
        const KinematicsSummary next = world.observe();
        result.fitness += reward(prev, next, t);
        prev = next;
        ++result.steps;
    }
    result.termination = EpisodeResult::Termination::Horizon;
    return result;
}

}  // namespace voxevo
