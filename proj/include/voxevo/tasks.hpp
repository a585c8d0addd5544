#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "voxevo/network.hpp"
#include "voxevo/physics.hpp"

namespace voxevo {

enum class TaskId { Walker, ObstacleTraverser, Climber, Thrower };

const char* to_string(TaskId id);
std::optional<TaskId> task_from_string(std::string_view s);

inline constexpr double kNanFitnessFloor = -100.0;
inline constexpr int kGapStations = 11;

struct TaskSpec {
    TaskId id = TaskId::Walker;
    int horizon = 0;
    int grid_size = 5;
    int input_count = 0;
    bool has_box = false;
    TerrainSpec terrain;
    std::vector<std::pair<std::string, int>> sensor_layout;
};

// Fixed environments: walker and thrower on flat ground, the traverser on a
// bumpy height field grown once from a constant seed, the climber inside a
// stepped vertical channel. grid_size sets the action count (grid_size^2)
// and the per-voxel sensor block.
TaskSpec make_task(TaskId id, int grid_size = 5);

// Sensor vector of length t.input_count. Positions are scaled by 1/0.5,
// velocities by 1/5, terrain and wall gaps by 1/0.5; the orientation entry
// is the raw angle in radians.
std::vector<double> sense(const SimWorld& w, const TaskSpec& t);

// Per-step reward: change in com x (walker, obstacle_traverser), com y
// (climber), or box x (thrower). Episode fitness telescopes to the final
// displacement of that measure.
double reward(const KinematicsSummary& prev, const KinematicsSummary& next, const TaskSpec& t);

struct Frame {
    std::vector<Vec2> positions;
    std::vector<double> actions;
    std::optional<Vec2> box;
};

struct EpisodeResult {
    enum class Termination { Horizon, NanAbort };
    double fitness = 0.0;
    int steps = 0;
    Termination termination = Termination::Horizon;
    std::vector<Frame> frames;
};

// Runs the control loop (sense, activate, actuate, step) for t.horizon
// steps. A non-finite physics state aborts the episode at the fitness
// floor. With record set, one frame per executed control step is captured,
// holding the pre-step point positions and the actions applied that step.
EpisodeResult run_episode(const BodyGrid& body, const LayeredNetwork& controller,
                          const TaskSpec& t, bool record = false);

// Same loop with an arbitrary policy: controller fills `actions` (resized
// to grid_size^2 already) from the sensor vector.
using ControlFn = std::function<void(const std::vector<double>& inputs, std::vector<double>& actions)>;
EpisodeResult run_episode(const BodyGrid& body, const ControlFn& controller, const TaskSpec& t,
                          bool record = false);

}  // namespace voxevo
