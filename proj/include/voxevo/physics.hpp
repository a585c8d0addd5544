#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "voxevo/morphology.hpp"

namespace voxevo {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(const Vec2& o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(x * x + y * y); }
    bool operator==(const Vec2&) const = default;
};

// World constants. The control interval and substep count together set the
// integrator step h = kControlDt / kSubsteps = 1/600 s, small enough for
// semi-implicit Euler at the stiffnesses below.
inline constexpr double kVoxelSize = 0.1;
inline constexpr double kVoxelMass = 1.0;
inline constexpr double kRigidStiffness = 6.0e4;
inline constexpr double kSoftStiffness = 2.0e4;
inline constexpr double kSpringDamping = 30.0;
inline constexpr double kControlDt = 0.05;
inline constexpr int kSubsteps = 30;
inline constexpr double kFriction = 0.5;
inline constexpr double kVelocityClamp = 50.0;
inline constexpr double kPlacementClearance = 0.01;
inline constexpr double kGravityY = -9.8;
inline constexpr double kActionCenter = 1.1;
inline constexpr double kActionSpan = 0.5;
inline constexpr double kBoxSize = 0.1;
inline constexpr double kBoxMass = 1.0;

struct MassPoint {
    Vec2 position;
    Vec2 velocity;
    Vec2 force;
    double mass = 0.0;
};

enum class SpringKind { HorizontalEdge, VerticalEdge, Diagonal };

struct Spring {
    int a = 0;
    int b = 0;
    double base_rest = 0.0;
    double rest = 0.0;
    double stiffness = 0.0;
    double damping = kSpringDamping;
    SpringKind kind = SpringKind::HorizontalEdge;
    int owner_cell = -1;
};

// Ground is a piecewise-linear height field over x; the climbing channel
// adds two stepped vertical walls mirrored about x = 0 whose half-width
// widens by step_depth on every other height band.
struct TerrainSpec {
    double friction = kFriction;
    double start_x = 0.0;
    bool has_ground = false;
    std::vector<Vec2> ground_points;
    bool has_walls = false;
    double channel_half_width = 0.35;
    double wall_step_height = 0.2;
    double wall_step_depth = 0.05;

    static TerrainSpec none();
    static TerrainSpec flat(double y, double start_x);

    double ground_height(double x) const;
    double left_wall(double y) const;
    double right_wall(double y) const;
};

// The thrown payload: a 1 kg disc of radius half the box size, pushed by
// penalty springs against the robot's boundary edges and resting on the
// ground through the same contact rule as mass points.
struct BoxBody {
    Vec2 position;
    Vec2 velocity;
    double radius = kBoxSize / 2.0;
    double mass = kBoxMass;
};

struct KinematicsSummary {
    Vec2 com;
    Vec2 com_velocity;
    std::vector<Vec2> voxel_centers;
    double orientation = 0.0;
    bool has_box = false;
    Vec2 box_position;
    Vec2 box_velocity;
};

class SimWorld {
public:
    // Builds the corner lattice for every occupied voxel and drops the body
    // so its lowest point clears the terrain by kPlacementClearance.
    // Throws on an invalid body.
    SimWorld(const BodyGrid& body, const TerrainSpec& terrain);

    // Places the box centered on the robot's highest surface. Thrower only.
    void add_box();

    // actions holds one value per grid cell in row-major order; actuator
    // cells map theirs to a rest-length scale a = center + span * u, shared
    // edges average the scales of the actuators that drive them.
    void apply_actions(const std::vector<double>& actions);

    // Advances one control interval (kSubsteps semi-implicit Euler substeps
    // with contact resolution after each). Returns false once any state goes
    // non-finite; the world is then frozen and failed() stays true.
    bool step(double control_dt = kControlDt);

    KinematicsSummary observe() const;

    bool failed() const { return failed_; }
    double time() const { return time_; }
    int steps_taken() const { return steps_; }

    const std::vector<MassPoint>& points() const { return points_; }
    const std::vector<Spring>& springs() const { return springs_; }
    const std::optional<BoxBody>& box() const { return box_; }
    const TerrainSpec& terrain() const { return terrain_; }
    int grid_size() const { return n_; }
    bool cell_occupied(int cell) const { return cell_corner_[static_cast<std::size_t>(cell) * 4] >= 0; }

    // Direct state access for experiments and tests; the world stays
    // consistent as long as values remain finite.
    std::vector<MassPoint>& points_mut() { return points_; }
    std::optional<BoxBody>& box_mut() { return box_; }

    Vec2 gravity{0.0, kGravityY};
    double action_center = kActionCenter;

private:
    struct ActuatorClaim {
        int cell = 0;
        int edge_a = -1;
        int edge_b = -1;
        int diag_a = -1;
        int diag_b = -1;
    };

    void accumulate_forces();
    void integrate(double h);
    void resolve_contacts();
    bool scan_finite() const;

    int n_ = 0;
    std::vector<MassPoint> points_;
    std::vector<Spring> springs_;
    TerrainSpec terrain_;
    std::optional<BoxBody> box_;
    std::vector<ActuatorClaim> actuators_;
    std::vector<std::pair<int, int>> boundary_edges_;
    std::vector<int> cell_corner_;  // 4 corner point ids per cell, -1 for empty
    std::vector<char> left_half_;   // per point: 1 left of the initial com, 0 right
    std::vector<double> claim_sum_;
    std::vector<int> claim_count_;
    Vec2 box_force_;
    double time_ = 0.0;
    int steps_ = 0;
    bool failed_ = false;
};

}  // namespace voxevo
