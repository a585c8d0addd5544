#include <cmath>

#include "doctest.h"
#include "voxevo/physics.hpp"

using namespace voxevo;

namespace {

BodyGrid grid_of(std::string_view art) {
    auto g = BodyGrid::from_ascii(art);
    REQUIRE(g.has_value());
    return *g;
}

BodyGrid random_valid_body(Rng& rng, int n = 5) {
    for (;;) {
        BodyGrid b = BodyGrid::empty(n);
        for (auto& t : b.cells) t = static_cast<VoxelType>(rng.uniform_int(5));
        if (validate_body(b).valid) return b;
    }
}

std::vector<double> zero_actions(int n) { return std::vector<double>(static_cast<std::size_t>(n) * n, 0.0); }

double com_x(const SimWorld& w) { return w.observe().com.x; }
double com_y(const SimWorld& w) { return w.observe().com.y; }

}  // namespace

TEST_CASE("world construction counts points and springs from the lattice") {
    SimWorld single(grid_of("V"), TerrainSpec::flat(0.0, 0.0));
    CHECK(single.points().size() == 4);
    CHECK(single.springs().size() == 6);
    for (const auto& p : single.points()) CHECK(p.mass == 0.25);

    SimWorld pair(grid_of("HH...\n"
                          ".....\n"
                          ".....\n"
                          ".....\n"
                          ".....\n"),
                  TerrainSpec::flat(0.0, 0.0));
    CHECK(pair.points().size() == 6);
    CHECK(pair.springs().size() == 11);

    SimWorld full(grid_of("HHHHH\n"
                          "HHHHH\n"
                          "HHHHH\n"
                          "HHHHH\n"
                          "HHHHH\n"),
                  TerrainSpec::flat(0.0, 0.0));
    CHECK(full.points().size() == 36);
    // Interior corners aggregate a quarter of each of their four voxels.
    int full_mass_corners = 0;
    for (const auto& p : full.points()) full_mass_corners += p.mass == 1.0;
    CHECK(full_mass_corners == 16);

    CHECK_THROWS(SimWorld(BodyGrid::empty(5), TerrainSpec::flat(0.0, 0.0)));
    CHECK_THROWS(SimWorld(grid_of("#"), TerrainSpec::flat(0.0, 0.0)));
}

TEST_CASE("shared edges are built once and take the stiffer voxel's constant") {
    SimWorld w(grid_of("#V\n..\n"), TerrainSpec::flat(0.0, 0.0));
    int vertical_edges = 0;
    int stiff_vertical = 0;
    for (const auto& sp : w.springs())
        if (sp.kind == SpringKind::VerticalEdge) {
            ++vertical_edges;
            stiff_vertical += sp.stiffness == kRigidStiffness;
        }
    // Three vertical edges; the shared one belongs to the rigid voxel too.
    CHECK(vertical_edges == 3);
    CHECK(stiff_vertical == 2);
}

TEST_CASE("placement leaves the lowest point just above the terrain") {
    const TerrainSpec flat = TerrainSpec::flat(0.4, 2.0);
    SimWorld w(grid_of("V"), flat);
    double lowest = 1.0e30;
    double leftmost = 1.0e30;
    for (const auto& p : w.points()) {
        lowest = std::min(lowest, p.position.y);
        leftmost = std::min(leftmost, p.position.x);
    }
    CHECK(lowest == doctest::Approx(0.4 + kPlacementClearance));
    CHECK(leftmost == doctest::Approx(2.0));
}

TEST_CASE("actions scale rest lengths with shared edges averaging") {
    // Two stacked vertical-axis actuators... use horizontal actuators so the
    // shared horizontal edge is claimed by both.
    SimWorld w(grid_of("H.\nH.\n"), TerrainSpec::flat(0.0, 0.0));
    REQUIRE(w.points().size() == 6);
    REQUIRE(w.springs().size() == 11);

    // Cells 0 and 2 hold the actuators: top a = 1.6, bottom a = 0.6.
    std::vector<double> actions{1.0, 0.0, -1.0, 0.0};
    w.apply_actions(actions);

    // Horizontal edges sit at three heights; identify them by mean y.
    double top_y = -1e30, bottom_y = 1e30;
    for (const auto& p : w.points()) {
        top_y = std::max(top_y, p.position.y);
        bottom_y = std::min(bottom_y, p.position.y);
    }
    for (const auto& sp : w.springs()) {
        const double mid_y =
            (w.points()[sp.a].position.y + w.points()[sp.b].position.y) / 2.0;
        if (sp.kind == SpringKind::HorizontalEdge) {
            if (mid_y == doctest::Approx(top_y))
                CHECK(sp.rest == doctest::Approx(sp.base_rest * 1.6));
            else if (mid_y == doctest::Approx(bottom_y))
                CHECK(sp.rest == doctest::Approx(sp.base_rest * 0.6));
            else
                CHECK(sp.rest == doctest::Approx(sp.base_rest * 1.1));
        } else if (sp.kind == SpringKind::VerticalEdge) {
            CHECK(sp.rest == sp.base_rest);
        }
    }

    CHECK_THROWS(w.apply_actions(std::vector<double>{0.0, 0.0}));
}

TEST_CASE("action scale endpoints and the neutral diagonal") {
    SimWorld w(grid_of("H"), TerrainSpec::flat(0.0, 0.0));
    w.apply_actions({0.0});
    for (const auto& sp : w.springs()) {
        if (sp.kind == SpringKind::HorizontalEdge)
            CHECK(sp.rest == doctest::Approx(sp.base_rest * 1.1));
        if (sp.kind == SpringKind::VerticalEdge) CHECK(sp.rest == sp.base_rest);
        if (sp.kind == SpringKind::Diagonal)
            CHECK(sp.rest == doctest::Approx(sp.base_rest * std::sqrt((1.1 * 1.1 + 1.0) / 2.0)));
    }

    // a = center + span * u hits 1.0 at u = -0.2; diagonals return to base.
    w.apply_actions({-0.2});
    for (const auto& sp : w.springs())
        CHECK(sp.rest == doctest::Approx(sp.base_rest));

    w.apply_actions({1.0});
    for (const auto& sp : w.springs())
        if (sp.kind == SpringKind::HorizontalEdge)
            CHECK(sp.rest == doctest::Approx(sp.base_rest * 1.6));
    w.apply_actions({-1.0});
    for (const auto& sp : w.springs())
        if (sp.kind == SpringKind::HorizontalEdge)
            CHECK(sp.rest == doctest::Approx(sp.base_rest * 0.6));
}

TEST_CASE("a rest world without gravity never moves") {
    SimWorld w(grid_of("V#\nsH\n"), TerrainSpec::none());
    w.gravity = {0.0, 0.0};
    const auto before = w.points();
    for (int i = 0; i < 50; ++i) REQUIRE(w.step());
    for (std::size_t i = 0; i < before.size(); ++i) {
        CHECK(w.points()[i].position == before[i].position);
        CHECK(w.points()[i].velocity == Vec2{0.0, 0.0});
    }
}

TEST_CASE("identically driven worlds stay bit-identical") {
    const BodyGrid body = grid_of("VV#..\n"
                                  "sH#..\n"
                                  ".ss..\n"
                                  ".....\n"
                                  ".....\n");
    SimWorld w1(body, TerrainSpec::flat(0.0, 0.0));
    SimWorld w2(body, TerrainSpec::flat(0.0, 0.0));
    Rng rng(99);
    for (int step = 0; step < 50; ++step) {
        std::vector<double> actions(25);
        for (auto& a : actions) a = rng.uniform(-1.0, 1.0);
        w1.apply_actions(actions);
        w2.apply_actions(actions);
        REQUIRE(w1.step());
        REQUIRE(w2.step());
        for (std::size_t i = 0; i < w1.points().size(); ++i) {
            REQUIRE(w1.points()[i].position == w2.points()[i].position);
            REQUIRE(w1.points()[i].velocity == w2.points()[i].velocity);
        }
    }
}

TEST_CASE("a dropped voxel settles at half its height") {
    SimWorld w(grid_of("V"), TerrainSpec::flat(0.0, 0.0));
    for (auto& p : w.points_mut()) p.position.y += 0.24;  // com starts at 0.3
    CHECK(com_y(w) == doctest::Approx(0.3).epsilon(0.01));
    for (int i = 0; i < 200; ++i) REQUIRE(w.step());
    CHECK(com_y(w) > 0.045);
    CHECK(com_y(w) < 0.055);

    SimWorld pair(grid_of("#V\n..\n"), TerrainSpec::flat(0.0, 0.0));
    for (auto& p : pair.points_mut()) p.position.y += 0.24;
    for (int i = 0; i < 200; ++i) REQUIRE(pair.step());
    CHECK(com_y(pair) > 0.045);
    CHECK(com_y(pair) < 0.055);
}

TEST_CASE("free fall tracks the closed-form drop within integration error") {
    SimWorld w(grid_of("V"), TerrainSpec::none());
    const double y0 = com_y(w);
    for (int i = 0; i < 10; ++i) REQUIRE(w.step());  // t = 0.5 s
    const double expected = y0 - 0.5 * 9.8 * 0.5 * 0.5;
    CHECK(std::abs(com_y(w) - expected) < 0.01 * 0.5 * 9.8 * 0.25);
}

TEST_CASE("internal forces conserve momentum without gravity or contact") {
    SimWorld w(grid_of("Vs\n#H\n"), TerrainSpec::none());
    w.gravity = {0.0, 0.0};
    // Stretch the lattice so springs fire, and give it a uniform drift.
    const KinematicsSummary start = w.observe();
    for (auto& p : w.points_mut()) {
        p.position = start.com + (p.position - start.com) * 1.05;
        p.velocity = {0.5, -0.25};
    }
    double total_mass = 0.0;
    for (const auto& p : w.points()) total_mass += p.mass;
    const Vec2 expected{total_mass * 0.5, total_mass * -0.25};
    for (int i = 0; i < 100; ++i) {
        REQUIRE(w.step());
        Vec2 momentum;
        for (const auto& p : w.points()) momentum += p.velocity * p.mass;
        REQUIRE(std::abs(momentum.x - expected.x) < 1.0e-6);
        REQUIRE(std::abs(momentum.y - expected.y) < 1.0e-6);
    }
}

TEST_CASE("bodies at rest on flat ground do not creep sideways") {
    for (const auto body : {"HHHHH\nHHHHH\nHHHHH\nHHHHH\nHHHHH\n",
                            "V....\nV#...\nV#s..\n.....\n.....\n",
                            "..s..\n.sVs.\n..s..\n.....\n.....\n"}) {
        SimWorld w(grid_of(body), TerrainSpec::flat(0.0, 0.0));
        const double x0 = com_x(w);
        for (int i = 0; i < 500; ++i) {
            w.apply_actions(zero_actions(w.grid_size()));
            REQUIRE(w.step());
        }
        CHECK(std::abs(com_x(w) - x0) < 0.02);
    }
}

TEST_CASE("random bodies survive long random action sequences") {
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const BodyGrid body = random_valid_body(rng);
        SimWorld w(body, TerrainSpec::flat(0.0, 0.0));
        std::vector<double> actions(25);
        for (int step = 0; step < 1000; ++step) {
            for (auto& a : actions) a = rng.uniform(-1.0, 1.0);
            w.apply_actions(actions);
            REQUIRE(w.step());
        }
        for (const auto& p : w.points())
            REQUIRE(p.velocity.norm() <= kVelocityClamp + 1.0e-9);
    }
}

TEST_CASE("kinematics summary reports com, centers, and orientation") {
    SimWorld w(grid_of("VV\nVV\n"), TerrainSpec::flat(0.0, 0.0));
    KinematicsSummary obs = w.observe();
    CHECK(obs.orientation == doctest::Approx(0.0));
    CHECK(obs.com.x == doctest::Approx(0.1));
    CHECK(!obs.has_box);

    // Voxel centers average the four corners; cell (0,0) is the top-left.
    const double top_center_y = obs.voxel_centers[0].y;
    const double bottom_center_y = obs.voxel_centers[2].y;
    CHECK(top_center_y > bottom_center_y);
    CHECK(obs.voxel_centers[0].x == doctest::Approx(0.05));
    CHECK(obs.voxel_centers[1].x == doctest::Approx(0.15));

    for (auto& p : w.points_mut()) p.velocity = {1.5, -0.5};
    obs = w.observe();
    CHECK(obs.com_velocity.x == 1.5);
    CHECK(obs.com_velocity.y == -0.5);

    // Tilt the body: rotate all points 90 degrees about the com.
    SimWorld tilted(grid_of("VV\nVV\n"), TerrainSpec::none());
    const Vec2 c = tilted.observe().com;
    for (auto& p : tilted.points_mut()) {
        const Vec2 d = p.position - c;
        p.position = c + Vec2{-d.y, d.x};
    }
    CHECK(tilted.observe().orientation == doctest::Approx(M_PI / 2.0));
}

TEST_CASE("empty cells report zero voxel centers") {
    SimWorld w(grid_of("V.\nV.\n"), TerrainSpec::flat(0.0, 0.0));
    const KinematicsSummary obs = w.observe();
    CHECK(obs.voxel_centers[1] == Vec2{0.0, 0.0});
    CHECK(obs.voxel_centers[3] == Vec2{0.0, 0.0});
    CHECK(obs.voxel_centers[0].norm() > 0.0);
}

TEST_CASE("height field interpolates and clamps") {
    TerrainSpec t;
    t.has_ground = true;
    t.ground_points = {{0.0, 0.0}, {1.0, 0.5}, {2.0, 0.0}};
    CHECK(t.ground_height(0.5) == doctest::Approx(0.25));
    CHECK(t.ground_height(1.5) == doctest::Approx(0.25));
    CHECK(t.ground_height(-10.0) == 0.0);
    CHECK(t.ground_height(10.0) == 0.0);
}

TEST_CASE("channel walls step outward on alternating bands") {
    TerrainSpec t = TerrainSpec::flat(0.0, 0.0);
    t.has_walls = true;
    CHECK(t.left_wall(0.1) == doctest::Approx(-0.35));
    CHECK(t.right_wall(0.1) == doctest::Approx(0.35));
    CHECK(t.left_wall(0.25) == doctest::Approx(-0.40));
    CHECK(t.left_wall(0.45) == doctest::Approx(-0.35));
    CHECK(t.left_wall(-0.05) == doctest::Approx(-0.35));
}

TEST_CASE("walls confine an expanding body") {
    TerrainSpec t = TerrainSpec::flat(0.0, -0.25);
    t.has_walls = true;
    SimWorld w(grid_of("HHHHH\n"
                       "HHHHH\n"
                       "HHHHH\n"
                       "HHHHH\n"
                       "HHHHH\n"),
               t);
    for (int i = 0; i < 100; ++i) {
        w.apply_actions(std::vector<double>(25, 1.0));
        REQUIRE(w.step());
    }
    for (const auto& p : w.points()) {
        CHECK(p.position.x >= t.left_wall(p.position.y) - 1.0e-9);
        CHECK(p.position.x <= t.right_wall(p.position.y) + 1.0e-9);
    }
}

TEST_CASE("the box rests on the robot and on the ground") {
    SimWorld w(grid_of("VV\nVV\n"), TerrainSpec::flat(0.0, 0.0));
    w.add_box();
    REQUIRE(w.box().has_value());
    const double robot_top = 0.21;  // two voxels + clearance
    CHECK(w.box()->position.y == doctest::Approx(robot_top + 0.05 + kPlacementClearance));
    CHECK(w.box()->position.x == doctest::Approx(0.1));

    for (int i = 0; i < 100; ++i) {
        w.apply_actions(zero_actions(2));
        REQUIRE(w.step());
    }
    const KinematicsSummary obs = w.observe();
    CHECK(obs.has_box);
    // Still supported above the body, no tunnelling through it.
    CHECK(obs.box_position.y > 0.15);
    CHECK(obs.box_position.y < 0.40);

    // A box shoved off the robot falls and settles at its radius.
    w.box_mut()->position = {1.5, 0.3};
    w.box_mut()->velocity = {0.0, 0.0};
    for (int i = 0; i < 200; ++i) {
        w.apply_actions(zero_actions(2));
        REQUIRE(w.step());
    }
    CHECK(w.box()->position.y == doctest::Approx(0.05).epsilon(0.1));
}
