#include "voxevo/physics.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

namespace voxevo {

namespace {

constexpr double kBoxContactStiffness = 2.0e4;
constexpr double kBoxContactDamping = 50.0;
constexpr double kBoxFrictionSmoothing = 0.01;  // m/s scale of the stick transition

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

}  // namespace

TerrainSpec TerrainSpec::none() {
    TerrainSpec t;
    t.has_ground = false;
    return t;
}

TerrainSpec TerrainSpec::flat(double y, double start_x) {
    TerrainSpec t;
    t.has_ground = true;
    t.ground_points = {{-1.0e6, y}, {1.0e6, y}};
    t.start_x = start_x;
    return t;
}

double TerrainSpec::ground_height(double x) const {
    if (!has_ground || ground_points.empty()) return -1.0e30;
    if (x <= ground_points.front().x) return ground_points.front().y;
    if (x >= ground_points.back().x) return ground_points.back().y;
    const auto it = std::lower_bound(
        ground_points.begin(), ground_points.end(), x,
        [](const Vec2& p, double v) { return p.x < v; });
    const Vec2& b = *it;
    const Vec2& a = *(it - 1);
    const double t = (x - a.x) / (b.x - a.x);
    return a.y + t * (b.y - a.y);
}

double TerrainSpec::left_wall(double y) const {
    if (!has_walls) return -1.0e30;
    const int band = std::max(0, static_cast<int>(std::floor(y / wall_step_height)));
    const double offset = (band % 2 == 1) ? wall_step_depth : 0.0;
    return -(channel_half_width + offset);
}

double TerrainSpec::right_wall(double y) const {
    if (!has_walls) return 1.0e30;
    return -left_wall(y);
}

SimWorld::SimWorld(const BodyGrid& body, const TerrainSpec& terrain) : terrain_(terrain) {
    const BodyValidity validity = validate_body(body);
    if (!validity.valid)
        throw std::invalid_argument(std::string("SimWorld: body is not simulable (") +
                                    to_string(*validity.reason) + ")");
    n_ = body.n;
    const double s = kVoxelSize;

    // Corner lattice: (n+1)^2 slots, materialized only where an occupied
    // voxel touches. Row r runs top to bottom, so world y = (n - r) * s.
    std::vector<int> corner_id(static_cast<std::size_t>(n_ + 1) * (n_ + 1), -1);
    const auto corner = [&](int r, int c) -> int& {
        return corner_id[static_cast<std::size_t>(r) * (n_ + 1) + c];
    };
    cell_corner_.assign(static_cast<std::size_t>(n_) * n_ * 4, -1);

    for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < n_; ++j) {
            if (body.at(i, j) == VoxelType::Empty) continue;
            const int rs[4] = {i, i, i + 1, i + 1};
            const int cs[4] = {j, j + 1, j, j + 1};
            for (int k = 0; k < 4; ++k) {
                int& id = corner(rs[k], cs[k]);
                if (id < 0) {
                    id = static_cast<int>(points_.size());
                    MassPoint p;
                    p.position = {terrain_.start_x + cs[k] * s, (n_ - rs[k]) * s};
                    points_.push_back(p);
                }
                points_[static_cast<std::size_t>(id)].mass += kVoxelMass / 4.0;
                cell_corner_[(static_cast<std::size_t>(i) * n_ + j) * 4 + k] = id;
            }
        }
    }

    // Edge springs are shared between neighbouring voxels; a rigid voxel
    // wins the stiffness of a shared edge. Rest lengths are measured from
    // the built positions so the untouched lattice is in exact equilibrium.
    std::map<std::pair<int, int>, int> edge_index;
    std::map<std::pair<int, int>, int> edge_uses;
    const auto add_edge = [&](int a, int b, SpringKind kind, double stiffness, int cell) -> int {
        const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
        ++edge_uses[key];
        if (const auto it = edge_index.find(key); it != edge_index.end()) {
            Spring& sp = springs_[static_cast<std::size_t>(it->second)];
            sp.stiffness = std::max(sp.stiffness, stiffness);
            return it->second;
        }
        Spring sp;
        sp.a = a;
        sp.b = b;
        sp.base_rest = sp.rest = (points_[b].position - points_[a].position).norm();
        sp.stiffness = stiffness;
        sp.kind = kind;
        sp.owner_cell = cell;
        const int index = static_cast<int>(springs_.size());
        springs_.push_back(sp);
        edge_index[key] = index;
        return index;
    };

    for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < n_; ++j) {
            const VoxelType type = body.at(i, j);
            if (type == VoxelType::Empty) continue;
            const int cell = i * n_ + j;
            const int* ids = &cell_corner_[static_cast<std::size_t>(cell) * 4];
            const int tl = ids[0], tr = ids[1], bl = ids[2], br = ids[3];
            const double k = type == VoxelType::Rigid ? kRigidStiffness : kSoftStiffness;

            const int top = add_edge(tl, tr, SpringKind::HorizontalEdge, k, cell);
            const int bottom = add_edge(bl, br, SpringKind::HorizontalEdge, k, cell);
            const int left = add_edge(tl, bl, SpringKind::VerticalEdge, k, cell);
            const int right = add_edge(tr, br, SpringKind::VerticalEdge, k, cell);

            Spring d1;
            d1.a = tl;
            d1.b = br;
            d1.base_rest = d1.rest = (points_[br].position - points_[tl].position).norm();
            d1.stiffness = k;
            d1.kind = SpringKind::Diagonal;
            d1.owner_cell = cell;
            Spring d2 = d1;
            d2.a = tr;
            d2.b = bl;
            d2.base_rest = d2.rest = (points_[bl].position - points_[tr].position).norm();
            const int diag1 = static_cast<int>(springs_.size());
            springs_.push_back(d1);
            const int diag2 = static_cast<int>(springs_.size());
            springs_.push_back(d2);

            if (is_actuator(type)) {
                ActuatorClaim claim;
                claim.cell = cell;
                if (type == VoxelType::HorizontalActuator) {
                    claim.edge_a = top;
                    claim.edge_b = bottom;
                } else {
                    claim.edge_a = left;
                    claim.edge_b = right;
                }
                claim.diag_a = diag1;
                claim.diag_b = diag2;
                actuators_.push_back(claim);
            }
        }
    }

    for (const auto& [key, uses] : edge_uses)
        if (uses == 1) boundary_edges_.push_back(key);

    // Drop the body so its lowest point clears the terrain.
    if (terrain_.has_ground) {
        double min_clearance = 1.0e30;
        for (const auto& p : points_)
            min_clearance =
                std::min(min_clearance, p.position.y - terrain_.ground_height(p.position.x));
        const double dy = kPlacementClearance - min_clearance;
        for (auto& p : points_) p.position.y += dy;
    }

    double total_mass = 0.0;
    double com_x = 0.0;
    for (const auto& p : points_) {
        total_mass += p.mass;
        com_x += p.mass * p.position.x;
    }
    com_x /= total_mass;
    left_half_.resize(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i)
        left_half_[i] = points_[i].position.x < com_x ? 1 : 0;

    claim_sum_.assign(springs_.size(), 0.0);
    claim_count_.assign(springs_.size(), 0);
}

void SimWorld::add_box() {
    double top = -1.0e30;
    for (const auto& p : points_) top = std::max(top, p.position.y);
    double lo = 1.0e30;
    double hi = -1.0e30;
    for (const auto& p : points_)
        if (p.position.y >= top - 1.0e-9) {
            lo = std::min(lo, p.position.x);
            hi = std::max(hi, p.position.x);
        }
    BoxBody box;
    box.position = {(lo + hi) / 2.0, top + box.radius + kPlacementClearance};
    box_ = box;
}

void SimWorld::apply_actions(const std::vector<double>& actions) {
    if (actions.size() != static_cast<std::size_t>(n_) * n_)
        throw std::invalid_argument("apply_actions: one action per grid cell required");

    for (auto& sp : springs_) sp.rest = sp.base_rest;
    std::fill(claim_sum_.begin(), claim_sum_.end(), 0.0);
    std::fill(claim_count_.begin(), claim_count_.end(), 0);

    for (const ActuatorClaim& claim : actuators_) {
        const double a = action_center + kActionSpan * clamp_unit(actions[claim.cell]);
        const double diag = std::sqrt((a * a + 1.0) / 2.0);
        for (const int idx : {claim.edge_a, claim.edge_b}) {
            claim_sum_[idx] += a;
            ++claim_count_[idx];
        }
        for (const int idx : {claim.diag_a, claim.diag_b}) {
            claim_sum_[idx] += diag;
            ++claim_count_[idx];
        }
    }
    for (std::size_t i = 0; i < springs_.size(); ++i)
        if (claim_count_[i] > 0)
            springs_[i].rest = springs_[i].base_rest * (claim_sum_[i] / claim_count_[i]);
}

void SimWorld::accumulate_forces() {
    for (auto& p : points_) p.force = gravity * p.mass;
    box_force_ = {0.0, 0.0};

    for (const Spring& sp : springs_) {
        MassPoint& pa = points_[static_cast<std::size_t>(sp.a)];
        MassPoint& pb = points_[static_cast<std::size_t>(sp.b)];
        const Vec2 d = pb.position - pa.position;
        const double len = d.norm();
        if (len < 1.0e-12) continue;
        const Vec2 axis = d * (1.0 / len);
        const double stretch = sp.stiffness * (len - sp.rest);
        const double closing = sp.damping * (pb.velocity - pa.velocity).dot(axis);
        const Vec2 f = axis * (stretch + closing);
        pa.force += f;
        pb.force += f * -1.0;
    }

    if (box_) {
        // Penalty contact of the disc against every boundary edge of the
        // robot; the reaction lands on the edge endpoints.
        for (const auto& [ia, ib] : boundary_edges_) {
            MassPoint& pa = points_[static_cast<std::size_t>(ia)];
            MassPoint& pb = points_[static_cast<std::size_t>(ib)];
            const Vec2 ab = pb.position - pa.position;
            const double len2 = ab.dot(ab);
            const double t =
                len2 > 1.0e-18 ? std::clamp((box_->position - pa.position).dot(ab) / len2, 0.0, 1.0)
                               : 0.0;
            const Vec2 closest = pa.position + ab * t;
            const Vec2 away = box_->position - closest;
            const double dist = away.norm();
            if (dist >= box_->radius) continue;
            const Vec2 normal = dist > 1.0e-9 ? away * (1.0 / dist) : Vec2{0.0, 1.0};
            const double depth = box_->radius - dist;
            const Vec2 contact_vel = pa.velocity * (1.0 - t) + pb.velocity * t;
            const Vec2 rel = box_->velocity - contact_vel;
            const double rel_n = rel.dot(normal);
            const double fn = std::max(0.0, kBoxContactStiffness * depth - kBoxContactDamping * rel_n);
            const Vec2 tangent{-normal.y, normal.x};
            const double rel_t = rel.dot(tangent);
            const double ft = -terrain_.friction * fn * std::tanh(rel_t / kBoxFrictionSmoothing);
            const Vec2 f = normal * fn + tangent * ft;
            box_force_ += f;
            pa.force += f * -(1.0 - t);
            pb.force += f * -t;
        }
    }
}

void SimWorld::integrate(double h) {
    const auto clamp_speed = [](Vec2& v) {
        const double speed = v.norm();
        if (speed > kVelocityClamp) v = v * (kVelocityClamp / speed);
    };
    for (auto& p : points_) {
        p.velocity += p.force * (h / p.mass);
        clamp_speed(p.velocity);
        p.position += p.velocity * h;
    }
    if (box_) {
        box_->velocity += (gravity + box_force_ * (1.0 / box_->mass)) * h;
        clamp_speed(box_->velocity);
        box_->position += box_->velocity * h;
    }
}

namespace {

// Projects a contacting point onto the surface and applies the impulse
// friction rule: the normal velocity component is removed and the
// tangential one is reduced by mu times that change, sticking outright when
// small. normal must be unit length.
void contact_response(Vec2& velocity, const Vec2& normal, double mu) {
    const Vec2 tangent{normal.y, -normal.x};
    const double vn = velocity.dot(normal);
    if (vn >= 0.0) return;
    const double delta = -vn;
    double vt = velocity.dot(tangent);
    if (std::abs(vt) < mu * delta)
        vt = 0.0;
    else
        vt -= mu * delta * (vt > 0.0 ? 1.0 : -1.0);
    velocity = tangent * vt;
}

}  // namespace

void SimWorld::resolve_contacts() {
    const double mu = terrain_.friction;
    if (terrain_.has_ground) {
        const auto ground_normal = [&](double x) -> Vec2 {
            const auto& pts = terrain_.ground_points;
            if (pts.size() < 2) return {0.0, 1.0};
            auto it = std::lower_bound(pts.begin(), pts.end(), x,
                                       [](const Vec2& p, double v) { return p.x < v; });
            if (it == pts.begin()) ++it;
            if (it == pts.end()) --it;
            const Vec2 d = *it - *(it - 1);
            const double len = d.norm();
            if (len < 1.0e-12) return {0.0, 1.0};
            Vec2 n{-d.y / len, d.x / len};
            if (n.y < 0.0) n = n * -1.0;
            return n;
        };
        for (auto& p : points_) {
            const double gy = terrain_.ground_height(p.position.x);
            if (p.position.y >= gy) continue;
            p.position.y = gy;
            contact_response(p.velocity, ground_normal(p.position.x), mu);
        }
        if (box_) {
            const double gy = terrain_.ground_height(box_->position.x) + box_->radius;
            if (box_->position.y < gy) {
                box_->position.y = gy;
                contact_response(box_->velocity, ground_normal(box_->position.x), mu);
            }
        }
    }
    if (terrain_.has_walls) {
        for (auto& p : points_) {
            const double lw = terrain_.left_wall(p.position.y);
            if (p.position.x < lw) {
                p.position.x = lw;
                contact_response(p.velocity, {1.0, 0.0}, mu);
            }
            const double rw = terrain_.right_wall(p.position.y);
            if (p.position.x > rw) {
                p.position.x = rw;
                contact_response(p.velocity, {-1.0, 0.0}, mu);
            }
        }
    }
}

bool SimWorld::scan_finite() const {
    const auto ok = [](const Vec2& v) { return std::isfinite(v.x) && std::isfinite(v.y); };
    for (const auto& p : points_)
        if (!ok(p.position) || !ok(p.velocity)) return false;
    if (box_ && (!ok(box_->position) || !ok(box_->velocity))) return false;
    return true;
}

bool SimWorld::step(double control_dt) {
    if (failed_) return false;
    const double h = control_dt / kSubsteps;
    for (int s = 0; s < kSubsteps; ++s) {
        accumulate_forces();
        integrate(h);
        resolve_contacts();
    }
    if (!scan_finite()) {
        failed_ = true;
        return false;
    }
    time_ += control_dt;
    ++steps_;
    return true;
}

KinematicsSummary SimWorld::observe() const {
    KinematicsSummary out;
    double total_mass = 0.0;
    Vec2 weighted_pos;
    Vec2 weighted_vel;
    for (const auto& p : points_) {
        total_mass += p.mass;
        weighted_pos += p.position * p.mass;
        weighted_vel += p.velocity * p.mass;
    }
    out.com = weighted_pos * (1.0 / total_mass);
    out.com_velocity = weighted_vel * (1.0 / total_mass);

    out.voxel_centers.assign(static_cast<std::size_t>(n_) * n_, Vec2{});
    for (std::size_t cell = 0; cell < out.voxel_centers.size(); ++cell) {
        const int* ids = &cell_corner_[cell * 4];
        if (ids[0] < 0) continue;
        Vec2 center;
        for (int k = 0; k < 4; ++k)
            center += points_[static_cast<std::size_t>(ids[k])].position;
        out.voxel_centers[cell] = center * 0.25;
    }

    Vec2 left, right;
    double left_mass = 0.0;
    double right_mass = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (left_half_[i]) {
            left += points_[i].position * points_[i].mass;
            left_mass += points_[i].mass;
        } else {
            right += points_[i].position * points_[i].mass;
            right_mass += points_[i].mass;
        }
    }
    if (left_mass > 0.0 && right_mass > 0.0) {
        const Vec2 axis = right * (1.0 / right_mass) - left * (1.0 / left_mass);
        out.orientation = std::atan2(axis.y, axis.x);
    }

    if (box_) {
        out.has_box = true;
        out.box_position = box_->position;
        out.box_velocity = box_->velocity;
    }
    return out;
}

}  // namespace voxevo
