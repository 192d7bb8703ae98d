#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pmdroute/error.hpp"

namespace pmdroute::sfm {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2& operator+=(const Vec2& o) noexcept {
        x += o.x;
        y += o.y;
        return *this;
    }
    Vec2& operator-=(const Vec2& o) noexcept {
        x -= o.x;
        y -= o.y;
        return *this;
    }
    friend Vec2 operator+(Vec2 a, const Vec2& b) noexcept { return a += b; }
    friend Vec2 operator-(Vec2 a, const Vec2& b) noexcept { return a -= b; }
    friend Vec2 operator-(const Vec2& a) noexcept { return {-a.x, -a.y}; }
    friend Vec2 operator*(double s, const Vec2& a) noexcept { return {s * a.x, s * a.y}; }
    friend Vec2 operator*(const Vec2& a, double s) noexcept { return {s * a.x, s * a.y}; }
    friend Vec2 operator/(const Vec2& a, double s) noexcept { return {a.x / s, a.y / s}; }
    friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(const Vec2& a, const Vec2& b) noexcept { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& a) noexcept { return std::hypot(a.x, a.y); }
inline Vec2 unit_or_zero(const Vec2& a) noexcept {
    const double n = norm(a);
    return n > 0.0 ? a / n : Vec2{};
}
inline Vec2 rotate(const Vec2& a, double angle) noexcept {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * a.x - s * a.y, s * a.x + c * a.y};
}

struct SfmConstants {
    double tau_s = 0.5;
    double v0_mps = 1.3;  // default desired speed for new agents
    double wall_a = 10.0;
    double wall_b = 0.1;
    double V0_rep = 2.1;
    double sigma_m = 0.3;
    double beta1 = 4.0;
    double beta2 = 3.0;
    double beta3 = 2.0;
    std::optional<double> qa_threshold_m;  // unset: (members - 1) / 2
    double qr_threshold_m = 0.5;
    double dt_s = 0.1;
    double goal_tolerance_m = 0.3;
    double waypoint_tolerance_m = 0.5;
    double speed_cap_factor = 1.3;
    double coincident_distance_m = 0.01;

    void validate() const {
        const std::pair<const char*, double> positive[] = {
            {"tau_s", tau_s},     {"v0_mps", v0_mps},         {"wall_a", wall_a},
            {"wall_b", wall_b},   {"V0_rep", V0_rep},         {"sigma_m", sigma_m},
            {"beta1", beta1},     {"beta2", beta2},           {"beta3", beta3},
            {"qr_threshold_m", qr_threshold_m},               {"dt_s", dt_s},
            {"goal_tolerance_m", goal_tolerance_m},           {"waypoint_tolerance_m", waypoint_tolerance_m},
            {"speed_cap_factor", speed_cap_factor},           {"coincident_distance_m", coincident_distance_m}};
        for (const auto& [name, v] : positive)
            if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string(name) + " must be positive", name);
        if (qa_threshold_m && !(*qa_threshold_m > 0.0)) throw ValidationError("qa_threshold_m must be positive", "qa_threshold_m");
        if (dt_s > tau_s / 5.0) throw ValidationError("dt_s must not exceed tau_s / 5", "dt_s");
    }
    friend bool operator==(const SfmConstants&, const SfmConstants&) = default;
};

struct PmdTypeParams {
    double goal_factor = 1.0;
    double ped_repulse_factor = 1.0;
    double space_repulse_factor = 1.0;
    double social_factor = 1.0;
    double obstacle_factor = 1.0;

    static PmdTypeParams type1() { return {1.0, 1.5, 1.0, 5.1, 10.0}; }
    static PmdTypeParams type2() { return {0.7, 3.0, 2.1, 6.6, 18.0}; }
    static PmdTypeParams pedestrian() { return {}; }

    void validate(const std::string& owner) const {
        for (double f : {goal_factor, ped_repulse_factor, space_repulse_factor, social_factor, obstacle_factor})
            if (!(f >= 0.0) || !std::isfinite(f)) throw ValidationError("type factors must be finite and >= 0", owner);
    }
    friend bool operator==(const PmdTypeParams&, const PmdTypeParams&) = default;
};

struct AgentState {
    std::string id;
    Vec2 position;
    Vec2 velocity;
    double desired_speed = 1.3;
    Vec2 goal;
    PmdTypeParams type_params = PmdTypeParams::type1();
    std::optional<int> group_id;
    std::vector<Vec2> waypoints;  // visited in order before `goal`
    std::size_t next_waypoint = 0;
    bool arrived = false;

    const Vec2& target() const noexcept { return next_waypoint < waypoints.size() ? waypoints[next_waypoint] : goal; }
    friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct Obstacle {
    Vec2 a;
    Vec2 b;  // equals `a` for a point obstacle

    static Obstacle point(Vec2 p) { return {p, p}; }
    static Obstacle segment(Vec2 p, Vec2 q) {
        if (p == q) throw ValidationError("segment endpoints must differ");
        return {p, q};
    }
    bool is_point() const noexcept { return a == b; }

    Vec2 closest_point(const Vec2& p) const noexcept {
        if (is_point()) return a;
        const Vec2 ab = b - a;
        const double t = std::clamp(dot(p - a, ab) / dot(ab, ab), 0.0, 1.0);
        return a + t * ab;
    }
    double distance(const Vec2& p) const noexcept { return norm(p - closest_point(p)); }
    friend bool operator==(const Obstacle&, const Obstacle&) = default;
};

struct World {
    std::vector<AgentState> agents;
    std::vector<Obstacle> obstacles;
    std::vector<Obstacle> walls;
    SfmConstants constants;
    double time_s = 0.0;

    void validate() const {
        constants.validate();
        std::set<std::string> ids;
        std::map<int, int> group_size;
        for (const auto& a : agents) {
            if (!ids.insert(a.id).second) throw ValidationError("duplicate agent id '" + a.id + "'", a.id);
            if (!(a.desired_speed > 0.0) || !std::isfinite(a.desired_speed))
                throw ValidationError("desired_speed must be positive", a.id);
            for (double v : {a.position.x, a.position.y, a.goal.x, a.goal.y, a.velocity.x, a.velocity.y})
                if (!std::isfinite(v)) throw ValidationError("agent coordinates must be finite", a.id);
            a.type_params.validate(a.id);
            if (a.group_id) ++group_size[*a.group_id];
        }
        for (const auto& [g, count] : group_size)
            if (count < 2) throw ValidationError("group " + std::to_string(g) + " has a single member", std::to_string(g));
    }
    friend bool operator==(const World&, const World&) = default;
};

// ---- individual forces -------------------------------------------------

/// Relaxation toward the desired velocity; pure braking at the target.
inline Vec2 goal_force(const AgentState& a, const SfmConstants& c) {
    const Vec2 e = unit_or_zero(a.target() - a.position);
    return (a.desired_speed * e - a.velocity) / c.tau_s;
}

/// Exponential push away from one boundary.
inline Vec2 boundary_force(const Vec2& pos, const Obstacle& o, const SfmConstants& c) {
    const Vec2 away = pos - o.closest_point(pos);
    const double d = norm(away);
    Vec2 dir;
    if (d > 0.0) {
        dir = away / d;
    } else if (!o.is_point()) {
        const Vec2 t = unit_or_zero(o.b - o.a);
        dir = {-t.y, t.x};
    } else {
        dir = {1.0, 0.0};
    }
    return c.wall_a * std::exp(-d / c.wall_b) * dir;
}

inline std::optional<std::size_t> nearest_boundary(const Vec2& pos, const std::vector<Obstacle>& boundaries) {
    std::optional<std::size_t> best;
    double best_d = 0.0;
    for (std::size_t k = 0; k < boundaries.size(); ++k) {
        const double d = boundaries[k].distance(pos);
        if (!best || d < best_d) {
            best = k;
            best_d = d;
        }
    }
    return best;
}

/// Repulsion from the nearest boundary in the list; zero when empty.
inline Vec2 wall_force(const AgentState& a, const std::vector<Obstacle>& boundaries, const SfmConstants& c) {
    const auto k = nearest_boundary(a.position, boundaries);
    return k ? boundary_force(a.position, boundaries[*k], c) : Vec2{};
}

namespace detail {

inline std::uint64_t fnv1a(std::uint64_t h, const std::string& s) noexcept {
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Direction from `self` away from `other` when their positions coincide.
// Depends only on the unordered id pair, with opposite signs for the two
// agents, so the pair still pushes apart symmetrically.
inline Vec2 coincident_direction(const std::string& self, const std::string& other) {
    const bool low = self < other;
    const std::string& lo = low ? self : other;
    const std::string& hi = low ? other : self;
    std::uint64_t h = fnv1a(0xcbf29ce484222325ULL, lo);
    h = fnv1a(h ^ 0x1fULL, hi);
    const double angle = 2.0 * 3.14159265358979323846 * static_cast<double>(h >> 11) * 0x1.0p-53;
    const Vec2 d{std::cos(angle), std::sin(angle)};
    return low ? d : -d;
}

}  // namespace detail

/// Semi-minor axis of the elliptical potential around an agent moving with
/// `v_beta`, for relative position `r` = r_alpha - r_beta.
inline double ellipse_b(const Vec2& r, const Vec2& v_beta, double dt) {
    const Vec2 y = r - dt * v_beta;
    const double s = norm(v_beta) * dt;
    const double sum = norm(r) + norm(y);
    return 0.5 * std::sqrt(std::max(0.0, sum * sum - s * s));
}

inline double ellipse_potential(const Vec2& r, const Vec2& v_beta, const SfmConstants& c) {
    return c.V0_rep * std::exp(-ellipse_b(r, v_beta, c.dt_s) / c.sigma_m);
}

/// Force on alpha from beta: minus the gradient of the elliptical potential.
inline Vec2 pair_repulsion(const AgentState& alpha, const AgentState& beta, const SfmConstants& c) {
    Vec2 r = alpha.position - beta.position;
    if (!(norm(r) > 0.0)) r = c.coincident_distance_m * detail::coincident_direction(alpha.id, beta.id);
    const Vec2 y = r - c.dt_s * beta.velocity;
    const double nr = norm(r), ny = norm(y);
    const double b = ellipse_b(r, beta.velocity, c.dt_s);
    const double mag = c.V0_rep / c.sigma_m * std::exp(-b / c.sigma_m);
    const Vec2 sum_dir = r / nr + (ny > 0.0 ? y / ny : r / nr);
    // alpha sitting on beta's step segment: the gradient is singular, push along r
    if (!(b > 1e-12) || !(norm(sum_dir) > 1e-12)) return mag * (r / nr);
    return mag * ((nr + ny) / (4.0 * b)) * sum_dir;
}

// ---- group forces ------------------------------------------------------

inline Vec2 center_of_mass(const std::vector<AgentState>& members) {
    Vec2 com;
    for (const auto& m : members) com += m.position;
    return members.empty() ? com : com / static_cast<double>(members.size());
}

inline double coherence_threshold(std::size_t members, const SfmConstants& c) {
    return c.qa_threshold_m ? *c.qa_threshold_m : (static_cast<double>(members) - 1.0) / 2.0;
}

/// Pull toward the group's center once i strays past the threshold.
inline Vec2 group_coherence(const AgentState& i, const std::vector<AgentState>& members, const SfmConstants& c) {
    if (members.size() < 2) return {};
    const Vec2 to_com = center_of_mass(members) - i.position;
    const double d = norm(to_com);
    if (!(d > coherence_threshold(members.size(), c))) return {};
    return c.beta2 * (to_com / d);
}

/// Head-turn angle between the walking direction and the group center, radians.
inline double gaze_angle(const AgentState& i, const std::vector<AgentState>& members) {
    const Vec2 heading = unit_or_zero(i.velocity);
    const Vec2 to_com = unit_or_zero(center_of_mass(members) - i.position);
    if (heading == Vec2{} || to_com == Vec2{}) return 0.0;
    return std::atan2(std::abs(heading.x * to_com.y - heading.y * to_com.x), dot(heading, to_com));
}

/// Braking that grows with the head-turn angle needed to keep the group in view.
inline Vec2 group_gaze(const AgentState& i, const std::vector<AgentState>& members, const SfmConstants& c) {
    if (members.size() < 2) return {};
    return -c.beta1 * gaze_angle(i, members) * i.velocity;
}

/// Push away from every member closer than the repulsion threshold.
inline Vec2 group_repulsion(const AgentState& i, const std::vector<AgentState>& members, const SfmConstants& c) {
    Vec2 f;
    for (const auto& k : members) {
        if (k.id == i.id) continue;
        const Vec2 w = k.position - i.position;
        const double d = norm(w);
        if (!(d < c.qr_threshold_m)) continue;
        const Vec2 toward = d > 0.0 ? w / d : -detail::coincident_direction(i.id, k.id);
        f -= c.beta3 * toward;
    }
    return f;
}

// ---- total force -------------------------------------------------------

/// Every term of an agent's acceleration, each already multiplied by its
/// type factor. `gaze_rate` is the damping coefficient of the gaze term
/// (group.gaze = -gaze_rate * velocity).
struct ForceTerms {
    Vec2 goal;
    Vec2 obstacle;
    Vec2 space;
    Vec2 agents;
    Vec2 group;
    Vec2 gaze;  // part of `group`
    double gaze_rate = 0.0;

    Vec2 total() const noexcept { return goal + obstacle + space + agents + group; }
};

inline std::vector<AgentState> group_members(const World& w, int group) {
    std::vector<AgentState> out;
    for (const auto& a : w.agents)
        if (a.group_id == group) out.push_back(a);
    return out;
}

namespace detail {

inline ForceTerms force_terms(const World& w, std::size_t idx, const std::vector<AgentState>* members) {
    const AgentState& a = w.agents.at(idx);
    const PmdTypeParams& p = a.type_params;
    const SfmConstants& c = w.constants;
    ForceTerms t;
    t.goal = p.goal_factor * goal_force(a, c);

    // nearest boundary of any class takes the obstacle factor; the other
    // free-standing obstacles add space repulsion
    std::optional<std::size_t> nearest_obstacle = nearest_boundary(a.position, w.obstacles);
    const std::optional<std::size_t> nearest_wall = nearest_boundary(a.position, w.walls);
    const double d_obs = nearest_obstacle ? w.obstacles[*nearest_obstacle].distance(a.position) : 0.0;
    const double d_wall = nearest_wall ? w.walls[*nearest_wall].distance(a.position) : 0.0;
    if (nearest_wall && (!nearest_obstacle || d_wall <= d_obs)) {
        t.obstacle = p.obstacle_factor * boundary_force(a.position, w.walls[*nearest_wall], c);
        nearest_obstacle.reset();
    } else if (nearest_obstacle) {
        t.obstacle = p.obstacle_factor * boundary_force(a.position, w.obstacles[*nearest_obstacle], c);
    }
    for (std::size_t k = 0; k < w.obstacles.size(); ++k)
        if (!nearest_obstacle || k != *nearest_obstacle)
            t.space += p.space_repulse_factor * boundary_force(a.position, w.obstacles[k], c);

    for (std::size_t j = 0; j < w.agents.size(); ++j)
        if (j != idx) t.agents += p.ped_repulse_factor * pair_repulsion(a, w.agents[j], c);

    if (a.group_id && members && members->size() >= 2) {
        const double alpha = gaze_angle(a, *members);
        t.gaze_rate = p.social_factor * c.beta1 * alpha;
        t.gaze = -t.gaze_rate * a.velocity;
        t.group = p.social_factor * (group_coherence(a, *members, c) + group_repulsion(a, *members, c)) + t.gaze;
    }
    return t;
}

}  // namespace detail

inline ForceTerms force_terms(const World& w, std::size_t idx) {
    const auto& a = w.agents.at(idx);
    if (!a.group_id) return detail::force_terms(w, idx, nullptr);
    const auto members = group_members(w, *a.group_id);
    return detail::force_terms(w, idx, &members);
}

inline Vec2 total_force(const World& w, std::size_t idx) { return force_terms(w, idx).total(); }

// ---- integration -------------------------------------------------------

inline bool at_goal(const AgentState& a, const SfmConstants& c) {
    return a.next_waypoint >= a.waypoints.size() && norm(a.goal - a.position) <= c.goal_tolerance_m;
}

/// One synchronous update. Forces come from the pre-step state; velocity is
/// updated first, capped, then used to move. The gaze term is a velocity
/// damping and is applied implicitly so large head-turn rates stay stable.
inline World step(const World& w) {
    const SfmConstants& c = w.constants;
    const std::size_t n = w.agents.size();

    std::map<int, std::vector<AgentState>> groups;
    for (const auto& a : w.agents)
        if (a.group_id) groups[*a.group_id].push_back(a);

    std::vector<ForceTerms> terms(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = w.agents[i];
        if (a.arrived || at_goal(a, c)) continue;
        terms[i] = detail::force_terms(w, i, a.group_id ? &groups[*a.group_id] : nullptr);
    }

    World next = w;
    for (std::size_t i = 0; i < n; ++i) {
        AgentState& a = next.agents[i];
        if (a.arrived) continue;
        if (at_goal(a, c)) {
            a.arrived = true;
            a.velocity = {};
            continue;
        }
        const ForceTerms& t = terms[i];
        Vec2 v = (a.velocity + c.dt_s * (t.total() - t.gaze)) / (1.0 + c.dt_s * t.gaze_rate);
        const double cap = c.speed_cap_factor * a.desired_speed;
        if (const double s = norm(v); s > cap) v = (cap / s) * v;
        a.velocity = v;
        a.position += c.dt_s * v;
        if (a.next_waypoint < a.waypoints.size() &&
            norm(a.waypoints[a.next_waypoint] - a.position) <= c.waypoint_tolerance_m)
            ++a.next_waypoint;
        if (at_goal(a, c)) {
            a.arrived = true;
            a.velocity = {};
        }
    }
    next.time_s = w.time_s + c.dt_s;
    return next;
}

}  // namespace pmdroute::sfm
