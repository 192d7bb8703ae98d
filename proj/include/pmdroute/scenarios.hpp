#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pmdroute/error.hpp"
#include "pmdroute/parallel.hpp"
#include "pmdroute/rng.hpp"
#include "pmdroute/sfm.hpp"

namespace pmdroute::sfm {

enum class ScenarioKind { gate_low, street_low, street_heavy, fig6a, fig6b };
enum class PmdMix { type1, type2, mixed };

inline constexpr ScenarioKind kComparedKinds[] = {ScenarioKind::gate_low, ScenarioKind::street_low,
                                                  ScenarioKind::street_heavy};

inline std::string_view to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::gate_low: return "gate_low";
        case ScenarioKind::street_low: return "street_low";
        case ScenarioKind::street_heavy: return "street_heavy";
        case ScenarioKind::fig6a: return "fig6a";
        case ScenarioKind::fig6b: return "fig6b";
    }
    return "?";
}

inline ScenarioKind parse_kind(std::string_view s) {
    for (auto k : {ScenarioKind::gate_low, ScenarioKind::street_low, ScenarioKind::street_heavy, ScenarioKind::fig6a,
                   ScenarioKind::fig6b})
        if (s == to_string(k)) return k;
    throw ValidationError("unknown scenario kind '" + std::string(s) + "'", std::string(s));
}

inline std::string_view to_string(PmdMix m) {
    switch (m) {
        case PmdMix::type1: return "type1";
        case PmdMix::type2: return "type2";
        case PmdMix::mixed: return "mixed";
    }
    return "?";
}

inline PmdMix parse_mix(std::string_view s) {
    for (auto m : {PmdMix::type1, PmdMix::type2, PmdMix::mixed})
        if (s == to_string(m)) return m;
    throw ValidationError("unknown PMD type '" + std::string(s) + "'", std::string(s));
}

/// Optional geometry replacements; unset fields keep the kind's defaults.
struct GeometryOverrides {
    std::optional<double> street_length_m;  // default 30
    std::optional<double> street_width_m;   // default 4
    std::optional<double> room_width_m;     // default 10, along the gate axis
    std::optional<double> room_depth_m;     // default 8
    std::optional<double> opening_m;        // default 1.2
    std::optional<std::size_t> agents;      // default 5 (low) / 20 (heavy)
};

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::street_low;
    PmdMix pmd_type = PmdMix::type1;
    std::uint64_t seed = 0;
    GeometryOverrides geometry;
    PmdTypeParams type1_params = PmdTypeParams::type1();
    PmdTypeParams type2_params = PmdTypeParams::type2();
    SfmConstants constants;
};

/// Axis-aligned walkable rectangle, used to check that agents stay inside.
struct Rect {
    double x0, y0, x1, y1;
    bool contains(const Vec2& p, double inflate = 0.0) const noexcept {
        return p.x >= x0 - inflate && p.x <= x1 + inflate && p.y >= y0 - inflate && p.y <= y1 + inflate;
    }
};

struct ScenarioGeometry {
    double street_length_m = 30.0;
    double street_width_m = 4.0;
    double room_width_m = 10.0;
    double room_depth_m = 8.0;
    double opening_m = 1.2;
    std::size_t agents = 5;
};

inline ScenarioGeometry resolve_geometry(const ScenarioSpec& spec) {
    ScenarioGeometry g;
    const auto& o = spec.geometry;
    if (spec.kind == ScenarioKind::street_heavy) g.agents = 20;
    if (o.street_length_m) g.street_length_m = *o.street_length_m;
    if (o.street_width_m) g.street_width_m = *o.street_width_m;
    if (o.room_width_m) g.room_width_m = *o.room_width_m;
    if (o.room_depth_m) g.room_depth_m = *o.room_depth_m;
    if (o.opening_m) g.opening_m = *o.opening_m;
    if (o.agents) g.agents = *o.agents;
    const std::pair<const char*, double> dims[] = {{"street_length_m", g.street_length_m},
                                                   {"street_width_m", g.street_width_m},
                                                   {"room_width_m", g.room_width_m},
                                                   {"room_depth_m", g.room_depth_m},
                                                   {"opening_m", g.opening_m}};
    for (const auto& [name, v] : dims)
        if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string(name) + " must be positive", name);
    if (g.street_length_m < 14.0 || g.street_width_m < 1.5)
        throw ValidationError("street must be at least 14 m long and 1.5 m wide", "street");
    if (g.room_width_m < 6.0 || g.room_depth_m < 3.0)
        throw ValidationError("rooms must be at least 6 m wide and 3 m deep", "room");
    if (g.opening_m >= g.room_depth_m) throw ValidationError("opening must be narrower than the room", "opening_m");
    return g;
}

inline std::vector<Rect> scenario_region(const ScenarioSpec& spec) {
    const auto g = resolve_geometry(spec);
    switch (spec.kind) {
        case ScenarioKind::street_low:
        case ScenarioKind::street_heavy: return {{0.0, 0.0, g.street_length_m, g.street_width_m}};
        case ScenarioKind::gate_low:
            return {{0.0, 0.0, g.room_width_m, g.room_depth_m}, {g.room_width_m, 0.0, 2 * g.room_width_m, g.room_depth_m}};
        case ScenarioKind::fig6a: return {{0.0, 0.0, 12.0, 4.0}};
        case ScenarioKind::fig6b: return {{0.0, 0.0, 10.0, 10.0}};
    }
    return {};
}

namespace detail {

inline std::vector<Obstacle> box_walls(double x0, double y0, double x1, double y1) {
    return {Obstacle::segment({x0, y0}, {x1, y0}), Obstacle::segment({x1, y0}, {x1, y1}),
            Obstacle::segment({x1, y1}, {x0, y1}), Obstacle::segment({x0, y1}, {x0, y0})};
}

// Rejection-samples `count` points in a rectangle with a minimum spacing.
inline std::vector<Vec2> scatter(SeededRng& rng, std::size_t count, const Rect& r, double min_sep,
                                 const std::vector<Vec2>& taken = {}) {
    std::vector<Vec2> pts;
    std::size_t tries = 0;
    while (pts.size() < count) {
        if (++tries > 200000) throw ValidationError("not enough room to place agents", "agents");
        const Vec2 p{rng.uniform(r.x0, r.x1), rng.uniform(r.y0, r.y1)};
        auto clear = [&](const Vec2& q) { return norm(p - q) >= min_sep; };
        if (std::all_of(pts.begin(), pts.end(), clear) && std::all_of(taken.begin(), taken.end(), clear))
            pts.push_back(p);
    }
    return pts;
}

// Goal slots on a lattice: columns step back from `front_x` by `pitch` in
// direction `dir`; lanes spread evenly over [y0, y1]. Slot order is
// farthest column first.
inline std::vector<std::vector<Vec2>> goal_columns(std::size_t count, double front_x, double dir, double pitch,
                                                   double y0, double y1, std::size_t lanes) {
    std::vector<std::vector<Vec2>> cols;
    for (std::size_t placed = 0; placed < count;) {
        std::vector<Vec2> col;
        const double x = front_x - dir * pitch * static_cast<double>(cols.size());
        for (std::size_t l = 0; l < lanes && placed < count; ++l, ++placed)
            col.push_back({x, y0 + (y1 - y0) * (static_cast<double>(l) + 0.5) / static_cast<double>(lanes)});
        cols.push_back(std::move(col));
    }
    return cols;
}

// Leaders (smallest `lag`) take the farthest column; inside a column, lanes
// go to agents in order of their lateral position to avoid crossings.
inline void assign_goals(std::vector<AgentState*> agents, const std::vector<double>& lag,
                         const std::vector<std::vector<Vec2>>& cols) {
    std::vector<std::size_t> order(agents.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lag[a] < lag[b]; });
    std::size_t next = 0;
    for (const auto& col : cols) {
        std::vector<AgentState*> batch;
        for (std::size_t l = 0; l < col.size(); ++l) batch.push_back(agents[order[next++]]);
        std::stable_sort(batch.begin(), batch.end(),
                         [](const AgentState* a, const AgentState* b) { return a->position.y < b->position.y; });
        for (std::size_t l = 0; l < col.size(); ++l) batch[l]->goal = col[l];
    }
}

inline PmdTypeParams params_for(const ScenarioSpec& spec, std::size_t agent) {
    switch (spec.pmd_type) {
        case PmdMix::type1: return spec.type1_params;
        case PmdMix::type2: return spec.type2_params;
        case PmdMix::mixed: return agent % 2 == 0 ? spec.type1_params : spec.type2_params;
    }
    return spec.type1_params;
}

inline AgentState make_agent(const ScenarioSpec& spec, std::size_t k, Vec2 position) {
    AgentState a;
    a.id = "a" + std::to_string(k);
    a.position = position;
    a.desired_speed = spec.constants.v0_mps;
    a.type_params = params_for(spec, k);
    return a;
}

constexpr double kStartSpacing = 0.6;
constexpr double kGoalPitch = 1.5;
// Lanes of arrived agents sit at least this far apart so later arrivals can
// pass between them.
constexpr double kGoalLaneSpacing = 2.0;

inline std::size_t lane_count(double span) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(span / kGoalLaneSpacing));
}

inline World build_street(const ScenarioSpec& spec, const ScenarioGeometry& g, SeededRng& rng) {
    World w;
    w.constants = spec.constants;
    const double L = g.street_length_m, W = g.street_width_m;
    w.walls = box_walls(0.0, 0.0, L, W);
    const std::size_t n_right = (g.agents + 1) / 2, n_left = g.agents / 2;
    const auto right = scatter(rng, n_right, {1.0, 0.5, 6.0, W - 0.5}, kStartSpacing);
    const auto left = scatter(rng, n_left, {L - 6.0, 0.5, L - 1.0, W - 0.5}, kStartSpacing);
    std::vector<AgentState*> rights, lefts;
    std::vector<double> right_lag, left_lag;
    w.agents.reserve(g.agents);
    for (std::size_t k = 0; k < g.agents; ++k) {
        const bool eastbound = k % 2 == 0;
        w.agents.push_back(make_agent(spec, k, eastbound ? right[k / 2] : left[k / 2]));
    }
    for (auto& a : w.agents) {
        const bool eastbound = a.position.x < L / 2.0;
        (eastbound ? rights : lefts).push_back(&a);
        (eastbound ? right_lag : left_lag).push_back(eastbound ? -a.position.x : a.position.x);
    }
    const std::size_t lanes = lane_count(W);
    assign_goals(rights, right_lag, goal_columns(n_right, L - 1.0, 1.0, kGoalPitch, 0.0, W, lanes));
    assign_goals(lefts, left_lag, goal_columns(n_left, 1.0, -1.0, kGoalPitch, 0.0, W, lanes));
    return w;
}

inline World build_gate(const ScenarioSpec& spec, const ScenarioGeometry& g, SeededRng& rng) {
    World w;
    w.constants = spec.constants;
    const double RW = g.room_width_m, RD = g.room_depth_m, half = g.opening_m / 2.0, mid = RD / 2.0;
    w.walls = box_walls(0.0, 0.0, 2 * RW, RD);
    w.walls.push_back(Obstacle::segment({RW, 0.0}, {RW, mid - half}));
    w.walls.push_back(Obstacle::segment({RW, mid + half}, {RW, RD}));

    const std::size_t n_in = (g.agents + 1) / 2, n_out = g.agents / 2;
    const auto west = scatter(rng, n_in, {1.0, 1.0, RW - 3.0, RD - 1.0}, kStartSpacing);
    const auto east = scatter(rng, n_out, {RW + 3.0, 1.0, 2 * RW - 1.0, RD - 1.0}, kStartSpacing);
    for (std::size_t k = 0; k < g.agents; ++k) {
        const bool eastbound = k % 2 == 0;
        auto a = make_agent(spec, k, eastbound ? west[k / 2] : east[k / 2]);
        // two waypoints straddle the opening; seeded lateral jitter keeps
        // opposing streams from meeting exactly head on
        const double j1 = rng.uniform(-0.25, 0.25), j2 = rng.uniform(-0.25, 0.25);
        const double side = eastbound ? 1.0 : -1.0;
        a.waypoints = {{RW - side, mid + j1}, {RW + side, mid + j2}};
        w.agents.push_back(std::move(a));
    }
    std::vector<AgentState*> easts, wests;
    std::vector<double> east_lag, west_lag;
    const Vec2 door{RW, mid};
    for (auto& a : w.agents) {
        const bool eastbound = a.position.x < RW;
        (eastbound ? easts : wests).push_back(&a);
        (eastbound ? east_lag : west_lag).push_back(norm(a.position - door));
    }
    const std::size_t lanes = lane_count(RD);
    assign_goals(easts, east_lag, goal_columns(n_in, 2 * RW - 2.0, 1.0, 2.5, 0.0, RD, lanes));
    assign_goals(wests, west_lag, goal_columns(n_out, 2.0, -1.0, 2.5, 0.0, RD, lanes));
    return w;
}

// Two PMDs crossing in opposite directions past two obstacles.
inline World build_fig6a(const ScenarioSpec& spec, SeededRng& rng) {
    World w;
    w.constants = spec.constants;
    w.walls = box_walls(0.0, 0.0, 12.0, 4.0);
    w.obstacles = {Obstacle::point({4.0, 1.6}), Obstacle::point({8.0, 2.4})};
    auto a = make_agent(spec, 0, {1.0, 2.0 + rng.uniform(-0.3, 0.3)});
    a.goal = {11.0, 2.0};
    auto b = make_agent(spec, 1, {11.0, 2.0 + rng.uniform(-0.3, 0.3)});
    b.goal = {1.0, 2.0};
    w.agents = {std::move(a), std::move(b)};
    return w;
}

// Five PMDs heading to their own targets, two of them travelling as a group.
inline World build_fig6b(const ScenarioSpec& spec, SeededRng& rng) {
    World w;
    w.constants = spec.constants;
    w.walls = box_walls(0.0, 0.0, 10.0, 10.0);
    const auto starts = scatter(rng, 5, {1.0, 1.0, 4.0, 9.0}, 0.8);
    const auto goals = scatter(rng, 5, {6.5, 1.0, 9.0, 9.0}, 1.5);
    for (std::size_t k = 0; k < 5; ++k) {
        auto a = make_agent(spec, k, starts[k]);
        a.goal = goals[k];
        w.agents.push_back(std::move(a));
    }
    // the group shares a destination area, with targets side by side
    w.agents[1].position = w.agents[0].position + Vec2{0.0, 0.7};
    w.agents[1].goal = w.agents[0].goal + Vec2{0.0, 0.8};
    w.agents[0].group_id = 0;
    w.agents[1].group_id = 0;
    return w;
}

}  // namespace detail

/// Seeded world for one of the simulated situations.
inline World build_scenario(const ScenarioSpec& spec) {
    spec.constants.validate();
    spec.type1_params.validate("type1");
    spec.type2_params.validate("type2");
    const auto g = resolve_geometry(spec);
    SeededRng rng(spec.seed);
    World w;
    switch (spec.kind) {
        case ScenarioKind::street_low:
        case ScenarioKind::street_heavy: w = detail::build_street(spec, g, rng); break;
        case ScenarioKind::gate_low: w = detail::build_gate(spec, g, rng); break;
        case ScenarioKind::fig6a: w = detail::build_fig6a(spec, rng); break;
        case ScenarioKind::fig6b: w = detail::build_fig6b(spec, rng); break;
    }
    w.validate();
    return w;
}

// ---- running -----------------------------------------------------------

struct Sample {
    double t = 0.0;
    Vec2 position;
    Vec2 velocity;
    bool arrived = false;
    friend bool operator==(const Sample&, const Sample&) = default;
};

struct Trajectory {
    std::string agent_id;
    std::vector<Sample> samples;
    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct DisplacementSummary {
    double min_m = 0.0;
    bool resolvable_at(double resolution_m) const noexcept { return min_m >= resolution_m; }
    friend bool operator==(const DisplacementSummary&, const DisplacementSummary&) = default;
};

struct SimulationResult {
    double end_time_s = 0.0;
    bool censored = false;
    double dt_s = 0.1;
    std::size_t arrived_count = 0;
    std::vector<Trajectory> trajectories;
    std::optional<double> min_consecutive_displacement_m;
    friend bool operator==(const SimulationResult&, const SimulationResult&) = default;
};

/// Smallest step between consecutive samples while the agent was still en route.
inline std::optional<double> try_min_consecutive_displacement(const SimulationResult& r) {
    std::optional<double> best;
    for (const auto& tr : r.trajectories)
        for (std::size_t k = 1; k < tr.samples.size(); ++k) {
            if (tr.samples[k - 1].arrived) break;
            const double d = norm(tr.samples[k].position - tr.samples[k - 1].position);
            if (!best || d < *best) best = d;
        }
    return best;
}

inline DisplacementSummary min_consecutive_displacement(const SimulationResult& r) {
    const auto m = try_min_consecutive_displacement(r);
    if (!m) throw ValidationError("no moving samples to measure");
    return {*m};
}

/// Steps until every agent has arrived or `max_time_s` passes. The end time
/// is the clock at the last arrival; hitting the cap marks the run censored.
inline SimulationResult run_scenario(World w, double max_time_s) {
    if (!(max_time_s > 0.0) || !std::isfinite(max_time_s)) throw ValidationError("max_time must be positive", "max_time");
    w.validate();
    const double dt = w.constants.dt_s;
    SimulationResult out;
    out.dt_s = dt;
    out.trajectories.resize(w.agents.size());
    auto record = [&](double t) {
        for (std::size_t i = 0; i < w.agents.size(); ++i) {
            const auto& a = w.agents[i];
            out.trajectories[i].samples.push_back({t, a.position, a.velocity, a.arrived});
        }
    };
    for (std::size_t i = 0; i < w.agents.size(); ++i) out.trajectories[i].agent_id = w.agents[i].id;
    auto done = [&] { return std::all_of(w.agents.begin(), w.agents.end(), [](const AgentState& a) { return a.arrived; }); };

    const auto max_steps = static_cast<std::size_t>(std::floor(max_time_s / dt + 1e-9));
    std::size_t k = 0;
    record(0.0);
    while (!done() && k < max_steps) {
        w = step(w);
        ++k;
        record(static_cast<double>(k) * dt);
    }
    out.arrived_count = static_cast<std::size_t>(
        std::count_if(w.agents.begin(), w.agents.end(), [](const AgentState& a) { return a.arrived; }));
    out.censored = !done();
    out.end_time_s = out.censored ? max_time_s : static_cast<double>(k) * dt;
    out.min_consecutive_displacement_m = try_min_consecutive_displacement(out);
    return out;
}

// ---- type comparison ---------------------------------------------------

struct TypeComparison {
    double t1 = 0.0;
    double t2 = 0.0;
    bool censored1 = false;
    bool censored2 = false;
    bool censored() const noexcept { return censored1 || censored2; }
};

/// Same geometry and seed, all agents first with the Type-1 factors, then Type-2.
inline TypeComparison compare_types(ScenarioSpec spec, double max_time_s) {
    TypeComparison c;
    spec.pmd_type = PmdMix::type1;
    const auto r1 = run_scenario(build_scenario(spec), max_time_s);
    spec.pmd_type = PmdMix::type2;
    const auto r2 = run_scenario(build_scenario(spec), max_time_s);
    c.t1 = r1.end_time_s;
    c.censored1 = r1.censored;
    c.t2 = r2.end_time_s;
    c.censored2 = r2.censored;
    return c;
}

struct ComparisonRow {
    ScenarioKind kind;
    std::uint64_t seed;
    TypeComparison result;
};

/// Runs every (kind, seed) comparison, `jobs` at a time; rows come back in
/// kind-major, seed-minor order whatever the job count.
inline std::vector<ComparisonRow> compare_grid(const std::vector<ScenarioKind>& kinds,
                                               const std::vector<std::uint64_t>& seeds, const ScenarioSpec& base,
                                               double max_time_s, unsigned jobs = 1) {
    std::vector<ComparisonRow> rows;
    for (auto k : kinds)
        for (auto s : seeds) rows.push_back({k, s, {}});
    parallel_for(rows.size(), jobs, [&](std::size_t i) {
        ScenarioSpec spec = base;
        spec.kind = rows[i].kind;
        spec.seed = rows[i].seed;
        rows[i].result = compare_types(spec, max_time_s);
    });
    return rows;
}

inline double median(std::vector<double> v) {
    if (v.empty()) throw ValidationError("median of an empty set");
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace pmdroute::sfm
