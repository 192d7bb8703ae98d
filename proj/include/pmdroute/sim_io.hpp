#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "pmdroute/error.hpp"
#include "pmdroute/report.hpp"
#include "pmdroute/scenarios.hpp"
#include "pmdroute/sfm.hpp"

namespace pmdroute::sfm {

struct ScenarioFile {
    World world;
    std::optional<double> max_time_s;
};

namespace detail {

inline Vec2 json_vec(const nlohmann::json& j, const std::string& owner) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ValidationError("expected [x, y]", owner);
    return {j[0].get<double>(), j[1].get<double>()};
}

inline Obstacle json_obstacle(const nlohmann::json& j, const std::string& owner) {
    if (j.contains("point")) return Obstacle::point(json_vec(j["point"], owner));
    if (j.contains("segment")) {
        const auto& s = j["segment"];
        if (!s.is_array() || s.size() != 2) throw ValidationError("segment needs two points", owner);
        const Vec2 a = json_vec(s[0], owner), b = json_vec(s[1], owner);
        if (a == b) throw ValidationError("segment endpoints must differ", owner);
        return Obstacle::segment(a, b);
    }
    throw ValidationError("obstacle needs 'point' or 'segment'", owner);
}

inline PmdTypeParams json_type(const nlohmann::json& j, const std::string& owner) {
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "type1") return PmdTypeParams::type1();
        if (name == "type2") return PmdTypeParams::type2();
        if (name == "pedestrian") return PmdTypeParams::pedestrian();
        throw ValidationError("unknown agent type '" + name + "'", owner);
    }
    if (!j.is_object()) throw ValidationError("type must be a name or a factor object", owner);
    PmdTypeParams p = PmdTypeParams::pedestrian();
    p.goal_factor = j.value("goal_factor", p.goal_factor);
    p.ped_repulse_factor = j.value("ped_repulse_factor", p.ped_repulse_factor);
    p.space_repulse_factor = j.value("space_repulse_factor", p.space_repulse_factor);
    p.social_factor = j.value("social_factor", p.social_factor);
    p.obstacle_factor = j.value("obstacle_factor", p.obstacle_factor);
    return p;
}

inline nlohmann::ordered_json vec_json(const Vec2& v) { return {v.x, v.y}; }

inline nlohmann::ordered_json obstacle_json(const Obstacle& o) {
    if (o.is_point()) return {{"point", vec_json(o.a)}};
    return {{"segment", {vec_json(o.a), vec_json(o.b)}}};
}

}  // namespace detail

inline void apply_constant_overrides(SfmConstants& c, const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("constants must be an object", "constants");
    for (const auto& [key, value] : j.items()) {
        if (!value.is_number()) throw ValidationError("constant '" + key + "' must be a number", key);
        const double v = value.get<double>();
        if (key == "tau_s") c.tau_s = v;
        else if (key == "v0_mps") c.v0_mps = v;
        else if (key == "wall_a") c.wall_a = v;
        else if (key == "wall_b") c.wall_b = v;
        else if (key == "V0_rep") c.V0_rep = v;
        else if (key == "sigma_m") c.sigma_m = v;
        else if (key == "beta1") c.beta1 = v;
        else if (key == "beta2") c.beta2 = v;
        else if (key == "beta3") c.beta3 = v;
        else if (key == "qa_threshold_m") c.qa_threshold_m = v;
        else if (key == "qr_threshold_m") c.qr_threshold_m = v;
        else if (key == "dt_s") c.dt_s = v;
        else if (key == "goal_tolerance_m") c.goal_tolerance_m = v;
        else if (key == "waypoint_tolerance_m") c.waypoint_tolerance_m = v;
        else if (key == "speed_cap_factor") c.speed_cap_factor = v;
        else if (key == "coincident_distance_m") c.coincident_distance_m = v;
        else throw ValidationError("unknown constant '" + key + "'", key);
    }
}

inline nlohmann::ordered_json constants_json(const SfmConstants& c) {
    nlohmann::ordered_json j = {{"tau_s", c.tau_s},     {"v0_mps", c.v0_mps},     {"wall_a", c.wall_a},
                                {"wall_b", c.wall_b},   {"V0_rep", c.V0_rep},     {"sigma_m", c.sigma_m},
                                {"beta1", c.beta1},     {"beta2", c.beta2},       {"beta3", c.beta3}};
    if (c.qa_threshold_m) j["qa_threshold_m"] = *c.qa_threshold_m;
    j["qr_threshold_m"] = c.qr_threshold_m;
    j["dt_s"] = c.dt_s;
    j["goal_tolerance_m"] = c.goal_tolerance_m;
    j["waypoint_tolerance_m"] = c.waypoint_tolerance_m;
    j["speed_cap_factor"] = c.speed_cap_factor;
    j["coincident_distance_m"] = c.coincident_distance_m;
    return j;
}

inline nlohmann::ordered_json type_json(const PmdTypeParams& p) {
    return {{"goal_factor", p.goal_factor},
            {"ped_repulse_factor", p.ped_repulse_factor},
            {"space_repulse_factor", p.space_repulse_factor},
            {"social_factor", p.social_factor},
            {"obstacle_factor", p.obstacle_factor}};
}

/// Scenario file: agents, obstacles, walls, constant overrides, dt, max_time.
inline ScenarioFile load_scenario(std::string_view text) {
    const auto doc = pmdroute::detail::parse_document(text);
    ScenarioFile out;
    World& w = out.world;
    if (auto it = doc.find("constants"); it != doc.end()) apply_constant_overrides(w.constants, *it);
    if (auto it = doc.find("dt"); it != doc.end()) {
        if (!it->is_number()) throw ValidationError("dt must be a number", "dt");
        w.constants.dt_s = it->get<double>();
    }
    if (auto it = doc.find("max_time"); it != doc.end()) {
        if (!it->is_number() || !(it->get<double>() > 0.0)) throw ValidationError("max_time must be positive", "max_time");
        out.max_time_s = it->get<double>();
    }
    const auto& agents = pmdroute::detail::require_array(doc, "agents");
    for (std::size_t k = 0; k < agents.size(); ++k) {
        const auto& ja = agents[k];
        const std::string owner = "agents[" + std::to_string(k) + "]";
        if (!ja.is_object()) throw ValidationError("agent must be an object", owner);
        AgentState a;
        a.id = ja.contains("id") ? pmdroute::detail::json_id(ja["id"], "agent id") : std::to_string(k);
        if (!ja.contains("position") || !ja.contains("goal")) throw ValidationError("agent needs position and goal", a.id);
        a.position = detail::json_vec(ja["position"], a.id);
        a.goal = detail::json_vec(ja["goal"], a.id);
        if (ja.contains("velocity")) a.velocity = detail::json_vec(ja["velocity"], a.id);
        a.desired_speed = ja.contains("desired_speed") ? ja["desired_speed"].get<double>() : w.constants.v0_mps;
        a.type_params = ja.contains("type") ? detail::json_type(ja["type"], a.id) : PmdTypeParams::type1();
        if (ja.contains("group") && !ja["group"].is_null()) {
            if (!ja["group"].is_number_integer()) throw ValidationError("group must be an integer", a.id);
            a.group_id = ja["group"].get<int>();
        }
        if (ja.contains("waypoints"))
            for (const auto& p : ja["waypoints"]) a.waypoints.push_back(detail::json_vec(p, a.id));
        w.agents.push_back(std::move(a));
    }
    auto read_obstacles = [&](const char* key, std::vector<Obstacle>& dst) {
        if (!doc.contains(key)) return;
        const auto& arr = pmdroute::detail::require_array(doc, key);
        for (std::size_t k = 0; k < arr.size(); ++k)
            dst.push_back(detail::json_obstacle(arr[k], std::string(key) + "[" + std::to_string(k) + "]"));
    };
    read_obstacles("obstacles", w.obstacles);
    read_obstacles("walls", w.walls);
    w.validate();
    return out;
}

inline nlohmann::ordered_json world_json(const World& w) {
    nlohmann::ordered_json j;
    j["dt"] = w.constants.dt_s;
    j["constants"] = constants_json(w.constants);
    auto& agents = j["agents"] = nlohmann::ordered_json::array();
    for (const auto& a : w.agents) {
        nlohmann::ordered_json ja = {{"id", a.id},
                                     {"position", detail::vec_json(a.position)},
                                     {"goal", detail::vec_json(a.goal)},
                                     {"velocity", detail::vec_json(a.velocity)},
                                     {"desired_speed", a.desired_speed},
                                     {"type", type_json(a.type_params)}};
        if (a.group_id) ja["group"] = *a.group_id;
        if (!a.waypoints.empty()) {
            auto& wp = ja["waypoints"] = nlohmann::ordered_json::array();
            for (const auto& p : a.waypoints) wp.push_back(detail::vec_json(p));
        }
        agents.push_back(std::move(ja));
    }
    auto& obstacles = j["obstacles"] = nlohmann::ordered_json::array();
    for (const auto& o : w.obstacles) obstacles.push_back(detail::obstacle_json(o));
    auto& walls = j["walls"] = nlohmann::ordered_json::array();
    for (const auto& o : w.walls) walls.push_back(detail::obstacle_json(o));
    return j;
}

/// `t,agent_id,x,y,vx,vy,arrived`, time-major.
inline std::string trajectory_csv(const SimulationResult& r) {
    std::string out = "t,agent_id,x,y,vx,vy,arrived\n";
    const std::size_t steps = r.trajectories.empty() ? 0 : r.trajectories.front().samples.size();
    for (std::size_t k = 0; k < steps; ++k)
        for (const auto& tr : r.trajectories) {
            const auto& s = tr.samples[k];
            out += format_double(s.t) + "," + tr.agent_id + "," + format_double(s.position.x) + "," +
                   format_double(s.position.y) + "," + format_double(s.velocity.x) + "," +
                   format_double(s.velocity.y) + "," + (s.arrived ? "1" : "0") + "\n";
        }
    return out;
}

inline nlohmann::ordered_json result_json(const SimulationResult& r, double resolution_m = 0.2) {
    nlohmann::ordered_json j;
    j["end_time_s"] = r.end_time_s;
    j["censored"] = r.censored;
    j["arrived_count"] = r.arrived_count;
    j["agents"] = r.trajectories.size();
    j["dt_s"] = r.dt_s;
    if (r.min_consecutive_displacement_m) {
        j["min_consecutive_displacement_m"] = *r.min_consecutive_displacement_m;
        j["resolution_m"] = resolution_m;
        j["resolvable"] = *r.min_consecutive_displacement_m >= resolution_m;
    } else {
        j["min_consecutive_displacement_m"] = nullptr;
    }
    return j;
}

inline nlohmann::ordered_json scenario_meta_json(const ScenarioSpec& spec) {
    const auto g = resolve_geometry(spec);
    nlohmann::ordered_json j;
    j["kind"] = to_string(spec.kind);
    j["pmd_type"] = to_string(spec.pmd_type);
    j["seed"] = spec.seed;
    j["geometry"] = {{"street_length_m", g.street_length_m}, {"street_width_m", g.street_width_m},
                     {"room_width_m", g.room_width_m},       {"room_depth_m", g.room_depth_m},
                     {"opening_m", g.opening_m},             {"agents", g.agents}};
    j["type1"] = type_json(spec.type1_params);
    j["type2"] = type_json(spec.type2_params);
    j["constants"] = constants_json(spec.constants);
    return j;
}

/// Comparison rows, one line per (kind, seed, type).
inline std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
    std::string out = "kind,seed,type,end_time_s,censored\n";
    for (const auto& r : rows) {
        const std::string head = std::string(to_string(r.kind)) + "," + std::to_string(r.seed) + ",";
        out += head + "type1," + format_double(r.result.t1) + "," + (r.result.censored1 ? "1" : "0") + "\n";
        out += head + "type2," + format_double(r.result.t2) + "," + (r.result.censored2 ? "1" : "0") + "\n";
    }
    return out;
}

struct KindSummary {
    ScenarioKind kind;
    std::size_t runs = 0;
    std::size_t censored = 0;
    double median_t1 = 0.0;
    double median_t2 = 0.0;
    double ratio() const noexcept { return median_t1 > 0.0 ? median_t2 / median_t1 : 0.0; }
};

/// Median end times per kind over the uncensored comparisons.
inline std::vector<KindSummary> summarize(const std::vector<ComparisonRow>& rows) {
    std::vector<KindSummary> out;
    for (const auto& r : rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const KindSummary& s) { return s.kind == r.kind; });
        if (it == out.end()) it = out.insert(out.end(), KindSummary{r.kind});
        ++it->runs;
    }
    for (auto& s : out) {
        std::vector<double> t1, t2;
        for (const auto& r : rows) {
            if (r.kind != s.kind) continue;
            if (r.result.censored()) {
                ++s.censored;
                continue;
            }
            t1.push_back(r.result.t1);
            t2.push_back(r.result.t2);
        }
        if (!t1.empty()) {
            s.median_t1 = median(t1);
            s.median_t2 = median(t2);
        }
    }
    return out;
}

inline std::string summary_csv(const std::vector<KindSummary>& rows) {
    std::string out = "kind,runs,censored,median_t1_s,median_t2_s,ratio\n";
    for (const auto& s : rows)
        out += std::string(to_string(s.kind)) + "," + std::to_string(s.runs) + "," + std::to_string(s.censored) + "," +
               format_double(s.median_t1) + "," + format_double(s.median_t2) + "," + format_double(s.ratio()) + "\n";
    return out;
}

}  // namespace pmdroute::sfm
