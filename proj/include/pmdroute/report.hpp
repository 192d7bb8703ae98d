#pragma once

#include <charconv>
#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmdroute/centrality.hpp"
#include "pmdroute/error.hpp"
#include "pmdroute/router.hpp"
#include "pmdroute/street_graph.hpp"

namespace pmdroute {

using ordered_json = nlohmann::ordered_json;

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

inline ordered_json weights_json(const HazardWeights& w) {
    return {{"haz", {w.haz_ring_scores[0], w.haz_ring_scores[1], w.haz_ring_scores[2]}},
            {"pa", w.pa_score},
            {"bc_max", w.bc_max},
            {"ic_max", w.ic_max}};
}

namespace detail {

inline ordered_json line_coordinates(const StreetGraph& g, const std::vector<NodeIndex>& nodes) {
    auto coords = ordered_json::array();
    for (NodeIndex v : nodes) coords.push_back({g.location(v).lon, g.location(v).lat});
    return coords;
}

inline ordered_json line_feature(ordered_json coords, ordered_json props) {
    return {{"type", "Feature"},
            {"geometry", {{"type", "LineString"}, {"coordinates", std::move(coords)}}},
            {"properties", std::move(props)}};
}

}  // namespace detail

/// FeatureCollection: the social route, the raw shortest route, then one
/// feature per route edge carrying its penalty contributions in meters.
inline ordered_json route_geojson(const StreetGraph& g, const RouteResult& r) {
    ordered_json fc;
    fc["type"] = "FeatureCollection";
    auto& features = fc["features"] = ordered_json::array();
    features.push_back(detail::line_feature(detail::line_coordinates(g, r.node_path),
                                            {{"kind", "route"},
                                             {"length_m", r.length_m},
                                             {"weighted_cost", r.weighted_cost},
                                             {"increment_pct", r.increment_pct}}));
    features.push_back(detail::line_feature(detail::line_coordinates(g, r.shortest_node_path),
                                            {{"kind", "shortest"}, {"length_m", r.shortest_length_m}}));
    for (const auto& c : r.breakdown) {
        const auto& e = g.edge(c.edge);
        features.push_back(detail::line_feature(detail::line_coordinates(g, {e.from, e.to}),
                                                {{"kind", "edge"},
                                                 {"edge_id", e.id},
                                                 {"length_m", c.length_m},
                                                 {"haz", c.haz},
                                                 {"pa", c.pa},
                                                 {"bc", c.bc},
                                                 {"ic", c.ic}}));
    }
    return fc;
}

/// Structural GeoJSON check for what route_geojson emits. Returns an empty
/// string when valid, else the first problem found.
inline std::string check_linestring_collection(const nlohmann::json& doc) {
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection") return "not a FeatureCollection";
    if (!doc.contains("features") || !doc["features"].is_array()) return "features must be an array";
    for (const auto& f : doc["features"]) {
        if (!f.is_object() || f.value("type", "") != "Feature") return "member is not a Feature";
        if (!f.contains("properties") || !(f["properties"].is_object() || f["properties"].is_null()))
            return "feature properties must be an object or null";
        if (!f.contains("geometry") || !f["geometry"].is_object()) return "feature without geometry";
        const auto& geom = f["geometry"];
        if (geom.value("type", "") != "LineString") return "geometry is not a LineString";
        if (!geom.contains("coordinates") || !geom["coordinates"].is_array()) return "LineString without coordinates";
        const auto& coords = geom["coordinates"];
        // an O = D route is a legal empty line; otherwise at least two positions
        if (coords.size() == 1) return "LineString needs two or more positions";
        for (const auto& p : coords) {
            if (!p.is_array() || p.size() < 2 || !p[0].is_number() || !p[1].is_number())
                return "position must be [lon, lat]";
            const double lon = p[0].get<double>(), lat = p[1].get<double>();
            if (lon < -180.0 || lon > 180.0 || lat < -90.0 || lat > 90.0) return "position out of range";
        }
    }
    return {};
}

inline ordered_json route_stats_json(const StreetGraph& g, const RouteResult& r, const RouteQuery& q) {
    ordered_json j;
    j["origin"] = q.origin;
    j["destination"] = q.destination;
    j["weights"] = weights_json(q.weights);
    j["ic_layer"] = q.ic_layer != nullptr;
    j["min_side_km"] = q.min_side_km;
    j["box_side_m"] = r.box_side_m;
    j["subnetwork_nodes"] = r.subnetwork_nodes;
    j["length_m"] = r.length_m;
    j["shortest_length_m"] = r.shortest_length_m;
    j["weighted_cost"] = r.weighted_cost;
    j["increment_pct"] = r.increment_pct;
    auto& nodes = j["node_path"] = ordered_json::array();
    for (NodeIndex v : r.node_path) nodes.push_back(g.node(v).id);
    auto& edges = j["edge_path"] = ordered_json::array();
    for (EdgeIndex e : r.edge_path) edges.push_back(g.edge(e).id);
    double haz = 0, pa = 0, bc = 0, ic = 0;
    for (const auto& c : r.breakdown) {
        haz += c.haz;
        pa += c.pa;
        bc += c.bc;
        ic += c.ic;
    }
    j["penalty_m"] = {{"haz", haz}, {"pa", pa}, {"bc", bc}, {"ic", ic}};
    return j;
}

inline ordered_json batch_stats_json(const BatchStats& s, const BatchOptions& o) {
    ordered_json j;
    j["n_pairs"] = s.n_pairs;
    j["avg_shortest_m"] = s.avg_shortest_m;
    j["avg_new_m"] = s.avg_new_m;
    j["increment_pct"] = s.increment_pct;
    j["seed"] = o.seed;
    j["dist_km"] = {o.dist_min_km, o.dist_max_km};
    j["min_side_km"] = o.min_side_km;
    j["weights"] = weights_json(o.weights);
    j["draws"] = s.draws;
    j["skipped_disconnected"] = s.skipped_disconnected;
    return j;
}

inline std::string batch_pairs_csv(const StreetGraph& g, const BatchStats& s) {
    std::string out = "origin,destination,od_distance_m,shortest_m,new_m,increment_pct,weighted_cost\n";
    for (const auto& r : s.per_pair_records) {
        out += g.node(r.origin).id + "," + g.node(r.destination).id + "," + format_double(r.od_distance_m) + "," +
               format_double(r.shortest_m) + "," + format_double(r.new_m) + "," + format_double(r.increment_pct) + "," +
               format_double(r.weighted_cost) + "\n";
    }
    return out;
}

inline std::string centrality_csv(const StreetGraph& g, const EdgeScalarField& raw, const EdgeScalarField& scaled) {
    std::string out = "edge_id,value,scaled\n";
    for (EdgeIndex e = 0; e < g.edge_count(); ++e)
        out += g.edge(e).id + "," + format_double(raw[e]) + "," + format_double(scaled[e]) + "\n";
    return out;
}

/// Parses `edge_id,value` rows (optional header) into a field on `g`.
inline EdgeScalarField load_edge_field_csv(const StreetGraph& g, std::string_view text) {
    std::unordered_map<std::string, double> by_id;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ValidationError("line " + std::to_string(line_no) + ": expected edge_id,value");
        const std::string id = line.substr(0, comma);
        std::string value_text = line.substr(comma + 1);
        if (auto next = value_text.find(','); next != std::string::npos) value_text.resize(next);
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
        if (ec != std::errc{} || ptr != value_text.data() + value_text.size()) {
            if (line_no == 1) continue;  // header
            throw ValidationError("line " + std::to_string(line_no) + ": bad value '" + value_text + "'", id);
        }
        if (!by_id.emplace(id, value).second) throw ValidationError("duplicate edge '" + id + "' in field", id);
    }
    return field_from_map(g, by_id);
}

}  // namespace pmdroute
