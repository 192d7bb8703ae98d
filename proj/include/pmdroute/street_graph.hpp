#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmdroute/error.hpp"
#include "pmdroute/geo.hpp"

namespace pmdroute {

using NodeIndex = std::uint32_t;
using EdgeIndex = std::uint32_t;

inline constexpr NodeIndex kNoNode = std::numeric_limits<NodeIndex>::max();

struct Node {
    std::string id;
    GeoPoint location;

    friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
    std::string id;
    NodeIndex from = kNoNode;
    NodeIndex to = kNoNode;
    double length_m = 0.0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

// Edge as it appears in a document: endpoints named by node id.
struct EdgeSpec {
    std::string id;
    std::string from;
    std::string to;
    double length_m = 0.0;
};

// Directed, length-weighted street graph. Immutable once constructed; the
// constructor validates every invariant and builds CSR adjacency in both
// directions.
class StreetGraph {
public:
    StreetGraph() = default;

    StreetGraph(std::vector<Node> nodes, const std::vector<EdgeSpec>& edges) : nodes_(std::move(nodes)) {
        index_nodes();
        edges_.reserve(edges.size());
        for (const auto& spec : edges) {
            auto from = find_node(spec.from);
            auto to = find_node(spec.to);
            if (!from) throw ValidationError("edge '" + spec.id + "' references missing node '" + spec.from + "'", spec.id);
            if (!to) throw ValidationError("edge '" + spec.id + "' references missing node '" + spec.to + "'", spec.id);
            edges_.push_back(Edge{spec.id, *from, *to, spec.length_m});
        }
        validate_edges();
        build_adjacency();
    }

    // Index-based construction, used when deriving subgraphs.
    StreetGraph(std::vector<Node> nodes, std::vector<Edge> edges)
        : nodes_(std::move(nodes)), edges_(std::move(edges)) {
        index_nodes();
        validate_edges();
        build_adjacency();
    }

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }

    const Node& node(NodeIndex v) const { return nodes_[v]; }
    const Edge& edge(EdgeIndex e) const { return edges_[e]; }
    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }

    std::optional<NodeIndex> find_node(std::string_view id) const {
        auto it = node_index_.find(std::string(id));
        if (it == node_index_.end()) return std::nullopt;
        return it->second;
    }

    std::optional<EdgeIndex> find_edge(std::string_view id) const {
        auto it = edge_index_.find(std::string(id));
        if (it == edge_index_.end()) return std::nullopt;
        return it->second;
    }

    NodeIndex require_node(std::string_view id) const {
        auto v = find_node(id);
        if (!v) throw ValidationError("unknown node '" + std::string(id) + "'", std::string(id));
        return *v;
    }

    std::span<const EdgeIndex> out_edges(NodeIndex v) const {
        return {out_edges_.data() + out_offsets_[v], out_edges_.data() + out_offsets_[v + 1]};
    }

    std::span<const EdgeIndex> in_edges(NodeIndex v) const {
        return {in_edges_.data() + in_offsets_[v], in_edges_.data() + in_offsets_[v + 1]};
    }

    const GeoPoint& location(NodeIndex v) const { return nodes_[v].location; }

    /// min over edges of length / great-circle(from, to), clamped to 1.
    /// Scaling the great-circle heuristic by this keeps A* admissible on
    /// graphs whose recorded lengths undercut the geodesic.
    double heuristic_scale() const noexcept { return heuristic_scale_; }

    /// Rebuilds adjacency from the edge list and compares with the stored index.
    bool adjacency_consistent() const {
        StreetGraph copy(nodes_, edges_);
        return copy.out_offsets_ == out_offsets_ && copy.out_edges_ == out_edges_ &&
               copy.in_offsets_ == in_offsets_ && copy.in_edges_ == in_edges_;
    }

private:
    void index_nodes() {
        node_index_.clear();
        node_index_.reserve(nodes_.size());
        for (NodeIndex i = 0; i < nodes_.size(); ++i) {
            const auto& n = nodes_[i];
            if (!n.location.valid()) throw ValidationError("node '" + n.id + "' has out-of-range coordinates", n.id);
            if (!node_index_.emplace(n.id, i).second) throw ValidationError("duplicate node id '" + n.id + "'", n.id);
        }
    }

    void validate_edges() {
        edge_index_.clear();
        edge_index_.reserve(edges_.size());
        heuristic_scale_ = 1.0;
        for (EdgeIndex i = 0; i < edges_.size(); ++i) {
            const auto& e = edges_[i];
            if (e.from >= nodes_.size() || e.to >= nodes_.size())
                throw ValidationError("edge '" + e.id + "' has a dangling endpoint", e.id);
            if (e.from == e.to) throw ValidationError("edge '" + e.id + "' is a self-loop", e.id);
            if (!(e.length_m > 0.0) || !std::isfinite(e.length_m))
                throw ValidationError("edge '" + e.id + "' has non-positive length", e.id);
            if (!edge_index_.emplace(e.id, i).second) throw ValidationError("duplicate edge id '" + e.id + "'", e.id);
            const double geodesic = haversine_m(nodes_[e.from].location, nodes_[e.to].location);
            if (geodesic > 0.0) heuristic_scale_ = std::min(heuristic_scale_, e.length_m / geodesic);
        }
    }

    void build_adjacency() {
        const std::size_t n = nodes_.size();
        out_offsets_.assign(n + 1, 0);
        in_offsets_.assign(n + 1, 0);
        for (const auto& e : edges_) {
            ++out_offsets_[e.from + 1];
            ++in_offsets_[e.to + 1];
        }
        for (std::size_t v = 0; v < n; ++v) {
            out_offsets_[v + 1] += out_offsets_[v];
            in_offsets_[v + 1] += in_offsets_[v];
        }
        out_edges_.assign(edges_.size(), 0);
        in_edges_.assign(edges_.size(), 0);
        std::vector<std::uint32_t> out_fill(out_offsets_.begin(), out_offsets_.end() - 1);
        std::vector<std::uint32_t> in_fill(in_offsets_.begin(), in_offsets_.end() - 1);
        for (EdgeIndex i = 0; i < edges_.size(); ++i) {
            out_edges_[out_fill[edges_[i].from]++] = i;
            in_edges_[in_fill[edges_[i].to]++] = i;
        }
    }

    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::unordered_map<std::string, NodeIndex> node_index_;
    std::unordered_map<std::string, EdgeIndex> edge_index_;
    std::vector<std::uint32_t> out_offsets_, out_edges_;
    std::vector<std::uint32_t> in_offsets_, in_edges_;
    double heuristic_scale_ = 1.0;
};

struct SharedZoneSet {
    std::vector<GeoPoint> meso_zones;    // area-scale shared spaces (zone centers)
    std::vector<GeoPoint> micro_points;  // single intersections / road points

    bool empty() const noexcept { return meso_zones.empty() && micro_points.empty(); }
};

// ---------------------------------------------------------------------------
// Documents

namespace detail {

inline std::string json_id(const nlohmann::json& j, const char* what) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number_integer()) return std::to_string(j.get<long long>());
    if (j.is_number_unsigned()) return std::to_string(j.get<unsigned long long>());
    throw ValidationError(std::string("malformed document: ") + what + " must be a string or integer");
}

inline double json_number(const nlohmann::json& obj, const char* key, const std::string& owner) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number())
        throw ValidationError("malformed document: '" + owner + "' missing numeric '" + key + "'", owner);
    return it->get<double>();
}

inline nlohmann::json parse_document(std::string_view text) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("malformed document: ") + e.what());
    }
}

inline const nlohmann::json& require_array(const nlohmann::json& doc, const char* key) {
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_array())
        throw ValidationError(std::string("malformed document: missing array '") + key + "'");
    return *it;
}

}  // namespace detail

/// Parses and validates a graph document. Undirected documents are expanded
/// to a forward edge (original id) and a reverse edge (id + "~r").
inline StreetGraph load_graph(std::string_view text) {
    const auto doc = detail::parse_document(text);
    if (!doc.is_object()) throw ValidationError("malformed document: graph must be a JSON object");

    bool directed = true;
    if (auto it = doc.find("directed"); it != doc.end()) {
        if (!it->is_boolean()) throw ValidationError("malformed document: 'directed' must be boolean");
        directed = it->get<bool>();
    }

    std::vector<Node> nodes;
    const auto& jnodes = detail::require_array(doc, "nodes");
    nodes.reserve(jnodes.size());
    for (const auto& jn : jnodes) {
        if (!jn.is_object() || !jn.contains("id")) throw ValidationError("malformed document: node without id");
        Node n;
        n.id = detail::json_id(jn["id"], "node id");
        n.location = {detail::json_number(jn, "lat", n.id), detail::json_number(jn, "lon", n.id)};
        nodes.push_back(std::move(n));
    }

    std::vector<EdgeSpec> edges;
    const auto& jedges = detail::require_array(doc, "edges");
    edges.reserve(jedges.size() * (directed ? 1 : 2));
    for (const auto& je : jedges) {
        if (!je.is_object() || !je.contains("id")) throw ValidationError("malformed document: edge without id");
        EdgeSpec e;
        e.id = detail::json_id(je["id"], "edge id");
        if (!je.contains("from") || !je.contains("to"))
            throw ValidationError("malformed document: edge '" + e.id + "' missing endpoint", e.id);
        e.from = detail::json_id(je["from"], "edge endpoint");
        e.to = detail::json_id(je["to"], "edge endpoint");
        e.length_m = detail::json_number(je, "length_m", e.id);
        if (!directed) {
            EdgeSpec reverse{e.id + "~r", e.to, e.from, e.length_m};
            edges.push_back(std::move(e));
            edges.push_back(std::move(reverse));
        } else {
            edges.push_back(std::move(e));
        }
    }
    return StreetGraph(std::move(nodes), edges);
}

/// Writes the validated content back as a directed document.
inline std::string serialize_graph(const StreetGraph& g) {
    nlohmann::ordered_json doc;
    doc["directed"] = true;
    auto& jnodes = doc["nodes"] = nlohmann::ordered_json::array();
    for (const auto& n : g.nodes())
        jnodes.push_back({{"id", n.id}, {"lat", n.location.lat}, {"lon", n.location.lon}});
    auto& jedges = doc["edges"] = nlohmann::ordered_json::array();
    for (const auto& e : g.edges())
        jedges.push_back({{"id", e.id}, {"from", g.node(e.from).id}, {"to", g.node(e.to).id}, {"length_m", e.length_m}});
    return doc.dump();
}

inline SharedZoneSet load_zones(std::string_view text) {
    const auto doc = detail::parse_document(text);
    if (!doc.is_object()) throw ValidationError("malformed document: zones must be a JSON object");
    auto read_points = [&](const char* key) {
        std::vector<GeoPoint> out;
        auto it = doc.find(key);
        if (it == doc.end()) return out;
        if (!it->is_array()) throw ValidationError(std::string("malformed document: '") + key + "' must be an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& jp = (*it)[i];
            const std::string owner = std::string(key) + "[" + std::to_string(i) + "]";
            if (!jp.is_object()) throw ValidationError("malformed document: " + owner + " must be an object", owner);
            GeoPoint p{detail::json_number(jp, "lat", owner), detail::json_number(jp, "lon", owner)};
            if (!p.valid()) throw ValidationError(owner + " has out-of-range coordinates", owner);
            out.push_back(p);
        }
        return out;
    };
    return SharedZoneSet{read_points("meso_zones"), read_points("micro_points")};
}

inline std::string serialize_zones(const SharedZoneSet& zones) {
    nlohmann::ordered_json doc;
    auto dump = [](const std::vector<GeoPoint>& pts) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& p : pts) arr.push_back({{"lat", p.lat}, {"lon", p.lon}});
        return arr;
    };
    doc["meso_zones"] = dump(zones.meso_zones);
    doc["micro_points"] = dump(zones.micro_points);
    return doc.dump();
}

// ---------------------------------------------------------------------------
// Query-local subnetwork

struct BoundingBox {
    GeoPoint center;
    double side_m = 0.0;
    double min_lat = 0.0, max_lat = 0.0, min_lon = 0.0, max_lon = 0.0;

    bool contains(const GeoPoint& p) const noexcept {
        return p.lat >= min_lat && p.lat <= max_lat && p.lon >= min_lon && p.lon <= max_lon;
    }
};

/// Axis-aligned lat/lon square of the given side centered at `center`,
/// converted with local meters-per-degree at the center latitude.
inline BoundingBox make_square_box(const GeoPoint& center, double side_m) {
    BoundingBox box;
    box.center = center;
    box.side_m = side_m;
    const double half_lat = side_m / 2.0 / meters_per_degree_lat();
    const double half_lon = side_m / 2.0 / std::max(1e-9, meters_per_degree_lon(center.lat));
    box.min_lat = center.lat - half_lat;
    box.max_lat = center.lat + half_lat;
    box.min_lon = center.lon - half_lon;
    box.max_lon = center.lon + half_lon;
    return box;
}

struct Subnetwork {
    StreetGraph graph;
    std::vector<NodeIndex> parent_node;  // subgraph node -> parent node
    std::vector<EdgeIndex> parent_edge;  // subgraph edge -> parent edge
    BoundingBox box;
    NodeIndex origin = kNoNode;       // in subgraph indexing
    NodeIndex destination = kNoNode;  // in subgraph indexing
};

/// True iff `to` is reachable from `from` along directed edges.
inline bool reachable(const StreetGraph& g, NodeIndex from, NodeIndex to) {
    if (from == to) return true;
    std::vector<char> seen(g.node_count(), 0);
    std::vector<NodeIndex> stack{from};
    seen[from] = 1;
    while (!stack.empty()) {
        const NodeIndex v = stack.back();
        stack.pop_back();
        for (EdgeIndex e : g.out_edges(v)) {
            const NodeIndex w = g.edge(e).to;
            if (w == to) return true;
            if (!seen[w]) {
                seen[w] = 1;
                stack.push_back(w);
            }
        }
    }
    return false;
}

inline constexpr double kDefaultMinSideKm = 5.0;
inline constexpr double kBoxBufferKm = 1.0;

/// Induced subgraph inside the O-D square. Side is
/// max(min_side_km, d(O, D) + 1 km) so that long pairs stay connectable.
inline Subnetwork subnetwork_bbox(const StreetGraph& g, NodeIndex origin, NodeIndex dest,
                                  double min_side_km = kDefaultMinSideKm) {
    if (origin >= g.node_count()) throw ValidationError("origin not in graph");
    if (dest >= g.node_count()) throw ValidationError("destination not in graph");
    if (!(min_side_km > 0.0)) throw ValidationError("min_side_km must be positive");

    const GeoPoint& o = g.location(origin);
    const GeoPoint& d = g.location(dest);
    const double od_m = haversine_m(o, d);
    const double side_m = std::max(min_side_km * 1000.0, od_m + kBoxBufferKm * 1000.0);

    Subnetwork sub;
    sub.box = make_square_box(midpoint(o, d), side_m);

    std::vector<NodeIndex> local(g.node_count(), kNoNode);
    std::vector<Node> nodes;
    for (NodeIndex v = 0; v < g.node_count(); ++v) {
        if (v == origin || v == dest || sub.box.contains(g.location(v))) {
            local[v] = static_cast<NodeIndex>(nodes.size());
            nodes.push_back(g.node(v));
            sub.parent_node.push_back(v);
        }
    }
    std::vector<Edge> edges;
    for (EdgeIndex e = 0; e < g.edge_count(); ++e) {
        const auto& edge = g.edge(e);
        if (local[edge.from] != kNoNode && local[edge.to] != kNoNode) {
            edges.push_back(Edge{edge.id, local[edge.from], local[edge.to], edge.length_m});
            sub.parent_edge.push_back(e);
        }
    }
    sub.graph = StreetGraph(std::move(nodes), std::move(edges));
    sub.origin = local[origin];
    sub.destination = local[dest];

    if (!reachable(sub.graph, sub.origin, sub.destination))
        throw InfeasibleError("origin '" + g.node(origin).id + "' and destination '" + g.node(dest).id +
                                  "' are disconnected within the " + std::to_string(side_m / 1000.0) + " km box",
                              "raise min_side_km");
    return sub;
}

inline Subnetwork subnetwork_bbox(const StreetGraph& g, std::string_view origin, std::string_view dest,
                                  double min_side_km = kDefaultMinSideKm) {
    return subnetwork_bbox(g, g.require_node(origin), g.require_node(dest), min_side_km);
}

// ---------------------------------------------------------------------------
// Shared-space proximity

struct ZoneRadii {
    std::array<double, 3> rings_m{100.0, 200.0, 300.0};
    double micro_m = 100.0;
};

struct ZoneScore {
    std::optional<int> ring;  // 0 = innermost, none = beyond every ring
    bool near_micro = false;

    friend bool operator==(const ZoneScore&, const ZoneScore&) = default;
};

/// Reference point used for zone membership: the edge midpoint.
inline GeoPoint edge_reference_point(const StreetGraph& g, EdgeIndex e) {
    const auto& edge = g.edge(e);
    return midpoint(g.location(edge.from), g.location(edge.to));
}

inline ZoneScore zone_score_at(const GeoPoint& p, const SharedZoneSet& zones, const ZoneRadii& radii = {}) {
    ZoneScore score;
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& c : zones.meso_zones) nearest = std::min(nearest, haversine_m(p, c));
    for (int r = 0; r < 3; ++r) {
        if (nearest <= radii.rings_m[r]) {
            score.ring = r;
            break;
        }
    }
    for (const auto& m : zones.micro_points) {
        if (haversine_m(p, m) <= radii.micro_m) {
            score.near_micro = true;
            break;
        }
    }
    return score;
}

inline ZoneScore edge_zone_scores(const StreetGraph& g, EdgeIndex e, const SharedZoneSet& zones,
                                  const ZoneRadii& radii = {}) {
    return zone_score_at(edge_reference_point(g, e), zones, radii);
}

inline std::vector<ZoneScore> all_edge_zone_scores(const StreetGraph& g, const SharedZoneSet& zones,
                                                   const ZoneRadii& radii = {}) {
    std::vector<ZoneScore> out(g.edge_count());
    if (zones.empty()) return out;
    for (EdgeIndex e = 0; e < g.edge_count(); ++e) out[e] = edge_zone_scores(g, e, zones, radii);
    return out;
}

}  // namespace pmdroute
