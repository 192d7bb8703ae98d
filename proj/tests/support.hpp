#pragma once

// Fixtures and brute-force oracles shared by the unit and acceptance tests.
// The oracles enumerate simple paths directly and share no code with the
// library's search or accumulation kernels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "pmdroute/geo.hpp"
#include "pmdroute/street_graph.hpp"

namespace testing_support {

using pmdroute::EdgeIndex;
using pmdroute::GeoPoint;
using pmdroute::Node;
using pmdroute::NodeIndex;
using pmdroute::StreetGraph;

inline constexpr GeoPoint kAnchor{28.60, 77.20};

/// Point at (east, north) meters from a fixed anchor.
inline GeoPoint at_m(double east, double north) { return pmdroute::offset_m(kAnchor, east, north); }

struct EdgeDef {
    std::string id, from, to;
    double length_m;
};

inline StreetGraph make_graph(const std::vector<std::pair<std::string, GeoPoint>>& nodes,
                              const std::vector<EdgeDef>& edges) {
    std::vector<Node> ns;
    for (const auto& [id, p] : nodes) ns.push_back({id, p});
    std::vector<pmdroute::EdgeSpec> es;
    for (const auto& e : edges) es.push_back({e.id, e.from, e.to, e.length_m});
    return StreetGraph(std::move(ns), es);
}

/// Random digraph on n nodes placed within a few hundred meters. With
/// `integer_lengths` the lengths come from {1, 2, 3} * 100 m so equal-length
/// shortest paths are common.
inline StreetGraph random_digraph(std::mt19937_64& rng, std::size_t n, double edge_prob, bool integer_lengths) {
    std::uniform_real_distribution<double> coord(0.0, 400.0), unit(0.0, 1.0), len(10.0, 500.0);
    std::uniform_int_distribution<int> step(1, 3);
    std::vector<std::pair<std::string, GeoPoint>> nodes;
    for (std::size_t i = 0; i < n; ++i) nodes.push_back({"n" + std::to_string(i), at_m(coord(rng), coord(rng))});
    std::vector<EdgeDef> edges;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            if (a == b || unit(rng) >= edge_prob) continue;
            const double l = integer_lengths ? 100.0 * step(rng) : len(rng);
            edges.push_back({"e" + std::to_string(a) + "_" + std::to_string(b), nodes[a].first, nodes[b].first, l});
        }
    return make_graph(nodes, edges);
}

/// Calls visit(edges, length) for every simple path s -> t whose running
/// length stays within `bound(current best)`. Lengths accumulate from s.
inline void for_each_simple_path(const StreetGraph& g, const std::vector<double>& w, NodeIndex s, NodeIndex t,
                                 const std::function<void(const std::vector<EdgeIndex>&, double)>& visit,
                                 double rel_tol) {
    std::vector<char> on_path(g.node_count(), 0);
    std::vector<EdgeIndex> path;
    double best = std::numeric_limits<double>::infinity();
    std::function<void(NodeIndex, double)> dfs = [&](NodeIndex v, double len) {
        if (len > best + rel_tol * std::max(1.0, best)) return;
        if (v == t) {
            best = std::min(best, len);
            visit(path, len);
            return;
        }
        on_path[v] = 1;
        for (EdgeIndex e = 0; e < g.edge_count(); ++e) {
            const auto& edge = g.edge(e);
            if (edge.from != v || on_path[edge.to]) continue;
            path.push_back(e);
            dfs(edge.to, len + w[e]);
            path.pop_back();
        }
        on_path[v] = 0;
    };
    dfs(s, 0.0);
}

/// Exhaustive normalized edge betweenness: for every ordered reachable pair,
/// all shortest simple paths (lengths equal within the relative tolerance)
/// share one unit of flow equally.
inline std::vector<double> oracle_betweenness(const StreetGraph& g, bool hop_count = false, double rel_tol = 1e-10) {
    const std::size_t n = g.node_count();
    std::vector<double> w(g.edge_count());
    for (EdgeIndex e = 0; e < g.edge_count(); ++e) w[e] = hop_count ? 1.0 : g.edge(e).length_m;
    std::vector<double> cb(g.edge_count(), 0.0);
    for (NodeIndex s = 0; s < n; ++s)
        for (NodeIndex t = 0; t < n; ++t) {
            if (s == t) continue;
            std::vector<std::pair<std::vector<EdgeIndex>, double>> found;
            for_each_simple_path(g, w, s, t, [&](const auto& p, double len) { found.push_back({p, len}); }, rel_tol);
            if (found.empty()) continue;
            double best = std::numeric_limits<double>::infinity();
            for (const auto& f : found) best = std::min(best, f.second);
            std::vector<double> through(g.edge_count(), 0.0);
            double sigma = 0.0;
            for (const auto& [p, len] : found) {
                if (len > best + rel_tol * std::max(1.0, best)) continue;
                sigma += 1.0;
                for (EdgeIndex e : p) through[e] += 1.0;
            }
            for (EdgeIndex e = 0; e < g.edge_count(); ++e) cb[e] += through[e] / sigma;
        }
    const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(n - 1));
    for (auto& v : cb) v *= norm;
    return cb;
}

/// Minimum path cost s -> t by enumerating every simple path; +inf if none.
inline double oracle_min_cost(const StreetGraph& g, const std::vector<double>& w, NodeIndex s, NodeIndex t) {
    if (s == t) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for_each_simple_path(g, w, s, t, [&](const auto&, double len) { best = std::min(best, len); }, 0.0);
    return best;
}

struct DetourFixture {
    StreetGraph graph;
    pmdroute::SharedZoneSet zones;
};

/// Six nodes, two routes O -> D. Direct: O-P-D, 500 m + 500 m, where the
/// O-P midpoint is a meso zone center (inner ring). Detour: O-Q1-Q2-Q3-D,
/// clear of the zone, total `detour_m` (the Q2-Q3 leg absorbs the change).
inline DetourFixture detour_fixture(double detour_m) {
    const double q2q3 = detour_m - 900.0;
    DetourFixture f{make_graph({{"O", at_m(0, 0)},
                                {"P", at_m(500, 0)},
                                {"D", at_m(1000, 0)},
                                {"Q1", at_m(100, 800)},
                                {"Q2", at_m(500, 900)},
                                {"Q3", at_m(900, 800)}},
                               {{"OP", "O", "P", 500},
                                {"PD", "P", "D", 500},
                                {"OQ1", "O", "Q1", 300},
                                {"Q1Q2", "Q1", "Q2", 300},
                                {"Q2Q3", "Q2", "Q3", q2q3},
                                {"Q3D", "Q3", "D", 300}}),
                    {}};
    f.zones.meso_zones.push_back(at_m(250, 0));
    return f;
}

}  // namespace testing_support
