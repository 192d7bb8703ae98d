#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include "pmdroute/error.hpp"
#include "pmdroute/geo.hpp"
#include "pmdroute/street_graph.hpp"

namespace pmdroute {

struct GraphPath {
    std::vector<NodeIndex> nodes;
    std::vector<EdgeIndex> edges;
    double cost = 0.0;  // sum of the search weights along `edges`
};

namespace detail {

inline GraphPath unwind(const StreetGraph& g, const std::vector<EdgeIndex>& via, NodeIndex origin, NodeIndex dest,
                        std::span<const double> weight) {
    GraphPath path;
    for (NodeIndex v = dest; v != origin;) {
        const EdgeIndex e = via[v];
        path.edges.push_back(e);
        v = g.edge(e).from;
    }
    std::reverse(path.edges.begin(), path.edges.end());
    path.nodes.push_back(origin);
    for (EdgeIndex e : path.edges) {
        path.nodes.push_back(g.edge(e).to);
        path.cost += weight[e];
    }
    return path;
}

// Best-first search with an optional great-circle lower bound.
// `heuristic_weight` 0 gives plain Dijkstra. Closed nodes are reopened on
// improvement, so a heuristic that is admissible but only approximately
// consistent (rounding) still yields an optimal cost. Equal keys pop the
// smaller node index first.
inline std::optional<GraphPath> best_first(const StreetGraph& g, std::span<const double> weight, NodeIndex origin,
                                           NodeIndex dest, double heuristic_weight) {
    const std::size_t n = g.node_count();
    if (origin >= n || dest >= n) throw ValidationError("search endpoint not in graph");
    if (weight.size() != g.edge_count()) throw ValidationError("weight vector does not match the graph's edges");
    if (origin == dest) return GraphPath{};

    constexpr double inf = std::numeric_limits<double>::infinity();
    const GeoPoint target = g.location(dest);
    auto h = [&](NodeIndex v) { return heuristic_weight > 0.0 ? heuristic_weight * haversine_m(g.location(v), target) : 0.0; };

    std::vector<double> best(n, inf);
    std::vector<EdgeIndex> via(n, kNoNode);
    std::vector<char> closed(n, 0);
    using Item = std::pair<double, NodeIndex>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> open;

    best[origin] = 0.0;
    open.emplace(h(origin), origin);
    while (!open.empty()) {
        const auto [f, v] = open.top();
        open.pop();
        if (closed[v]) continue;
        if (v == dest) return unwind(g, via, origin, dest, weight);
        closed[v] = 1;
        for (EdgeIndex e : g.out_edges(v)) {
            const NodeIndex w = g.edge(e).to;
            const double cand = best[v] + weight[e];
            if (cand < best[w]) {
                best[w] = cand;
                via[w] = e;
                closed[w] = 0;
                open.emplace(cand + h(w), w);
            }
        }
    }
    return std::nullopt;
}

}  // namespace detail

/// A* under arbitrary non-negative weights that dominate edge length.
/// Heuristic: great-circle distance to `dest`, scaled by the graph's
/// heuristic_scale() so it never exceeds the remaining road distance.
inline std::optional<GraphPath> astar(const StreetGraph& g, std::span<const double> weight, NodeIndex origin,
                                      NodeIndex dest) {
    return detail::best_first(g, weight, origin, dest, g.heuristic_scale());
}

/// Reference search without heuristic.
inline std::optional<GraphPath> dijkstra(const StreetGraph& g, std::span<const double> weight, NodeIndex origin,
                                         NodeIndex dest) {
    return detail::best_first(g, weight, origin, dest, 0.0);
}

inline std::vector<double> edge_lengths(const StreetGraph& g) {
    std::vector<double> out(g.edge_count());
    for (EdgeIndex e = 0; e < g.edge_count(); ++e) out[e] = g.edge(e).length_m;
    return out;
}

/// Minimal-length path under raw edge lengths (A*). Throws InfeasibleError
/// when `dest` is unreachable.
inline GraphPath shortest_path(const StreetGraph& g, NodeIndex origin, NodeIndex dest) {
    const auto lengths = edge_lengths(g);
    auto path = astar(g, lengths, origin, dest);
    if (!path)
        throw InfeasibleError("no path from '" + g.node(origin).id + "' to '" + g.node(dest).id + "'");
    return *std::move(path);
}

}  // namespace pmdroute
