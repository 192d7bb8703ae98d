#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pmdroute/centrality.hpp"
#include "pmdroute/error.hpp"
#include "pmdroute/parallel.hpp"
#include "pmdroute/rng.hpp"
#include "pmdroute/search.hpp"
#include "pmdroute/street_graph.hpp"

namespace pmdroute {

// Penalty scores per edge, each multiplied by the O-D shortest-path length
// before being added to the edge length.
struct HazardWeights {
    std::array<double, 3> haz_ring_scores{0.20, 0.16, 0.12};  // inner -> outer ring
    double pa_score = 0.08;                                  // near a micro point
    double bc_max = 0.06;                                    // ceiling of scaled betweenness
    double ic_max = 0.06;                                    // ceiling of scaled usage density

    /// Preset columns 1..3; column 2 is the default.
    static HazardWeights column(int k) {
        switch (k) {
            case 1: return {{0.5, 0.4, 0.3}, 0.2, 0.15, 0.15};
            case 2: return {{0.2, 0.16, 0.12}, 0.08, 0.06, 0.06};
            case 3: return {{0.3, 0.24, 0.18}, 0.12, 0.09, 0.09};
            default: throw ValidationError("hyperparameter column must be 1, 2 or 3");
        }
    }

    static HazardWeights zero() { return {{0.0, 0.0, 0.0}, 0.0, 0.0, 0.0}; }

    HazardWeights scaled(double factor) const {
        return {{haz_ring_scores[0] * factor, haz_ring_scores[1] * factor, haz_ring_scores[2] * factor},
                pa_score * factor, bc_max * factor, ic_max * factor};
    }

    void validate() const {
        auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
        for (double v : haz_ring_scores)
            if (!ok(v)) throw ValidationError("hazard scores must be finite and >= 0");
        if (!ok(pa_score) || !ok(bc_max) || !ok(ic_max)) throw ValidationError("hazard scores must be finite and >= 0");
        if (haz_ring_scores[0] < haz_ring_scores[1] || haz_ring_scores[1] < haz_ring_scores[2])
            throw ValidationError("ring hazard scores must be non-increasing from inner to outer ring");
    }

    friend bool operator==(const HazardWeights&, const HazardWeights&) = default;
};

// Dimensionless scores of one edge.
struct EdgeHazard {
    double haz = 0.0;
    double pa = 0.0;
    double bc = 0.0;
    double ic = 0.0;

    double total() const noexcept { return haz + pa + bc + ic; }
};

struct WeightedEdges {
    EdgeScalarField weight;           // length + total score * L_sp
    std::vector<EdgeHazard> scores;   // per edge, dimensionless
    double comparable_length_m = 0.0; // L_sp
};

/// weight(e) = length(e) + (HAZ + PA + BC + IC) * L_sp.
/// `bc` and `ic` must already be scaled to [0, bc_max] / [0, ic_max].
inline WeightedEdges assign_edge_weights(const StreetGraph& sub, const SharedZoneSet& zones,
                                         const EdgeScalarField& bc, double shortest_length_m,
                                         const HazardWeights& w, const EdgeScalarField* ic = nullptr,
                                         const ZoneRadii& radii = {}) {
    w.validate();
    if (bc.size() != sub.edge_count()) throw ValidationError("betweenness field does not match the subnetwork's edges");
    if (ic && ic->size() != sub.edge_count()) throw ValidationError("usage-density field does not match the subnetwork's edges");
    if (!(shortest_length_m > 0.0) || !std::isfinite(shortest_length_m))
        throw ValidationError("comparable length must be positive");

    const auto zone = all_edge_zone_scores(sub, zones, radii);
    WeightedEdges out;
    out.comparable_length_m = shortest_length_m;
    out.weight.values.resize(sub.edge_count());
    out.scores.resize(sub.edge_count());
    for (EdgeIndex e = 0; e < sub.edge_count(); ++e) {
        EdgeHazard s;
        if (zone[e].ring) s.haz = w.haz_ring_scores[static_cast<std::size_t>(*zone[e].ring)];
        if (zone[e].near_micro) s.pa = w.pa_score;
        s.bc = bc[e];
        if (ic) s.ic = (*ic)[e];
        if (!(s.bc >= 0.0) || !(s.ic >= 0.0)) throw ValidationError("edge '" + sub.edge(e).id + "' has a negative score", sub.edge(e).id);
        out.scores[e] = s;
        out.weight[e] = sub.edge(e).length_m + s.total() * shortest_length_m;
    }
    return out;
}

// Raw (unscaled) betweenness per subnetwork, keyed by the subnetwork's node
// set. Thread-safe; a key computed twice concurrently yields identical values.
class CentralityCache {
public:
    std::shared_ptr<const EdgeScalarField> get(const Subnetwork& sub, unsigned jobs = 1) {
        {
            std::lock_guard lock(mutex_);
            if (auto it = entries_.find(sub.parent_node); it != entries_.end()) {
                ++hits_;
                return it->second;
            }
        }
        BetweennessOptions opts;
        opts.jobs = jobs;
        auto field = std::make_shared<const EdgeScalarField>(edge_betweenness(sub.graph, opts));
        std::lock_guard lock(mutex_);
        ++misses_;
        return entries_.emplace(sub.parent_node, std::move(field)).first->second;
    }

    std::size_t hits() const {
        std::lock_guard lock(mutex_);
        return hits_;
    }
    std::size_t misses() const {
        std::lock_guard lock(mutex_);
        return misses_;
    }

private:
    mutable std::mutex mutex_;
    std::map<std::vector<NodeIndex>, std::shared_ptr<const EdgeScalarField>> entries_;
    std::size_t hits_ = 0, misses_ = 0;
};

struct RouteQuery {
    std::string origin;
    std::string destination;
    HazardWeights weights{};
    const EdgeScalarField* ic_layer = nullptr;  // raw, keyed by the full graph's edges
    double min_side_km = kDefaultMinSideKm;
};

struct RouteOptions {
    unsigned jobs = 1;
    CentralityCache* cache = nullptr;
    bool verify_with_dijkstra = false;
    ZoneRadii radii{};
};

// Penalty contributions in meters (score * L_sp) for one edge on the route.
struct EdgeContribution {
    EdgeIndex edge = 0;  // full-graph edge index
    double length_m = 0.0;
    double haz = 0.0;
    double pa = 0.0;
    double bc = 0.0;
    double ic = 0.0;
};

struct RouteResult {
    std::vector<NodeIndex> node_path;  // full-graph node indices
    std::vector<EdgeIndex> edge_path;  // full-graph edge indices
    double length_m = 0.0;
    double weighted_cost = 0.0;
    double shortest_length_m = 0.0;
    double increment_pct = 0.0;
    std::vector<EdgeContribution> breakdown;

    std::vector<NodeIndex> shortest_node_path;
    std::vector<EdgeIndex> shortest_edge_path;
    double box_side_m = 0.0;
    std::size_t subnetwork_nodes = 0;
    std::optional<double> reference_cost;  // Dijkstra on the same weights, when requested
};

/// Full pipeline: O-D shortest length on the whole graph, square subnetwork,
/// betweenness on the subnetwork scaled to bc_max, social weights, A*.
inline RouteResult plan_social_route(const StreetGraph& g, const SharedZoneSet& zones, const RouteQuery& q,
                                     const RouteOptions& opts = {}) {
    q.weights.validate();
    const NodeIndex o = g.require_node(q.origin);
    const NodeIndex d = g.require_node(q.destination);
    if (q.ic_layer && q.ic_layer->size() != g.edge_count())
        throw ValidationError("usage-density layer does not match the graph's edges");

    RouteResult result;
    if (o == d) return result;

    const GraphPath shortest = shortest_path(g, o, d);
    result.shortest_node_path = shortest.nodes;
    result.shortest_edge_path = shortest.edges;
    result.shortest_length_m = shortest.cost;

    const Subnetwork sub = subnetwork_bbox(g, o, d, q.min_side_km);
    result.box_side_m = sub.box.side_m;
    result.subnetwork_nodes = sub.graph.node_count();

    std::shared_ptr<const EdgeScalarField> raw_bc;
    if (opts.cache) {
        raw_bc = opts.cache->get(sub, opts.jobs);
    } else {
        BetweennessOptions bopts;
        bopts.jobs = opts.jobs;
        raw_bc = std::make_shared<const EdgeScalarField>(edge_betweenness(sub.graph, bopts));
    }
    const EdgeScalarField bc = sub.graph.edge_count() > 0 ? minmax_scale(*raw_bc, q.weights.bc_max) : EdgeScalarField{};

    std::optional<EdgeScalarField> ic;
    if (q.ic_layer && sub.graph.edge_count() > 0) ic = minmax_scale(restrict_field(*q.ic_layer, sub), q.weights.ic_max);

    const WeightedEdges weighted = assign_edge_weights(sub.graph, zones, bc, result.shortest_length_m, q.weights,
                                                       ic ? &*ic : nullptr, opts.radii);

    auto path = astar(sub.graph, weighted.weight.values, sub.origin, sub.destination);
    if (!path) throw InfeasibleError("no route inside the subnetwork", "raise min_side_km");

    result.weighted_cost = path->cost;
    const double lsp = result.shortest_length_m;
    for (NodeIndex v : path->nodes) result.node_path.push_back(sub.parent_node[v]);
    for (EdgeIndex e : path->edges) {
        const EdgeIndex parent = sub.parent_edge[e];
        const double len = sub.graph.edge(e).length_m;
        const auto& s = weighted.scores[e];
        result.edge_path.push_back(parent);
        result.length_m += len;
        result.breakdown.push_back({parent, len, s.haz * lsp, s.pa * lsp, s.bc * lsp, s.ic * lsp});
    }
    result.increment_pct = 100.0 * (result.length_m - lsp) / lsp;

    if (opts.verify_with_dijkstra) {
        auto ref = dijkstra(sub.graph, weighted.weight.values, sub.origin, sub.destination);
        if (ref) result.reference_cost = ref->cost;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Batch O-D experiment

struct BatchOptions {
    std::size_t n_pairs = 1000;
    double dist_min_km = 4.5;
    double dist_max_km = 6.5;
    HazardWeights weights{};
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    double min_side_km = kDefaultMinSideKm;
    bool verify_with_dijkstra = false;
    CentralityCache* cache = nullptr;
    std::size_t max_draws = 0;     // 0 -> 2000 * n_pairs + 10000
    std::size_t max_attempts = 0;  // routing attempts; 0 -> 4 * n_pairs + 100
};

struct PairRecord {
    NodeIndex origin = 0;
    NodeIndex destination = 0;
    double od_distance_m = 0.0;
    double shortest_m = 0.0;
    double new_m = 0.0;
    double increment_pct = 0.0;
    double weighted_cost = 0.0;
    std::optional<double> reference_cost;
};

struct BatchStats {
    std::size_t n_pairs = 0;
    double avg_shortest_m = 0.0;
    double avg_new_m = 0.0;
    double increment_pct = 0.0;  // from the two averages
    std::vector<PairRecord> per_pair_records;
    std::size_t draws = 0;
    std::size_t skipped_disconnected = 0;
};

/// Samples O-D pairs whose great-circle distance lies in the range, routes
/// each, and aggregates. Pair selection and aggregation follow draw order,
/// so the result depends only on the seed.
inline BatchStats batch_experiment(const StreetGraph& g, const SharedZoneSet& zones, const BatchOptions& opts) {
    if (opts.n_pairs < 1) throw ValidationError("n_pairs must be >= 1");
    if (!(opts.dist_min_km >= 0.0) || !(opts.dist_max_km >= opts.dist_min_km))
        throw ValidationError("distance range must satisfy 0 <= min <= max");
    if (g.node_count() < 2) throw ValidationError("graph needs at least 2 nodes");
    opts.weights.validate();

    const std::size_t max_draws = opts.max_draws ? opts.max_draws : 2000 * opts.n_pairs + 10000;
    const std::size_t max_attempts = opts.max_attempts ? opts.max_attempts : 4 * opts.n_pairs + 100;
    const double lo_m = opts.dist_min_km * 1000.0;
    const double hi_m = opts.dist_max_km * 1000.0;

    SeededRng rng(opts.seed);
    const std::uint64_t n = g.node_count();

    BatchStats stats;
    std::size_t attempts = 0;
    while (stats.per_pair_records.size() < opts.n_pairs && attempts < max_attempts) {
        const std::size_t need = std::min(opts.n_pairs - stats.per_pair_records.size(), max_attempts - attempts);
        std::vector<PairRecord> candidates;
        while (candidates.size() < need && stats.draws < max_draws) {
            ++stats.draws;
            const auto o = static_cast<NodeIndex>(rng.index(n));
            const auto d = static_cast<NodeIndex>(rng.index(n));
            if (o == d) continue;
            const double dist = haversine_m(g.location(o), g.location(d));
            if (dist < lo_m || dist > hi_m) continue;
            candidates.push_back(PairRecord{o, d, dist});
        }
        if (candidates.empty()) break;
        attempts += candidates.size();

        std::vector<std::optional<RouteResult>> routed(candidates.size());
        parallel_for(candidates.size(), opts.jobs, [&](std::size_t i) {
            RouteQuery q{g.node(candidates[i].origin).id, g.node(candidates[i].destination).id, opts.weights, nullptr,
                         opts.min_side_km};
            RouteOptions ro;
            ro.cache = opts.cache;
            ro.verify_with_dijkstra = opts.verify_with_dijkstra;
            try {
                routed[i] = plan_social_route(g, zones, q, ro);
            } catch (const InfeasibleError&) {
                routed[i].reset();
            }
        });

        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (!routed[i]) {
                ++stats.skipped_disconnected;
                continue;
            }
            PairRecord rec = candidates[i];
            rec.shortest_m = routed[i]->shortest_length_m;
            rec.new_m = routed[i]->length_m;
            rec.increment_pct = routed[i]->increment_pct;
            rec.weighted_cost = routed[i]->weighted_cost;
            rec.reference_cost = routed[i]->reference_cost;
            stats.per_pair_records.push_back(rec);
        }
    }

    if (stats.per_pair_records.size() < opts.n_pairs)
        throw InfeasibleError("found " + std::to_string(stats.per_pair_records.size()) + " of " +
                                  std::to_string(opts.n_pairs) + " feasible O-D pairs",
                              "widen the distance range or use a larger graph");

    stats.n_pairs = stats.per_pair_records.size();
    double sum_shortest = 0.0, sum_new = 0.0;
    for (const auto& r : stats.per_pair_records) {
        sum_shortest += r.shortest_m;
        sum_new += r.new_m;
    }
    stats.avg_shortest_m = sum_shortest / static_cast<double>(stats.n_pairs);
    stats.avg_new_m = sum_new / static_cast<double>(stats.n_pairs);
    stats.increment_pct = 100.0 * (stats.avg_new_m - stats.avg_shortest_m) / stats.avg_shortest_m;
    return stats;
}

}  // namespace pmdroute
