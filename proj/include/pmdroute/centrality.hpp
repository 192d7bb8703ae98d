#pragma once

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "pmdroute/error.hpp"
#include "pmdroute/parallel.hpp"
#include "pmdroute/street_graph.hpp"

namespace pmdroute {

// One value per edge, aligned with the edge indices of the graph it was
// computed on.
struct EdgeScalarField {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    bool empty() const noexcept { return values.empty(); }
    double operator[](EdgeIndex e) const { return values[e]; }
    double& operator[](EdgeIndex e) { return values[e]; }

    friend bool operator==(const EdgeScalarField&, const EdgeScalarField&) = default;
};

/// Builds a field from an id-keyed map; keys must match the graph's edges exactly.
inline EdgeScalarField field_from_map(const StreetGraph& g, const std::unordered_map<std::string, double>& by_id) {
    EdgeScalarField field{std::vector<double>(g.edge_count(), 0.0)};
    for (const auto& [id, value] : by_id) {
        auto e = g.find_edge(id);
        if (!e) throw ValidationError("field key '" + id + "' is not an edge of the graph", id);
        if (!(value >= 0.0) || !std::isfinite(value))
            throw ValidationError("field value for '" + id + "' must be finite and >= 0", id);
        field[*e] = value;
    }
    if (by_id.size() != g.edge_count()) {
        for (const auto& e : g.edges())
            if (!by_id.contains(e.id)) throw ValidationError("field is missing edge '" + e.id + "'", e.id);
    }
    return field;
}

/// Restricts a parent-graph field to a subnetwork.
inline EdgeScalarField restrict_field(const EdgeScalarField& parent, const Subnetwork& sub) {
    EdgeScalarField out{std::vector<double>(sub.parent_edge.size())};
    for (std::size_t i = 0; i < sub.parent_edge.size(); ++i) out.values[i] = parent.values.at(sub.parent_edge[i]);
    return out;
}

struct BetweennessOptions {
    bool hop_count = false;  // unit edge weights; testing aid only
    bool normalized = true;  // multiply by 1/(n(n-1))
    unsigned jobs = 1;
};

namespace detail {

// Two path lengths are the same shortest length when they agree to this
// relative tolerance. Absorbs summation-order rounding while staying far
// below any physical length difference.
inline constexpr double kTieRelTol = 1e-10;

// Flat adjacency for the inner loops: targets and weights stored
// contiguously instead of chasing Edge records.
struct CompactAdjacency {
    std::vector<std::uint32_t> out_offset, out_target;
    std::vector<double> out_weight;
    std::vector<std::uint32_t> in_offset, in_source, in_edge;
    std::vector<double> in_weight;
    double min_weight = std::numeric_limits<double>::infinity();
    double max_weight = 0.0;

    CompactAdjacency(const StreetGraph& g, const std::vector<double>& weight) {
        for (double w : weight) {
            min_weight = std::min(min_weight, w);
            max_weight = std::max(max_weight, w);
        }
        const std::size_t n = g.node_count();
        out_offset.assign(n + 1, 0);
        in_offset.assign(n + 1, 0);
        for (NodeIndex v = 0; v < n; ++v) {
            out_offset[v + 1] = out_offset[v] + static_cast<std::uint32_t>(g.out_edges(v).size());
            in_offset[v + 1] = in_offset[v] + static_cast<std::uint32_t>(g.in_edges(v).size());
            for (EdgeIndex e : g.out_edges(v)) {
                out_target.push_back(g.edge(e).to);
                out_weight.push_back(weight[e]);
            }
            for (EdgeIndex e : g.in_edges(v)) {
                in_source.push_back(g.edge(e).from);
                in_edge.push_back(e);
                in_weight.push_back(weight[e]);
            }
        }
    }
};

// Reusable single-source workspace for the Brandes accumulation.
class BrandesWorkspace {
public:
    explicit BrandesWorkspace(std::size_t n)
        : dist_(n, std::numeric_limits<double>::infinity()), sigma_(n, 0.0), delta_(n, 0.0), settled_(n, 0), pos_(n, kAbsent) {
        order_.reserve(n);
        heap_.reserve(n);
    }

    // Adds the dependency of source `s` on every edge into `acc`.
    void accumulate(const CompactAdjacency& adj, NodeIndex s, std::vector<double>& acc) {
        order_.clear();
        dist_[s] = 0.0;
        if (use_buckets(adj)) settle_bucketed(adj, s);
        else settle_heap(adj, s);

        // Path counts, in settle order so every predecessor is final. Tight
        // in-edges are recorded once and reused by the dependency pass.
        // Unreached sources have infinite distance and never qualify.
        sigma_[s] = 1.0;
        pred_begin_.resize(order_.size() + 1);
        pred_slots_.clear();
        pred_begin_[0] = pred_begin_[1] = 0;
        for (std::size_t k = 1; k < order_.size(); ++k) {
            const NodeIndex w = order_[k];
            const double dw = dist_[w];
            const double limit = dw + kTieRelTol * std::max(1.0, dw);
            double count = 0.0;
            for (std::uint32_t i = adj.in_offset[w]; i < adj.in_offset[w + 1]; ++i) {
                const NodeIndex v = adj.in_source[i];
                if (dist_[v] + adj.in_weight[i] <= limit) {
                    count += sigma_[v];
                    pred_slots_.push_back(i);
                }
            }
            sigma_[w] = count;
            pred_begin_[k + 1] = static_cast<std::uint32_t>(pred_slots_.size());
        }

        // Dependencies, in reverse settle order.
        for (std::size_t k = order_.size(); k-- > 1;) {
            const NodeIndex w = order_[k];
            const double coeff = (1.0 + delta_[w]) / sigma_[w];
            for (std::uint32_t p = pred_begin_[k]; p < pred_begin_[k + 1]; ++p) {
                const std::uint32_t i = pred_slots_[p];
                const NodeIndex v = adj.in_source[i];
                const double c = sigma_[v] * coeff;
                acc[adj.in_edge[i]] += c;
                delta_[v] += c;
            }
        }

        for (NodeIndex v : order_) {
            dist_[v] = std::numeric_limits<double>::infinity();
            sigma_[v] = 0.0;
            delta_[v] = 0.0;
            settled_[v] = 0;
        }
    }

private:
    // Bucket widths up to this many per longest edge use the bucket queue.
    static constexpr double kMaxBucketRing = 65536.0;

    static bool use_buckets(const CompactAdjacency& adj) noexcept {
        return std::isfinite(adj.min_weight) && adj.min_weight > 0.0 && adj.max_weight / adj.min_weight < kMaxBucketRing;
    }

    void settle_heap(const CompactAdjacency& adj, NodeIndex s) {
        push(s);
        while (!heap_.empty()) {
            const NodeIndex v = pop();
            settled_[v] = 1;
            order_.push_back(v);
            const double d = dist_[v];
            for (std::uint32_t k = adj.out_offset[v]; k < adj.out_offset[v + 1]; ++k) {
                const NodeIndex w = adj.out_target[k];
                const double nd = d + adj.out_weight[k];
                if (nd < dist_[w]) {
                    dist_[w] = nd;
                    if (pos_[w] == kAbsent) push(w);
                    else decrease(w);
                }
            }
        }
    }

    // Dial-style bucket queue. Bucket width is just under the lightest
    // edge, so a relaxation always lands in a later bucket: nodes sharing a
    // bucket never improve each other and every tight predecessor of a node
    // settles in an earlier bucket. Distances are therefore exact and the
    // settle order is a valid order for the counting passes.
    void settle_bucketed(const CompactAdjacency& adj, NodeIndex s) {
        const double width = adj.min_weight * (1.0 - 1e-9);
        const std::size_t ring = static_cast<std::size_t>(adj.max_weight / width) + 2;
        if (buckets_.size() != ring) buckets_.assign(ring, {});
        auto bucket_of = [&](double d) { return static_cast<std::size_t>(d / width); };

        buckets_[0].push_back(s);
        std::size_t pending = 1;
        for (std::size_t current = 0; pending > 0; ++current) {
            auto& slot = buckets_[current % ring];
            for (std::size_t i = 0; i < slot.size(); ++i) {
                const NodeIndex v = slot[i];
                --pending;
                if (settled_[v] || bucket_of(dist_[v]) != current) continue;
                settled_[v] = 1;
                order_.push_back(v);
                const double d = dist_[v];
                for (std::uint32_t k = adj.out_offset[v]; k < adj.out_offset[v + 1]; ++k) {
                    const NodeIndex w = adj.out_target[k];
                    const double nd = d + adj.out_weight[k];
                    if (nd < dist_[w]) {
                        dist_[w] = nd;
                        buckets_[bucket_of(nd) % ring].push_back(w);
                        ++pending;
                    }
                }
            }
            slot.clear();
        }
    }

    // Indexed 4-ary min-heap keyed by tentative distance; keys are stored
    // inline so sifting touches one array. Ties order by node index.
    static constexpr std::uint32_t kAbsent = std::numeric_limits<std::uint32_t>::max();

    struct HeapItem {
        double key;
        NodeIndex node;
        bool operator<(const HeapItem& o) const noexcept { return key < o.key || (key == o.key && node < o.node); }
    };

    void push(NodeIndex v) {
        pos_[v] = static_cast<std::uint32_t>(heap_.size());
        heap_.push_back({dist_[v], v});
        sift_up(pos_[v]);
    }

    void decrease(NodeIndex v) {
        heap_[pos_[v]].key = dist_[v];
        sift_up(pos_[v]);
    }

    NodeIndex pop() {
        const NodeIndex top = heap_.front().node;
        const HeapItem last = heap_.back();
        heap_.pop_back();
        pos_[top] = kAbsent;
        if (!heap_.empty()) {
            heap_[0] = last;
            sift_down(0);
        }
        return top;
    }

    void sift_up(std::uint32_t i) {
        const HeapItem item = heap_[i];
        while (i > 0) {
            const std::uint32_t parent = (i - 1) / 4;
            if (!(item < heap_[parent])) break;
            heap_[i] = heap_[parent];
            pos_[heap_[i].node] = i;
            i = parent;
        }
        heap_[i] = item;
        pos_[item.node] = i;
    }

    void sift_down(std::uint32_t i) {
        const HeapItem item = heap_[i];
        const std::uint32_t size = static_cast<std::uint32_t>(heap_.size());
        for (;;) {
            const std::uint32_t first = 4 * i + 1;
            if (first >= size) break;
            std::uint32_t best = first;
            const std::uint32_t last = std::min(size, first + 4);
            for (std::uint32_t c = first + 1; c < last; ++c)
                if (heap_[c] < heap_[best]) best = c;
            if (!(heap_[best] < item)) break;
            heap_[i] = heap_[best];
            pos_[heap_[i].node] = i;
            i = best;
        }
        heap_[i] = item;
        pos_[item.node] = i;
    }

    std::vector<double> dist_, sigma_, delta_;
    std::vector<char> settled_;
    std::vector<std::uint32_t> pos_;
    std::vector<NodeIndex> order_;
    std::vector<HeapItem> heap_;
    std::vector<std::uint32_t> pred_begin_, pred_slots_;
    std::vector<std::vector<NodeIndex>> buckets_;
};

// Sources are grouped in fixed-size blocks; partial sums are formed per
// block and added in block order, so results are bit-identical for any
// worker count.
inline constexpr std::size_t kBrandesBlock = 64;

}  // namespace detail

/// Edge betweenness over all ordered node pairs, shortest paths by edge
/// length, equal-length paths all counted. Unreachable pairs contribute 0.
inline EdgeScalarField edge_betweenness(const StreetGraph& g, const BetweennessOptions& opts = {}) {
    const std::size_t n = g.node_count();
    const std::size_t m = g.edge_count();
    if (n < 2) throw ValidationError("edge betweenness needs at least 2 nodes");

    std::vector<double> weight(m);
    for (EdgeIndex e = 0; e < m; ++e) weight[e] = opts.hop_count ? 1.0 : g.edge(e).length_m;

    const detail::CompactAdjacency adj(g, weight);
    EdgeScalarField total{std::vector<double>(m, 0.0)};
    const std::size_t n_blocks = (n + detail::kBrandesBlock - 1) / detail::kBrandesBlock;
    const unsigned jobs = std::max(1u, opts.jobs);

    std::vector<std::vector<double>> partial(std::min<std::size_t>(jobs, n_blocks), std::vector<double>(m));
    for (std::size_t round = 0; round < n_blocks; round += partial.size()) {
        const std::size_t in_round = std::min(partial.size(), n_blocks - round);
        parallel_for(in_round, jobs, [&](std::size_t slot) {
            auto& acc = partial[slot];
            std::fill(acc.begin(), acc.end(), 0.0);
            detail::BrandesWorkspace ws(n);
            const std::size_t block = round + slot;
            const std::size_t first = block * detail::kBrandesBlock;
            const std::size_t last = std::min(n, first + detail::kBrandesBlock);
            for (std::size_t s = first; s < last; ++s) ws.accumulate(adj, static_cast<NodeIndex>(s), acc);
        });
        for (std::size_t slot = 0; slot < in_round; ++slot)
            for (std::size_t e = 0; e < m; ++e) total.values[e] += partial[slot][e];
    }

    if (opts.normalized) {
        const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(n - 1));
        for (auto& v : total.values) v *= scale;
    }
    return total;
}

/// v -> target_max * (v - min) / (max - min). A constant field maps to all zeros.
inline EdgeScalarField minmax_scale(const EdgeScalarField& field, double target_max) {
    if (field.empty()) throw ValidationError("cannot min-max scale an empty field");
    if (!(target_max >= 0.0) || !std::isfinite(target_max)) throw ValidationError("target_max must be finite and >= 0");
    const auto [lo_it, hi_it] = std::minmax_element(field.values.begin(), field.values.end());
    const double lo = *lo_it;
    const double span = *hi_it - lo;
    EdgeScalarField out{std::vector<double>(field.size(), 0.0)};
    if (!(span > 0.0)) return out;
    for (std::size_t i = 0; i < field.size(); ++i) {
        // clamp guards the top value against a one-ulp overshoot
        out.values[i] = std::min(target_max, target_max * ((field.values[i] - lo) / span));
    }
    return out;
}

}  // namespace pmdroute
