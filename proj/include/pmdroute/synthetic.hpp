#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pmdroute/error.hpp"
#include "pmdroute/geo.hpp"
#include "pmdroute/rng.hpp"
#include "pmdroute/street_graph.hpp"

namespace pmdroute {

struct GridCitySpec {
    std::size_t rows = 60;
    std::size_t cols = 60;
    double spacing_m = 100.0;
    GeoPoint south_west{28.55, 77.15};
    std::size_t meso_zones = 6;
    std::size_t micro_points = 12;
    double zone_margin_m = 500.0;  // keep planted zones this far from the border
    double jitter_m = 20.0;        // max per-axis displacement of each intersection
    std::uint64_t seed = 0;
};

struct GridCity {
    StreetGraph graph;
    SharedZoneSet zones;
};

inline std::string grid_node_id(std::size_t row, std::size_t col) {
    return "r" + std::to_string(row) + "c" + std::to_string(col);
}

/// Two-way street grid with seeded intersection jitter and shared-space zones. Every street is two
/// directed edges whose length is the great-circle distance of its ends.
inline GridCity make_grid_city(const GridCitySpec& spec) {
    if (spec.rows < 2 || spec.cols < 2) throw ValidationError("grid needs at least 2x2 nodes");
    if (!(spec.spacing_m > 0.0)) throw ValidationError("grid spacing must be positive");

    if (!(spec.jitter_m >= 0.0) || spec.jitter_m >= spec.spacing_m / 2.0)
        throw ValidationError("jitter must lie in [0, spacing / 2)");

    SeededRng rng(spec.seed);
    std::vector<Node> nodes;
    nodes.reserve(spec.rows * spec.cols);
    for (std::size_t r = 0; r < spec.rows; ++r)
        for (std::size_t c = 0; c < spec.cols; ++c) {
            const double dx = spec.jitter_m > 0.0 ? rng.uniform(-spec.jitter_m, spec.jitter_m) : 0.0;
            const double dy = spec.jitter_m > 0.0 ? rng.uniform(-spec.jitter_m, spec.jitter_m) : 0.0;
            nodes.push_back({grid_node_id(r, c), offset_m(spec.south_west, static_cast<double>(c) * spec.spacing_m + dx,
                                                          static_cast<double>(r) * spec.spacing_m + dy)});
        }

    auto at = [&](std::size_t r, std::size_t c) { return static_cast<NodeIndex>(r * spec.cols + c); };
    std::vector<Edge> edges;
    edges.reserve(4 * spec.rows * spec.cols);
    auto street = [&](NodeIndex a, NodeIndex b) {
        const double len = haversine_m(nodes[a].location, nodes[b].location);
        const std::string base = nodes[a].id + "-" + nodes[b].id;
        edges.push_back({base, a, b, len});
        edges.push_back({base + "~r", b, a, len});
    };
    for (std::size_t r = 0; r < spec.rows; ++r)
        for (std::size_t c = 0; c < spec.cols; ++c) {
            if (c + 1 < spec.cols) street(at(r, c), at(r, c + 1));
            if (r + 1 < spec.rows) street(at(r, c), at(r + 1, c));
        }

    GridCity city;
    const double width = static_cast<double>(spec.cols - 1) * spec.spacing_m;
    const double height = static_cast<double>(spec.rows - 1) * spec.spacing_m;
    auto planted = [&](double margin) {
        const double m_x = std::min(margin, width / 2.0);
        const double m_y = std::min(margin, height / 2.0);
        const double x = rng.uniform(m_x, width - m_x);
        const double y = rng.uniform(m_y, height - m_y);
        return offset_m(spec.south_west, x, y);
    };
    for (std::size_t i = 0; i < spec.meso_zones; ++i) city.zones.meso_zones.push_back(planted(spec.zone_margin_m));
    for (std::size_t i = 0; i < spec.micro_points; ++i) city.zones.micro_points.push_back(planted(spec.zone_margin_m));
    city.graph = StreetGraph(std::move(nodes), std::move(edges));
    return city;
}

}  // namespace pmdroute
