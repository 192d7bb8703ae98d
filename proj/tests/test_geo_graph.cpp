#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "pmdroute/error.hpp"
#include "pmdroute/geo.hpp"
#include "pmdroute/street_graph.hpp"
#include "pmdroute/synthetic.hpp"
#include "support.hpp"

using namespace pmdroute;
using testing_support::at_m;
using testing_support::make_graph;

// ---- haversine ---------------------------------------------------------

TEST(Haversine, SamePointIsZero) {
    const GeoPoint p{28.61, 77.21};
    EXPECT_EQ(haversine_m(p, p), 0.0);
}

TEST(Haversine, OneDegreeOfLatitudeAtEquator) {
    // R * pi / 180
    EXPECT_NEAR(haversine_m({0, 0}, {1, 0}), 111194.93, 0.01);
}

TEST(Haversine, AntipodalIsHalfCircumference) {
    EXPECT_NEAR(haversine_m({0, 0}, {0, 180}), 20015086.8, 0.1);
}

TEST(Haversine, SymmetricAndTriangleInequality) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lat(-89.0, 89.0), lon(-179.0, 179.0);
    for (int i = 0; i < 2000; ++i) {
        const GeoPoint p{lat(rng), lon(rng)}, q{lat(rng), lon(rng)}, r{lat(rng), lon(rng)};
        EXPECT_EQ(haversine_m(p, q), haversine_m(q, p));
        const double pq = haversine_m(p, q), qr = haversine_m(q, r), pr = haversine_m(p, r);
        EXPECT_LE(pr, (pq + qr) * (1.0 + 1e-9));
        EXPECT_GE(pq, 0.0);
    }
}

TEST(Haversine, MidpointIsEquidistant) {
    const GeoPoint a{28.5, 77.1}, b{28.56, 77.17};
    const GeoPoint m = midpoint(a, b);
    EXPECT_NEAR(haversine_m(a, m), haversine_m(m, b), 1e-6);
    EXPECT_NEAR(haversine_m(a, m) * 2.0, haversine_m(a, b), 1e-6);
}

// ---- load_graph --------------------------------------------------------

TEST(LoadGraph, MinimalDocument) {
    const auto g = load_graph(R"({"nodes":[{"id":"a","lat":0,"lon":0},{"id":"b","lat":0,"lon":0.001}],
                                  "edges":[{"id":"e","from":"a","to":"b","length_m":111.2}],"directed":true})");
    EXPECT_EQ(g.node_count(), 2u);
    EXPECT_EQ(g.edge_count(), 1u);
    EXPECT_TRUE(g.adjacency_consistent());
}

TEST(LoadGraph, UndirectedExpandsToTwoEdges) {
    const auto g = load_graph(R"({"nodes":[{"id":"a","lat":0,"lon":0},{"id":"b","lat":0,"lon":0.001}],
                                  "edges":[{"id":"e","from":"a","to":"b","length_m":111.2}],"directed":false})");
    ASSERT_EQ(g.edge_count(), 2u);
    const auto back = g.find_edge("e~r");
    ASSERT_TRUE(back);
    EXPECT_EQ(g.edge(*back).from, g.require_node("b"));
    EXPECT_EQ(g.edge(*back).to, g.require_node("a"));
}

TEST(LoadGraph, NumericIdsAreAccepted) {
    const auto g = load_graph(R"({"nodes":[{"id":1,"lat":0,"lon":0},{"id":2,"lat":0,"lon":0.001}],
                                  "edges":[{"id":7,"from":1,"to":2,"length_m":111.2}]})");
    EXPECT_TRUE(g.find_node("1"));
    EXPECT_TRUE(g.find_edge("7"));
}

namespace {

std::string subject_of(std::string_view doc) {
    try {
        load_graph(doc);
    } catch (const ValidationError& e) {
        return e.subject();
    }
    return "<no error>";
}

}  // namespace

TEST(LoadGraph, DanglingEndpointNamesTheEdge) {
    EXPECT_EQ(subject_of(R"({"nodes":[{"id":"a","lat":0,"lon":0}],
                             "edges":[{"id":"bad","from":"a","to":"zz","length_m":5}]})"),
              "bad");
}

TEST(LoadGraph, ZeroLengthRejected) {
    EXPECT_EQ(subject_of(R"({"nodes":[{"id":"a","lat":0,"lon":0},{"id":"b","lat":0,"lon":1}],
                             "edges":[{"id":"z","from":"a","to":"b","length_m":0}]})"),
              "z");
}

TEST(LoadGraph, DuplicateIdsRejected) {
    EXPECT_EQ(subject_of(R"({"nodes":[{"id":"a","lat":0,"lon":0},{"id":"a","lat":0,"lon":1}],"edges":[]})"), "a");
    EXPECT_EQ(subject_of(R"({"nodes":[{"id":"a","lat":0,"lon":0},{"id":"b","lat":0,"lon":1}],
                             "edges":[{"id":"e","from":"a","to":"b","length_m":1},
                                      {"id":"e","from":"b","to":"a","length_m":1}]})"),
              "e");
}

TEST(LoadGraph, SelfLoopAndMalformedRejected) {
    EXPECT_EQ(subject_of(R"({"nodes":[{"id":"a","lat":0,"lon":0}],
                             "edges":[{"id":"loop","from":"a","to":"a","length_m":3}]})"),
              "loop");
    EXPECT_THROW(load_graph("{not json"), ValidationError);
    EXPECT_THROW(load_graph(R"({"nodes":[]})"), ValidationError);
    EXPECT_THROW(load_graph(R"({"nodes":[{"id":"a","lat":91,"lon":0}],"edges":[]})"), ValidationError);
}

TEST(LoadGraph, SerializeRoundTripIsIdentity) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 20; ++i) {
        const auto g = testing_support::random_digraph(rng, 8, 0.4, i % 2 == 0);
        const auto again = load_graph(serialize_graph(g));
        ASSERT_EQ(again.node_count(), g.node_count());
        ASSERT_EQ(again.edge_count(), g.edge_count());
        for (NodeIndex v = 0; v < g.node_count(); ++v) EXPECT_EQ(again.node(v), g.node(v));
        for (EdgeIndex e = 0; e < g.edge_count(); ++e) EXPECT_EQ(again.edge(e), g.edge(e));
        EXPECT_EQ(serialize_graph(again), serialize_graph(g));
    }
}

// ---- load_zones --------------------------------------------------------

TEST(LoadZones, EmptyListsGiveEmptySet) {
    const auto z = load_zones(R"({"meso_zones":[],"micro_points":[]})");
    EXPECT_TRUE(z.empty());
}

TEST(LoadZones, CountsArePreserved) {
    const auto z = load_zones(R"({"meso_zones":[{"lat":28.6,"lon":77.2}],
                                  "micro_points":[{"lat":28.61,"lon":77.2},{"lat":28.62,"lon":77.21}]})");
    EXPECT_EQ(z.meso_zones.size(), 1u);
    EXPECT_EQ(z.micro_points.size(), 2u);
    EXPECT_EQ(load_zones(serialize_zones(z)).micro_points, z.micro_points);
}

TEST(LoadZones, LatitudeOutOfRange) {
    try {
        load_zones(R"({"meso_zones":[{"lat":95,"lon":0}],"micro_points":[]})");
        FAIL() << "expected a range error";
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.subject(), "meso_zones[0]");
    }
}

// ---- subnetwork_bbox ---------------------------------------------------

TEST(Subnetwork, SameOriginAndDestinationUsesMinimumSide) {
    const auto g = make_graph({{"a", at_m(0, 0)}, {"b", at_m(100, 0)}}, {{"e", "a", "b", 100}});
    const auto sub = subnetwork_bbox(g, "a", "a", 5.0);
    EXPECT_DOUBLE_EQ(sub.box.side_m, 5000.0);
    EXPECT_EQ(sub.parent_node[sub.origin], g.require_node("a"));
}

TEST(Subnetwork, SideGrowsWithSpan) {
    const auto g = make_graph({{"o", at_m(0, 0)}, {"d", at_m(6000, 0)}}, {{"e", "o", "d", 6000}});
    const double od = haversine_m(g.location(0), g.location(1));
    const auto sub = subnetwork_bbox(g, "o", "d", 5.0);
    EXPECT_NEAR(sub.box.side_m, od + 1000.0, 1e-9);
    EXPECT_NEAR(sub.box.side_m, 7000.0, 1.0);
}

TEST(Subnetwork, SmallGridFitsEntirely) {
    GridCitySpec spec;
    spec.rows = spec.cols = 10;
    spec.jitter_m = 0.0;
    spec.meso_zones = spec.micro_points = 0;
    const auto city = make_grid_city(spec);
    const auto sub = subnetwork_bbox(city.graph, grid_node_id(0, 0), grid_node_id(9, 9), 5.0);
    std::set<NodeIndex> members(sub.parent_node.begin(), sub.parent_node.end());
    for (NodeIndex v = 0; v < city.graph.node_count(); ++v) EXPECT_TRUE(members.count(v)) << v;
    EXPECT_EQ(sub.graph.edge_count(), city.graph.edge_count());
}

TEST(Subnetwork, IsInducedSubgraph) {
    GridCitySpec spec;
    spec.rows = spec.cols = 30;
    spec.seed = 3;
    const auto city = make_grid_city(spec);
    const auto& g = city.graph;
    const auto sub = subnetwork_bbox(g, grid_node_id(5, 5), grid_node_id(12, 9), 1.0);
    std::vector<char> inside(g.node_count(), 0);
    for (NodeIndex p : sub.parent_node) inside[p] = 1;
    std::set<EdgeIndex> kept(sub.parent_edge.begin(), sub.parent_edge.end());
    for (EdgeIndex e = 0; e < sub.graph.edge_count(); ++e) {
        const EdgeIndex pe = sub.parent_edge[e];
        EXPECT_TRUE(inside[g.edge(pe).from] && inside[g.edge(pe).to]);
        EXPECT_EQ(sub.graph.edge(e).id, g.edge(pe).id);
    }
    for (EdgeIndex e = 0; e < g.edge_count(); ++e)
        if (inside[g.edge(e).from] && inside[g.edge(e).to]) EXPECT_TRUE(kept.count(e)) << g.edge(e).id;
    EXPECT_LT(sub.graph.node_count(), g.node_count());
    EXPECT_TRUE(sub.graph.adjacency_consistent());
}

TEST(Subnetwork, EndpointsOutsideBoxStillIncluded) {
    // the destination is pulled in even though the box is centered between them
    const auto g = make_graph({{"o", at_m(0, 0)}, {"d", at_m(300, 0)}}, {{"e", "o", "d", 300}});
    const auto sub = subnetwork_bbox(g, "o", "d", 0.001);
    EXPECT_EQ(sub.graph.node_count(), 2u);
}

TEST(Subnetwork, DisconnectedInsideBoxIsInfeasible) {
    const auto g = make_graph({{"o", at_m(0, 0)}, {"d", at_m(300, 0)}}, {{"e", "d", "o", 300}});
    EXPECT_THROW(subnetwork_bbox(g, "o", "d", 5.0), InfeasibleError);
    EXPECT_THROW(subnetwork_bbox(g, "o", "missing", 5.0), ValidationError);
}

// ---- zone scores -------------------------------------------------------

namespace {

// Edge along the east axis whose midpoint sits at (mx, 0) meters.
StreetGraph edge_with_midpoint(double mx) {
    return make_graph({{"a", at_m(mx - 20, 0)}, {"b", at_m(mx + 20, 0)}}, {{"e", "a", "b", 40}});
}

}  // namespace

TEST(ZoneScores, FiftyMetersIsInnerRing) {
    const auto g = edge_with_midpoint(50);
    SharedZoneSet z{{at_m(0, 0)}, {}};
    const auto s = edge_zone_scores(g, 0, z);
    ASSERT_TRUE(s.ring);
    EXPECT_EQ(*s.ring, 0);
    EXPECT_FALSE(s.near_micro);
}

TEST(ZoneScores, OuterRingAndMicroStack) {
    const auto g = edge_with_midpoint(250);
    SharedZoneSet z{{at_m(0, 0)}, {at_m(250, 40)}};
    const auto s = edge_zone_scores(g, 0, z);
    ASSERT_TRUE(s.ring);
    EXPECT_EQ(*s.ring, 2);
    EXPECT_TRUE(s.near_micro);
}

TEST(ZoneScores, EmptyZonesScoreNothing) {
    const auto g = edge_with_midpoint(0);
    EXPECT_EQ(edge_zone_scores(g, 0, SharedZoneSet{}), ZoneScore{});
}

TEST(ZoneScores, RingIndexIsMonotoneInDistance) {
    const auto g = edge_with_midpoint(0);
    auto rank = [](const ZoneScore& s) { return s.ring ? *s.ring : 3; };
    int previous = 0;
    for (double d = 0.0; d <= 400.0; d += 2.5) {
        SharedZoneSet z{{at_m(0, d)}, {}};
        const int r = rank(edge_zone_scores(g, 0, z));
        EXPECT_GE(r, previous) << "distance " << d;
        previous = r;
    }
    EXPECT_EQ(previous, 3);
}

TEST(ZoneScores, InnermostRingAcrossAllZones) {
    const auto g = edge_with_midpoint(0);
    SharedZoneSet z{{at_m(0, 280), at_m(0, -150)}, {}};
    EXPECT_EQ(edge_zone_scores(g, 0, z).ring, std::optional<int>(1));
}

// ---- synthetic city ----------------------------------------------------

TEST(GridCity, SeededAndConsistent) {
    GridCitySpec spec;
    spec.rows = spec.cols = 12;
    spec.seed = 9;
    const auto a = make_grid_city(spec), b = make_grid_city(spec);
    EXPECT_EQ(serialize_graph(a.graph), serialize_graph(b.graph));
    EXPECT_EQ(serialize_zones(a.zones), serialize_zones(b.zones));
    EXPECT_EQ(a.graph.edge_count(), 4u * 12u * 11u);
    EXPECT_TRUE(a.graph.adjacency_consistent());
    for (EdgeIndex e = 0; e < a.graph.edge_count(); ++e) {
        const auto& edge = a.graph.edge(e);
        EXPECT_DOUBLE_EQ(edge.length_m, haversine_m(a.graph.location(edge.from), a.graph.location(edge.to)));
    }
}
