// pmdroute: social routing for personal mobility devices and the shared-space
// crowd simulator behind it.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pmdroute/centrality.hpp"
#include "pmdroute/report.hpp"
#include "pmdroute/router.hpp"
#include "pmdroute/scenarios.hpp"
#include "pmdroute/sim_io.hpp"
#include "pmdroute/street_graph.hpp"
#include "pmdroute/synthetic.hpp"

using namespace pmdroute;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitInfeasible = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'", path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path + "'", path);
    out << text;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

void print_error(const char* kind, const std::string& message, const std::string& detail_key = {},
                 const std::string& detail = {}) {
    ordered_json j{{"error", kind}, {"message", message}};
    if (!detail.empty()) j[detail_key] = detail;
    std::cerr << j.dump() << "\n";
}

double parse_number(std::string_view s, const std::string& what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ValidationError(what + ": bad number '" + std::string(s) + "'", what);
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

// "lo:hi" as two numbers
std::pair<double, double> parse_range(const std::string& s, const std::string& what) {
    const auto parts = split(s, ':');
    if (parts.size() != 2) throw ValidationError(what + " must look like lo:hi", what);
    return {parse_number(parts[0], what), parse_number(parts[1], what)};
}

// "0:9" (inclusive) or "1,4,7"
std::vector<std::uint64_t> parse_seeds(const std::string& s) {
    std::vector<std::uint64_t> out;
    auto as_int = [](const std::string& t) {
        std::uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc{} || ptr != t.data() + t.size()) throw ValidationError("bad seed '" + t + "'", "seeds");
        return v;
    };
    if (s.find(':') != std::string::npos) {
        const auto parts = split(s, ':');
        if (parts.size() != 2) throw ValidationError("seeds must look like lo:hi", "seeds");
        const auto lo = as_int(parts[0]), hi = as_int(parts[1]);
        if (hi < lo) throw ValidationError("seed range is empty", "seeds");
        for (auto v = lo; v <= hi; ++v) out.push_back(v);
    } else {
        for (const auto& t : split(s, ',')) out.push_back(as_int(t));
    }
    return out;
}

// ---- routing flags -----------------------------------------------------

struct WeightFlags {
    int column = 2;
    std::string haz;
    std::optional<double> pa, bc_max, ic_max;

    void attach(CLI::App* cmd) {
        cmd->add_option("--column", column, "Hyperparameter preset column (1, 2 or 3)")->check(CLI::Range(1, 3));
        cmd->add_option("--haz", haz, "Ring hazard scores inner,middle,outer");
        cmd->add_option("--pa", pa, "Micro-point proximity score");
        cmd->add_option("--bc-max", bc_max, "Ceiling of scaled betweenness");
        cmd->add_option("--ic-max", ic_max, "Ceiling of scaled usage density");
    }

    HazardWeights resolve() const {
        HazardWeights w = HazardWeights::column(column);
        if (!haz.empty()) {
            const auto parts = split(haz, ',');
            if (parts.size() != 3) throw ValidationError("--haz needs three comma-separated scores", "haz");
            for (std::size_t k = 0; k < 3; ++k) w.haz_ring_scores[k] = parse_number(parts[k], "haz");
        }
        if (pa) w.pa_score = *pa;
        if (bc_max) w.bc_max = *bc_max;
        if (ic_max) w.ic_max = *ic_max;
        w.validate();
        return w;
    }
};

struct GraphInputs {
    std::string graph_path, zones_path;
    std::optional<std::uint64_t> grid_seed;

    void attach(CLI::App* cmd, bool zones) {
        auto* g = cmd->add_option("--graph", graph_path, "Street graph JSON")->check(CLI::ExistingFile);
        auto* s = cmd->add_option("--grid-seed", grid_seed, "Use the synthetic 60x60 grid city with this seed");
        g->excludes(s);
        if (zones) cmd->add_option("--zones", zones_path, "Shared-space zone JSON")->check(CLI::ExistingFile);
    }

    GridCity load() const {
        if (grid_seed) {
            GridCitySpec spec;
            spec.seed = *grid_seed;
            return make_grid_city(spec);
        }
        if (graph_path.empty()) throw ValidationError("--graph or --grid-seed is required", "graph");
        GridCity out{load_graph(read_file(graph_path)), {}};
        if (!zones_path.empty()) out.zones = load_zones(read_file(zones_path));
        return out;
    }
};

// ---- simulation flags --------------------------------------------------

struct SimFlags {
    std::string type1, type2;
    std::vector<std::string> constants;
    std::optional<double> dt, street_length, street_width, room_width, room_depth, opening;
    std::optional<std::size_t> agents;
    double max_time = 300.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--type1", type1, "Type-1 factors goal,ped,space,social,obstacle");
        cmd->add_option("--type2", type2, "Type-2 factors goal,ped,space,social,obstacle");
        cmd->add_option("--set", constants, "Override a model constant, name=value (repeatable)");
        cmd->add_option("--dt", dt, "Time step in seconds");
        cmd->add_option("--max-time", max_time, "Simulation time cap in seconds");
        cmd->add_option("--agents", agents, "Agent count");
        cmd->add_option("--street-length", street_length, "Street length in meters");
        cmd->add_option("--street-width", street_width, "Street width in meters");
        cmd->add_option("--room-width", room_width, "Gate room width in meters");
        cmd->add_option("--room-depth", room_depth, "Gate room depth in meters");
        cmd->add_option("--opening", opening, "Gate opening width in meters");
    }

    static sfm::PmdTypeParams parse_type(const std::string& s, const std::string& what) {
        const auto parts = split(s, ',');
        if (parts.size() != 5) throw ValidationError(what + " needs five comma-separated factors", what);
        sfm::PmdTypeParams p{parse_number(parts[0], what), parse_number(parts[1], what), parse_number(parts[2], what),
                             parse_number(parts[3], what), parse_number(parts[4], what)};
        p.validate(what);
        return p;
    }

    void apply_constants(sfm::SfmConstants& c) const {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& kv : constants) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ValidationError("--set expects name=value", kv);
            j[kv.substr(0, eq)] = parse_number(std::string_view(kv).substr(eq + 1), kv.substr(0, eq));
        }
        sfm::apply_constant_overrides(c, j);
        if (dt) c.dt_s = *dt;
        c.validate();
    }

    sfm::ScenarioSpec base() const {
        if (!(max_time > 0.0)) throw ValidationError("--max-time must be positive", "max_time");
        sfm::ScenarioSpec s;
        if (!type1.empty()) s.type1_params = parse_type(type1, "type1");
        if (!type2.empty()) s.type2_params = parse_type(type2, "type2");
        apply_constants(s.constants);
        s.geometry = {street_length, street_width, room_width, room_depth, opening, agents};
        return s;
    }
};

// ---- subcommands -------------------------------------------------------

struct PlanCmd {
    GraphInputs in;
    WeightFlags weights;
    std::string from, to, ic_path, out = "-", stats;
    double min_side_km = kDefaultMinSideKm;
    unsigned jobs = 1;

    int run() const {
        const auto city = in.load();
        RouteQuery q{from, to, weights.resolve()};
        q.min_side_km = min_side_km;
        std::optional<EdgeScalarField> ic;
        if (!ic_path.empty()) {
            ic = load_edge_field_csv(city.graph, read_file(ic_path));
            q.ic_layer = &*ic;
        }
        RouteOptions opts;
        opts.jobs = jobs;
        const auto r = plan_social_route(city.graph, city.zones, q, opts);
        write_output(out, dump(route_geojson(city.graph, r)));
        std::string stats_path = stats;
        if (stats_path.empty() && out != "-") stats_path = out + ".stats.json";
        if (!stats_path.empty()) write_output(stats_path, dump(route_stats_json(city.graph, r, q)));
        return kExitOk;
    }
};

struct BatchCmd {
    GraphInputs in;
    WeightFlags weights;
    long long pairs = 1000;
    std::uint64_t seed = 0;
    std::string dist_km = "4.5:6.5", out = "-", pairs_csv;
    double min_side_km = kDefaultMinSideKm;
    unsigned jobs = 1;
    bool verify = false;

    int run() const {
        if (pairs < 1) throw ValidationError("--pairs must be >= 1", "pairs");
        const auto [lo, hi] = parse_range(dist_km, "dist-km");
        BatchOptions o;
        o.n_pairs = static_cast<std::size_t>(pairs);
        o.dist_min_km = lo;
        o.dist_max_km = hi;
        o.weights = weights.resolve();
        o.seed = seed;
        o.jobs = jobs;
        o.min_side_km = min_side_km;
        o.verify_with_dijkstra = verify;
        const auto city = in.load();
        CentralityCache cache;
        o.cache = &cache;
        const auto s = batch_experiment(city.graph, city.zones, o);
        auto j = batch_stats_json(s, o);
        if (verify) {
            double worst = 0.0;
            for (const auto& r : s.per_pair_records)
                if (r.reference_cost) worst = std::max(worst, std::abs(r.weighted_cost - *r.reference_cost));
            j["max_astar_dijkstra_gap"] = worst;
        }
        write_output(out, dump(j));
        if (!pairs_csv.empty()) write_output(pairs_csv, batch_pairs_csv(city.graph, s));
        return kExitOk;
    }
};

struct CentralityCmd {
    GraphInputs in;
    double bc_max = 0.06;
    unsigned jobs = 1;
    std::string out = "-";

    int run() const {
        if (!(bc_max >= 0.0)) throw ValidationError("--bc-max must be >= 0", "bc_max");
        const auto city = in.load();
        BetweennessOptions opts;
        opts.jobs = jobs;
        const auto raw = edge_betweenness(city.graph, opts);
        const auto scaled = city.graph.edge_count() ? minmax_scale(raw, bc_max) : raw;
        write_output(out, centrality_csv(city.graph, raw, scaled));
        return kExitOk;
    }
};

struct SimulateCmd {
    SimFlags flags;
    std::string kind, scenario, type = "type1", out = "-", meta;
    std::uint64_t seed = 0;
    double resolution = 0.2;

    int run() const {
        sfm::World world;
        ordered_json m;
        double max_time = flags.max_time;
        if (!scenario.empty()) {
            auto file = sfm::load_scenario(read_file(scenario));
            world = std::move(file.world);
            if (!flags.constants.empty() || flags.dt) {
                flags.apply_constants(world.constants);
                world.validate();
            }
            if (file.max_time_s && !cli_max_time_set) max_time = *file.max_time_s;
            m["scenario_file"] = scenario;
            m["world"] = sfm::world_json(world);
        } else {
            auto spec = flags.base();
            spec.kind = sfm::parse_kind(kind);
            spec.pmd_type = sfm::parse_mix(type);
            spec.seed = seed;
            world = sfm::build_scenario(spec);
            m["scenario"] = sfm::scenario_meta_json(spec);
        }
        m["max_time_s"] = max_time;
        const auto r = sfm::run_scenario(std::move(world), max_time);
        m["result"] = sfm::result_json(r, resolution);
        write_output(out, sfm::trajectory_csv(r));
        if (!meta.empty()) write_output(meta, dump(m));
        if (r.censored) {
            print_error("infeasible", "simulation hit the time cap with " + std::to_string(r.trajectories.size() - r.arrived_count) +
                                          " agent(s) still en route",
                        "hint", "raise --max-time");
            return kExitInfeasible;
        }
        return kExitOk;
    }
    bool cli_max_time_set = false;
};

struct CompareCmd {
    SimFlags flags;
    std::string kinds = "all", seeds = "0:9", out = "-", summary;
    unsigned jobs = 1;

    int run() const {
        std::vector<sfm::ScenarioKind> ks;
        if (kinds == "all")
            ks.assign(std::begin(sfm::kComparedKinds), std::end(sfm::kComparedKinds));
        else
            for (const auto& k : split(kinds, ',')) ks.push_back(sfm::parse_kind(k));
        const auto base = flags.base();
        const auto rows = sfm::compare_grid(ks, parse_seeds(seeds), base, flags.max_time, jobs);
        write_output(out, sfm::comparison_csv(rows));
        if (!summary.empty()) write_output(summary, sfm::summary_csv(sfm::summarize(rows)));
        return kExitOk;
    }
};

struct ValidateCmd {
    std::string graph, zones, scenario;

    int run() const {
        if (graph.empty() && zones.empty() && scenario.empty())
            throw ValidationError("nothing to validate: pass --graph, --zones or --scenario");
        ordered_json j;
        if (!graph.empty()) {
            const auto g = load_graph(read_file(graph));
            j["graph"] = {{"nodes", g.node_count()}, {"edges", g.edge_count()}};
        }
        if (!zones.empty()) {
            const auto z = load_zones(read_file(zones));
            j["zones"] = {{"meso_zones", z.meso_zones.size()}, {"micro_points", z.micro_points.size()}};
        }
        if (!scenario.empty()) {
            const auto s = sfm::load_scenario(read_file(scenario));
            j["scenario"] = {{"agents", s.world.agents.size()},
                             {"obstacles", s.world.obstacles.size()},
                             {"walls", s.world.walls.size()}};
        }
        j["valid"] = true;
        std::cout << j.dump() << "\n";
        return kExitOk;
    }
};

struct SynthCmd {
    GridCitySpec spec;
    std::string graph_out, zones_out;

    int run() const {
        const auto city = make_grid_city(spec);
        write_output(graph_out, serialize_graph(city.graph) + "\n");
        if (!zones_out.empty()) write_output(zones_out, serialize_zones(city.zones) + "\n");
        return kExitOk;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Socially acceptable PMD routing and shared-space crowd simulation"};
    app.require_subcommand(1);

    PlanCmd plan;
    auto* p = app.add_subcommand("plan", "Route one O-D pair around shared spaces");
    plan.in.attach(p, true);
    plan.weights.attach(p);
    p->add_option("--from", plan.from, "Origin node id")->required();
    p->add_option("--to", plan.to, "Destination node id")->required();
    p->add_option("--ic", plan.ic_path, "Usage-density layer CSV edge_id,value")->check(CLI::ExistingFile);
    p->add_option("--min-side-km", plan.min_side_km, "Minimum subnetwork box side");
    p->add_option("--jobs", plan.jobs, "Worker threads for centrality");
    p->add_option("--out", plan.out, "Route GeoJSON (- for stdout)");
    p->add_option("--stats", plan.stats, "Stats JSON sidecar (default <out>.stats.json)");

    BatchCmd batch;
    auto* b = app.add_subcommand("batch", "Route random O-D pairs and report the length increment");
    batch.in.attach(b, true);
    batch.weights.attach(b);
    b->add_option("--pairs", batch.pairs, "Number of routed pairs");
    b->add_option("--seed", batch.seed, "Pair sampling seed");
    b->add_option("--dist-km", batch.dist_km, "Great-circle O-D distance range lo:hi");
    b->add_option("--min-side-km", batch.min_side_km, "Minimum subnetwork box side");
    b->add_option("--jobs", batch.jobs, "Worker threads");
    b->add_flag("--verify", batch.verify, "Cross-check every route against Dijkstra");
    b->add_option("--out", batch.out, "Stats JSON (- for stdout)");
    b->add_option("--pairs-csv", batch.pairs_csv, "Per-pair CSV");

    CentralityCmd cent;
    auto* c = app.add_subcommand("centrality", "Edge betweenness of a graph as CSV");
    cent.in.attach(c, false);
    c->add_option("--bc-max", cent.bc_max, "Ceiling of the scaled column");
    c->add_option("--jobs", cent.jobs, "Worker threads");
    c->add_option("--out", cent.out, "CSV edge_id,value,scaled (- for stdout)");

    SimulateCmd sim;
    auto* s = app.add_subcommand("simulate", "Run one crowd simulation and write trajectories");
    sim.flags.attach(s);
    auto* kind_opt = s->add_option("--kind", sim.kind, "gate_low, street_low, street_heavy, fig6a or fig6b");
    auto* file_opt = s->add_option("--scenario", sim.scenario, "Scenario JSON")->check(CLI::ExistingFile);
    kind_opt->excludes(file_opt);
    s->add_option("--type", sim.type, "type1, type2 or mixed");
    s->add_option("--seed", sim.seed, "Placement seed");
    s->add_option("--resolution", sim.resolution, "Trajectory resolution for the displacement verdict, m");
    s->add_option("--out", sim.out, "Trajectory CSV (- for stdout)");
    s->add_option("--meta", sim.meta, "Run metadata JSON");

    CompareCmd cmp;
    auto* m = app.add_subcommand("compare", "End times of Type-1 vs Type-2 crowds over many seeds");
    cmp.flags.attach(m);
    m->add_option("--kind", cmp.kinds, "all, or a comma list of scenario kinds");
    m->add_option("--seeds", cmp.seeds, "Seed range lo:hi (inclusive) or comma list");
    m->add_option("--jobs", cmp.jobs, "Worker threads");
    m->add_option("--out", cmp.out, "Per-run CSV (- for stdout)");
    m->add_option("--summary", cmp.summary, "Median and ratio table CSV");

    ValidateCmd val;
    auto* v = app.add_subcommand("validate", "Check input files without running anything");
    v->add_option("--graph", val.graph, "Street graph JSON")->check(CLI::ExistingFile);
    v->add_option("--zones", val.zones, "Zone JSON")->check(CLI::ExistingFile);
    v->add_option("--scenario", val.scenario, "Scenario JSON")->check(CLI::ExistingFile);

    SynthCmd synth;
    auto* g = app.add_subcommand("synth-grid", "Write the synthetic grid city as graph and zone files");
    g->add_option("--seed", synth.spec.seed, "Jitter and zone placement seed");
    g->add_option("--rows", synth.spec.rows, "Intersections per column");
    g->add_option("--cols", synth.spec.cols, "Intersections per row");
    g->add_option("--spacing", synth.spec.spacing_m, "Block length in meters");
    g->add_option("--meso", synth.spec.meso_zones, "Planted meso zones");
    g->add_option("--micro", synth.spec.micro_points, "Planted micro points");
    g->add_option("--out", synth.graph_out, "Graph JSON")->required();
    g->add_option("--zones-out", synth.zones_out, "Zone JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("validation", e.what());
        return kExitInvalid;
    }

    try {
        if (*p) return plan.run();
        if (*b) return batch.run();
        if (*c) return cent.run();
        if (*s) {
            sim.cli_max_time_set = s->count("--max-time") > 0;
            if (sim.kind.empty() && sim.scenario.empty()) throw ValidationError("--kind or --scenario is required", "kind");
            return sim.run();
        }
        if (*m) return cmp.run();
        if (*v) return val.run();
        if (*g) return synth.run();
    } catch (const ValidationError& e) {
        print_error("validation", e.what(), "subject", e.subject());
        return kExitInvalid;
    } catch (const InfeasibleError& e) {
        print_error("infeasible", e.what(), "hint", e.hint());
        return kExitInfeasible;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return kExitInvalid;
    }
    return kExitInvalid;
}
