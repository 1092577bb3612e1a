#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cml/common.hpp"
#include "cml/diagnostics.hpp"
#include "cml/geometry.hpp"
#include "cml/lemma_calc.hpp"
#include "cml/precision.hpp"
#include "cml/svg.hpp"
#include "cml/table.hpp"

namespace cml {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct LatticeSpec {
    std::string map = "doubling2";
    std::string topology = "two_node";
    int n = 2;
    double c = 0.0;

    Lattice build(std::vector<std::string>* warnings = nullptr) const {
        return build_lattice(parse_topology(topology, n), c, make_standard_map(map), warnings);
    }
    Lattice build_with_c(double coupling, std::vector<std::string>* warnings = nullptr) const {
        return build_lattice(parse_topology(topology, n), coupling, make_standard_map(map), warnings);
    }
};

struct ExperimentConfig {
    std::string experiment;
    std::string name;
    std::uint64_t seed = 1;
    PrecisionMode precision;
    DistanceMetric metric = DistanceMetric::pairwise_max;
    LatticeSpec lattice;
    json params;
    json echo;  // fully defaulted config; re-running it reproduces the bundle
};

namespace detail {

inline void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                           const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw config_error("unknown field \"" + it.key() + "\" in " + where);
    }
}

/// Grid: either an explicit array of values or {"from","to","step"}.
inline std::vector<double> parse_grid(const json& g, const std::string& what) {
    std::vector<double> out;
    if (g.is_array()) {
        for (const auto& v : g) {
            if (!v.is_number()) throw config_error(what + ": grid entries must be numbers");
            out.push_back(v.get<double>());
        }
    } else if (g.is_object()) {
        reject_unknown(g, {"from", "to", "step"}, what);
        if (!g.contains("from") || !g.contains("to") || !g.contains("step"))
            throw config_error(what + ": grid object needs from/to/step");
        const double from = g["from"].get<double>();
        const double to = g["to"].get<double>();
        const double step = g["step"].get<double>();
        if (!(step > 0.0)) throw config_error(what + ": grid step must be positive");
        for (double v = from; v <= to + 0.5 * step; v += step) out.push_back(v);
    } else {
        throw config_error(what + ": expected an array or {from,to,step}");
    }
    if (out.empty()) throw config_error(what + ": empty grid");
    return out;
}

inline std::vector<json> scalar_or_list(const json& v) {
    if (v.is_array()) return std::vector<json>(v.begin(), v.end());
    return {v};
}

inline json default_params(const std::string& experiment) {
    if (experiment == "run-orbit")
        return {{"s0", nullptr},   {"steps", 100000}, {"sample_every", 1},
                {"itinerary", false}, {"threshold", 0.05}};
    if (experiment == "sweep")
        return {{"c_grid", json{{"from", 0.0}, {"to", 0.45}, {"step", 0.05}}},
                {"seeds", 10},
                {"late_window", 1000},
                {"regime",
                 json{{"eps_enter", 1e-3},
                      {"r0", 0.05},
                      {"sync_tol", 1e-12},
                      {"transient", 1000},
                      {"horizon", 100000},
                      {"min_alternations", 5}}}};
    if (experiment == "escape-time")
        return {{"c_grid", json::array({0.10, 0.15, 0.20, 0.225, 0.24})},
                {"inner", 1e-12},
                {"outer", 1e-6},
                {"trials", 200},
                {"max_steps", 10000000}};
    if (experiment == "geometry-trace")
        return {{"shape", json{{"type", "square"}, {"x", 0.1}, {"y", 0.15}, {"side", 0.2}}},
                {"depth", 6},
                {"cap", 1000000}};
    if (experiment == "lemma-constants")
        return {{"set_kind", "measurable"}, {"a", 2}, {"m0", 1}, {"delta1", 0.25},
                {"mu", 1.5},               {"c_grid", nullptr}};
    if (experiment == "density")
        return {{"steps", 10000000}, {"burn_in", 1000}, {"bins", 64},
                {"s0", nullptr},     {"compare_seeds", nullptr}};
    if (experiment == "stability")
        return {{"n_values", json{{"from", 3}, {"to", 12}}},
                {"c_grid", json{{"from", 0.005}, {"to", 0.495}, {"step", 0.005}}}};
    throw config_error("unknown experiment: " + experiment);
}

}  // namespace detail

/// Parses and validates a config document, filling every default so that the
/// echoed form pins the run completely. Unknown fields are rejected.
inline ExperimentConfig parse_config(const json& doc) {
    try {
        if (!doc.is_object()) throw config_error("config must be a JSON object");
        detail::reject_unknown(doc, {"experiment", "name", "seed", "precision", "metric", "lattice", "params"},
                               "config");
        ExperimentConfig cfg;
        if (!doc.contains("experiment") || !doc["experiment"].is_string())
            throw config_error("config needs an \"experiment\" string");
        cfg.experiment = doc["experiment"].get<std::string>();
        const json defaults = detail::default_params(cfg.experiment);

        cfg.name = doc.value("name", cfg.experiment);
        cfg.seed = doc.value("seed", 1ull);
        const std::string default_precision = cfg.experiment == "escape-time" ? "big:128" : "f64";
        cfg.precision = PrecisionMode::parse(doc.value("precision", default_precision));
        cfg.metric = parse_metric(doc.value("metric", std::string("pairwise_max")));

        if (doc.contains("lattice")) {
            const json& l = doc["lattice"];
            detail::reject_unknown(l, {"map", "topology", "n", "c"}, "lattice");
            cfg.lattice.map = l.value("map", cfg.lattice.map);
            cfg.lattice.topology = l.value("topology", cfg.lattice.topology);
            cfg.lattice.n = l.value("n", cfg.lattice.n);
            cfg.lattice.c = l.value("c", cfg.lattice.c);
        }
        make_standard_map(cfg.lattice.map);           // validates the name
        parse_topology(cfg.lattice.topology, cfg.lattice.n);

        cfg.params = defaults;
        if (doc.contains("params")) {
            const json& p = doc["params"];
            if (!p.is_object()) throw config_error("params must be an object");
            for (auto it = p.begin(); it != p.end(); ++it) {
                if (!defaults.contains(it.key()))
                    throw config_error("unknown field \"" + it.key() + "\" in params for " + cfg.experiment);
                if (it.key() == "regime" && it.value().is_object()) {
                    detail::reject_unknown(it.value(),
                                           {"eps_enter", "r0", "sync_tol", "transient", "horizon",
                                            "min_alternations"},
                                           "params.regime");
                    json merged = defaults["regime"];
                    for (auto rit = it.value().begin(); rit != it.value().end(); ++rit)
                        merged[rit.key()] = rit.value();
                    cfg.params["regime"] = merged;
                } else {
                    cfg.params[it.key()] = it.value();
                }
            }
        }

        cfg.echo = {{"experiment", cfg.experiment}, {"name", cfg.name},
                    {"seed", cfg.seed},             {"precision", cfg.precision.label()},
                    {"metric", to_string(cfg.metric)},
                    {"lattice",
                     json{{"map", cfg.lattice.map},
                          {"topology", cfg.lattice.topology},
                          {"n", cfg.lattice.n},
                          {"c", cfg.lattice.c}}},
                    {"params", cfg.params}};
        return cfg;
    } catch (const json::exception& e) {
        throw config_error(std::string("config: ") + e.what());
    }
}

inline ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw config_error(std::string("config parse: ") + e.what());
    }
    return parse_config(doc);
}

// ---------------------------------------------------------------------------
// Result bundle
// ---------------------------------------------------------------------------

struct ResultBundle {
    json metadata;
    std::vector<std::pair<std::string, DataTable>> tables;  // first is the main table
    std::string svg;
    std::vector<std::pair<std::string, std::string>> extra_files;  // suffix -> content
    bool partial = false;
};

namespace detail {

inline json base_metadata(const ExperimentConfig& cfg, std::vector<std::string> warnings) {
    return {{"config", cfg.echo},
            {"toolkit_version", kVersion},
            {"metric", to_string(cfg.metric)},
            {"precision", cfg.precision.label()},
            {"cell_numbering", "row-major from the bottom-left cell: cell = iy * ncols + ix"},
            {"warnings", warnings},
            {"partial", false}};
}

inline std::vector<double> random_state(const PiecewiseLinearMap&, int n, Rng& rng) {
    std::vector<double> s(static_cast<std::size_t>(n));
    for (auto& v : s) v = uniform01(rng);
    return s;
}

// --------------------------- run-orbit ------------------------------------

template <class Real>
ResultBundle run_orbit_experiment(const ExperimentConfig& cfg) {
    std::vector<std::string> warnings;
    const Lattice lat = cfg.lattice.build(&warnings);
    std::vector<double> s0;
    if (cfg.params["s0"].is_null()) {
        Rng rng = make_rng(cfg.seed, 7);
        s0 = random_state(lat.map, lat.n(), rng);
    } else {
        s0 = cfg.params["s0"].get<std::vector<double>>();
    }
    const long long steps = cfg.params["steps"].get<long long>();
    const int sample_every = cfg.params["sample_every"].get<int>();
    const bool itinerary = cfg.params["itinerary"].get<bool>();
    TrajectoryRecord rec = orbit<Real>(lat, s0, steps, sample_every, cfg.metric, itinerary);
    rec.seed = cfg.seed;
    for (const auto& note : rec.notes) warnings.push_back(note);

    std::vector<std::string> headers = {"step"};
    for (int i = 1; i <= lat.n(); ++i) headers.push_back("x_" + std::to_string(i));
    headers.push_back("dist");
    if (itinerary)
        for (int i = 1; i <= lat.n(); ++i) headers.push_back("branch_" + std::to_string(i));
    DataTable table(headers);
    for (std::size_t i = 0; i < rec.states.size(); ++i) {
        std::vector<json> row;
        const long long step_no =
            i + 1 == rec.states.size() ? steps : static_cast<long long>(i) * sample_every;
        row.push_back(step_no);
        for (double v : rec.states[i]) row.push_back(v);
        row.push_back(rec.distances[i]);
        if (itinerary)
            for (int b : rec.itinerary[i]) row.push_back(b);
        table.add_row(std::move(row));
    }

    PlotSpec plot;
    plot.title = "distance to the diagonal";
    plot.xlabel = "step";
    plot.ylabel = "dist";
    plot.threshold = cfg.params["threshold"].get<double>();
    SeriesSpec s;
    s.x_col = "step";
    s.y_col = "dist";
    s.kind = SeriesSpec::line;
    s.split_at_threshold = true;
    plot.series.push_back(s);

    ResultBundle b;
    b.metadata = base_metadata(cfg, warnings);
    b.metadata["s0"] = s0;
    b.metadata["digit_mode"] = rec.digit_mode;
    b.svg = render_plot(table, plot);
    b.tables.emplace_back("orbit", std::move(table));
    return b;
}

// ----------------------------- sweep ---------------------------------------

inline RegimeParams regime_from_json(const json& r) {
    RegimeParams p;
    p.eps_enter = r["eps_enter"].get<double>();
    p.r0 = r["r0"].get<double>();
    p.sync_tol = r["sync_tol"].get<double>();
    p.transient = r["transient"].get<long long>();
    p.horizon = r["horizon"].get<long long>();
    p.min_alternations = r["min_alternations"].get<int>();
    return p;
}

template <class Real>
ResultBundle sweep_impl(const ExperimentConfig& cfg) {
    std::vector<std::string> warnings;
    const std::vector<double> grid = parse_grid(cfg.params["c_grid"], "sweep.c_grid");
    const int seeds = cfg.params["seeds"].get<int>();
    const long long late_window = cfg.params["late_window"].get<long long>();
    const RegimeParams rp = regime_from_json(cfg.params["regime"]);

    DataTable table({"c", "seed_index", "regime", "alternations", "min_dist", "max_dist", "final_dist",
                     "trailing_sync", "late_mean_dist"});
    for (std::size_t ci = 0; ci < grid.size(); ++ci) {
        for (int k = 0; k < seeds; ++k) {
            std::vector<std::string> row_warnings;
            const Lattice lat = cfg.lattice.build_with_c(grid[ci], &row_warnings);
            for (const auto& w : row_warnings)
                if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) warnings.push_back(w);
            Rng rng = make_rng(cfg.seed, ci, static_cast<std::uint64_t>(k));
            const std::vector<double> s0 = random_state(lat.map, lat.n(), rng);
            const RegimeReport rep = classify_regime<Real>(lat, s0, rp, cfg.metric);

            double late_mean = std::numeric_limits<double>::quiet_NaN();
            if (late_window > 0) {
                OrbitEngine<Real> engine(lat, s0);
                for (long long i = 0; i < rp.horizon - late_window; ++i) engine.advance();
                KahanSum acc;
                for (long long i = 0; i < late_window; ++i) {
                    engine.advance();
                    acc.add(engine.distance(cfg.metric));
                }
                late_mean = acc.value() / static_cast<double>(late_window);
            }
            table.add_row({grid[ci], k, to_string(rep.regime), rep.alternations, rep.min_dist,
                           rep.max_dist, rep.final_dist, rep.trailing_sync, late_mean});
        }
    }

    PlotSpec plot;
    plot.title = "late-orbit mean distance vs coupling";
    plot.xlabel = "c";
    plot.ylabel = "late mean dist";
    plot.threshold = rp.r0;
    SeriesSpec s;
    s.x_col = "c";
    s.y_col = late_window > 0 ? "late_mean_dist" : "final_dist";
    s.kind = SeriesSpec::scatter;
    s.split_at_threshold = true;
    plot.series.push_back(s);

    ResultBundle b;
    b.metadata = base_metadata(cfg, warnings);
    b.svg = render_plot(table, plot);
    b.tables.emplace_back("sweep", std::move(table));
    return b;
}

// --------------------------- escape-time -----------------------------------

template <class Real>
ResultBundle escape_impl(const ExperimentConfig& cfg) {
    std::vector<std::string> warnings;
    const std::vector<double> grid = parse_grid(cfg.params["c_grid"], "escape.c_grid");
    const double inner = cfg.params["inner"].get<double>();
    const double outer = cfg.params["outer"].get<double>();
    const int trials = cfg.params["trials"].get<int>();
    const long long max_steps = cfg.params["max_steps"].get<long long>();

    const double slope = make_standard_map(cfg.lattice.map).slope_magnitude();
    const double cstar = critical_coupling(slope);

    DataTable table({"c", "inv_dist", "trials", "mean_steps", "stddev", "theoretical", "excluded"});
    for (std::size_t ci = 0; ci < grid.size(); ++ci) {
        const Lattice lat = cfg.lattice.build_with_c(grid[ci], &warnings);
        const EscapeStats st =
            escape_time<Real>(lat, inner, outer, trials, substream_seed(cfg.seed, ci), max_steps);
        table.add_row({st.c, 1.0 / std::abs(st.c - cstar), st.trials, st.mean_steps, st.stddev,
                       st.theoretical, st.excluded});
    }
    const LinearFit fit = linear_fit(table.numeric_column("inv_dist"), table.numeric_column("mean_steps"));

    PlotSpec plot;
    plot.title = "mean escape time vs 1/|c - c*|";
    plot.xlabel = "1/|c - c*|";
    plot.ylabel = "mean steps";
    plot.fit = fit;
    SeriesSpec s;
    s.x_col = "inv_dist";
    s.y_col = "mean_steps";
    s.kind = SeriesSpec::scatter;
    plot.series.push_back(s);

    ResultBundle b;
    b.metadata = base_metadata(cfg, warnings);
    b.metadata["fit"] = {{"intercept", fit.intercept}, {"slope", fit.slope}, {"r2", fit.r2}};
    b.metadata["critical_coupling"] = cstar;
    b.svg = render_plot(table, plot);
    b.tables.emplace_back("escape", std::move(table));
    return b;
}

// -------------------------- geometry-trace ---------------------------------

inline Shape shape_from_json(const json& sj) {
    reject_unknown(sj, {"type", "x", "y", "side", "vertices", "p", "q", "cx", "cy", "angle", "length", "width"},
                   "shape");
    const std::string type = sj.value("type", "square");
    if (type == "square") {
        const double x = sj.value("x", 0.1), y = sj.value("y", 0.1), side = sj.value("side", 0.2);
        return Polygon{{x, y}, {x + side, y}, {x + side, y + side}, {x, y + side}};
    }
    if (type == "polygon") {
        Polygon poly;
        for (const auto& v : sj.at("vertices")) poly.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
        if (poly.size() < 3) throw config_error("shape.polygon: need at least 3 vertices");
        if (signed_area(poly) < 0.0) std::reverse(poly.begin(), poly.end());
        return poly;
    }
    if (type == "rectangle") {
        OrientedRect r;
        r.center = {sj.value("cx", 0.25), sj.value("cy", 0.25)};
        const double ang = sj.value("angle", 0.0);
        r.axis = {std::cos(ang), std::sin(ang)};
        r.length = sj.value("length", 0.2);
        r.width = sj.value("width", 0.01);
        Polygon poly = r.to_polygon();
        if (signed_area(poly) < 0.0) std::reverse(poly.begin(), poly.end());
        return poly;
    }
    if (type == "segment") {
        const auto& p = sj.at("p");
        const auto& q = sj.at("q");
        return Segment{{p.at(0).get<double>(), p.at(1).get<double>()},
                       {q.at(0).get<double>(), q.at(1).get<double>()}};
    }
    throw config_error("shape.type must be square|polygon|rectangle|segment");
}

inline std::string render_forest_svg(const ComponentForest& forest) {
    const int side = 640, margin = 20;
    std::string out;
    char buf[256];
    auto emit = [&](const char* fmt, auto... args) {
        std::snprintf(buf, sizeof buf, fmt, args...);
        out += buf;
    };
    emit("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\">\n", side + 2 * margin,
         side + 2 * margin);
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    emit("<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"none\" stroke=\"black\"/>\n", margin,
         margin, side, side);
    auto px = [&](double v) { return margin + v * side; };
    auto py = [&](double v) { return margin + (1.0 - v) * side; };
    const int top = forest.depth();
    for (int d = 0; d <= top; ++d) {
        const int hue = top == 0 ? 210 : 210 - 190 * d / top;
        for (const Component& c : forest.levels[static_cast<std::size_t>(d)]) {
            if (std::holds_alternative<Polygon>(c.shape)) {
                out += "<polygon fill=\"hsla(" + std::to_string(hue) + ",70%,45%,0.35)\" points=\"";
                for (const Pt& v : std::get<Polygon>(c.shape)) emit("%.2f,%.2f ", px(v.x), py(v.y));
                out += "\"/>\n";
            } else {
                const Segment& s = std::get<Segment>(c.shape);
                emit("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"hsl(%d,70%%,40%%)\" "
                     "stroke-width=\"1.3\"/>\n",
                     px(s.p.x), py(s.p.y), px(s.q.x), py(s.q.y), hue);
            }
        }
    }
    out += "</svg>\n";
    return out;
}

inline ResultBundle geometry_trace_experiment(const ExperimentConfig& cfg) {
    std::vector<std::string> warnings;
    const Lattice lat = cfg.lattice.build(&warnings);
    if (lat.n() != 2) throw config_error("geometry-trace: two-node lattices only");
    const Shape shape = shape_from_json(cfg.params["shape"]);
    const int depth = cfg.params["depth"].get<int>();
    const std::size_t cap = cfg.params["cap"].get<std::size_t>();
    const ComponentForest forest = iterate_components(shape, lat, depth, cap);

    DataTable table({"depth", "count", "total_measure", "dropped"});
    for (int d = 0; d <= forest.depth(); ++d)
        table.add_row({d, forest.count(d), forest.total_measure(d),
                       forest.dropped[static_cast<std::size_t>(d)]});

    std::string jsonl;
    for (int d = 0; d <= forest.depth(); ++d)
        for (const Component& c : forest.levels[static_cast<std::size_t>(d)]) {
            json line = {{"depth", d}, {"cell", c.cell}, {"measure", measure_of(c.shape)}};
            if (std::holds_alternative<Polygon>(c.shape)) {
                json verts = json::array();
                for (const Pt& v : std::get<Polygon>(c.shape)) verts.push_back({v.x, v.y});
                line["kind"] = "polygon";
                line["vertices"] = verts;
            } else {
                const Segment& s = std::get<Segment>(c.shape);
                line["kind"] = "segment";
                line["endpoints"] = {{s.p.x, s.p.y}, {s.q.x, s.q.y}};
            }
            jsonl += line.dump() + "\n";
        }

    ResultBundle b;
    b.metadata = base_metadata(cfg, warnings);
    b.partial = forest.capped;
    b.metadata["partial"] = forest.capped;
    b.svg = render_forest_svg(forest);
    b.tables.emplace_back("forest_summary", std::move(table));
    b.extra_files.emplace_back("jsonl", std::move(jsonl));
    return b;
}

// ------------------------- lemma-constants ---------------------------------

inline ResultBundle lemma_constants_experiment(const ExperimentConfig& cfg) {
    const double slope = make_standard_map(cfg.lattice.map).slope_magnitude();
    std::vector<double> cs;
    if (cfg.params["c_grid"].is_null()) cs = {cfg.lattice.c};
    else cs = parse_grid(cfg.params["c_grid"], "lemma.c_grid");

    const SetKind kind = parse_set_kind(cfg.params["set_kind"].get<std::string>());
    DataTable table({"slope", "c", "set_kind", "a", "m0", "delta1", "mu", "e_plus", "e_minus", "mu_upper",
                     "d", "F", "N0", "N0_clamped", "mu1_bound", "c1", "status"});
    json first_report;
    for (double c : cs)
        for (const json& aj : scalar_or_list(cfg.params["a"]))
            for (const json& mj : scalar_or_list(cfg.params["m0"]))
                for (const json& dj : scalar_or_list(cfg.params["delta1"]))
                    for (const json& uj : scalar_or_list(cfg.params["mu"])) {
                        const int a = aj.get<int>();
                        const int m0 = mj.get<int>();
                        const double delta1 = dj.get<double>();
                        const double mu = uj.get<double>();
                        const ExpansionRates rates = expansion_rates(slope, c, kind);
                        std::string status = "ok";
                        LemmaReport rep;
                        try {
                            rep = iterative_constants(rates, {a, m0, delta1, mu});
                        } catch (const feasibility_error&) {
                            status = "infeasible";
                        } catch (const usage_error& e) {
                            status = std::string("invalid: ") + e.what();
                        }
                        const bool ok = status == "ok";
                        table.add_row({slope, c, to_string(kind), a, m0, delta1, mu,
                                       rates.e_plus, rates.e_minus,
                                       ok ? json(rep.mu_upper) : json(nullptr),
                                       ok ? json(rep.d) : json(nullptr),
                                       ok ? json(rep.F) : json(nullptr),
                                       ok ? json(rep.N0) : json(nullptr),
                                       ok ? json(rep.N0_clamped) : json(nullptr),
                                       ok ? json(rep.mu1_bound) : json(nullptr),
                                       ok ? json(rep.c1) : json(nullptr), status});
                        if (ok && first_report.is_null())
                            first_report = {{"e_plus", rep.e_plus},       {"e_minus", rep.e_minus},
                                            {"mu_upper", rep.mu_upper},   {"d", rep.d},
                                            {"F", rep.F},                 {"N0", rep.N0},
                                            {"N0_clamped", rep.N0_clamped},
                                            {"mu1_bound", rep.mu1_bound}, {"c1", rep.c1}};
                    }

    ResultBundle b;
    b.metadata = base_metadata(cfg, {});
    b.metadata["lemma_report"] = first_report;
    PlotSpec plot;
    plot.title = "N0 vs coupling";
    plot.xlabel = "c";
    plot.ylabel = "N0";
    SeriesSpec s;
    s.x_col = "c";
    s.y_col = "N0";
    s.kind = SeriesSpec::scatter;
    plot.series.push_back(s);
    // rows with non-numeric N0 cannot be plotted; filter into a side table
    DataTable plottable(table.headers());
    for (const auto& row : table.rows())
        if (row[12].is_number()) plottable.add_row(row);
    if (plottable.row_count() > 0) b.svg = render_plot(plottable, plot);
    b.tables.emplace_back("lemma_constants", std::move(table));
    return b;
}

// ----------------------------- density -------------------------------------

template <class Real>
ResultBundle density_experiment(const ExperimentConfig& cfg) {
    std::vector<std::string> warnings;
    const Lattice lat = cfg.lattice.build(&warnings);
    const long long steps = cfg.params["steps"].get<long long>();
    const long long burn_in = cfg.params["burn_in"].get<long long>();
    const int bins = cfg.params["bins"].get<int>();

    auto starting_state = [&](std::uint64_t seed) {
        Rng rng = make_rng(seed, 7);
        return random_state(lat.map, lat.n(), rng);
    };

    DensityHistogram h;
    json meta_extra;
    if (!cfg.params["compare_seeds"].is_null()) {
        const auto seeds = cfg.params["compare_seeds"].get<std::vector<std::uint64_t>>();
        if (seeds.size() != 2) throw config_error("density.compare_seeds: need exactly two seeds");
        const DensityHistogram h1 =
            empirical_density<Real>(lat, starting_state(seeds[0]), steps, burn_in, bins);
        const DensityHistogram h2 =
            empirical_density<Real>(lat, starting_state(seeds[1]), steps, burn_in, bins);
        meta_extra["l1_pair"] = density_distance(h1, h2);
        h = h1;
    } else {
        std::vector<double> s0;
        if (cfg.params["s0"].is_null()) s0 = starting_state(cfg.seed);
        else s0 = cfg.params["s0"].get<std::vector<double>>();
        meta_extra["s0"] = s0;
        h = empirical_density<Real>(lat, s0, steps, burn_in, bins);
    }

    double diag_mass = 0.0;
    for (int i = 0; i < bins; ++i)
        for (int j = std::max(0, i - 1); j <= std::min(bins - 1, i + 1); ++j) diag_mass += h.mass(i, j);
    meta_extra["diagonal_band_mass"] = diag_mass;

    std::vector<std::string> headers;
    headers.reserve(static_cast<std::size_t>(bins));
    for (int i = 0; i < bins; ++i) headers.push_back("col_" + std::to_string(i));
    DataTable table(headers);
    for (int iy = 0; iy < bins; ++iy) {
        std::vector<json> row;
        row.reserve(static_cast<std::size_t>(bins));
        for (int ix = 0; ix < bins; ++ix) row.push_back(h.mass(ix, iy));
        table.add_row(std::move(row));
    }

    ResultBundle b;
    b.metadata = base_metadata(cfg, warnings);
    for (auto it = meta_extra.begin(); it != meta_extra.end(); ++it) b.metadata[it.key()] = it.value();
    b.svg = render_heatmap(h, "empirical density");
    b.tables.emplace_back("density_grid", std::move(table));
    return b;
}

// ---------------------------- stability ------------------------------------

inline ResultBundle stability_experiment(const ExperimentConfig& cfg) {
    const json& nv = cfg.params["n_values"];
    std::vector<int> ns;
    if (nv.is_array())
        for (const auto& v : nv) ns.push_back(v.get<int>());
    else if (nv.is_object()) {
        detail::reject_unknown(nv, {"from", "to"}, "stability.n_values");
        for (int n = nv.at("from").get<int>(); n <= nv.at("to").get<int>(); ++n) ns.push_back(n);
    } else
        throw config_error("stability.n_values: expected array or {from,to}");
    const std::vector<double> grid = parse_grid(cfg.params["c_grid"], "stability.c_grid");
    const double slope = make_standard_map(cfg.lattice.map).slope_magnitude();
    const CouplingTopology proto = parse_topology(cfg.lattice.topology, std::max(2, ns.front()));
    if (proto.kind == Topology::two_node) ns = {2};

    DataTable table({"topology", "n", "c", "max_transverse", "sync_possible"});
    for (int n : ns) {
        const CouplingTopology topo{proto.kind, n};
        if (topo.kind == Topology::ring && n < 3) continue;
        for (double c : grid) {
            if (topo.kind == Topology::global && c > 1.0 / (n - 1)) continue;
            if (topo.kind == Topology::ring && c > 0.5) continue;
            const StabilityReport r = transverse_stability(topo, c, slope);
            table.add_row({to_string(topo.kind), n, c, r.max_transverse, r.sync_possible});
        }
    }

    PlotSpec plot;
    plot.title = "max transverse |eigenvalue| vs coupling";
    plot.xlabel = "c";
    plot.ylabel = "max |lambda|";
    plot.threshold = 1.0;
    SeriesSpec s;
    s.x_col = "c";
    s.y_col = "max_transverse";
    s.kind = SeriesSpec::scatter;
    s.split_at_threshold = true;
    plot.series.push_back(s);

    ResultBundle b;
    b.metadata = base_metadata(cfg, {});
    b.svg = render_plot(table, plot);
    b.tables.emplace_back("stability", std::move(table));
    return b;
}

}  // namespace detail

/// Runs an experiment to a deterministic bundle: same config, same bytes.
/// The precision mode selects the orbit-stepping arithmetic; the analytic
/// experiments (geometry-trace, lemma-constants, stability) note when it has
/// no effect.
inline ResultBundle run(const ExperimentConfig& cfg) {
    cfg.precision.activate();
    const bool big = cfg.precision.big;
    ResultBundle b;
    if (cfg.experiment == "run-orbit")
        b = big ? detail::run_orbit_experiment<BigFloat>(cfg) : detail::run_orbit_experiment<double>(cfg);
    else if (cfg.experiment == "sweep")
        b = big ? detail::sweep_impl<BigFloat>(cfg) : detail::sweep_impl<double>(cfg);
    else if (cfg.experiment == "escape-time")
        b = big ? detail::escape_impl<BigFloat>(cfg) : detail::escape_impl<double>(cfg);
    else if (cfg.experiment == "density")
        b = big ? detail::density_experiment<BigFloat>(cfg) : detail::density_experiment<double>(cfg);
    else if (cfg.experiment == "geometry-trace" || cfg.experiment == "lemma-constants" ||
             cfg.experiment == "stability") {
        if (cfg.experiment == "geometry-trace") b = detail::geometry_trace_experiment(cfg);
        else if (cfg.experiment == "lemma-constants") b = detail::lemma_constants_experiment(cfg);
        else b = detail::stability_experiment(cfg);
        if (big) b.metadata["warnings"].push_back("precision mode does not affect this experiment");
    } else {
        throw config_error("unknown experiment: " + cfg.experiment);
    }
    return b;
}

/// Writes <name>.csv / <name>.json / <name>.svg (plus any extra files) into
/// out_dir. Additional tables get <name>.<table>.csv.
inline void write_bundle(const ResultBundle& b, const std::string& out_dir, const std::string& name) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    auto write = [&](const std::string& suffix, const std::string& content) {
        std::ofstream out(fs::path(out_dir) / (name + "." + suffix), std::ios::binary);
        if (!out) throw usage_error("cannot write output file " + name + "." + suffix);
        out << content;
    };
    if (!b.tables.empty()) write("csv", b.tables.front().second.to_csv());
    for (std::size_t i = 1; i < b.tables.size(); ++i)
        write(b.tables[i].first + ".csv", b.tables[i].second.to_csv());
    json doc = {{"metadata", b.metadata}};
    for (const auto& [tname, t] : b.tables) doc["tables"][tname] = t.to_json();
    write("json", doc.dump(2) + "\n");
    if (!b.svg.empty()) write("svg", b.svg);
    for (const auto& [suffix, content] : b.extra_files) write(suffix, content);
}

}  // namespace cml
