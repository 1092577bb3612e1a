#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "cml/experiments.hpp"

using namespace cml;
using nlohmann::json;
using Catch::Approx;

TEST_CASE("config parsing") {
    SECTION("defaults are filled and echoed") {
        const auto cfg = parse_config({{"experiment", "sweep"}});
        CHECK(cfg.name == "sweep");
        CHECK(cfg.seed == 1);
        CHECK(cfg.precision.label() == "f64");
        CHECK(cfg.metric == DistanceMetric::pairwise_max);
        CHECK(cfg.params["seeds"] == 10);
        CHECK(cfg.params["regime"]["r0"] == 0.05);
        CHECK(cfg.echo["lattice"]["map"] == "doubling2");
        CHECK(cfg.echo["params"]["regime"]["horizon"] == 100000);
    }
    SECTION("escape-time defaults to extended precision") {
        const auto cfg = parse_config({{"experiment", "escape-time"}});
        CHECK(cfg.precision.big);
        CHECK(cfg.precision.bits == 128);
    }
    SECTION("unknown fields are rejected at every level") {
        CHECK_THROWS_AS(parse_config({{"experiment", "sweep"}, {"bogus", 1}}), config_error);
        CHECK_THROWS_AS(parse_config({{"experiment", "sweep"}, {"lattice", {{"coupling", 0.1}}}}),
                        config_error);
        CHECK_THROWS_AS(parse_config({{"experiment", "sweep"}, {"params", {{"who", 1}}}}), config_error);
        CHECK_THROWS_AS(
            parse_config({{"experiment", "sweep"}, {"params", {{"regime", {{"weird", 1}}}}}}),
            config_error);
        CHECK_THROWS_AS(parse_config({{"experiment", "warp-drive"}}), config_error);
        CHECK_THROWS_AS(parse_config({{"experiment", "sweep"}, {"precision", "f32"}}), config_error);
        CHECK_THROWS_AS(
            parse_config({{"experiment", "sweep"}, {"lattice", {{"map", "lorenz96"}}}}),
            config_error);
    }
    SECTION("partial regime overrides keep the other defaults") {
        const auto cfg =
            parse_config({{"experiment", "sweep"}, {"params", {{"regime", {{"horizon", 5000}}}}}});
        CHECK(cfg.params["regime"]["horizon"] == 5000);
        CHECK(cfg.params["regime"]["r0"] == 0.05);
    }
}

TEST_CASE("sweep experiment reproduces the transition") {
    json doc = {{"experiment", "sweep"},
                {"seed", 20},
                {"lattice", {{"map", "doubling2"}, {"topology", "two_node"}, {"n", 2}}},
                {"params",
                 {{"c_grid", json::array({0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45})},
                  {"seeds", 2},
                  {"late_window", 200},
                  {"regime", {{"horizon", 100000}}}}}};
    const auto bundle = run(parse_config(doc));
    const DataTable& t = bundle.tables.front().second;
    const auto cs = t.numeric_column("c");
    const auto regimes = t.string_column("regime");
    for (std::size_t i = 0; i < cs.size(); ++i) {
        if (cs[i] <= 0.201) CHECK(regimes[i] == "Intermittent");
        if (cs[i] >= 0.299) CHECK(regimes[i] == "Synchronized");
    }
    CHECK(bundle.svg.find("<svg") == 0);
}

TEST_CASE("bundles are byte-deterministic and re-runnable from the echo") {
    json doc = {{"experiment", "sweep"},
                {"seed", 99},
                {"params",
                 {{"c_grid", json::array({0.1, 0.35})}, {"seeds", 2}, {"late_window", 100},
                  {"regime", {{"horizon", 5000}}}}}};
    const auto cfg = parse_config(doc);
    const auto b1 = run(cfg);
    const auto b2 = run(cfg);
    REQUIRE(b1.tables.front().second.to_csv() == b2.tables.front().second.to_csv());
    REQUIRE(b1.svg == b2.svg);

    // the echoed config re-parses and reproduces the same bytes
    const auto cfg2 = parse_config(cfg.echo);
    const auto b3 = run(cfg2);
    REQUIRE(b3.tables.front().second.to_csv() == b1.tables.front().second.to_csv());
}

TEST_CASE("run-orbit experiment") {
    json doc = {{"experiment", "run-orbit"},
                {"seed", 5},
                {"lattice", {{"map", "doubling2"}, {"c", 0.15}}},
                {"params", {{"steps", 2000}, {"sample_every", 4}, {"itinerary", true}}}};
    const auto bundle = run(parse_config(doc));
    const DataTable& t = bundle.tables.front().second;
    CHECK(t.headers().front() == "step");
    CHECK(t.headers().back() == "branch_2");
    CHECK(t.row_count() == 501);
    const auto steps = t.numeric_column("step");
    CHECK(steps.front() == 0);
    CHECK(steps.back() == 2000);
    CHECK(bundle.svg.find("</svg>") != std::string::npos);
}

TEST_CASE("escape-time experiment recomputes its own fit") {
    json doc = {{"experiment", "escape-time"},
                {"seed", 33},
                {"precision", "f64"},
                {"params", {{"c_grid", json::array({0.1, 0.15, 0.2})}, {"trials", 8}}}};
    const auto bundle = run(parse_config(doc));
    const DataTable& t = bundle.tables.front().second;
    REQUIRE(t.row_count() == 3);
    // least-squares coefficients recomputed from the emitted table
    const auto fit = linear_fit(t.numeric_column("inv_dist"), t.numeric_column("mean_steps"));
    CHECK(bundle.metadata["fit"]["slope"].get<double>() == Approx(fit.slope));
    CHECK(bundle.metadata["fit"]["intercept"].get<double>() == Approx(fit.intercept));
    CHECK(bundle.metadata["fit"]["r2"].get<double>() == Approx(fit.r2));
    CHECK(bundle.metadata["critical_coupling"].get<double>() == Approx(0.25));
}

TEST_CASE("stability experiment: no ring synchronization for n > 5") {
    json doc = {{"experiment", "stability"},
                {"lattice", {{"map", "doubling2"}, {"topology", "ring"}, {"n", 6}}},
                {"params", {{"n_values", {{"from", 6}, {"to", 12}}}}}};
    const auto bundle = run(parse_config(doc));
    const DataTable& t = bundle.tables.front().second;
    CHECK(t.row_count() > 0);
    for (const auto& row : t.rows()) {
        CHECK(row[4].get<bool>() == false);       // sync_possible
        CHECK(row[3].get<double>() > 1.0);        // max_transverse
    }
}

TEST_CASE("geometry-trace experiment") {
    SECTION("summary, jsonl, and svg") {
        json doc = {{"experiment", "geometry-trace"},
                    {"lattice", {{"map", "doubling2"}, {"c", 0.1}}},
                    {"params", {{"shape", {{"type", "square"}, {"x", 0.1}, {"y", 0.15}, {"side", 0.2}}},
                                {"depth", 3}}}};
        const auto bundle = run(parse_config(doc));
        CHECK_FALSE(bundle.partial);
        const DataTable& t = bundle.tables.front().second;
        REQUIRE(t.row_count() == 4);
        const auto measures = t.numeric_column("total_measure");
        for (std::size_t d = 1; d < measures.size(); ++d)
            CHECK(measures[d] == Approx(measures[d - 1] * 3.2).epsilon(1e-9));
        REQUIRE(bundle.extra_files.size() == 1);
        std::istringstream lines(bundle.extra_files[0].second);
        std::string line;
        int n_lines = 0;
        while (std::getline(lines, line)) {
            const json j = json::parse(line);
            CHECK(j.contains("depth"));
            CHECK(j.contains("cell"));
            ++n_lines;
        }
        const auto counts = t.numeric_column("count");
        CHECK(n_lines == static_cast<int>(counts[0] + counts[1] + counts[2] + counts[3]));
    }
    SECTION("cap produces a partial bundle") {
        json doc = {{"experiment", "geometry-trace"},
                    {"lattice", {{"map", "triple3"}, {"c", 0.01}}},
                    {"params", {{"shape", {{"type", "square"}, {"x", 0.05}, {"y", 0.05}, {"side", 0.25}}},
                                {"depth", 8},
                                {"cap", 40}}}};
        const auto bundle = run(parse_config(doc));
        CHECK(bundle.partial);
        CHECK(bundle.metadata["partial"].get<bool>());
    }
}

TEST_CASE("lemma-constants experiment") {
    json doc = {{"experiment", "lemma-constants"},
                {"lattice", {{"map", "doubling2"}, {"c", 0.0}}},
                {"params", {{"a", json::array({2, 3, 64})}, {"mu", 1.5}}}};
    const auto bundle = run(parse_config(doc));
    const DataTable& t = bundle.tables.front().second;
    REQUIRE(t.row_count() == 3);
    const auto status = t.string_column("status");
    CHECK(status[0] == "ok");
    CHECK(status[2] == "infeasible");  // a = 64 >= E-^1 = 4
    CHECK(bundle.metadata["lemma_report"]["d"].get<double>() == Approx(0.25));
    CHECK(bundle.metadata["lemma_report"]["F"].get<double>() == Approx(8.0));
    CHECK(bundle.metadata["lemma_report"]["N0"].get<long long>() == 6);
}

TEST_CASE("density experiment") {
    json doc = {{"experiment", "density"},
                {"seed", 8},
                {"lattice", {{"map", "doubling2"}, {"c", 0.15}}},
                {"params", {{"steps", 200000}, {"bins", 16}, {"compare_seeds", json::array({11, 12})}}}};
    const auto bundle = run(parse_config(doc));
    const DataTable& t = bundle.tables.front().second;
    REQUIRE(t.row_count() == 16);
    double mass = 0.0;
    for (const auto& row : t.rows())
        for (const auto& cell : row) mass += cell.get<double>();
    CHECK(mass == Approx(1.0).margin(1e-9));
    CHECK(bundle.metadata["l1_pair"].get<double>() < 0.5);
    CHECK(bundle.metadata["diagonal_band_mass"].get<double>() > 0.0);
    CHECK(bundle.svg.find("<rect") != std::string::npos);
}

TEST_CASE("svg rendering edges") {
    DataTable t({"x", "y"});
    PlotSpec spec;
    SeriesSpec s;
    s.x_col = "x";
    s.y_col = "y";
    s.kind = SeriesSpec::scatter;
    spec.series.push_back(s);
    SECTION("empty table is an error") {
        CHECK_THROWS_AS(render_plot(t, spec), usage_error);
    }
    SECTION("single-point table renders a single marker") {
        t.add_row({1.0, 2.0});
        const std::string svg = render_plot(t, spec);
        CHECK(svg.find("<circle") != std::string::npos);
        CHECK(svg.find("<circle") == svg.rfind("<circle"));
        // self-contained: no external references
        CHECK(svg.find("href") == std::string::npos);
    }
}

TEST_CASE("bundle writing") {
    json doc = {{"experiment", "run-orbit"},
                {"name", "writecheck"},
                {"lattice", {{"map", "doubling2"}, {"c", 0.3}}},
                {"params", {{"steps", 100}}}};
    const auto cfg = parse_config(doc);
    const auto bundle = run(cfg);
    const std::string dir = "test_out_tmp";
    write_bundle(bundle, dir, cfg.name);
    namespace fs = std::filesystem;
    CHECK(fs::exists(fs::path(dir) / "writecheck.csv"));
    CHECK(fs::exists(fs::path(dir) / "writecheck.json"));
    CHECK(fs::exists(fs::path(dir) / "writecheck.svg"));
    std::ifstream jf(fs::path(dir) / "writecheck.json");
    json round;
    jf >> round;
    CHECK(round["metadata"]["toolkit_version"] == kVersion);
    CHECK(round["metadata"]["config"]["name"] == "writecheck");
    // every bundle names its metric and precision mode
    CHECK(round["metadata"]["metric"] == "pairwise_max");
    CHECK(round["metadata"]["precision"] == "f64");
    CHECK(round["tables"].contains("orbit"));
    fs::remove_all(dir);
}
