// cml: coupled-map-lattice experiment driver.
//
//   cml <experiment> --config <path> [--out <dir>] [--seed N] [--precision f64|big:<bits>]
//
// Exit codes: 0 success, 2 configuration error, 3 runtime-cap abort
// (partial outputs are still written).

#include <cstdio>
#include <exception>
#include <fstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cml/experiments.hpp"

namespace {

constexpr const char* kExperiments[] = {"run-orbit",       "sweep",   "escape-time", "geometry-trace",
                                        "lemma-constants", "density", "stability"};

struct Args {
    std::string config_path;
    std::string out_dir = ".";
    std::string seed;
    std::string precision;
};

int run_experiment(const std::string& experiment, const Args& args) {
    std::ifstream in(args.config_path);
    if (!in) {
        std::fprintf(stderr, "cml: cannot open config file: %s\n", args.config_path.c_str());
        return 2;
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "cml: config parse error: %s\n", e.what());
        return 2;
    }
    if (!doc.is_object()) {
        std::fprintf(stderr, "cml: config must be a JSON object\n");
        return 2;
    }
    if (doc.contains("experiment") && doc["experiment"] != experiment) {
        std::fprintf(stderr, "cml: config is for experiment \"%s\" but \"%s\" was requested\n",
                     doc["experiment"].get<std::string>().c_str(), experiment.c_str());
        return 2;
    }
    doc["experiment"] = experiment;
    if (!args.seed.empty()) doc["seed"] = std::stoull(args.seed);
    if (!args.precision.empty()) doc["precision"] = args.precision;

    try {
        const cml::ExperimentConfig cfg = cml::parse_config(doc);
        const cml::ResultBundle bundle = cml::run(cfg);
        cml::write_bundle(bundle, args.out_dir, cfg.name);
        for (const auto& w : bundle.metadata["warnings"])
            std::fprintf(stderr, "cml: warning: %s\n", w.get<std::string>().c_str());
        if (bundle.partial) {
            std::fprintf(stderr, "cml: runtime cap exceeded; partial bundle written to %s\n",
                         args.out_dir.c_str());
            return 3;
        }
        std::fprintf(stderr, "cml: wrote %s/%s.{csv,json%s}\n", args.out_dir.c_str(), cfg.name.c_str(),
                     bundle.svg.empty() ? "" : ",svg");
        return 0;
    } catch (const cml::config_error& e) {
        std::fprintf(stderr, "cml: config error: %s\n", e.what());
        return 2;
    } catch (const cml::cap_exceeded& e) {
        std::fprintf(stderr, "cml: runtime cap: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "cml: error: %s\n", e.what());
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coupled map lattice simulation and verification toolkit"};
    app.require_subcommand(1);

    Args args;
    std::string chosen;
    for (const char* name : kExperiments) {
        CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
        sub->add_option("--config", args.config_path, "JSON experiment config")->required();
        sub->add_option("--out", args.out_dir, "output directory (default: .)");
        sub->add_option("--seed", args.seed, "override the config seed");
        sub->add_option("--precision", args.precision, "override arithmetic: f64 or big:<bits>");
        sub->callback([&chosen, name] { chosen = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return run_experiment(chosen, args);
}
