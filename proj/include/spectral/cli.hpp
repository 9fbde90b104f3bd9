#pragma once

// Command-line front end: `spectral <solve|sample|predict|experiment>
// --config FILE [--output-dir DIR] [--seed N] [-v]`.
//
// Exit codes: 0 success, 1 invalid input or configuration, 2 numerical
// failure. Every file is written inside the output directory, and every run
// leaves the resolved configuration there as config.json.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spectral/config.hpp"
#include "spectral/eigensolver.hpp"
#include "spectral/ensembles.hpp"
#include "spectral/error.hpp"
#include "spectral/experiments.hpp"
#include "spectral/matrix.hpp"
#include "spectral/outlier_theory.hpp"
#include "spectral/subordination.hpp"

namespace spectral {

struct CliConfig {
    std::string subcommand;
    std::string config_path;
    std::optional<std::string> output_dir;
    std::optional<std::uint64_t> seed;
    int verbosity = 0;
};

namespace detail {

class OutputDir {
public:
    explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {
        std::filesystem::create_directories(root_);
    }

    // Only fixed base names are ever written; they never leave root_.
    std::ofstream open(const std::string& name, std::ios::openmode mode = std::ios::out) const {
        std::ofstream f(root_ / name, mode);
        if (!f) throw Error("cannot open " + (root_ / name).string() + " for writing");
        return f;
    }
    void text(const std::string& name, const std::string& content) const { open(name) << content; }
    void json(const std::string& name, const nlohmann::ordered_json& j) const { open(name) << j.dump(2) << '\n'; }
    std::filesystem::path path(const std::string& name) const { return root_ / name; }

private:
    std::filesystem::path root_;
};

inline std::string num(double v) { return fmt(v); }

inline void run_solve(const RunConfig& cfg, const OutputDir& out, std::ostream& log) {
    const LimitLaw law = make_limit_law(cfg.bulk_measure(), cfg.sigma, cfg.solver);
    if (cfg.wants("csv")) {
        std::ostringstream csv;
        csv << "x,rho\n";
        const auto& g = law.mu0_density.grid();
        const auto& v = law.mu0_density.density();
        for (std::size_t k = 0; k < g.size(); ++k) csv << num(g[k]) << ',' << num(v[k]) << '\n';
        out.text("density.csv", csv.str());
    }
    nlohmann::ordered_json support = nlohmann::ordered_json::array();
    for (const auto& iv : law.support) support.push_back({iv.lo, iv.hi});
    out.json("support.json", {{"support", support},
                              {"second_moment", moment(law.mu0_density, 2)},
                              {"expected_second_moment", cfg.sigma * cfg.sigma + moment(law.nu0, 2)}});
    log << "support: " << support.dump() << '\n';
}

inline void run_sample(const RunConfig& cfg, const OutputDir& out, std::ostream& log) {
    const EnsembleSpec spec = cfg.ensemble(cfg.size());
    const auto diag = signal_diagonal(spec);
    const std::uint64_t seed = derive_seed(cfg.seed, {spec.n, 0});
    const SymmetricMatrix s = SymmetricMatrix::diagonal(diag);
    const SymmetricMatrix w = sample_deformed(spec, diag, seed);
    {
        auto f = out.open("S.symm", std::ios::out | std::ios::binary);
        write_symm(f, s);
    }
    {
        auto f = out.open("W.symm", std::ios::out | std::ios::binary);
        write_symm(f, w);
    }
    const Spectrum ls = signal_spectrum(spec);
    const Spectrum lw = eigenvalues_symmetric(w);
    if (cfg.wants("csv")) {
        std::ostringstream csv;
        csv << "k,lambda_S,lambda_W\n";
        for (std::size_t k = 0; k < lw.size(); ++k) csv << k + 1 << ',' << num(ls[k]) << ',' << num(lw[k]) << '\n';
        out.text("eigenvalues.csv", csv.str());
    }
    log << "N=" << spec.n << " r=" << spec.rank() << " seed=" << seed << " lambda_1(W)=" << lw.largest() << '\n';
}

inline void run_predict(const RunConfig& cfg, const OutputDir& out, std::ostream& log) {
    const EnsembleSpec spec = cfg.ensemble(cfg.size());
    const LimitLaw law = make_limit_law(spec.bulk, spec.sigma, cfg.solver);
    const auto pred = predict_outlier_positions(signal_spectrum(spec), spec, law);
    out.json("prediction.json", to_json(pred));
    log << "mapped " << pred.mapped_positions.size() << " spikes, bbp edge " << pred.bbp_edge << '\n';
}

inline void write_report(const RunConfig& cfg, const OutputDir& out, const ExperimentReport& rep,
                         const std::string& stem) {
    if (cfg.wants("csv")) out.text(stem + ".csv", rep.csv());
    if (cfg.wants("json")) out.json(stem + "_report.json", rep.to_json());
}

inline void run_experiment(const RunConfig& cfg, const OutputDir& out, std::ostream& log) {
    const ExperimentPlan plan = cfg.plan();
    if (cfg.kind == "mapping") {
        write_report(cfg, out, run_mapping_experiment(plan), "mapping");
    } else if (cfg.kind == "counting") {
        write_report(cfg, out, run_counting_experiment(plan), "counting");
    } else if (cfg.kind == "outlier") {
        const auto [mapping, counting] = run_outlier_experiments(plan);
        write_report(cfg, out, mapping, "mapping");
        write_report(cfg, out, counting, "counting");
    } else {
        write_report(cfg, out, run_rate_experiment(plan), "rate");
    }
    log << cfg.kind << " experiment: " << plan.n_grid.size() << " sizes x " << plan.trials_per_n << " trials\n";
}

} // namespace detail

/// Parses argv, runs the subcommand and maps failures to exit codes.
inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CliConfig cli;
    CLI::App app{"Deformed Wigner matrices: limiting laws, outlier predictions and Monte Carlo checks", "spectral"};
    app.require_subcommand(1);
    std::uint64_t seed = 0;
    std::string output_dir;
    auto add = [&](const char* name, const char* help) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("-c,--config", cli.config_path, "JSON configuration file")->required();
        sub->add_option("-o,--output-dir", output_dir, "Overrides output.dir");
        sub->add_option("-s,--seed", seed, "Overrides experiment.seed");
        sub->add_flag("-v,--verbose", "Print progress to stderr");
        sub->callback([&cli, sub] { cli.subcommand = sub->get_name(); });
        return sub;
    };
    add("solve", "Limiting density and support of the bulk");
    add("sample", "One (S, W) pair and its eigenvalues");
    add("predict", "Outlier positions and the outlier measure");
    add("experiment", "Monte Carlo experiment");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 1;
    }
    for (const auto* sub : app.get_subcommands()) {
        if (sub->count("--output-dir")) cli.output_dir = output_dir;
        if (sub->count("--seed")) cli.seed = seed;
        cli.verbosity = static_cast<int>(sub->count("--verbose"));
    }

    nlohmann::json doc;
    {
        std::ifstream f(cli.config_path);
        if (!f) {
            err << "error: cannot read config file '" << cli.config_path << "'\n";
            return 1;
        }
        try {
            doc = nlohmann::json::parse(f);
        } catch (const nlohmann::json::parse_error& e) {
            err << "error: config is not valid JSON: " << e.what() << '\n';
            return 1;
        }
    }
    auto result = validate_config(doc);
    if (!result.config) {
        for (const auto& v : result.violations) err << "config error: " << v << '\n';
        return 1;
    }
    RunConfig cfg = *result.config;
    if (cli.output_dir) cfg.output_dir = *cli.output_dir;
    if (cli.seed) cfg.seed = *cli.seed;

    std::ostringstream sink;
    std::ostream& log = cli.verbosity > 0 ? err : sink;
    try {
        const detail::OutputDir dir(cfg.output_dir);
        dir.json("config.json", to_json(cfg));
        if (cli.subcommand == "solve") detail::run_solve(cfg, dir, log);
        else if (cli.subcommand == "sample") detail::run_sample(cfg, dir, log);
        else if (cli.subcommand == "predict") detail::run_predict(cfg, dir, log);
        else detail::run_experiment(cfg, dir, log);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

} // namespace spectral
