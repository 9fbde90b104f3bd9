#pragma once

// Run configuration: one JSON document describing the model, the solver,
// the experiment and the output location.
//
//   {
//     "model":      {"n" | "n_grid", "sigma", "bulk", "spike_law", "rank_rule"},
//     "solver":     {"damping", "tol", "max_iter", "inversion_ys", "support_eps", "grid_points"},
//     "experiment": {"kind", "trials", "seed", "threads", "intervals", "spike_intervals", "probes"},
//     "output":     {"dir", "formats"}
//   }
//
// Laws are {"type": "delta", "at"}, {"type": "uniform", "lo", "hi"},
// {"type": "semicircle", "sigma"}, {"type": "atomic", "atoms": [[t, w], ...]}
// or a raw measure {"atoms", "grid", "density"}. Rank rules are
// {"type": "constant", "r"}, {"type": "power", "alpha"} or {"type": "log", "c"}.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectral/ensembles.hpp"
#include "spectral/error.hpp"
#include "spectral/experiments.hpp"
#include "spectral/measures.hpp"
#include "spectral/subordination.hpp"

namespace spectral {

struct RunConfig {
    std::optional<std::size_t> n;
    std::vector<std::size_t> n_grid;
    double sigma = 1.0;
    nlohmann::json bulk = {{"type", "delta"}, {"at", 0.0}};
    std::optional<nlohmann::json> spike_law;
    std::optional<nlohmann::json> rank_rule;

    SolverConfig solver;

    std::string kind = "mapping";  // mapping | counting | outlier | rate
    std::size_t trials = 1;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    std::vector<Interval> intervals;
    std::vector<Interval> spike_intervals;
    std::vector<cplx> probes;

    std::string output_dir = "out";
    std::vector<std::string> formats = {"csv", "json"};

    friend bool operator==(const RunConfig&, const RunConfig&) = default;

    bool wants(const std::string& format) const {
        return std::find(formats.begin(), formats.end(), format) != formats.end();
    }
    /// Matrix size for single-matrix subcommands.
    std::size_t size() const { return n ? *n : n_grid.back(); }
    std::vector<std::size_t> sizes() const { return n_grid.empty() ? std::vector<std::size_t>{*n} : n_grid; }

    SpectralMeasure bulk_measure() const;
    std::optional<SpectralMeasure> spike_measure() const;
    EnsembleSpec ensemble(std::size_t size) const;
    ExperimentPlan plan() const;
};

struct ConfigResult {
    std::optional<RunConfig> config;
    std::vector<std::string> violations;
};

namespace detail {

// Collects violations while walking a document; every accessor records a
// message instead of throwing so the caller sees the complete list.
class ConfigReader {
public:
    std::vector<std::string> errors;

    void fail(const std::string& msg) { errors.push_back(msg); }

    const nlohmann::json* object(const nlohmann::json& parent, const std::string& key, const std::string& path,
                                 bool required) {
        if (!parent.contains(key)) {
            if (required) fail(path + " is required");
            return nullptr;
        }
        const auto& v = parent.at(key);
        if (!v.is_object()) {
            fail(path + " must be an object");
            return nullptr;
        }
        return &v;
    }

    void known_keys(const nlohmann::json& obj, const std::string& path, std::initializer_list<const char*> keys) {
        const std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& [k, _] : obj.items())
            if (!allowed.contains(k)) fail("unknown key '" + (path.empty() ? k : path + "." + k) + "'");
    }

    template <class T>
    std::optional<T> get(const nlohmann::json& obj, const std::string& key, const std::string& path) {
        if (!obj.contains(key)) return std::nullopt;
        try {
            const auto& v = obj.at(key);
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw std::invalid_argument("");
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer()) throw std::invalid_argument("");
                if constexpr (std::is_unsigned_v<T>)
                    if (!v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
                        fail(path + " must be non-negative");
                        return std::nullopt;
                    }
            }
            return v.get<T>();
        } catch (const std::exception&) {
            fail(path + " has the wrong type");
            return std::nullopt;
        }
    }

    std::vector<Interval> intervals(const nlohmann::json& obj, const std::string& key, const std::string& path) {
        std::vector<Interval> out;
        if (!obj.contains(key)) return out;
        const auto& arr = obj.at(key);
        if (!arr.is_array()) {
            fail(path + " must be a list of [lo, hi] pairs");
            return out;
        }
        for (const auto& p : arr) {
            if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
                fail(path + " must be a list of [lo, hi] pairs");
                return {};
            }
            const Interval iv{p[0].get<double>(), p[1].get<double>()};
            if (!(iv.lo <= iv.hi)) fail(path + ": interval lo must not exceed hi");
            out.push_back(iv);
        }
        return out;
    }

    std::optional<SpectralMeasure> law(const nlohmann::json& j, const std::string& path) {
        if (!j.is_object()) {
            fail(path + " must be an object");
            return std::nullopt;
        }
        try {
            if (!j.contains("type")) {
                auto m = measure_from_json(j);
                require_probability(m, path);
                return m;
            }
            const auto type = get<std::string>(j, "type", path + ".type");
            if (!type) return std::nullopt;
            const std::size_t before = errors.size();
            std::optional<SpectralMeasure> m;
            if (*type == "delta") {
                known_keys(j, path, {"type", "at"});
                if (auto at = get<double>(j, "at", path + ".at")) m = SpectralMeasure::delta(*at);
                else if (!j.contains("at")) fail(path + ".at is required");
            } else if (*type == "uniform") {
                known_keys(j, path, {"type", "lo", "hi"});
                auto lo = get<double>(j, "lo", path + ".lo");
                auto hi = get<double>(j, "hi", path + ".hi");
                if (!j.contains("lo")) fail(path + ".lo is required");
                if (!j.contains("hi")) fail(path + ".hi is required");
                if (lo && hi) {
                    if (!(*lo < *hi)) fail(path + ": uniform law needs lo < hi");
                    else m = SpectralMeasure::uniform(*lo, *hi);
                }
            } else if (*type == "semicircle") {
                known_keys(j, path, {"type", "sigma"});
                auto s = get<double>(j, "sigma", path + ".sigma");
                if (!j.contains("sigma")) fail(path + ".sigma is required");
                if (s) {
                    if (!(*s > 0.0)) fail(path + ".sigma must be positive");
                    else m = SpectralMeasure::semicircle(*s);
                }
            } else if (*type == "atomic") {
                known_keys(j, path, {"type", "atoms"});
                if (!j.contains("atoms")) fail(path + ".atoms is required");
                else {
                    m = measure_from_json(nlohmann::json{{"atoms", j.at("atoms")}});
                    require_probability(*m, path);
                }
            } else {
                fail(path + ".type must be one of delta, uniform, semicircle, atomic");
            }
            if (errors.size() != before) return std::nullopt;
            return m;
        } catch (const std::exception& e) {
            fail(path + ": " + e.what());
            return std::nullopt;
        }
    }

    std::optional<RankRule> rank_rule(const nlohmann::json& j, const std::string& path) {
        if (!j.is_object()) {
            fail(path + " must be an object");
            return std::nullopt;
        }
        const auto type = get<std::string>(j, "type", path + ".type");
        if (!type) {
            if (!j.contains("type")) fail(path + ".type is required");
            return std::nullopt;
        }
        if (*type == "constant") {
            known_keys(j, path, {"type", "r"});
            auto r = get<std::size_t>(j, "r", path + ".r");
            if (!j.contains("r")) fail(path + ".r is required");
            if (r) return RankRule::constant(*r);
        } else if (*type == "power") {
            known_keys(j, path, {"type", "alpha"});
            auto a = get<double>(j, "alpha", path + ".alpha");
            if (!j.contains("alpha")) fail(path + ".alpha is required");
            if (a) {
                if (!(*a > 0.0 && *a < 1.0)) fail(path + ".alpha: α in (0,1) required, got " + std::to_string(*a));
                else return RankRule::power(*a);
            }
        } else if (*type == "log") {
            known_keys(j, path, {"type", "c"});
            auto c = get<double>(j, "c", path + ".c");
            if (!j.contains("c")) fail(path + ".c is required");
            if (c) {
                if (!(*c > 0.0)) fail(path + ".c must be positive");
                else return RankRule::log(*c);
            }
        } else {
            fail(path + ".type must be one of constant, power, log");
        }
        return std::nullopt;
    }
};

inline RankRule rank_rule_from_json(const nlohmann::json& j) {
    ConfigReader rd;
    auto r = rd.rank_rule(j, "rank_rule");
    if (!r) throw ValidationError(rd.errors.empty() ? "invalid rank rule" : rd.errors.front());
    return *r;
}

inline SpectralMeasure law_from_json(const nlohmann::json& j, const std::string& path) {
    ConfigReader rd;
    auto m = rd.law(j, path);
    if (!m) throw ValidationError(rd.errors.empty() ? "invalid law" : rd.errors.front());
    return *m;
}

} // namespace detail

inline SpectralMeasure RunConfig::bulk_measure() const { return detail::law_from_json(bulk, "model.bulk"); }

inline std::optional<SpectralMeasure> RunConfig::spike_measure() const {
    if (!spike_law) return std::nullopt;
    return detail::law_from_json(*spike_law, "model.spike_law");
}

inline EnsembleSpec RunConfig::ensemble(std::size_t size) const {
    EnsembleSpec s;
    s.n = size;
    s.sigma = sigma;
    s.bulk = bulk_measure();
    s.spike_law = spike_measure();
    if (rank_rule) s.rank_rule = detail::rank_rule_from_json(*rank_rule);
    return s;
}

inline ExperimentPlan RunConfig::plan() const {
    ExperimentPlan p;
    p.model = ensemble(size());
    p.n_grid = sizes();
    p.trials_per_n = trials;
    p.master_seed = seed;
    p.probe_points = probes;
    p.intervals = intervals;
    p.spike_intervals = spike_intervals;
    p.solver = solver;
    p.threads = threads;
    return p;
}

/// Typed configuration, or the complete list of violations.
inline ConfigResult validate_config(const nlohmann::json& doc) {
    detail::ConfigReader rd;
    RunConfig c;
    if (!doc.is_object()) return {std::nullopt, {"config must be a JSON object"}};
    rd.known_keys(doc, "", {"model", "solver", "experiment", "output"});

    if (const auto* m = rd.object(doc, "model", "model", true)) {
        rd.known_keys(*m, "model", {"n", "n_grid", "sigma", "bulk", "spike_law", "rank_rule"});
        c.n = rd.get<std::size_t>(*m, "n", "model.n");
        if (c.n && *c.n < 1) rd.fail("model.n must be at least 1");
        if (auto g = rd.get<std::vector<std::size_t>>(*m, "n_grid", "model.n_grid")) {
            c.n_grid = *g;
            if (c.n_grid.empty()) rd.fail("model.n_grid must not be empty");
            for (std::size_t k = 1; k < c.n_grid.size(); ++k)
                if (!(c.n_grid[k] > c.n_grid[k - 1])) {
                    rd.fail("model.n_grid must be strictly increasing");
                    break;
                }
        }
        if (!m->contains("n") && !m->contains("n_grid")) rd.fail("model.n or model.n_grid is required");
        if (auto s = rd.get<double>(*m, "sigma", "model.sigma")) {
            c.sigma = *s;
            if (!(c.sigma > 0.0)) rd.fail("sigma must be positive (model.sigma)");
        } else if (!m->contains("sigma")) {
            rd.fail("model.sigma is required");
        }
        bool laws_ok = true;
        if (m->contains("bulk")) {
            c.bulk = m->at("bulk");
            laws_ok = rd.law(c.bulk, "model.bulk").has_value() && laws_ok;
        }
        if (m->contains("spike_law") && !m->at("spike_law").is_null()) {
            c.spike_law = m->at("spike_law");
            laws_ok = rd.law(*c.spike_law, "model.spike_law").has_value() && laws_ok;
            if (!m->contains("rank_rule")) rd.fail("model.rank_rule is required with a spike_law");
        }
        if (m->contains("rank_rule")) {
            c.rank_rule = m->at("rank_rule");
            laws_ok = rd.rank_rule(*c.rank_rule, "model.rank_rule").has_value() && laws_ok;
        }
        // Ensemble-level constraints for every size that will be built.
        if (laws_ok && rd.errors.empty() && (c.n || !c.n_grid.empty())) {
            for (std::size_t size : c.sizes()) {
                try {
                    c.ensemble(size).validate();
                } catch (const ValidationError& e) {
                    rd.fail(std::string("model: ") + e.what());
                }
            }
        }
    }

    if (const auto* s = rd.object(doc, "solver", "solver", false)) {
        rd.known_keys(*s, "solver", {"damping", "tol", "max_iter", "inversion_ys", "support_eps", "grid_points"});
        if (auto v = rd.get<double>(*s, "damping", "solver.damping")) c.solver.damping = *v;
        if (auto v = rd.get<double>(*s, "tol", "solver.tol")) c.solver.tol = *v;
        if (auto v = rd.get<int>(*s, "max_iter", "solver.max_iter")) c.solver.max_iter = *v;
        if (auto v = rd.get<std::vector<double>>(*s, "inversion_ys", "solver.inversion_ys")) c.solver.inversion_ys = *v;
        if (auto v = rd.get<double>(*s, "support_eps", "solver.support_eps")) c.solver.support_eps = *v;
        if (auto v = rd.get<std::size_t>(*s, "grid_points", "solver.grid_points")) c.solver.grid_points = *v;
        try {
            c.solver.validate();
        } catch (const ValidationError& e) {
            rd.fail(e.what());
        }
    }

    if (const auto* e = rd.object(doc, "experiment", "experiment", false)) {
        rd.known_keys(*e, "experiment", {"kind", "trials", "seed", "threads", "intervals", "spike_intervals", "probes"});
        if (auto v = rd.get<std::string>(*e, "kind", "experiment.kind")) {
            c.kind = *v;
            if (c.kind != "mapping" && c.kind != "counting" && c.kind != "outlier" && c.kind != "rate")
                rd.fail("experiment.kind must be one of mapping, counting, outlier, rate");
        }
        if (auto v = rd.get<std::size_t>(*e, "trials", "experiment.trials")) {
            c.trials = *v;
            if (c.trials < 1) rd.fail("experiment.trials must be at least 1");
        }
        if (auto v = rd.get<std::uint64_t>(*e, "seed", "experiment.seed")) c.seed = *v;
        if (auto v = rd.get<std::size_t>(*e, "threads", "experiment.threads")) c.threads = *v;
        c.intervals = rd.intervals(*e, "intervals", "experiment.intervals");
        c.spike_intervals = rd.intervals(*e, "spike_intervals", "experiment.spike_intervals");
        if (e->contains("probes")) {
            const auto& arr = e->at("probes");
            bool ok = arr.is_array();
            if (ok) {
                for (const auto& p : arr) {
                    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
                        ok = false;
                        break;
                    }
                    c.probes.emplace_back(p[0].get<double>(), p[1].get<double>());
                    if (!(c.probes.back().imag() >= 0.1)) rd.fail("experiment.probes: Im z must be at least 0.1");
                }
            }
            if (!ok) {
                rd.fail("experiment.probes must be a list of [re, im] pairs");
                c.probes.clear();
            }
        }
    }

    if (const auto* o = rd.object(doc, "output", "output", false)) {
        rd.known_keys(*o, "output", {"dir", "formats"});
        if (auto v = rd.get<std::string>(*o, "dir", "output.dir")) {
            c.output_dir = *v;
            if (c.output_dir.empty()) rd.fail("output.dir must not be empty");
        }
        if (auto v = rd.get<std::vector<std::string>>(*o, "formats", "output.formats")) {
            c.formats = *v;
            for (const auto& f : c.formats)
                if (f != "csv" && f != "json") rd.fail("output.formats entries must be csv or json");
        }
    }

    if (!rd.errors.empty()) return {std::nullopt, std::move(rd.errors)};
    return {std::move(c), {}};
}

/// Fully resolved document; validate_config(to_json(c)) yields c again.
inline nlohmann::ordered_json to_json(const RunConfig& c) {
    using nlohmann::ordered_json;
    ordered_json model;
    if (c.n) model["n"] = *c.n;
    if (!c.n_grid.empty()) model["n_grid"] = c.n_grid;
    model["sigma"] = c.sigma;
    model["bulk"] = c.bulk;
    if (c.spike_law) model["spike_law"] = *c.spike_law;
    if (c.rank_rule) model["rank_rule"] = *c.rank_rule;

    ordered_json solver = {{"damping", c.solver.damping},         {"tol", c.solver.tol},
                           {"max_iter", c.solver.max_iter},       {"inversion_ys", c.solver.inversion_ys},
                           {"support_eps", c.solver.support_eps}, {"grid_points", c.solver.grid_points}};

    auto pairs = [](const std::vector<Interval>& v) {
        ordered_json a = ordered_json::array();
        for (const auto& iv : v) a.push_back({iv.lo, iv.hi});
        return a;
    };
    ordered_json probes = ordered_json::array();
    for (const auto& z : c.probes) probes.push_back({z.real(), z.imag()});
    ordered_json experiment = {{"kind", c.kind},
                               {"trials", c.trials},
                               {"seed", c.seed},
                               {"threads", c.threads},
                               {"intervals", pairs(c.intervals)},
                               {"spike_intervals", pairs(c.spike_intervals)},
                               {"probes", probes}};
    ordered_json output = {{"dir", c.output_dir}, {"formats", c.formats}};
    return {{"model", model}, {"solver", solver}, {"experiment", experiment}, {"output", output}};
}

} // namespace spectral
