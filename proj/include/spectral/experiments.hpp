#pragma once

// Seeded Monte Carlo harness. Every (N, trial) pair is an independent work
// item with its own derived seed; results are merged in (N, trial) order, so
// reports do not depend on the number of worker threads.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectral/eigensolver.hpp"
#include "spectral/ensembles.hpp"
#include "spectral/error.hpp"
#include "spectral/measures.hpp"
#include "spectral/outlier_theory.hpp"
#include "spectral/rng.hpp"
#include "spectral/subordination.hpp"

namespace spectral {

struct ExperimentPlan {
    EnsembleSpec model;                  // `n` is ignored; sizes come from n_grid
    std::vector<std::size_t> n_grid;
    std::size_t trials_per_n = 1;
    std::uint64_t master_seed = 0;
    std::vector<cplx> probe_points;      // rate experiment
    std::vector<Interval> intervals;     // counting experiment, in eigenvalue coordinates
    std::vector<Interval> spike_intervals;  // counting experiment, mapped through Phi before use
    SolverConfig solver;
    std::size_t threads = 0;             // 0: SPECTRAL_THREADS, else hardware concurrency

    EnsembleSpec spec_for(std::size_t n) const {
        EnsembleSpec s = model;
        s.n = n;
        return s;
    }

    void validate() const {
        if (n_grid.empty()) throw ValidationError("experiment: n_grid must not be empty");
        for (std::size_t k = 1; k < n_grid.size(); ++k)
            if (!(n_grid[k] > n_grid[k - 1])) throw ValidationError("experiment: n_grid must be strictly increasing");
        if (trials_per_n < 1) throw ValidationError("experiment: trials must be at least 1");
        for (const auto& z : probe_points)
            if (!(z.imag() >= 0.1)) throw ValidationError("experiment: probe points need Im z >= 0.1");
        for (const auto& iv : intervals)
            if (!(iv.lo <= iv.hi)) throw ValidationError("experiment: interval with lo > hi");
        for (const auto& iv : spike_intervals)
            if (!(iv.lo <= iv.hi)) throw ValidationError("experiment: spike interval with lo > hi");
        solver.validate();
        for (std::size_t n : n_grid) spec_for(n).validate();
    }
};

/// Everything kept from one sampled W.
struct TrialRecord {
    std::size_t n = 0;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    std::string digest;                 // FNV-1a of the eigenvalue bytes
    double lambda1 = 0.0;
    double trace_rel_err = 0.0;         // |sum lambda^2 - ||W||_F^2| / ||W||_F^2
    std::vector<double> top;            // r largest eigenvalues
    std::vector<std::size_t> counts;    // per counting interval
    std::vector<cplx> g_hat;            // per probe point
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double r_squared = 0.0;
    double band_lo = 0.0;  // 95% confidence band on the slope
    double band_hi = 0.0;
};

struct MappingRow {
    std::size_t n, trial;
    std::uint64_t seed;
    std::size_t j;
    double lambda_s, phi_pred, lambda_w, abs_err;
    bool absorbed;
};

struct MappingAggregate {
    std::size_t n, r;
    std::size_t absorbed;
    double median_max_err;  // NaN without supercritical spikes
    double median_lambda1;
};

struct CountingRow {
    std::size_t n, trial;
    std::uint64_t seed;
    Interval delta;
    double empirical, predicted;
};

struct CountingAggregate {
    std::size_t n;
    Interval delta;
    double predicted;
    double mean_empirical;
    double mean_abs_dev;
};

struct RateAggregate {
    std::size_t n;
    cplx z;
    double residual;
    double variance;  // sample variance of the per-trial estimates
    std::size_t n_trials;
};

struct ExperimentReport {
    ExperimentReport() = default;
    ExperimentReport(std::string kind_, std::uint64_t seed, std::vector<TrialRecord> recs = {})
        : kind(std::move(kind_)), master_seed(seed), records(std::move(recs)) {}

    std::string kind;
    std::uint64_t master_seed = 0;
    std::vector<TrialRecord> records;

    std::vector<MappingRow> mapping_rows;
    std::vector<MappingAggregate> mapping;
    bool monotone_decrease = false;

    std::vector<CountingRow> counting_rows;
    std::vector<CountingAggregate> counting;

    std::vector<RateAggregate> rate;
    std::vector<LinearFit> residual_fits;  // per probe point
    std::vector<LinearFit> variance_fits;

    std::string csv() const;
    nlohmann::ordered_json to_json() const;
};

/// (1/N) sum_k 1 / (lambda_k - z).
inline cplx estimate_mean_stieltjes(const Spectrum& eigs, cplx z) {
    if (z.imag() == 0.0) throw ValidationError("estimate_mean_stieltjes: requires Im z != 0");
    cplx s = 0.0;
    for (double l : eigs.values) s += 1.0 / (l - z);
    return s / static_cast<double>(eigs.size());
}

/// Least-squares line through (x, y) with a 95% Student-t band on the slope.
inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 3 || y.size() != n) throw ValidationError("fit_line: need at least three points");
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
        syy += (y[k] - my) * (y[k] - my);
    }
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double e = y[k] - f.intercept - f.slope * x[k];
        sse += e * e;
    }
    const std::size_t df = n - 2;
    f.slope_stderr = std::sqrt(sse / static_cast<double>(df) / sxx);
    f.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    static constexpr double t975[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228};
    const double t = df <= 10 ? t975[df - 1] : 1.96 + 2.4 / static_cast<double>(df);
    f.band_lo = f.slope - t * f.slope_stderr;
    f.band_hi = f.slope + t * f.slope_stderr;
    return f;
}

namespace detail {

inline std::string eigen_digest(const Spectrum& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (double v : s.values) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 0x100000001b3ull;
        }
    }
    char buf[17];
    for (int i = 15; i >= 0; --i) {
        buf[i] = "0123456789abcdef"[h & 0xf];
        h >>= 4;
    }
    buf[16] = '\0';
    return buf;
}

inline std::string fmt(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    const std::size_t m = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m), v.end());
    const double hi = v[m];
    if (v.size() % 2 == 1) return hi;
    return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m)));
}

inline std::size_t worker_count(std::size_t requested, std::size_t items) {
    std::size_t t = requested;
    if (t == 0) {
        if (const char* env = std::getenv("SPECTRAL_THREADS")) {
            char* end = nullptr;
            const long v = std::strtol(env, &end, 10);
            if (end != env && v > 0) t = static_cast<std::size_t>(v);
        }
    }
    if (t == 0) t = std::max(1u, std::thread::hardware_concurrency());
    return std::max<std::size_t>(1, std::min(t, items));
}

// Runs body(k) for k in [0, count). The exception of the lowest failing
// index is rethrown after all workers finish.
inline void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k; (k = next.fetch_add(1)) < count;) {
            try {
                body(k);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const std::size_t workers = worker_count(threads, count);
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct TrialNeeds {
    std::size_t top = 0;
    std::vector<Interval> intervals;
    std::vector<cplx> probes;
};

inline std::vector<TrialRecord> run_trials(const ExperimentPlan& plan, const TrialNeeds& needs) {
    std::vector<std::vector<double>> diagonals;
    for (std::size_t n : plan.n_grid) diagonals.push_back(signal_diagonal(plan.spec_for(n)));

    const std::size_t per_n = plan.trials_per_n;
    std::vector<TrialRecord> records(plan.n_grid.size() * per_n);
    parallel_for(records.size(), plan.threads, [&](std::size_t k) {
        const std::size_t ni = k / per_n;
        TrialRecord rec;
        rec.n = plan.n_grid[ni];
        rec.trial = k % per_n;
        rec.seed = derive_seed(plan.master_seed, {rec.n, rec.trial});
        const EnsembleSpec spec = plan.spec_for(rec.n);
        try {
            const SymmetricMatrix w = sample_deformed(spec, diagonals[ni], rec.seed);
            const Spectrum eigs = eigenvalues_symmetric(w);
            const double fro = w.frobenius_norm_sq();
            rec.trace_rel_err = std::abs(eigs.sum_sq() - fro) / fro;
            if (!(rec.trace_rel_err <= 1e-6))
                throw NumericalError("trace identity violated: relative error " + fmt(rec.trace_rel_err));
            rec.digest = eigen_digest(eigs);
            rec.lambda1 = eigs.largest();
            const std::size_t r = std::min(needs.top, eigs.size());
            rec.top.assign(eigs.values.begin(), eigs.values.begin() + static_cast<std::ptrdiff_t>(r));
            for (const auto& iv : needs.intervals) {
                std::size_t c = 0;
                for (double l : eigs.values) c += iv.contains(l) ? 1 : 0;
                rec.counts.push_back(c);
            }
            for (const auto& z : needs.probes) rec.g_hat.push_back(estimate_mean_stieltjes(eigs, z));
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " [N=" + std::to_string(rec.n) +
                                 ", trial=" + std::to_string(rec.trial) + ", seed=" + std::to_string(rec.seed) + "]");
        }
        records[k] = std::move(rec);
    });
    return records;
}

inline void fill_mapping(ExperimentReport& rep, const ExperimentPlan& plan, const LimitLaw& law) {
    std::size_t at = 0;
    rep.monotone_decrease = true;
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t n : plan.n_grid) {
        const EnsembleSpec spec = plan.spec_for(n);
        const auto pred = predict_outlier_positions(signal_spectrum(spec), spec, law);
        MappingAggregate agg{n, spec.rank(), 0, 0.0, 0.0};
        for (bool a : pred.absorbed) agg.absorbed += a ? 1 : 0;
        std::vector<double> max_err, l1;
        for (std::size_t t = 0; t < plan.trials_per_n; ++t, ++at) {
            const TrialRecord& rec = rep.records[at];
            double e = -1.0;
            for (std::size_t j = 0; j < pred.spikes.size(); ++j) {
                const double err = std::abs(rec.top[j] - pred.mapped_positions[j]);
                rep.mapping_rows.push_back(
                    {n, rec.trial, rec.seed, j + 1, pred.spikes[j], pred.mapped_positions[j], rec.top[j], err, pred.absorbed[j]});
                if (!pred.absorbed[j]) e = std::max(e, err);
            }
            if (e >= 0.0) max_err.push_back(e);
            l1.push_back(rec.lambda1);
        }
        agg.median_max_err = median(max_err);
        agg.median_lambda1 = median(l1);
        if (!(agg.median_max_err < prev)) rep.monotone_decrease = false;
        prev = agg.median_max_err;
        rep.mapping.push_back(agg);
    }
}

inline std::vector<Interval> counting_intervals(const ExperimentPlan& plan, const LimitLaw& law) {
    std::vector<Interval> out = plan.intervals;
    for (const auto& iv : plan.spike_intervals)
        out.push_back({phi_eval(law.nu0, law.sigma, iv.lo), phi_eval(law.nu0, law.sigma, iv.hi)});
    if (out.empty()) throw ValidationError("counting experiment: no intervals given");
    for (const auto& iv : out)
        for (const auto& b : law.support)
            if (iv.intersects(b))
                throw ValidationError("counting experiment: interval [" + fmt(iv.lo) + ", " + fmt(iv.hi) +
                                      "] touches the support of mu0");
    return out;
}

inline void fill_counting(ExperimentReport& rep, const ExperimentPlan& plan, const LimitLaw& law,
                          const std::vector<Interval>& intervals) {
    const auto mu1 = predict_outlier_measure(subtract(*plan.model.spike_law, plan.model.bulk), law);
    std::vector<double> predicted;
    for (const auto& iv : intervals) predicted.push_back(mu1.mass_on(iv));
    std::size_t at = 0;
    for (std::size_t n : plan.n_grid) {
        const double r = static_cast<double>(plan.spec_for(n).rank());
        std::vector<double> sum(intervals.size(), 0.0), dev(intervals.size(), 0.0);
        for (std::size_t t = 0; t < plan.trials_per_n; ++t, ++at) {
            const TrialRecord& rec = rep.records[at];
            for (std::size_t i = 0; i < intervals.size(); ++i) {
                const double emp = static_cast<double>(rec.counts[i]) / r;
                rep.counting_rows.push_back({n, rec.trial, rec.seed, intervals[i], emp, predicted[i]});
                sum[i] += emp;
                dev[i] += std::abs(emp - predicted[i]);
            }
        }
        const double trials = static_cast<double>(plan.trials_per_n);
        for (std::size_t i = 0; i < intervals.size(); ++i)
            rep.counting.push_back({n, intervals[i], predicted[i], sum[i] / trials, dev[i] / trials});
    }
}

inline void require_spikes(const ExperimentPlan& plan, const char* what) {
    if (!plan.model.spike_law) throw ValidationError(std::string(what) + ": the model has no spike law");
}

} // namespace detail

/// Per trial: max over supercritical j <= r of |lambda_j(W) - Phi(lambda_j(S))|,
/// aggregated as a median per N. Subcritical spikes are listed but excluded.
inline ExperimentReport run_mapping_experiment(const ExperimentPlan& plan) {
    plan.validate();
    const LimitLaw law = make_limit_law(plan.model.bulk, plan.model.sigma, plan.solver);
    ExperimentReport rep{"mapping", plan.master_seed};
    detail::TrialNeeds needs;
    for (std::size_t n : plan.n_grid) needs.top = std::max(needs.top, plan.spec_for(n).rank());
    rep.records = detail::run_trials(plan, needs);
    detail::fill_mapping(rep, plan, law);
    return rep;
}

/// Per trial and interval D: (1/r) #{i : lambda_i(W) in D} against mu1(D).
inline ExperimentReport run_counting_experiment(const ExperimentPlan& plan) {
    plan.validate();
    detail::require_spikes(plan, "counting experiment");
    const LimitLaw law = make_limit_law(plan.model.bulk, plan.model.sigma, plan.solver);
    const auto intervals = detail::counting_intervals(plan, law);
    ExperimentReport rep{"counting", plan.master_seed};
    rep.records = detail::run_trials(plan, {0, intervals, {}});
    detail::fill_counting(rep, plan, law, intervals);
    return rep;
}

/// Mapping and counting statistics from one shared set of trials.
inline std::pair<ExperimentReport, ExperimentReport> run_outlier_experiments(const ExperimentPlan& plan) {
    plan.validate();
    detail::require_spikes(plan, "outlier experiments");
    const LimitLaw law = make_limit_law(plan.model.bulk, plan.model.sigma, plan.solver);
    const auto intervals = detail::counting_intervals(plan, law);
    detail::TrialNeeds needs{0, intervals, {}};
    for (std::size_t n : plan.n_grid) needs.top = std::max(needs.top, plan.spec_for(n).rank());
    auto records = detail::run_trials(plan, needs);
    ExperimentReport mapping{"mapping", plan.master_seed, records};
    ExperimentReport counting{"counting", plan.master_seed, std::move(records)};
    detail::fill_mapping(mapping, plan, law);
    detail::fill_counting(counting, plan, law, intervals);
    return {std::move(mapping), std::move(counting)};
}

/// Per N and probe z: residual |g - g_nu(z + sigma^2 g)| of the trial mean g
/// of (1/N) Tr (W - z)^{-1}, with g_nu exact from the diagonal of S; then
/// log-log least-squares slopes of the residual and of the trial variance.
inline ExperimentReport run_rate_experiment(const ExperimentPlan& plan) {
    plan.validate();
    if (plan.n_grid.size() < 3) throw ValidationError("rate experiment: needs at least three N values");
    if (plan.trials_per_n < 100) throw ValidationError("rate experiment: needs at least 100 trials per N");
    if (plan.probe_points.empty()) throw ValidationError("rate experiment: no probe points given");
    ExperimentReport rep{"rate", plan.master_seed};
    rep.records = detail::run_trials(plan, {0, {}, plan.probe_points});

    const double s2 = plan.model.sigma * plan.model.sigma;
    const double trials = static_cast<double>(plan.trials_per_n);
    std::size_t base = 0;
    for (std::size_t n : plan.n_grid) {
        const auto diag = signal_diagonal(plan.spec_for(n));
        for (std::size_t p = 0; p < plan.probe_points.size(); ++p) {
            const cplx z = plan.probe_points[p];
            cplx mean = 0.0;
            for (std::size_t t = 0; t < plan.trials_per_n; ++t) mean += rep.records[base + t].g_hat[p];
            mean /= trials;
            double var = 0.0;
            for (std::size_t t = 0; t < plan.trials_per_n; ++t) var += std::norm(rep.records[base + t].g_hat[p] - mean);
            var /= trials - 1.0;
            const cplx w = z + s2 * mean;
            cplx g_nu = 0.0;
            for (double s : diag) g_nu += 1.0 / (s - w);
            g_nu /= static_cast<double>(n);
            rep.rate.push_back({n, z, std::abs(mean - g_nu), var, plan.trials_per_n});
        }
        base += plan.trials_per_n;
    }
    for (std::size_t p = 0; p < plan.probe_points.size(); ++p) {
        std::vector<double> x, yr, yv;
        for (std::size_t i = 0; i < plan.n_grid.size(); ++i) {
            const auto& a = rep.rate[i * plan.probe_points.size() + p];
            x.push_back(std::log(static_cast<double>(a.n)));
            yr.push_back(std::log(a.residual));
            yv.push_back(std::log(a.variance));
        }
        rep.residual_fits.push_back(fit_line(x, yr));
        rep.variance_fits.push_back(fit_line(x, yv));
    }
    return rep;
}

inline std::string ExperimentReport::csv() const {
    using detail::fmt;
    std::ostringstream out;
    if (kind == "mapping") {
        out << "N,trial,seed,j,lambda_S,phi_pred,lambda_W,abs_err\n";
        for (const auto& r : mapping_rows)
            out << r.n << ',' << r.trial << ',' << r.seed << ',' << r.j << ',' << fmt(r.lambda_s) << ','
                << fmt(r.phi_pred) << ',' << fmt(r.lambda_w) << ',' << fmt(r.abs_err) << '\n';
    } else if (kind == "counting") {
        out << "N,trial,seed,delta_lo,delta_hi,empirical,predicted\n";
        for (const auto& r : counting_rows)
            out << r.n << ',' << r.trial << ',' << r.seed << ',' << fmt(r.delta.lo) << ',' << fmt(r.delta.hi) << ','
                << fmt(r.empirical) << ',' << fmt(r.predicted) << '\n';
    } else {
        out << "N,z_re,z_im,residual,n_trials\n";
        for (const auto& r : rate)
            out << r.n << ',' << fmt(r.z.real()) << ',' << fmt(r.z.imag()) << ',' << fmt(r.residual) << ','
                << r.n_trials << '\n';
    }
    return out.str();
}

inline nlohmann::ordered_json to_json(const LinearFit& f) {
    return {{"slope", f.slope},         {"intercept", f.intercept}, {"slope_stderr", f.slope_stderr},
            {"r_squared", f.r_squared}, {"band_lo", f.band_lo},     {"band_hi", f.band_hi}};
}

inline nlohmann::ordered_json ExperimentReport::to_json() const {
    using nlohmann::ordered_json;
    auto num = [](double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); };
    ordered_json j;
    j["kind"] = kind;
    j["master_seed"] = master_seed;
    ordered_json agg = ordered_json::array();
    if (kind == "mapping") {
        for (const auto& a : mapping)
            agg.push_back({{"N", a.n},
                           {"r", a.r},
                           {"absorbed", a.absorbed},
                           {"median_max_err", num(a.median_max_err)},
                           {"median_lambda1", a.median_lambda1}});
        j["per_n"] = agg;
        j["monotone_decrease"] = monotone_decrease;
    } else if (kind == "counting") {
        for (const auto& a : counting)
            agg.push_back({{"N", a.n},
                           {"delta_lo", a.delta.lo},
                           {"delta_hi", a.delta.hi},
                           {"predicted", a.predicted},
                           {"mean_empirical", a.mean_empirical},
                           {"mean_abs_dev", a.mean_abs_dev}});
        j["per_n"] = agg;
    } else {
        for (const auto& a : rate)
            agg.push_back({{"N", a.n},
                           {"z_re", a.z.real()},
                           {"z_im", a.z.imag()},
                           {"residual", a.residual},
                           {"variance", a.variance},
                           {"n_trials", a.n_trials}});
        j["per_n"] = agg;
        ordered_json fits = ordered_json::array();
        for (std::size_t p = 0; p < residual_fits.size(); ++p)
            fits.push_back({{"residual", spectral::to_json(residual_fits[p])},
                            {"variance", spectral::to_json(variance_fits[p])}});
        j["fits"] = fits;
    }
    ordered_json trials = ordered_json::array();
    for (const auto& r : records)
        trials.push_back({{"N", r.n},
                          {"trial", r.trial},
                          {"seed", r.seed},
                          {"eigen_digest", r.digest},
                          {"lambda1", r.lambda1},
                          {"trace_rel_err", r.trace_rel_err}});
    j["trials"] = trials;
    return j;
}

} // namespace spectral
