#pragma once

// Deformed Wigner model W = R / sqrt(N) + S: Gaussian symmetric noise R and
// a deterministic diagonal signal S whose spectrum realizes (bulk law, spike
// law, rank rule) through midpoint quantiles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectral/eigensolver.hpp"
#include "spectral/error.hpp"
#include "spectral/matrix.hpp"
#include "spectral/measures.hpp"
#include "spectral/rng.hpp"

namespace spectral {

/// Number of spikes r(N).
class RankRule {
public:
    enum class Kind { constant, power, log };

    static RankRule constant(std::size_t r) { return {Kind::constant, static_cast<double>(r)}; }
    /// r = floor(N^alpha), 0 < alpha < 1.
    static RankRule power(double alpha) {
        if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("rank_rule: power exponent must lie in (0,1)");
        return {Kind::power, alpha};
    }
    /// r = floor(c ln N).
    static RankRule log(double c) {
        if (!(c > 0.0)) throw ValidationError("rank_rule: log coefficient must be positive");
        return {Kind::log, c};
    }

    Kind kind() const { return kind_; }
    double parameter() const { return param_; }

    std::size_t rank(std::size_t n) const {
        const double nd = static_cast<double>(n);
        switch (kind_) {
        case Kind::constant: return static_cast<std::size_t>(param_);
        // The 1e-12 nudge keeps exact powers such as 1000^(1/3) from
        // rounding down to the previous integer.
        case Kind::power: return static_cast<std::size_t>(std::floor(std::pow(nd, param_) * (1.0 + 1e-12)));
        case Kind::log: return static_cast<std::size_t>(std::floor(param_ * std::log(nd)));
        }
        return 0;
    }

    friend bool operator==(const RankRule&, const RankRule&) = default;

private:
    RankRule(Kind k, double p) : kind_(k), param_(p) {}
    Kind kind_ = Kind::constant;
    double param_ = 0.0;
};

inline nlohmann::ordered_json to_json(const RankRule& r) {
    switch (r.kind()) {
    case RankRule::Kind::constant: return {{"type", "constant"}, {"r", static_cast<std::size_t>(r.parameter())}};
    case RankRule::Kind::power: return {{"type", "power"}, {"alpha", r.parameter()}};
    case RankRule::Kind::log: return {{"type", "log"}, {"c", r.parameter()}};
    }
    return {};
}

/// One deformed-Wigner model. `spike_law` empty means S carries no spikes.
struct EnsembleSpec {
    std::size_t n = 0;
    double sigma = 1.0;
    SpectralMeasure bulk = SpectralMeasure::delta(0.0);
    std::optional<SpectralMeasure> spike_law;
    RankRule rank_rule = RankRule::constant(0);

    std::size_t rank() const { return spike_law ? rank_rule.rank(n) : 0; }

    /// Throws ValidationError describing the first violated invariant.
    void validate() const {
        if (n < 1) throw ValidationError("ensemble: n must be at least 1");
        if (!(sigma > 0.0)) throw ValidationError("ensemble: sigma must be positive");
        require_probability(bulk, "ensemble: bulk law");
        if (!spike_law) return;
        require_probability(*spike_law, "ensemble: spike law");
        const std::size_t r = rank();
        if (r < 1) throw ValidationError("ensemble: rank rule gives r(N) = 0 at N = " + std::to_string(n));
        if (4 * r > n)
            throw ValidationError("ensemble: rank rule gives r(N) = " + std::to_string(r) + " > N/4 at N = " +
                                  std::to_string(n));
        const auto bulk_support = bulk.support();
        for (const auto& iv : spike_law->support()) {
            for (const auto& b : bulk_support) {
                if (iv.intersects(b))
                    throw ValidationError("ensemble: spike law support must keep a positive distance from the bulk support");
            }
        }
    }
};

/// R with R_ij = R_ji ~ N(0, sigma^2) independent for i <= j (diagonal
/// included). Entries are drawn row by row, so the output depends only on
/// (n, sigma, seed).
inline SymmetricMatrix sample_goe(std::size_t n, double sigma, std::uint64_t seed) {
    if (n < 1) throw ValidationError("sample_goe: n must be at least 1");
    if (!(sigma > 0.0)) throw ValidationError("sample_goe: sigma must be positive");
    SymmetricMatrix r(n);
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, sigma);
    for (double& v : r.packed()) v = normal(rng);
    return r;
}

namespace detail {

// Generalized inverse CDF, F^{-1}(p) = inf{x : F(x) >= p}.
inline double quantile(const SpectralMeasure& law, double p) {
    std::vector<double> breaks;
    for (const auto& a : law.atoms()) breaks.push_back(a.location);
    breaks.insert(breaks.end(), law.grid().begin(), law.grid().end());
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    double cum = 0.0;
    std::size_t atom_idx = 0;
    const auto& atoms = law.atoms();
    for (std::size_t k = 0; k < breaks.size(); ++k) {
        const double x = breaks[k];
        while (atom_idx < atoms.size() && atoms[atom_idx].location == x) cum += atoms[atom_idx++].weight;
        if (cum >= p) return x;
        if (k + 1 == breaks.size()) break;
        const double x1 = breaks[k + 1];
        // density_at is exact at nodes; use one-sided values for jump encodings.
        const double v0 = law.density_at(x), v1 = law.density_at(x1);
        const double seg = 0.5 * (v0 + v1) * (x1 - x);
        if (seg > 0.0 && cum + seg >= p) {
            const double rest = p - cum;
            const double slope = (v1 - v0) / (x1 - x);
            double t = slope == 0.0 ? rest / v0 : 2.0 * rest / (v0 + std::sqrt(std::max(0.0, v0 * v0 + 2.0 * slope * rest)));
            return std::clamp(x + t, x, x1);
        }
        cum += seg;
    }
    return breaks.empty() ? 0.0 : breaks.back();
}

inline std::vector<double> midpoint_quantiles(const SpectralMeasure& law, std::size_t count) {
    std::vector<double> q(count);
    for (std::size_t j = 0; j < count; ++j)
        q[j] = quantile(law, (static_cast<double>(j) + 0.5) / static_cast<double>(count));
    std::sort(q.begin(), q.end());
    return q;
}

} // namespace detail

/// Midpoint quantiles F^{-1}((j - 1/2) / count), j = 1..count, ascending.
/// Throws if the law is purely atomic with fewer distinct quantiles than
/// requested.
inline std::vector<double> quantile_atoms(const SpectralMeasure& law, std::size_t count) {
    require_probability(law, "quantile_atoms: law");
    if (count == 0) return {};
    auto q = detail::midpoint_quantiles(law, count);
    if (!law.has_density()) {
        std::vector<double> u(q);
        const auto d = static_cast<std::size_t>(std::unique(u.begin(), u.end()) - u.begin());
        if (d < count)
            throw ValidationError("quantile_atoms: atomic law has " + std::to_string(d) + " distinct quantiles, " +
                                  std::to_string(count) + " requested");
    }
    return q;
}

/// Diagonal of S: the r spike quantiles in descending order, then the N - r
/// bulk quantiles in descending order.
inline std::vector<double> signal_diagonal(const EnsembleSpec& spec) {
    const std::size_t r = spec.rank();
    if (r >= spec.n) throw ValidationError("build_signal_matrix: r(N) must be smaller than N");
    std::vector<double> d;
    d.reserve(spec.n);
    if (r > 0) {
        auto spikes = detail::midpoint_quantiles(*spec.spike_law, r);
        d.insert(d.end(), spikes.rbegin(), spikes.rend());
    }
    auto bulk = detail::midpoint_quantiles(spec.bulk, spec.n - r);
    d.insert(d.end(), bulk.rbegin(), bulk.rend());
    return d;
}

inline SymmetricMatrix build_signal_matrix(const EnsembleSpec& spec) {
    return SymmetricMatrix::diagonal(signal_diagonal(spec));
}

/// Spectrum of the (diagonal) signal matrix, without an eigensolve.
inline Spectrum signal_spectrum(const EnsembleSpec& spec) {
    Spectrum s{signal_diagonal(spec)};
    std::stable_sort(s.values.begin(), s.values.end(), std::greater<>{});
    return s;
}

/// W = R / sqrt(N) + S, entrywise.
inline SymmetricMatrix assemble_deformed(const SymmetricMatrix& r_mat, const SymmetricMatrix& s_mat) {
    if (r_mat.size() != s_mat.size()) throw ValidationError("assemble_deformed: size mismatch");
    SymmetricMatrix w(r_mat.size());
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(r_mat.size()));
    auto out = w.packed();
    const auto rp = r_mat.packed();
    const auto sp = s_mat.packed();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = rp[k] * inv_sqrt_n + sp[k];
    return w;
}

/// Same matrix as assemble_deformed(sample_goe(n, sigma, seed), diagonal(diag))
/// without materializing R and S separately.
inline SymmetricMatrix sample_deformed(const EnsembleSpec& spec, std::span<const double> diag, std::uint64_t seed) {
    SymmetricMatrix w = sample_goe(spec.n, spec.sigma, seed);
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(spec.n));
    for (std::size_t i = 0; i < spec.n; ++i) {
        auto row = w.row(i);
        for (std::size_t j = 0; j < i; ++j) row[j] *= inv_sqrt_n;
        row[i] = row[i] * inv_sqrt_n + diag[i];
    }
    return w;
}

/// Q S Q^T for a Haar-distributed orthogonal Q built from Householder
/// reflectors of Gaussian vectors. O(n^3); intended for small test matrices.
inline SymmetricMatrix random_orthogonal_conjugation(const SymmetricMatrix& s, std::uint64_t seed) {
    const std::size_t n = s.size();
    std::vector<double> a(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a[i * n + j] = s(i, j);
    Rng rng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> v(n), av(n);
    for (std::size_t k = 0; k < n; ++k) {
        double vv = 0.0;
        for (auto& x : v) {
            x = normal(rng);
            vv += x * x;
        }
        // A <- H A H with H = I - 2 v v^T / (v^T v)
        for (std::size_t i = 0; i < n; ++i) {
            double t = 0.0;
            for (std::size_t j = 0; j < n; ++j) t += a[i * n + j] * v[j];
            av[i] = t;
        }
        double vav = 0.0;
        for (std::size_t i = 0; i < n; ++i) vav += v[i] * av[i];
        const double beta = 2.0 / vv;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                a[i * n + j] += -beta * (v[i] * av[j] + av[i] * v[j]) + beta * beta * vav * v[i] * v[j];
    }
    SymmetricMatrix out(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) out.set(i, j, 0.5 * (a[i * n + j] + a[j * n + i]));
    return out;
}

} // namespace spectral
