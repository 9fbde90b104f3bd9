#pragma once

// Outlier map Phi(x) = x - sigma^2 g_nu0(x): limiting locations of the
// eigenvalues of W that separate from the bulk, the limiting outlier
// measure mu1 and the largest-eigenvalue transition.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectral/eigensolver.hpp"
#include "spectral/ensembles.hpp"
#include "spectral/error.hpp"
#include "spectral/measures.hpp"
#include "spectral/subordination.hpp"

namespace spectral {

inline double phi_eval(const SpectralMeasure& nu0, double sigma, double x) {
    if (inside(nu0.support(), x)) throw DomainError("phi_eval: x lies in the support of nu0");
    return x - sigma * sigma * stieltjes_eval(nu0, cplx(x, 0.0)).real();
}

inline double phi_prime(const SpectralMeasure& nu0, double sigma, double x) {
    if (inside(nu0.support(), x)) throw DomainError("phi_prime: x lies in the support of nu0");
    return 1.0 - sigma * sigma * stieltjes_derivative(nu0, cplx(x, 0.0)).real();
}

/// Signed limiting outlier measure. Off the bulk it is an ordinary measure;
/// on supp mu0 only its total (the negative lump) is known.
struct OutlierMeasure {
    SpectralMeasure off_bulk;
    double bulk_lump = 0.0;
    std::vector<Interval> bulk_support;

    /// Mass of the closed interval. Intervals that cut through the bulk
    /// are not resolved.
    double mass_on(Interval iv) const {
        double m = signed_mass_on(off_bulk, iv);
        bool any = false, all = true;
        for (const auto& b : bulk_support) {
            const bool hit = iv.intersects(b);
            any = any || hit;
            all = all && iv.lo <= b.lo && b.hi <= iv.hi;
        }
        if (!any) return m;
        if (!all) throw DomainError("OutlierMeasure: interval partially overlaps the bulk, where mu1 is not resolved");
        return m + bulk_lump;
    }
};

struct OutlierPrediction {
    std::vector<double> spikes;            // lambda_j(S), j = 1..r, descending
    std::vector<double> mapped_positions;  // Phi(lambda_j(S)), or the bulk edge when absorbed
    std::vector<bool> absorbed;
    double bbp_edge = 0.0;
    std::optional<OutlierMeasure> mu1;
    bool within_hypotheses = true;         // spike law supported on a single interval
};

namespace detail {

inline bool is_delta_zero(const SpectralMeasure& nu0) {
    return !nu0.has_density() && nu0.atoms().size() == 1 && nu0.atoms()[0].location == 0.0;
}

// Positive part of a signed measure whose positive and negative parts have
// disjoint supports.
inline SpectralMeasure positive_part(const SpectralMeasure& m) {
    std::vector<Atom> atoms;
    for (const auto& a : m.atoms())
        if (a.weight > 0.0) atoms.push_back(a);
    std::vector<double> values(m.density());
    for (auto& v : values) v = std::max(v, 0.0);
    return {std::move(atoms), m.grid(), std::move(values)};
}

inline bool supercritical(const SpectralMeasure& nu0, double sigma, double x) {
    return !inside(nu0.support(), x) && phi_prime(nu0, sigma, x) > 0.0;
}

} // namespace detail

/// mu1 from nu1 = lim (N/r)(nu - nu0): the positive part is pushed forward
/// by Phi (equivalently mu1(D) = nu1(omega(D))); the negative part becomes
/// a lump on supp mu0.
inline OutlierMeasure predict_outlier_measure(const SpectralMeasure& nu1, const LimitLaw& law) {
    const auto bulk = law.nu0.support();
    const SpectralMeasure plus = detail::positive_part(nu1);
    if (plus.empty()) throw ValidationError("predict_outlier_measure: nu1 has no positive part");
    for (const auto& iv : plus.support())
        for (const auto& b : bulk)
            if (iv.intersects(b))
                throw DomainError("predict_outlier_measure: support of nu1+ intersects the support of nu0");

    // Phi must be increasing across supp nu1+ for the pushforward to be the
    // outlier measure; probe each component on a fine grid.
    for (const auto& iv : plus.support()) {
        constexpr int probes = 256;
        for (int k = 0; k <= probes; ++k) {
            const double x = iv.lo + iv.width() * k / probes;
            if (!detail::supercritical(law.nu0, law.sigma, x))
                throw DomainError("predict_outlier_measure: support of nu1+ reaches below the outlier threshold");
        }
    }
    const auto& nu0 = law.nu0;
    const double sigma = law.sigma;
    auto image = pushforward(
        plus, [&](double x) { return phi_eval(nu0, sigma, x); },
        RealMap([&](double x) { return phi_prime(nu0, sigma, x); }));
    return {std::move(image), nu1.total_mass() - plus.total_mass(), law.support};
}

/// Density of mu1 at x off supp mu0 through rho_nu1(omega(x)) omega'(x).
inline double outlier_density_via_omega(const SpectralMeasure& nu1, const LimitLaw& law, double x) {
    return nu1.density_at(omega_eval(law, x)) * omega_prime(law, x);
}

/// Limit of lambda_1(W) for a single spike theta.
inline double bbp_largest(double theta, const LimitLaw& law) {
    const double edge = law.upper_edge();
    if (theta <= law.nu0.hull().hi || !detail::supercritical(law.nu0, law.sigma, theta)) return edge;
    return std::max(edge, phi_eval(law.nu0, law.sigma, theta));
}

inline double bbp_largest(double theta, double sigma, const SpectralMeasure& nu0) {
    if (!(sigma > 0.0)) throw ValidationError("bbp_largest: sigma must be positive");
    if (detail::is_delta_zero(nu0)) return theta < sigma ? 2.0 * sigma : theta + sigma * sigma / theta;
    return bbp_largest(theta, make_limit_law(nu0, sigma));
}

/// Phi applied to the r largest eigenvalues of S. Spikes in the subcritical
/// region are flagged and placed at the nearest bulk edge of mu0.
inline OutlierPrediction predict_outlier_positions(const Spectrum& s_spectrum, const EnsembleSpec& spec,
                                                   const LimitLaw& law) {
    OutlierPrediction out;
    const std::size_t r = std::min(spec.rank(), s_spectrum.size());
    const Interval hull = law.nu0.hull();
    out.bbp_edge = detail::is_delta_zero(law.nu0) ? 2.0 * law.sigma : law.upper_edge();
    for (std::size_t j = 0; j < r; ++j) {
        const double theta = s_spectrum[j];
        out.spikes.push_back(theta);
        if (detail::supercritical(law.nu0, law.sigma, theta)) {
            out.mapped_positions.push_back(phi_eval(law.nu0, law.sigma, theta));
            out.absorbed.push_back(false);
            continue;
        }
        double edge;
        if (theta >= hull.hi) edge = law.upper_edge();
        else if (theta <= hull.lo) edge = law.lower_edge();
        else {
            edge = law.upper_edge();
            for (const auto& iv : law.support)
                for (double e : {iv.lo, iv.hi})
                    if (std::abs(e - theta) < std::abs(edge - theta)) edge = e;
        }
        out.mapped_positions.push_back(edge);
        out.absorbed.push_back(true);
    }
    if (spec.spike_law) {
        out.within_hypotheses = spec.spike_law->support().size() == 1;
        try {
            out.mu1 = predict_outlier_measure(subtract(*spec.spike_law, spec.bulk), law);
        } catch (const DomainError&) {
            // Part of the spike law is subcritical: mu1 is not an image of nu1+.
            out.mu1.reset();
        }
    }
    return out;
}

inline nlohmann::ordered_json to_json(const OutlierMeasure& m) {
    nlohmann::ordered_json bulk = nlohmann::ordered_json::array();
    for (const auto& iv : m.bulk_support) bulk.push_back({iv.lo, iv.hi});
    return {{"off_bulk", to_json(m.off_bulk)}, {"bulk_lump", m.bulk_lump}, {"bulk_support", bulk}};
}

inline nlohmann::ordered_json to_json(const OutlierPrediction& p) {
    nlohmann::ordered_json j;
    j["spikes"] = p.spikes;
    j["mapped_positions"] = p.mapped_positions;
    j["absorbed"] = p.absorbed;
    j["bbp_edge"] = p.bbp_edge;
    j["mu1"] = p.mu1 ? to_json(*p.mu1) : nlohmann::ordered_json(nullptr);
    j["hypotheses"] = p.within_hypotheses ? "stated" : "outside stated hypotheses";
    return j;
}

} // namespace spectral
