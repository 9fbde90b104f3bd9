#pragma once

// Limiting spectral law mu0 of R/sqrt(N) + S: the self-consistent equation
//
//     g(z) = g_nu0(z + sigma^2 g(z)),   Im z > 0,
//
// its Stieltjes inversion into a density, the support of that density and
// the subordination function omega(z) = z + sigma^2 g(z).

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spectral/error.hpp"
#include "spectral/measures.hpp"

namespace spectral {

struct SolverConfig {
    double damping = 1.0;             // Picard relaxation, (0, 1]
    double tol = 1e-13;               // residual |g - g_nu0(z + sigma^2 g)|, relative to max(1, |g|)
    int max_iter = 10000;             // per fixed-point solve
    std::vector<double> inversion_ys = {1e-6, 5e-7, 2.5e-7};  // y -> 0+ extrapolation points, decreasing
    double support_eps = 1e-4;        // density threshold defining the support
    std::size_t grid_points = 2001;   // nodes of the support scan and of the refined density grid

    void validate() const {
        if (!(damping > 0.0 && damping <= 1.0)) throw ValidationError("solver: damping must lie in (0,1]");
        if (!(tol > 0.0)) throw ValidationError("solver: tol must be positive");
        if (max_iter < 1) throw ValidationError("solver: max_iter must be positive");
        if (inversion_ys.empty()) throw ValidationError("solver: inversion_ys must not be empty");
        for (std::size_t k = 0; k < inversion_ys.size(); ++k) {
            if (!(inversion_ys[k] > 0.0)) throw ValidationError("solver: inversion_ys must be positive");
            if (k > 0 && !(inversion_ys[k] < inversion_ys[k - 1]))
                throw ValidationError("solver: inversion_ys must be strictly decreasing");
        }
        if (!(support_eps > 0.0)) throw ValidationError("solver: support_eps must be positive");
        if (grid_points < 16) throw ValidationError("solver: grid_points must be at least 16");
    }

    friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

/// mu0 together with the inputs that determine it.
struct LimitLaw {
    SpectralMeasure nu0;
    double sigma = 1.0;
    SpectralMeasure mu0_density;
    std::vector<Interval> support;
    SolverConfig cfg;

    double upper_edge() const { return support.back().hi; }
    double lower_edge() const { return support.front().lo; }
};

namespace detail {

struct FixedPoint {
    const SpectralMeasure& nu0;
    double s2;  // sigma^2
    const SolverConfig& cfg;

    // Iterates on the closed upper half plane are admissible only when
    // solving on the real axis (boundary values off the support).
    bool admissible(cplx g, bool real_axis) const {
        if (!std::isfinite(g.real()) || !std::isfinite(g.imag())) return false;
        return real_axis ? g.imag() >= 0.0 : g.imag() > 0.0;
    }

    std::optional<cplx> image(cplx z, cplx g) const {
        try {
            return stieltjes_eval(nu0, z + s2 * g);
        } catch (const DomainError&) {
            return std::nullopt;
        }
    }

    /// Damped Picard iteration g <- (1-d) g + d g_nu0(z + s2 g), accelerated
    /// by Newton steps on F(g) = g - g_nu0(z + s2 g) that are accepted only
    /// when they stay admissible and reduce the residual.
    cplx solve(cplx z, cplx g, bool real_axis = false) const {
        if (real_axis) g = cplx(g.real(), 0.0);
        if (!admissible(g, real_axis)) g = -1.0 / z;
        auto img = image(z, g);
        if (!img) throw DomainError("fixed point: initial iterate maps onto the support of nu0");
        double res = std::abs(g - *img);
        double damping = cfg.damping;

        for (int it = 0; it < cfg.max_iter; ++it) {
            if (res <= cfg.tol * std::max(1.0, std::abs(g))) return g;

            const cplx w = z + s2 * g;
            const cplx jac = 1.0 - s2 * stieltjes_derivative(nu0, w);
            if (jac != 0.0) {
                cplx cand = g - (g - *img) / jac;
                if (real_axis) cand = cplx(cand.real(), 0.0);
                if (admissible(cand, real_axis)) {
                    if (auto ci = image(z, cand)) {
                        const double cres = std::abs(cand - *ci);
                        if (cres < res) {
                            g = cand;
                            img = ci;
                            res = cres;
                            continue;
                        }
                    }
                }
            }

            // Picard; halve the damping whenever the step leaves the half plane.
            for (;;) {
                const cplx cand = (1.0 - damping) * g + damping * *img;
                std::optional<cplx> ci;
                if (admissible(cand, real_axis) && (ci = image(z, cand))) {
                    g = cand;
                    img = ci;
                    res = std::abs(g - *img);
                    break;
                }
                damping *= 0.5;
                if (damping < 1e-12)
                    throw NumericalError("fixed point: iterate left the upper half plane at the damping floor");
            }
        }
        std::ostringstream msg;
        msg << "fixed point: max_iter=" << cfg.max_iter << " exceeded at z=" << z << ", residual=" << res;
        throw NumericalError(msg.str());
    }
};

inline double continuation_top(double sigma) { return std::max(1.0, sigma); }

// Solutions at x + i*y for every y in `ys` (decreasing), reached through a
// geometric ladder of heights starting at `top`. `warm` seeds the top rung
// and is updated with the top-rung solution.
inline std::vector<cplx> solve_ladder(const FixedPoint& fp, double x, std::span<const double> ys, double top,
                                      std::optional<cplx>& warm) {
    std::vector<double> rungs;
    for (double y = top; y > ys.front(); y *= 0.1) rungs.push_back(y);
    const std::size_t first_target = rungs.size();
    rungs.insert(rungs.end(), ys.begin(), ys.end());

    std::vector<cplx> out;
    cplx g = warm.value_or(-1.0 / cplx(x, rungs.front()));
    for (std::size_t k = 0; k < rungs.size(); ++k) {
        g = fp.solve(cplx(x, rungs[k]), g);
        if (k == 0) warm = g;
        if (k >= first_target) out.push_back(g);
    }
    return out;
}

// Value at y = 0 of the polynomial through (ys[k], values[k]).
inline double extrapolate_to_zero(std::span<const double> ys, std::span<const double> values) {
    double sum = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        double l = 1.0;
        for (std::size_t j = 0; j < ys.size(); ++j)
            if (j != i) l *= ys[j] / (ys[j] - ys[i]);
        sum += l * values[i];
    }
    return sum;
}

inline double density_point(const FixedPoint& fp, double x, double sigma, std::optional<cplx>& warm) {
    const auto& ys = fp.cfg.inversion_ys;
    const auto gs = solve_ladder(fp, x, ys, continuation_top(sigma), warm);
    std::vector<double> im(gs.size());
    for (std::size_t k = 0; k < gs.size(); ++k) im[k] = gs[k].imag() / std::numbers::pi;
    return extrapolate_to_zero(ys, im);
}

inline void check_inputs(const SpectralMeasure& nu0, double sigma) {
    require_probability(nu0, "nu0");
    if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");
}

} // namespace detail

/// Solution g_mu0(z) of the self-consistent equation, Im z > 0.
/// Heights below max(1, sigma) are reached by continuation from above.
inline cplx solve_g_mu0(const SpectralMeasure& nu0, double sigma, cplx z, const SolverConfig& cfg = {},
                        std::optional<cplx> warm_start = std::nullopt) {
    if (!(z.imag() > 0.0)) throw ValidationError("solve_g_mu0: requires Im z > 0");
    detail::check_inputs(nu0, sigma);
    const detail::FixedPoint fp{nu0, sigma * sigma, cfg};
    const double top = detail::continuation_top(sigma);
    if (warm_start || z.imag() >= top) {
        try {
            return fp.solve(z, warm_start.value_or(-1.0 / z));
        } catch (const NumericalError&) {
            if (z.imag() >= top) throw;
        }
    }
    std::optional<cplx> warm;
    const double ys[] = {z.imag()};
    return detail::solve_ladder(fp, z.real(), ys, top, warm).back();
}

namespace detail {

inline std::vector<double> density_values(const FixedPoint& fp, double sigma, std::span<const double> grid) {
    std::vector<double> values(grid.size());
    std::optional<cplx> warm;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double rho = density_point(fp, grid[k], sigma, warm);
        if (rho < -1e-6) {
            std::ostringstream msg;
            msg << "density: negative value " << rho << " at x=" << grid[k];
            throw NumericalError(msg.str());
        }
        values[k] = std::max(rho, 0.0);
    }
    return values;
}

inline SpectralMeasure normalized_density(std::vector<double> grid, std::vector<double> values) {
    const double mass = SpectralMeasure({}, grid, values).total_mass();
    if (std::abs(mass - 1.0) > 1e-3) {
        std::ostringstream msg;
        msg << "density: recovered mass " << mass << " deviates from 1 by more than 1e-3 (grid too coarse?)";
        throw NumericalError(msg.str());
    }
    for (auto& v : values) v /= mass;
    return {{}, std::move(grid), std::move(values), 1.0};
}

} // namespace detail

/// Density of mu0 on `grid`: Im g(x + iy) / pi extrapolated to y = 0 over
/// cfg.inversion_ys. Values in [-1e-6, 0) are zeroed; the result is
/// renormalized to unit mass when its mass is within 1e-3 of 1.
inline SpectralMeasure density_from_transform(const SpectralMeasure& nu0, double sigma, std::span<const double> grid,
                                              const SolverConfig& cfg = {}) {
    cfg.validate();
    detail::check_inputs(nu0, sigma);
    const detail::FixedPoint fp{nu0, sigma * sigma, cfg};
    return detail::normalized_density({grid.begin(), grid.end()}, detail::density_values(fp, sigma, grid));
}

/// Maximal intervals where the density exceeds cfg.support_eps. Candidate
/// intervals come from the grid values; each endpoint is then bisected to
/// 1e-6 against pointwise density evaluations.
inline std::vector<Interval> support_edges(const SpectralMeasure& nu0, double sigma, const SpectralMeasure& density,
                                           const SolverConfig& cfg = {}) {
    const auto& g = density.grid();
    const auto& v = density.density();
    const detail::FixedPoint fp{nu0, sigma * sigma, cfg};
    auto above = [&](double x) {
        std::optional<cplx> warm;
        return detail::density_point(fp, x, sigma, warm) > cfg.support_eps;
    };
    auto refine = [&](double outside, double in) {
        while (std::abs(in - outside) > 1e-6) {
            const double mid = 0.5 * (in + outside);
            (above(mid) ? in : outside) = mid;
        }
        return in;
    };

    std::vector<Interval> out;
    std::size_t k = 0;
    while (k < g.size()) {
        if (v[k] <= cfg.support_eps) {
            ++k;
            continue;
        }
        std::size_t e = k;
        while (e + 1 < g.size() && v[e + 1] > cfg.support_eps) ++e;
        const double lo = k == 0 ? g[0] : refine(g[k - 1], g[k]);
        const double hi = e + 1 == g.size() ? g[e] : refine(g[e + 1], g[e]);
        out.push_back({lo, hi});
        k = e + 1;
    }
    if (out.empty()) throw NumericalError("support_edges: density never exceeds support_eps");
    return out;
}

/// mu0 for (nu0, sigma): support located on a uniform scan of
/// [inf supp nu0 - 3 sigma, sup supp nu0 + 3 sigma], then the density
/// recomputed on Chebyshev-Lobatto nodes per support interval so the
/// square-root edges are resolved.
inline LimitLaw make_limit_law(const SpectralMeasure& nu0, double sigma, const SolverConfig& cfg = {}) {
    cfg.validate();
    detail::check_inputs(nu0, sigma);
    const Interval hull = nu0.hull();
    const std::size_t n = cfg.grid_points;
    std::vector<double> scan(n);
    for (std::size_t k = 0; k < n; ++k)
        scan[k] = hull.lo - 3.0 * sigma + (hull.width() + 6.0 * sigma) * static_cast<double>(k) / static_cast<double>(n - 1);

    const detail::FixedPoint fp{nu0, sigma * sigma, cfg};
    const auto support = support_edges(nu0, sigma, SpectralMeasure({}, scan, detail::density_values(fp, sigma, scan)), cfg);

    double total_width = 0.0;
    for (const auto& iv : support) total_width += iv.width();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> grid, values;
    for (const auto& iv : support) {
        const auto m = std::max<std::size_t>(65, static_cast<std::size_t>(static_cast<double>(n) * iv.width() / total_width));
        std::vector<double> nodes(m);
        for (std::size_t k = 0; k < m; ++k) {
            const double theta = std::numbers::pi * static_cast<double>(m - 1 - k) / static_cast<double>(m - 1);
            nodes[k] = 0.5 * (iv.lo + iv.hi) + 0.5 * iv.width() * std::cos(theta);
        }
        nodes.front() = iv.lo;
        nodes.back() = iv.hi;
        const auto rho = detail::density_values(fp, sigma, nodes);
        // Zero-density separators one ulp outside each component.
        if (!grid.empty()) {
            grid.push_back(std::nextafter(iv.lo, -inf));
            values.push_back(0.0);
        }
        grid.insert(grid.end(), nodes.begin(), nodes.end());
        values.insert(values.end(), rho.begin(), rho.end());
        if (&iv != &support.back()) {
            grid.push_back(std::nextafter(iv.hi, inf));
            values.push_back(0.0);
        }
    }
    auto density = detail::normalized_density(std::move(grid), std::move(values));
    return {nu0, sigma, std::move(density), support, cfg};
}

/// omega(z) = z + sigma^2 g_mu0(z), Im z > 0.
inline cplx omega_eval(const LimitLaw& law, cplx z) {
    return z + law.sigma * law.sigma * solve_g_mu0(law.nu0, law.sigma, z, law.cfg);
}

/// Boundary value of omega on the real axis off supp mu0. Continues the
/// fixed point from x + i y down to y = 0 and requires the real solution to
/// lie on the branch with 1 - sigma^2 g_nu0'(omega) > 0.
inline double omega_eval(const LimitLaw& law, double x) {
    if (inside(law.support, x)) throw DomainError("omega_eval: real argument inside the support of mu0");
    const detail::FixedPoint fp{law.nu0, law.sigma * law.sigma, law.cfg};
    std::optional<cplx> warm;
    const double ys[] = {law.cfg.inversion_ys.back()};
    cplx g = detail::solve_ladder(fp, x, ys, detail::continuation_top(law.sigma), warm).back();
    for (double y : {1e-9, 1e-12}) g = fp.solve(cplx(x, y), g);
    g = fp.solve(cplx(x, 0.0), g, /*real_axis=*/true);
    const double w = x + law.sigma * law.sigma * g.real();
    const double phi_prime = 1.0 - law.sigma * law.sigma * stieltjes_derivative(law.nu0, w).real();
    if (!(phi_prime > 0.0)) throw DomainError("omega_eval: real argument lies in the support of mu0");
    return w;
}

/// omega'(x) = 1 + sigma^2 int dmu0(t) / (t - x)^2 by quadrature over the
/// recovered density, cross-checked against a central difference of
/// omega_eval with step 1e-5.
inline double omega_prime(const LimitLaw& law, double x) {
    if (distance_to(law.support, x) < 1e-6) throw DomainError("omega_prime: x within 1e-6 of the support of mu0");
    const double quad = 1.0 + law.sigma * law.sigma * stieltjes_derivative(law.mu0_density, x).real();
    constexpr double h = 1e-5;
    const double fd = (omega_eval(law, x + h) - omega_eval(law, x - h)) / (2.0 * h);
    if (std::abs(quad - fd) > 1e-4 * std::max(1.0, std::abs(fd))) {
        std::ostringstream msg;
        msg << "omega_prime: quadrature " << quad << " disagrees with finite difference " << fd << " at x=" << x;
        throw NumericalError(msg.str());
    }
    return quad;
}

} // namespace spectral
