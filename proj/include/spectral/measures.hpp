#pragma once

// Finite signed measures on the real line: atoms plus a piecewise-linear
// density on an explicit grid.
//
// Conventions used throughout the library:
//   * intervals are closed; an atom sitting exactly on an endpoint is
//     counted in the interval;
//   * the density is zero outside [grid.front(), grid.back()] and linear
//     between grid nodes. A jump is encoded by an extra node one ulp away
//     carrying the value on the other side of the jump.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectral/error.hpp"

namespace spectral {

using cplx = std::complex<double>;

struct Atom {
    double location = 0.0;
    double weight = 0.0;
    friend bool operator==(const Atom&, const Atom&) = default;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double x) const { return lo <= x && x <= hi; }
    bool intersects(const Interval& o) const { return lo <= o.hi && o.lo <= hi; }
    double width() const { return hi - lo; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Distance from x to the closed set formed by a union of intervals.
inline double distance_to(std::span<const Interval> set, double x) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& iv : set) {
        if (iv.contains(x)) return 0.0;
        d = std::min(d, x < iv.lo ? iv.lo - x : x - iv.hi);
    }
    return d;
}

inline bool inside(std::span<const Interval> set, double x) { return distance_to(set, x) == 0.0; }

class SpectralMeasure {
public:
    SpectralMeasure() = default;

    /// Atoms with the same location are merged. Throws ValidationError
    /// on an invalid grid.
    SpectralMeasure(std::vector<Atom> atoms, std::vector<double> grid, std::vector<double> density,
                    std::optional<double> total_mass_hint = std::nullopt)
        : atoms_(std::move(atoms)), grid_(std::move(grid)), density_(std::move(density)) {
        if (grid_.size() != density_.size())
            throw ValidationError("SpectralMeasure: grid and density lengths differ");
        if (grid_.size() == 1) throw ValidationError("SpectralMeasure: a density grid needs at least two nodes");
        for (std::size_t k = 0; k < grid_.size(); ++k) {
            if (!std::isfinite(grid_[k]) || !std::isfinite(density_[k]))
                throw ValidationError("SpectralMeasure: non-finite density grid or value");
            if (k > 0 && !(grid_[k] > grid_[k - 1]))
                throw ValidationError("SpectralMeasure: grid must be strictly increasing");
        }
        for (const auto& a : atoms_) {
            if (!std::isfinite(a.location) || !std::isfinite(a.weight))
                throw ValidationError("SpectralMeasure: non-finite atom");
        }
        std::stable_sort(atoms_.begin(), atoms_.end(),
                         [](const Atom& x, const Atom& y) { return x.location < y.location; });
        std::vector<Atom> merged;
        for (const auto& a : atoms_) {
            if (!merged.empty() && merged.back().location == a.location) merged.back().weight += a.weight;
            else merged.push_back(a);
        }
        atoms_ = std::move(merged);
        cumulative_.resize(atoms_.size());
        double c = 0.0;
        for (std::size_t k = 0; k < atoms_.size(); ++k) cumulative_[k] = (c += atoms_[k].weight);
        total_mass_hint_ = total_mass_hint.value_or(total_mass());
    }

    // --- factories -------------------------------------------------------

    static SpectralMeasure delta(double at, double weight = 1.0) { return {{{at, weight}}, {}, {}}; }

    static SpectralMeasure atomic(std::vector<Atom> atoms) { return {std::move(atoms), {}, {}}; }

    static SpectralMeasure uniform(double lo, double hi) {
        if (!(hi > lo)) throw ValidationError("uniform: need lo < hi");
        const double v = 1.0 / (hi - lo);
        return {{}, {lo, hi}, {v, v}, 1.0};
    }

    /// Semicircle law of variance sigma^2 on Chebyshev-Lobatto nodes
    /// (clustered at the square-root edges), renormalized to unit mass.
    static SpectralMeasure semicircle(double sigma, std::size_t nodes = 2049) {
        if (!(sigma > 0.0)) throw ValidationError("semicircle: sigma must be positive");
        if (nodes < 3) throw ValidationError("semicircle: need at least 3 nodes");
        const double r = 2.0 * sigma;
        std::vector<double> x(nodes), v(nodes);
        for (std::size_t k = 0; k < nodes; ++k) {
            const double theta = std::numbers::pi * static_cast<double>(nodes - 1 - k) / static_cast<double>(nodes - 1);
            x[k] = r * std::cos(theta);
            v[k] = std::sqrt(std::max(0.0, r * r - x[k] * x[k])) / (2.0 * std::numbers::pi * sigma * sigma);
        }
        x.front() = -r;
        x.back() = r;
        double mass = 0.0;
        for (std::size_t k = 0; k + 1 < nodes; ++k) mass += 0.5 * (v[k] + v[k + 1]) * (x[k + 1] - x[k]);
        for (auto& val : v) val /= mass;
        return {{}, std::move(x), std::move(v), 1.0};
    }

    /// Empirical spectral distribution: mass 1/N at every eigenvalue.
    static SpectralMeasure empirical(std::span<const double> eigenvalues) {
        std::vector<Atom> atoms;
        atoms.reserve(eigenvalues.size());
        const double w = 1.0 / static_cast<double>(eigenvalues.size());
        for (double e : eigenvalues) atoms.push_back({e, w});
        return {std::move(atoms), {}, {}, 1.0};
    }

    // --- accessors -------------------------------------------------------

    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& density() const { return density_; }
    double total_mass_hint() const { return total_mass_hint_; }
    bool has_density() const { return !grid_.empty(); }
    bool empty() const { return atoms_.empty() && grid_.empty(); }

    double density_at(double x) const {
        if (grid_.empty() || x < grid_.front() || x > grid_.back()) return 0.0;
        auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
        if (it == grid_.end()) return density_.back();
        const std::size_t k = static_cast<std::size_t>(it - grid_.begin()) - 1;
        const double t = (x - grid_[k]) / (grid_[k + 1] - grid_[k]);
        return density_[k] + t * (density_[k + 1] - density_[k]);
    }

    double atom_mass() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

    double density_mass() const {
        double m = 0.0;
        for (std::size_t k = 0; k + 1 < grid_.size(); ++k)
            m += 0.5 * (density_[k] + density_[k + 1]) * (grid_[k + 1] - grid_[k]);
        return m;
    }

    double total_mass() const { return atom_mass() + density_mass(); }

    /// Signed mass of (-inf, x].
    double cdf(double x) const {
        double m = 0.0;
        auto it = std::upper_bound(atoms_.begin(), atoms_.end(), x,
                                   [](double v, const Atom& a) { return v < a.location; });
        if (it != atoms_.begin()) m += cumulative_[static_cast<std::size_t>(it - atoms_.begin()) - 1];
        if (grid_.empty() || x <= grid_.front()) return m;
        for (std::size_t k = 0; k + 1 < grid_.size(); ++k) {
            const double a = grid_[k], b = grid_[k + 1];
            if (x >= b) {
                m += 0.5 * (density_[k] + density_[k + 1]) * (b - a);
            } else {
                const double vx = density_[k] + (x - a) / (b - a) * (density_[k + 1] - density_[k]);
                m += 0.5 * (density_[k] + vx) * (x - a);
                break;
            }
        }
        return m;
    }

    /// Closed support: atoms with nonzero weight and grid segments with a
    /// nonzero endpoint, merged into maximal disjoint intervals.
    std::vector<Interval> support() const {
        std::vector<Interval> raw;
        for (const auto& a : atoms_)
            if (a.weight != 0.0) raw.push_back({a.location, a.location});
        for (std::size_t k = 0; k + 1 < grid_.size(); ++k)
            if (density_[k] != 0.0 || density_[k + 1] != 0.0) raw.push_back({grid_[k], grid_[k + 1]});
        std::sort(raw.begin(), raw.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
        std::vector<Interval> out;
        for (const auto& iv : raw) {
            if (!out.empty() && iv.lo <= out.back().hi) out.back().hi = std::max(out.back().hi, iv.hi);
            else out.push_back(iv);
        }
        return out;
    }

    /// Convex hull of the support; throws on an empty measure.
    Interval hull() const {
        const auto s = support();
        if (s.empty()) throw ValidationError("hull: measure has empty support");
        return {s.front().lo, s.back().hi};
    }

    bool is_probability(double tol = 1e-9) const {
        for (const auto& a : atoms_)
            if (a.weight < 0.0) return false;
        for (double v : density_)
            if (v < 0.0) return false;
        return std::abs(total_mass() - 1.0) <= tol;
    }

    friend bool operator==(const SpectralMeasure& a, const SpectralMeasure& b) {
        return a.atoms_ == b.atoms_ && a.grid_ == b.grid_ && a.density_ == b.density_;
    }

private:
    std::vector<Atom> atoms_;
    std::vector<double> grid_;
    std::vector<double> density_;
    std::vector<double> cumulative_;
    double total_mass_hint_ = 0.0;
};

inline void require_probability(const SpectralMeasure& m, const std::string& what) {
    if (!m.is_probability()) throw ValidationError(what + " must be a probability measure (nonnegative, mass 1)");
}

// --- Stieltjes transform -------------------------------------------------

namespace detail {

inline void check_off_support(const SpectralMeasure& m, cplx z) {
    if (z.imag() != 0.0) return;
    const double x = z.real();
    for (const auto& a : m.atoms())
        if (a.weight != 0.0 && a.location == x)
            throw DomainError("Stieltjes transform evaluated on an atom of the measure");
    const auto& g = m.grid();
    const auto& v = m.density();
    for (std::size_t k = 0; k + 1 < g.size(); ++k)
        if ((v[k] != 0.0 || v[k + 1] != 0.0) && g[k] <= x && x <= g[k + 1])
            throw DomainError("Stieltjes transform evaluated on the support of the density");
}

} // namespace detail

/// g(z) = integral dm(t) / (t - z).
///
/// Densities are integrated exactly per linear segment:
///   int_{t0}^{t1} rho(t)/(t-z) dt = s (t1-t0) + rho_lin(z) [log(t1-z) - log(t0-z)]
/// with s the segment slope and rho_lin the segment's linear extension.
/// Throws DomainError for real z on the support.
inline cplx stieltjes_eval(const SpectralMeasure& m, cplx z) {
    detail::check_off_support(m, z);
    cplx sum = 0.0;
    for (const auto& a : m.atoms()) sum += a.weight / (a.location - z);
    const auto& g = m.grid();
    const auto& v = m.density();
    for (std::size_t k = 0; k + 1 < g.size(); ++k) {
        if (v[k] == 0.0 && v[k + 1] == 0.0) continue;
        const double t0 = g[k], t1 = g[k + 1];
        const double s = (v[k + 1] - v[k]) / (t1 - t0);
        const cplx log_ratio = std::log(cplx(t1) - z) - std::log(cplx(t0) - z);
        sum += s * (t1 - t0) + (v[k] + s * (z - t0)) * log_ratio;
    }
    return sum;
}

/// g'(z) = integral dm(t) / (t - z)^2.
inline cplx stieltjes_derivative(const SpectralMeasure& m, cplx z) {
    detail::check_off_support(m, z);
    cplx sum = 0.0;
    for (const auto& a : m.atoms()) {
        const cplx d = a.location - z;
        sum += a.weight / (d * d);
    }
    const auto& g = m.grid();
    const auto& v = m.density();
    for (std::size_t k = 0; k + 1 < g.size(); ++k) {
        if (v[k] == 0.0 && v[k + 1] == 0.0) continue;
        const double t0 = g[k], t1 = g[k + 1];
        const double s = (v[k + 1] - v[k]) / (t1 - t0);
        const cplx a0 = cplx(t0) - z, a1 = cplx(t1) - z;
        const cplx log_ratio = std::log(a1) - std::log(a0);
        sum += s * log_ratio + (v[k] + s * (z - t0)) * (1.0 / a0 - 1.0 / a1);
    }
    return sum;
}

// --- moments and masses ----------------------------------------------------

/// integral t^k dm(t), exact for k <= 4 (atoms summed, segments by 3-point
/// Gauss-Legendre, which is exact for polynomials of degree 5).
inline double moment(const SpectralMeasure& m, int k) {
    if (k < 0 || k > 4) throw ValidationError("moment: order must be in 0..4");
    double sum = 0.0;
    for (const auto& a : m.atoms()) sum += a.weight * std::pow(a.location, k);
    static constexpr double nodes[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static constexpr double weights[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    const auto& g = m.grid();
    const auto& v = m.density();
    for (std::size_t s = 0; s + 1 < g.size(); ++s) {
        if (k == 0) {
            sum += 0.5 * (v[s] + v[s + 1]) * (g[s + 1] - g[s]);
            continue;
        }
        const double half = 0.5 * (g[s + 1] - g[s]), mid = 0.5 * (g[s + 1] + g[s]);
        for (int q = 0; q < 3; ++q) {
            const double t = mid + half * nodes[q];
            const double rho = v[s] + (t - g[s]) / (g[s + 1] - g[s]) * (v[s + 1] - v[s]);
            sum += half * weights[q] * rho * std::pow(t, k);
        }
    }
    return sum;
}

/// Signed mass of the closed interval [lo, hi].
inline double signed_mass_on(const SpectralMeasure& m, Interval iv) {
    if (iv.lo > iv.hi) throw ValidationError("signed_mass_on: lo > hi");
    double sum = 0.0;
    for (const auto& a : m.atoms())
        if (iv.contains(a.location)) sum += a.weight;
    const auto& g = m.grid();
    const auto& v = m.density();
    for (std::size_t k = 0; k + 1 < g.size(); ++k) {
        const double a = std::max(iv.lo, g[k]), b = std::min(iv.hi, g[k + 1]);
        if (b <= a) continue;
        const double w = g[k + 1] - g[k];
        const double va = v[k] + (a - g[k]) / w * (v[k + 1] - v[k]);
        const double vb = v[k] + (b - g[k]) / w * (v[k + 1] - v[k]);
        sum += 0.5 * (va + vb) * (b - a);
    }
    return sum;
}

/// sup |A((-inf,x]) - B((-inf,x])| over 2048 equispaced points of the window
/// (both endpoints included).
inline double kolmogorov_distance(const SpectralMeasure& a, const SpectralMeasure& b, Interval window) {
    constexpr int points = 2048;
    double d = 0.0;
    for (int i = 0; i < points; ++i) {
        const double x = window.lo + (window.hi - window.lo) * static_cast<double>(i) / (points - 1);
        d = std::max(d, std::abs(a.cdf(x) - b.cdf(x)));
    }
    return d;
}

// --- arithmetic --------------------------------------------------------------

inline SpectralMeasure scaled(const SpectralMeasure& m, double c) {
    auto atoms = m.atoms();
    for (auto& a : atoms) a.weight *= c;
    auto v = m.density();
    for (auto& x : v) x *= c;
    return {std::move(atoms), m.grid(), std::move(v), c * m.total_mass_hint()};
}

namespace detail {

// Grid with explicit zero nodes one ulp outside any nonzero end value, so the
// density stays exact when merged with another grid.
inline void closed_grid(const SpectralMeasure& m, std::vector<double>& g, std::vector<double>& v) {
    g = m.grid();
    v = m.density();
    if (g.empty()) return;
    if (v.front() != 0.0) {
        g.insert(g.begin(), std::nextafter(g.front(), -std::numeric_limits<double>::infinity()));
        v.insert(v.begin(), 0.0);
    }
    if (v.back() != 0.0) {
        g.push_back(std::nextafter(g.back(), std::numeric_limits<double>::infinity()));
        v.push_back(0.0);
    }
}

inline double interp(const std::vector<double>& g, const std::vector<double>& v, double x) {
    if (g.empty() || x < g.front() || x > g.back()) return 0.0;
    auto it = std::lower_bound(g.begin(), g.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - g.begin());
    if (g[k] == x) return v[k];
    const double t = (x - g[k - 1]) / (g[k] - g[k - 1]);
    return v[k - 1] + t * (v[k] - v[k - 1]);
}

} // namespace detail

/// a + b. Densities are merged on the union of both grids.
inline SpectralMeasure add(const SpectralMeasure& a, const SpectralMeasure& b) {
    auto atoms = a.atoms();
    atoms.insert(atoms.end(), b.atoms().begin(), b.atoms().end());
    if (!a.has_density()) return {std::move(atoms), b.grid(), b.density()};
    if (!b.has_density()) return {std::move(atoms), a.grid(), a.density()};
    std::vector<double> ga, va, gb, vb;
    detail::closed_grid(a, ga, va);
    detail::closed_grid(b, gb, vb);
    std::vector<double> grid;
    std::merge(ga.begin(), ga.end(), gb.begin(), gb.end(), std::back_inserter(grid));
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    std::vector<double> dens(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k)
        dens[k] = detail::interp(ga, va, grid[k]) + detail::interp(gb, vb, grid[k]);
    return {std::move(atoms), std::move(grid), std::move(dens)};
}

inline SpectralMeasure subtract(const SpectralMeasure& a, const SpectralMeasure& b) {
    return add(a, scaled(b, -1.0));
}

/// The part of m lying outside the closed set `excluded`: atoms off the set
/// and density segments whose closure misses it. Used to split a signed
/// measure into its off-bulk and on-bulk components.
inline SpectralMeasure restricted_outside(const SpectralMeasure& m, std::span<const Interval> excluded) {
    std::vector<Atom> atoms;
    for (const auto& a : m.atoms())
        if (!inside(excluded, a.location)) atoms.push_back(a);
    std::vector<double> g, v;
    const auto& mg = m.grid();
    const auto& mv = m.density();
    for (std::size_t k = 0; k < mg.size(); ++k) {
        const bool keep = !inside(excluded, mg[k]);
        g.push_back(mg[k]);
        v.push_back(keep ? mv[k] : 0.0);
    }
    // Zero out segments that straddle an excluded interval.
    for (std::size_t k = 0; k + 1 < g.size(); ++k) {
        for (const auto& iv : excluded) {
            if (Interval{g[k], g[k + 1]}.intersects(iv)) {
                v[k] = 0.0;
                v[k + 1] = 0.0;
            }
        }
    }
    if (g.size() < 2) return SpectralMeasure::atomic(std::move(atoms));
    return {std::move(atoms), std::move(g), std::move(v)};
}

// --- pushforward ---------------------------------------------------------------

using RealMap = std::function<double(double)>;

namespace detail {

inline double central_derivative(const RealMap& f, double x) {
    const double h = 1e-3 * std::max(1.0, std::abs(x));
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

} // namespace detail

/// Image of m under a strictly monotone map f.
///
/// Atoms move to f(t) with their weight. Each active density segment is
/// subdivided until the trapezoid mass of its image, with node values
/// rho(x)/|f'(x)|, matches the exact source mass to ~1e-12; this keeps
/// interval masses preserved to well below 1e-9 for smooth f.
/// `fprime` defaults to a five-point central difference.
/// Throws ValidationError if f is not strictly monotone on the sampled support.
inline SpectralMeasure pushforward(const SpectralMeasure& m, const RealMap& f,
                                   std::optional<RealMap> fprime = std::nullopt) {
    const RealMap df = fprime ? *fprime : RealMap([&f](double x) { return detail::central_derivative(f, x); });

    struct Node {
        double x, y, v;
    };
    std::vector<Node> nodes;
    const auto& g = m.grid();
    const auto& v = m.density();
    constexpr std::size_t max_pieces = std::size_t{1} << 14;

    for (std::size_t k = 0; k + 1 < g.size(); ++k) {
        if (v[k] == 0.0 && v[k + 1] == 0.0) continue;
        const double x0 = g[k], x1 = g[k + 1];
        const double slope = (v[k + 1] - v[k]) / (x1 - x0);
        auto rho = [&](double x) { return v[k] + slope * (x - x0); };
        const double exact = 0.5 * (v[k] + v[k + 1]) * (x1 - x0);
        const bool tiny = (x1 - x0) <= 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x0));

        std::vector<Node> seg;
        for (std::size_t pieces = 1;; pieces *= 2) {
            seg.clear();
            double image_mass = 0.0;
            for (std::size_t i = 0; i <= pieces; ++i) {
                const double x = i == pieces ? x1 : x0 + (x1 - x0) * static_cast<double>(i) / static_cast<double>(pieces);
                const double d = df(x);
                seg.push_back({x, f(x), d == 0.0 ? 0.0 : rho(x) / std::abs(d)});
                if (i > 0) image_mass += 0.5 * (seg[i].v + seg[i - 1].v) * std::abs(seg[i].y - seg[i - 1].y);
            }
            const double err = std::abs(image_mass - exact);
            if (tiny || err <= 1e-13 + 1e-12 * std::abs(exact) || pieces >= max_pieces) break;
        }
        // Adjacent active segments share their end node; across a gap both
        // run ends carry zero, so interpolation keeps the gap empty.
        if (!nodes.empty() && nodes.back().x == seg.front().x) nodes.pop_back();
        nodes.insert(nodes.end(), seg.begin(), seg.end());
    }

    // Monotonicity over every sampled point of the support.
    std::vector<std::pair<double, double>> samples;
    for (const auto& a : m.atoms()) samples.emplace_back(a.location, f(a.location));
    for (const auto& n : nodes) samples.emplace_back(n.x, n.y);
    std::sort(samples.begin(), samples.end());
    int direction = 0;
    for (std::size_t i = 1; i < samples.size(); ++i) {
        if (samples[i].first == samples[i - 1].first) continue;
        const double dy = samples[i].second - samples[i - 1].second;
        const int s = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
        const bool tiny_step = std::abs(samples[i].first - samples[i - 1].first) <=
                               64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(samples[i].first));
        if (s == 0 && tiny_step) continue;
        if (s == 0 || (direction != 0 && s != direction))
            throw ValidationError("pushforward: map is not strictly monotone on the support");
        direction = s;
    }

    std::vector<Atom> atoms;
    for (const auto& a : m.atoms()) atoms.push_back({f(a.location), a.weight});
    if (nodes.empty()) return {std::move(atoms), {}, {}, m.total_mass_hint()};

    if (direction < 0) std::reverse(nodes.begin(), nodes.end());
    std::vector<double> grid, dens;
    for (const auto& n : nodes) {
        double y = n.y;
        if (!grid.empty() && y <= grid.back()) y = std::nextafter(grid.back(), std::numeric_limits<double>::infinity());
        grid.push_back(y);
        dens.push_back(n.v);
    }
    if (grid.size() < 2) return {std::move(atoms), {}, {}, m.total_mass_hint()};
    return {std::move(atoms), std::move(grid), std::move(dens), m.total_mass_hint()};
}

// --- JSON --------------------------------------------------------------------

/// {"atoms":[[t,w],...],"grid":[...],"density":[...]} in that field order.
inline nlohmann::ordered_json to_json(const SpectralMeasure& m) {
    nlohmann::ordered_json j;
    auto atoms = nlohmann::ordered_json::array();
    for (const auto& a : m.atoms()) atoms.push_back({a.location, a.weight});
    j["atoms"] = std::move(atoms);
    j["grid"] = m.grid();
    j["density"] = m.density();
    return j;
}

inline SpectralMeasure measure_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("measure JSON must be an object");
    for (const auto& [key, _] : j.items())
        if (key != "atoms" && key != "grid" && key != "density")
            throw ValidationError("measure JSON: unknown key '" + key + "'");
    std::vector<Atom> atoms;
    if (j.contains("atoms")) {
        for (const auto& a : j.at("atoms")) {
            if (!a.is_array() || a.size() != 2) throw ValidationError("measure JSON: atoms must be [t, w] pairs");
            atoms.push_back({a.at(0).get<double>(), a.at(1).get<double>()});
        }
    }
    std::vector<double> grid, dens;
    if (j.contains("grid")) grid = j.at("grid").get<std::vector<double>>();
    if (j.contains("density")) dens = j.at("density").get<std::vector<double>>();
    return {std::move(atoms), std::move(grid), std::move(dens)};
}

} // namespace spectral
