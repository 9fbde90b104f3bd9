#pragma once

// Closed-form reference values, computed without the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

// Stieltjes transform of the semicircle law of variance sigma^2, on the
// branch with Im g > 0 for Im z > 0 (and g ~ -1/z at infinity).
inline cplx semicircle_g(cplx z, double sigma) {
    const double s2 = sigma * sigma;
    const cplx root = std::sqrt(z * z - 4.0 * s2);
    cplx g = (-z + root) / (2.0 * s2);
    if (z.imag() > 0.0 ? g.imag() <= 0.0 : std::abs(g * z + 1.0) > std::abs((-z - root) / (2.0 * s2) * z + 1.0))
        g = (-z - root) / (2.0 * s2);
    return g;
}

inline double semicircle_density(double x, double sigma) {
    const double r2 = 4.0 * sigma * sigma - x * x;
    return r2 > 0.0 ? std::sqrt(r2) / (2.0 * std::numbers::pi * sigma * sigma) : 0.0;
}

inline double semicircle_cdf(double x, double sigma) {
    const double t = std::clamp(x / (2.0 * sigma), -1.0, 1.0);
    return 0.5 + (t * std::sqrt(1.0 - t * t) + std::asin(t)) / std::numbers::pi;
}

// Eigenvalues of tridiag(1, 0, 1) of size n: 2 cos(k pi / (n + 1)).
inline std::vector<double> toeplitz_eigenvalues(std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t k = 1; k <= n; ++k) v[k - 1] = 2.0 * std::cos(static_cast<double>(k) * std::numbers::pi / (n + 1.0));
    return v;
}

// Largest-eigenvalue limit for a single spike theta on a null bulk.
inline double bbp(double theta, double sigma) { return theta < sigma ? 2.0 * sigma : theta + sigma * sigma / theta; }

// Inverse of Phi(w) = w + sigma^2 / w above the edge: the larger root.
inline double semicircle_omega(double x, double sigma) {
    return 0.5 * (x + std::copysign(std::sqrt(x * x - 4.0 * sigma * sigma), x));
}

} // namespace oracle
