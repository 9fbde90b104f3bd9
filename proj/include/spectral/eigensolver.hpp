#pragma once

// Symmetric eigenvalues: Householder reduction to tridiagonal form followed
// by implicit-shift QL. Eigenvalues only.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "spectral/error.hpp"
#include "spectral/matrix.hpp"

namespace spectral {

/// Eigenvalues sorted descending, lambda_1 >= ... >= lambda_N.
struct Spectrum {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double largest() const { return values.front(); }
    double operator[](std::size_t k) const { return values[k]; }

    double sum() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    double sum_sq() const {
        double s = 0.0;
        for (double v : values) s += v * v;
        return s;
    }
};

/// offdiag[i] couples diag[i] and diag[i + 1].
struct Tridiagonal {
    std::vector<double> diag;
    std::vector<double> offdiag;
};

namespace detail {

// row_j(k) -= u[j] q[k] + q[j] u[k]  for k <= j
inline void rank2_row(double* __restrict row, std::size_t j, const double* __restrict u,
                      const double* __restrict q) {
    const double uj = u[j], qj = q[j];
    for (std::size_t k = 0; k <= j; ++k) row[k] -= uj * q[k] + qj * u[k];
}

} // namespace detail

/// Householder tridiagonalization of a copy of `input`.
///
/// Works bottom-up on the packed lower triangle. The rank-2 update of step
/// i is fused with the symmetric matrix-vector product of step i-1 so the
/// trailing block is streamed once per step.
inline Tridiagonal tridiagonalize(const SymmetricMatrix& input) {
    if (!input.all_finite()) throw NumericalError("tridiagonalize: non-finite matrix entry");

    const std::size_t n = input.size();
    Tridiagonal t;
    t.diag.assign(n, 0.0);
    t.offdiag.assign(n > 0 ? n - 1 : 0, 0.0);
    if (n == 0) return t;

    std::vector<double> a(input.packed().begin(), input.packed().end());
    auto row = [&a](std::size_t i) { return a.data() + i * (i + 1) / 2; };

    // prev_u/prev_q hold the rank-2 update of the previous step, not yet
    // applied to rows < i. Zero vectors mean no update is pending.
    std::vector<double> u(n), p(n), prev_u(n, 0.0), prev_q(n, 0.0);
    bool pending = false;

    for (std::size_t i = n; i-- > 1;) {
        double* ri = row(i);
        if (pending) detail::rank2_row(ri, i, prev_u.data(), prev_q.data());
        t.diag[i] = ri[i];

        const std::size_t l = i - 1;
        double scale = 0.0;
        for (std::size_t k = 0; k <= l; ++k) scale += std::abs(ri[k]);

        if (l == 0 || scale == 0.0) {
            t.offdiag[l] = ri[l];
            if (pending) {
                for (std::size_t j = 0; j <= l; ++j) detail::rank2_row(row(j), j, prev_u.data(), prev_q.data());
                std::fill(prev_u.begin(), prev_u.end(), 0.0);
                std::fill(prev_q.begin(), prev_q.end(), 0.0);
                pending = false;
            }
            continue;
        }

        double h = 0.0;
        for (std::size_t k = 0; k <= l; ++k) {
            u[k] = ri[k] / scale;
            h += u[k] * u[k];
        }
        const double f = u[l];
        const double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
        t.offdiag[l] = scale * g;
        h -= f * g;
        u[l] = f - g;

        // p = A[0..l, 0..l] u, with the pending update applied on the way.
        // Rows are processed in pairs so the shared vectors are read once.
        std::fill(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(l + 1), 0.0);
        {
            double* __restrict pp = p.data();
            const double* __restrict uu = u.data();
            const double* __restrict ou = prev_u.data();
            const double* __restrict oq = prev_q.data();
            std::size_t j = 0;
            for (; j + 1 <= l; j += 2) {
                double* __restrict r0 = row(j);
                double* __restrict r1 = row(j + 1);
                const double u0 = uu[j], u1 = uu[j + 1];
                const double ou0 = ou[j], oq0 = oq[j], ou1 = ou[j + 1], oq1 = oq[j + 1];
                double s0 = 0.0, s1 = 0.0;
#pragma omp simd reduction(+ : s0, s1)
                for (std::size_t k = 0; k < j; ++k) {
                    const double v0 = r0[k] - (ou0 * oq[k] + oq0 * ou[k]);
                    const double v1 = r1[k] - (ou1 * oq[k] + oq1 * ou[k]);
                    r0[k] = v0;
                    r1[k] = v1;
                    s0 += v0 * uu[k];
                    s1 += v1 * uu[k];
                    pp[k] += v0 * u0 + v1 * u1;
                }
                const double v10 = r1[j] - (ou1 * oq0 + oq1 * ou0);
                r1[j] = v10;
                r0[j] -= 2.0 * ou0 * oq0;
                r1[j + 1] -= 2.0 * ou1 * oq1;
                pp[j] += s0 + r0[j] * u0 + v10 * u1;
                pp[j + 1] += s1 + v10 * u0 + r1[j + 1] * u1;
            }
            if (j == l) {
                double* __restrict rj = row(j);
                const double uj = uu[j], ouj = ou[j], oqj = oq[j];
                double s = 0.0;
#pragma omp simd reduction(+ : s)
                for (std::size_t k = 0; k < j; ++k) {
                    const double v = rj[k] - (ouj * oq[k] + oqj * ou[k]);
                    rj[k] = v;
                    s += v * uu[k];
                    pp[k] += v * uj;
                }
                rj[j] -= 2.0 * ouj * oqj;
                pp[j] += s + rj[j] * uj;
            }
        }

        double k_coef = 0.0;
        for (std::size_t k = 0; k <= l; ++k) {
            p[k] /= h;
            k_coef += u[k] * p[k];
        }
        k_coef /= 2.0 * h;
        for (std::size_t k = 0; k <= l; ++k) {
            prev_q[k] = p[k] - k_coef * u[k];
            prev_u[k] = u[k];
        }
        pending = true;
    }
    // The i = 1 step always takes the l == 0 branch, so nothing is pending.
    t.diag[0] = row(0)[0];
    return t;
}

/// Eigenvalues of a symmetric tridiagonal matrix (implicit Wilkinson-shift
/// QL). Returned in the order QL leaves them, unsorted.
inline std::vector<double> tridiagonal_eigenvalues(Tridiagonal t, int max_sweeps = 50) {
    auto& d = t.diag;
    const std::size_t n = d.size();
    std::vector<double> e(n, 0.0);
    std::copy(t.offdiag.begin(), t.offdiag.end(), e.begin());

    constexpr double eps = std::numeric_limits<double>::epsilon();  // 2^-52
    constexpr double tiny = std::numeric_limits<double>::min();

    for (std::size_t l = 0; l < n; ++l) {
        int iter = 0;
        std::size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                const double ae = std::abs(e[m]);
                if (ae <= eps * (std::abs(d[m]) + std::abs(d[m + 1])) || ae < tiny) break;
            }
            if (m == l) break;
            if (++iter > max_sweeps) {
                throw NumericalError("tridiagonal_eigenvalues: no convergence after " +
                                     std::to_string(max_sweeps) + " sweeps at index " + std::to_string(l));
            }
            double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            double r = std::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
            double s = 1.0, c = 1.0, p = 0.0;
            bool underflow = false;
            for (std::size_t i = m; i-- > l;) {
                const double f = s * e[i];
                const double b = c * e[i];
                r = std::hypot(f, g);
                e[i + 1] = r;
                if (r == 0.0) {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if (underflow) continue;
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        } while (m != l);
    }
    return d;
}

/// All eigenvalues of `a`, sorted descending (stable).
inline Spectrum eigenvalues_symmetric(const SymmetricMatrix& a) {
    Spectrum s{tridiagonal_eigenvalues(tridiagonalize(a))};
    std::stable_sort(s.values.begin(), s.values.end(), std::greater<>{});
    return s;
}

} // namespace spectral
