#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "loggas/grid.hpp"

namespace loggas {

namespace detail {
inline double pythag(double a, double b) {
    const double aa = std::fabs(a), ab = std::fabs(b);
    if (aa > ab) {
        const double r = ab / aa;
        return aa * std::sqrt(1.0 + r * r);
    }
    if (ab == 0.0) return 0.0;
    const double r = aa / ab;
    return ab * std::sqrt(1.0 + r * r);
}
} // namespace detail

/// Eigenvalues of a symmetric tridiagonal matrix (values only), by the
/// implicit QL method with Wilkinson shift. Derived from the Algol tql1
/// procedure (Bowdler, Martin, Reinsch, Wilkinson) as in EISPACK.
/// diag has n entries, off has n-1. Returns eigenvalues sorted ascending.
inline std::vector<double> tridiagonal_eigenvalues(std::vector<double> diag,
                                                   std::vector<double> off) {
    const int n = static_cast<int>(diag.size());
    if (n == 0) return {};
    if (static_cast<int>(off.size()) != n - 1 && n > 1)
        throw error("tridiagonal_eigenvalues: off-diagonal must have n-1 entries");
    if (n == 1) return diag;

    std::vector<double>& d = diag;
    std::vector<double> e(n, 0.0);
    for (int i = 0; i < n - 1; ++i) e[i] = off[i];

    const double eps = 2.22044604925031308e-16;
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
                if (std::fabs(e[m]) <= eps * dd) break;
            }
            if (m != l) {
                if (iter++ == 50) throw error("tridiagonal_eigenvalues: too many QL iterations");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = detail::pythag(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                for (int i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = detail::pythag(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) { // recover from underflow
                        d[i + 1] -= p;
                        e[m] = 0.0;
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
                if (r == 0.0 && m - 1 >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
    std::sort(d.begin(), d.end());
    return d;
}

/// Counts eigenvalues strictly below x via the Sturm sequence, used as an
/// independent cross-check of the QL route in tests.
inline int sturm_count_below(const std::vector<double>& diag, const std::vector<double>& off,
                             double x) {
    const int n = static_cast<int>(diag.size());
    int count = 0;
    double q = 1.0;
    const double tiny = 1e-300;
    for (int i = 0; i < n; ++i) {
        const double off2 = (i == 0) ? 0.0 : off[i - 1] * off[i - 1];
        q = diag[i] - x - (q == 0.0 ? std::fabs(off[i - 1]) / tiny : off2 / q);
        if (q < 0.0) ++count;
    }
    return count;
}

/// Bisection eigenvalue solver via Sturm counts; O(n^2 log(1/tol)), test oracle only.
inline std::vector<double> tridiagonal_eigenvalues_bisect(const std::vector<double>& diag,
                                                          const std::vector<double>& off,
                                                          double tol = 1e-12) {
    const int n = static_cast<int>(diag.size());
    double lo = diag[0], hi = diag[0];
    for (int i = 0; i < n; ++i) {
        double r = 0.0;
        if (i > 0) r += std::fabs(off[i - 1]);
        if (i < n - 1) r += std::fabs(off[i]);
        lo = std::min(lo, diag[i] - r);
        hi = std::max(hi, diag[i] + r);
    }
    std::vector<double> ev(n);
    for (int k = 0; k < n; ++k) {
        double a = lo, b = hi;
        while (b - a > tol * std::max(1.0, std::fabs(a) + std::fabs(b))) {
            const double mid = 0.5 * (a + b);
            (sturm_count_below(diag, off, mid) > k ? b : a) = mid;
        }
        ev[k] = 0.5 * (a + b);
    }
    return ev;
}

} // namespace loggas
