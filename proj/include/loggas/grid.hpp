#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace loggas {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Uniform grid of n nodes on [lo, hi].
struct Grid {
    double lo = -1.0;
    double hi = 1.0;
    int n = 3;

    Grid() = default;
    Grid(double lo_, double hi_, int n_) : lo(lo_), hi(hi_), n(n_) {
        if (!(lo < hi)) throw error("Grid: lo must be < hi");
        if (n < 3) throw error("Grid: need at least 3 nodes");
        if (!std::isfinite(lo) || !std::isfinite(hi)) throw error("Grid: non-finite endpoints");
    }

    double spacing() const { return (hi - lo) / (n - 1); }
    double node(int i) const { return lo + spacing() * i; }

    std::vector<double> nodes() const {
        std::vector<double> x(n);
        for (int i = 0; i < n; ++i) x[i] = node(i);
        return x;
    }

    bool operator==(const Grid& o) const { return lo == o.lo && hi == o.hi && n == o.n; }
};

/// Trapezoid rule over grid node values.
inline double trapezoid(const Grid& g, const std::vector<double>& v) {
    const double h = g.spacing();
    double s = 0.5 * (v.front() + v.back());
    for (int i = 1; i < g.n - 1; ++i) s += v[i];
    return s * h;
}

/// Trapezoid node weights (h at interior nodes, h/2 at the ends).
inline std::vector<double> trapezoid_weights(const Grid& g) {
    std::vector<double> w(g.n, g.spacing());
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

/// Nonnegative density sampled on a uniform grid, trapezoid-normalized to 1.
struct DensityOnGrid {
    Grid grid;
    std::vector<double> values;

    DensityOnGrid() = default;

    /// Normalizes nonnegative node values; returns the normalizer as well.
    static DensityOnGrid from_unnormalized(const Grid& g, std::vector<double> vals,
                                           double* normalizer = nullptr) {
        if (static_cast<int>(vals.size()) != g.n) throw error("DensityOnGrid: size mismatch");
        for (double v : vals) {
            if (!std::isfinite(v)) throw error("DensityOnGrid: non-finite value");
            if (v < 0.0) throw error("DensityOnGrid: negative value");
        }
        const double z = trapezoid(g, vals);
        if (!(z > 0.0) || !std::isfinite(z)) throw error("DensityOnGrid: normalization failed (integral " + std::to_string(z) + ")");
        for (double& v : vals) v /= z;
        if (normalizer) *normalizer = z;
        DensityOnGrid d;
        d.grid = g;
        d.values = std::move(vals);
        return d;
    }

    double integral() const { return trapezoid(grid, values); }

    /// Linear interpolation between nodes; 0 outside the grid.
    double at(double x) const {
        if (x < grid.lo || x > grid.hi) return 0.0;
        const double t = (x - grid.lo) / grid.spacing();
        int i = static_cast<int>(t);
        if (i >= grid.n - 1) i = grid.n - 2;
        const double u = t - i;
        return values[i] * (1.0 - u) + values[i + 1] * u;
    }

    double moment(int k) const {
        std::vector<double> f(values.size());
        for (int i = 0; i < grid.n; ++i) f[i] = values[i] * std::pow(grid.node(i), k);
        return trapezoid(grid, f);
    }
};

/// Linear interpolation of node values (not necessarily a density).
inline double interp_on_grid(const Grid& g, const std::vector<double>& v, double x) {
    if (x <= g.lo) return v.front();
    if (x >= g.hi) return v.back();
    const double t = (x - g.lo) / g.spacing();
    int i = static_cast<int>(t);
    if (i >= g.n - 1) i = g.n - 2;
    const double u = t - i;
    return v[i] * (1.0 - u) + v[i + 1] * u;
}

} // namespace loggas
