#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <utility>
#include <vector>

#include "loggas/grid.hpp"
#include "loggas/potential.hpp"

namespace loggas {

struct convergence_error : error {
    convergence_error(const std::string& msg, std::vector<double> hist)
        : error(msg), residual_history(std::move(hist)) {}
    std::vector<double> residual_history;
};

namespace detail {

// Antiderivatives for the log kernel; both continuous at 0 with value 0,
// so cell integrals spanning the singularity need no splitting.
inline double antider_log(double v) { return v == 0.0 ? 0.0 : v * std::log(std::fabs(v)) - v; }
inline double antider_vlog(double v) {
    return v == 0.0 ? 0.0 : 0.5 * v * v * std::log(std::fabs(v)) - 0.25 * v * v;
}

// g(d)    = int_0^1 log|d+u| (1-u) du   (falling half-hat)
// g_hat(d)= int_0^1 log|d+u| u du       (rising half-hat)
inline double halfhat_fall(double d) {
    return (1.0 + d) * (antider_log(d + 1.0) - antider_log(d)) -
           (antider_vlog(d + 1.0) - antider_vlog(d));
}
inline double halfhat_rise(double d) {
    return (antider_vlog(d + 1.0) - antider_vlog(d)) -
           d * (antider_log(d + 1.0) - antider_log(d));
}

} // namespace detail

/// Exact quadrature of U[rho](x) = int log|x-y| rho(y) dy with rho treated as
/// piecewise linear between nodes. On a uniform grid the hat-function weights
/// depend only on the node offset, so the operator is Toeplitz up to the two
/// boundary half-hats; setup is O(n), one application is O(n^2).
class LogKernel {
public:
    explicit LogKernel(const Grid& g) : grid_(g) {
        const int n = g.n;
        const double h = g.spacing();
        const double lh = 0.5 * std::log(h);
        // index by (j - i) + (n - 1), j the source node, i the target node
        w_left_.resize(2 * n - 1);
        w_right_.resize(2 * n - 1);
        for (int k = 0; k < 2 * n - 1; ++k) {
            const double d = static_cast<double>(k - (n - 1));
            // left half of hat j: y in [x_j - h, x_j], weight 1 - (x_j - y)/h
            w_left_[k] = h * (lh + detail::halfhat_fall(-d));
            // right half of hat j: y in [x_j, x_j + h], weight 1 - (y - x_j)/h
            w_right_[k] = h * (lh + detail::halfhat_fall(d));
        }
    }

    const Grid& grid() const { return grid_; }

    /// U at every grid node. Summation order per node is fixed.
    std::vector<double> apply(const std::vector<double>& rho) const {
        const int n = grid_.n;
        std::vector<double> u(n);
        for (int i = 0; i < n; ++i) {
            const int base = (n - 1) - i;
            double s = rho[0] * w_right_[base] + rho[n - 1] * w_left_[base + n - 1];
            for (int j = 1; j < n - 1; ++j)
                s += rho[j] * (w_left_[base + j] + w_right_[base + j]);
            u[i] = s;
        }
        return u;
    }

    /// U at an arbitrary point (same closed forms with real offsets).
    double apply_at(const std::vector<double>& rho, double x) const {
        const int n = grid_.n;
        const double h = grid_.spacing();
        const double lh = 0.5 * std::log(h);
        double s = 0.0;
        for (int j = 0; j < n - 1; ++j) {
            const double d = (grid_.node(j) - x) / h;
            s += h * ((rho[j] + rho[j + 1]) * lh +
                      rho[j] * detail::halfhat_fall(d) + rho[j + 1] * detail::halfhat_rise(d));
        }
        return s;
    }

private:
    Grid grid_;
    std::vector<double> w_left_, w_right_;
};

/// U[rho] at the grid nodes (one-shot convenience over LogKernel).
inline std::vector<double> log_kernel_apply(const DensityOnGrid& rho) {
    return LogKernel(rho.grid).apply(rho.values);
}

struct SolverConfig {
    double tol = 1e-10;     // sup-norm fixed-point defect
    int max_iter = 10000;
    double damping = 0.5;   // Picard step, halved on H_c increase
};

/// Solution of rho = Z_c^{-1} exp(-V + 2c U[rho]) on the working grid.
struct EquilibriumSolution {
    double c = 0.0;
    DensityOnGrid rho;
    std::vector<double> log_potential; // U_c at the nodes
    double z_c = 0.0;
    int iterations = 0;
    double residual = 0.0;
    double h_c = 0.0;                  // free energy at the solution
    std::vector<double> residual_history;
    std::vector<double> h_c_history;

    double log_potential_at(double x) const { return interp_on_grid(rho.grid, log_potential, x); }
    double rho_at(double x) const { return rho.at(x); }
};

/// H_c(rho) = int rho log rho + int V rho - c int rho U[rho] + log Z,
/// with the 0 log 0 = 0 convention.
inline double free_energy(const DensityOnGrid& rho, double c, const PotentialSpec& V) {
    const LogKernel kern(rho.grid);
    const auto u = kern.apply(rho.values);
    const auto w = trapezoid_weights(rho.grid);
    double ent = 0.0, pot = 0.0, inter = 0.0, z = 0.0;
    for (int i = 0; i < rho.grid.n; ++i) {
        const double r = rho.values[i];
        const double vi = eval_potential(V, rho.grid.node(i));
        if (r > 0.0) ent += w[i] * r * std::log(r);
        pot += w[i] * vi * r;
        inter += w[i] * r * u[i];
        z += w[i] * std::exp(-vi);
    }
    return ent + pot - c * inter + std::log(z);
}

inline double relative_entropy(const DensityOnGrid& rho, const DensityOnGrid& alpha) {
    if (!(rho.grid == alpha.grid)) throw error("relative_entropy: densities live on different grids");
    const auto w = trapezoid_weights(rho.grid);
    double s = 0.0;
    for (int i = 0; i < rho.grid.n; ++i) {
        const double r = rho.values[i];
        if (r == 0.0) continue;
        if (alpha.values[i] <= 0.0) return std::numeric_limits<double>::infinity();
        s += w[i] * r * std::log(r / alpha.values[i]);
    }
    return s;
}

/// One step of the fixed-point map: normalize(exp(-V + 2c U[rho])).
/// The exponent max is subtracted before exponentiating; Z_c recovers it.
inline std::pair<DensityOnGrid, double> fixed_point_step(const DensityOnGrid& rho, double c,
                                                         const PotentialSpec& V) {
    const LogKernel kern(rho.grid);
    const auto u = kern.apply(rho.values);
    std::vector<double> e(rho.grid.n);
    for (int i = 0; i < rho.grid.n; ++i)
        e[i] = -eval_potential(V, rho.grid.node(i)) + 2.0 * c * u[i];
    double z = 0.0;
    auto next = gibbs_normalize(rho.grid, e, &z);
    return {std::move(next), z};
}

namespace detail {

struct FreeEnergyParts {
    // H_c split so that line-search trials cost O(n): the interaction term of a
    // convex combination is quadratic in theta, entropy is re-evaluated per trial.
    std::vector<double> v;       // V at nodes
    std::vector<double> w;       // trapezoid weights
    double log_z = 0.0;          // log of the alpha normalizer

    double eval(const std::vector<double>& rho, const std::vector<double>& u, double c) const {
        double ent = 0.0, pot = 0.0, inter = 0.0;
        for (std::size_t i = 0; i < rho.size(); ++i) {
            const double r = rho[i];
            if (r > 0.0) ent += w[i] * r * std::log(r);
            pot += w[i] * v[i] * r;
            inter += w[i] * r * u[i];
        }
        return ent + pot - c * inter + log_z;
    }
};

} // namespace detail

/// Damped Picard iteration for rho_c, started at alpha, with H_c-descent
/// backtracking: a step that would increase H_c has its damping halved until
/// the free energy is non-increasing. The direction T(rho) - rho is a strict
/// descent direction for H_c away from the fixed point, so the iteration
/// cannot stall on a bad step.
inline EquilibriumSolution solve_equilibrium(const PotentialSpec& V, double c, const Grid& grid,
                                             const SolverConfig& cfg = {}) {
    if (!(c >= 0.0)) throw error("solve_equilibrium: c must be >= 0");
    if (!(cfg.tol > 0.0)) throw error("solve_equilibrium: tol must be positive");
    if (!(cfg.damping > 0.0 && cfg.damping <= 1.0)) throw error("solve_equilibrium: damping must lie in (0,1]");

    const LogKernel kern(grid);
    const int n = grid.n;

    detail::FreeEnergyParts fe;
    fe.v.resize(n);
    fe.w = trapezoid_weights(grid);
    for (int i = 0; i < n; ++i) fe.v[i] = eval_potential(V, grid.node(i));
    {
        std::vector<double> a(n);
        for (int i = 0; i < n; ++i) a[i] = std::exp(-fe.v[i]);
        fe.log_z = std::log(trapezoid(grid, a));
    }

    EquilibriumSolution sol;
    sol.c = c;
    sol.rho = reference_density(V, grid);
    std::vector<double> rho = sol.rho.values;
    std::vector<double> u = kern.apply(rho);
    double hc = fe.eval(rho, u, c);

    std::vector<double> expo(n), t_vals(n), u_t(n);
    double theta_state = cfg.damping;
    double prev_defect = std::numeric_limits<double>::infinity();
    for (int iter = 1; iter <= cfg.max_iter; ++iter) {
        for (int i = 0; i < n; ++i) expo[i] = -fe.v[i] + 2.0 * c * u[i];
        double z = 0.0;
        auto t = gibbs_normalize(grid, expo, &z);
        t_vals = t.values;

        double defect = 0.0;
        for (int i = 0; i < n; ++i) defect = std::max(defect, std::fabs(t_vals[i] - rho[i]));
        sol.residual_history.push_back(defect);
        sol.h_c_history.push_back(hc);

        if (defect <= cfg.tol) {
            sol.rho.values = rho;
            sol.log_potential = u;
            sol.z_c = z;
            sol.iterations = iter;
            sol.residual = defect;
            sol.h_c = hc;
            for (double r : rho)
                if (!(r > 0.0)) throw error("solve_equilibrium: solution not strictly positive (exponent underflow; shrink the grid)");
            return sol;
        }

        // Damping control has two layers. A growing defect marks an unstable
        // step size, so theta decays persistently (and recovers slowly once
        // the iteration contracts again). Within a step, H_c backtracking
        // halves theta until the free energy is non-increasing; near the
        // minimum the true decrease falls below the resolution of H_c itself,
        // so the comparison carries an ulp-scale slack.
        if (defect > prev_defect) theta_state = std::max(1e-6, 0.5 * theta_state);
        else theta_state = std::min(cfg.damping, 1.05 * theta_state);
        prev_defect = defect;

        u_t = kern.apply(t_vals);
        double theta = theta_state;
        const double slack = 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::fabs(hc));
        std::vector<double> cand(n), u_cand(n);
        double h_cand = 0.0;
        for (;;) {
            for (int i = 0; i < n; ++i) {
                cand[i] = (1.0 - theta) * rho[i] + theta * t_vals[i];
                u_cand[i] = (1.0 - theta) * u[i] + theta * u_t[i];
            }
            h_cand = fe.eval(cand, u_cand, c);
            if (h_cand <= hc + slack || theta < 1e-6) break;
            theta *= 0.5;
        }
        rho.swap(cand);
        u.swap(u_cand);
        hc = h_cand;
    }

    throw convergence_error("solve_equilibrium: no convergence after " + std::to_string(cfg.max_iter) +
                                " iterations (last defect " + std::to_string(sol.residual_history.back()) + ")",
                            sol.residual_history);
}

/// S(z) = int rho(x)/(x - z) dx by the trapezoid rule; Im z != 0 required.
inline std::complex<double> stieltjes_transform(const DensityOnGrid& rho, std::complex<double> z) {
    if (z.imag() == 0.0) throw error("stieltjes_transform: z must lie off the real axis");
    const auto w = trapezoid_weights(rho.grid);
    std::complex<double> s = 0.0;
    for (int i = 0; i < rho.grid.n; ++i)
        s += w[i] * rho.values[i] / (rho.grid.node(i) - z);
    return s;
}

/// S'(z) = int rho(x)/(x - z)^2 dx.
inline std::complex<double> stieltjes_derivative(const DensityOnGrid& rho, std::complex<double> z) {
    if (z.imag() == 0.0) throw error("stieltjes_derivative: z must lie off the real axis");
    const auto w = trapezoid_weights(rho.grid);
    std::complex<double> s = 0.0;
    for (int i = 0; i < rho.grid.n; ++i) {
        const std::complex<double> d = rho.grid.node(i) - z;
        s += w[i] * rho.values[i] / (d * d);
    }
    return s;
}

/// Diagnostic residual |int V'(x) rho(x)/(x-z) dx + c S^2 + S'| of the
/// saddle-point relation; requires a differentiable potential.
inline double stieltjes_residual(const EquilibriumSolution& sol, const PotentialSpec& V,
                                 std::complex<double> z) {
    if (!V.has_derivative()) throw error("stieltjes_residual: potential has no derivative (tabulated)");
    if (z.imag() == 0.0) throw error("stieltjes_residual: z must lie off the real axis");
    const auto& rho = sol.rho;
    const auto w = trapezoid_weights(rho.grid);
    std::complex<double> vterm = 0.0;
    for (int i = 0; i < rho.grid.n; ++i) {
        const double x = rho.grid.node(i);
        vterm += w[i] * eval_potential_derivative(V, x) * rho.values[i] / (x - z);
    }
    const auto s = stieltjes_transform(rho, z);
    const auto sp = stieltjes_derivative(rho, z);
    return std::abs(vterm + sol.c * s * s + sp);
}

} // namespace loggas
