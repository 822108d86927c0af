#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "loggas/grid.hpp"

namespace loggas {

enum class PotentialKind { gaussian, even_polynomial, tabulated };

/// Confining potential V. Admissible kinds: V = x^2/2, an even-degree
/// polynomial with positive leading coefficient, or a tabulated curve
/// (linear inside the table, quadratic extrapolation outside).
struct PotentialSpec {
    PotentialKind kind = PotentialKind::gaussian;
    std::vector<double> coeffs;          // even_polynomial: c0 + c1 x + ... + cd x^d
    std::vector<double> table_x, table_v; // tabulated: strictly increasing x
    double shift = 0.0;                  // additive constant, keeps V >= 0 on the working domain

    static PotentialSpec gaussian() { return PotentialSpec{}; }

    static PotentialSpec even_polynomial(std::vector<double> c, double shift = 0.0) {
        if (c.empty()) throw error("even_polynomial: empty coefficient list");
        while (c.size() > 1 && c.back() == 0.0) c.pop_back();
        const int degree = static_cast<int>(c.size()) - 1;
        if (degree == 0 || degree % 2 != 0) throw error("even_polynomial: degree must be even and positive");
        if (!(c.back() > 0.0)) throw error("even_polynomial: leading coefficient must be positive");
        PotentialSpec p;
        p.kind = PotentialKind::even_polynomial;
        p.coeffs = std::move(c);
        p.shift = shift;
        return p;
    }

    static PotentialSpec tabulated(std::vector<double> xs, std::vector<double> vs, double shift = 0.0) {
        if (xs.size() != vs.size() || xs.size() < 3) throw error("tabulated: need >= 3 (x, value) rows");
        for (std::size_t i = 1; i < xs.size(); ++i)
            if (!(xs[i] > xs[i - 1])) throw error("tabulated: x column must be strictly increasing");
        for (double v : vs)
            if (!std::isfinite(v)) throw error("tabulated: non-finite value");
        PotentialSpec p;
        p.kind = PotentialKind::tabulated;
        p.table_x = std::move(xs);
        p.table_v = std::move(vs);
        p.shift = shift;
        return p;
    }

    bool has_derivative() const { return kind != PotentialKind::tabulated; }

    bool is_even() const {
        switch (kind) {
        case PotentialKind::gaussian: return true;
        case PotentialKind::even_polynomial:
            for (std::size_t k = 1; k < coeffs.size(); k += 2)
                if (coeffs[k] != 0.0) return false;
            return true;
        case PotentialKind::tabulated: return false;
        }
        return false;
    }
};

namespace detail {

// Parabola through three table points, evaluated at x (used for extrapolation).
inline double parabola3(const std::vector<double>& xs, const std::vector<double>& vs,
                        std::size_t i0, double x) {
    const double x0 = xs[i0], x1 = xs[i0 + 1], x2 = xs[i0 + 2];
    const double y0 = vs[i0], y1 = vs[i0 + 1], y2 = vs[i0 + 2];
    const double l0 = (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2));
    const double l1 = (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2));
    const double l2 = (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1));
    return y0 * l0 + y1 * l1 + y2 * l2;
}

} // namespace detail

inline double eval_potential(const PotentialSpec& V, double x) {
    if (!std::isfinite(x)) throw error("eval_potential: non-finite x");
    double v = 0.0;
    switch (V.kind) {
    case PotentialKind::gaussian:
        v = 0.5 * x * x;
        break;
    case PotentialKind::even_polynomial: {
        for (auto it = V.coeffs.rbegin(); it != V.coeffs.rend(); ++it) v = v * x + *it;
        break;
    }
    case PotentialKind::tabulated: {
        const auto& xs = V.table_x;
        const auto& vs = V.table_v;
        if (x < xs.front()) {
            v = detail::parabola3(xs, vs, 0, x);
        } else if (x > xs.back()) {
            v = detail::parabola3(xs, vs, xs.size() - 3, x);
        } else {
            const auto it = std::upper_bound(xs.begin(), xs.end(), x);
            const std::size_t j = std::min(xs.size() - 2, static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - xs.begin() - 1)));
            const double t = (x - xs[j]) / (xs[j + 1] - xs[j]);
            v = vs[j] * (1.0 - t) + vs[j + 1] * t;
        }
        break;
    }
    }
    v += V.shift;
    if (!std::isfinite(v)) throw error("eval_potential: non-finite result (malformed table?)");
    return v;
}

/// V'(x); defined for gaussian and even_polynomial only.
inline double eval_potential_derivative(const PotentialSpec& V, double x) {
    switch (V.kind) {
    case PotentialKind::gaussian: return x;
    case PotentialKind::even_polynomial: {
        double d = 0.0;
        for (std::size_t k = V.coeffs.size() - 1; k >= 1; --k) d = d * x + V.coeffs[k] * k;
        return d;
    }
    case PotentialKind::tabulated:
        throw error("potential derivative: tabulated potentials have no derivative");
    }
    return 0.0;
}

/// Wegner-type majorant  Lambda (1+x^2)^{kappa/2} e^{-V(x)}.
inline double envelope_bound(const PotentialSpec& V, double kappa, double lambda, double x) {
    if (!(kappa > 0.0) || !(lambda > 0.0)) throw error("envelope_bound: kappa and Lambda must be positive");
    return lambda * std::pow(1.0 + x * x, 0.5 * kappa) * std::exp(-eval_potential(V, x));
}

/// exp(e_i - max) normalization; returns the density and the integral of exp(e).
/// Shared by reference_density and the equilibrium fixed-point map so that the
/// c = 0 map reproduces alpha bit for bit.
inline DensityOnGrid gibbs_normalize(const Grid& g, const std::vector<double>& exponent,
                                     double* normalizer = nullptr) {
    double m = exponent.front();
    for (double e : exponent) {
        if (!std::isfinite(e)) throw error("gibbs_normalize: non-finite exponent (inadequate truncation domain?)");
        m = std::max(m, e);
    }
    std::vector<double> w(exponent.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(exponent[i] - m);
    double z = 0.0;
    auto d = DensityOnGrid::from_unnormalized(g, std::move(w), &z);
    if (normalizer) *normalizer = z * std::exp(m);
    return d;
}

/// Reference density alpha(x) = e^{-V(x)} / Z on the grid; Z is returned through `normalizer`.
inline DensityOnGrid reference_density(const PotentialSpec& V, const Grid& g,
                                       double* normalizer = nullptr) {
    std::vector<double> e(g.n);
    for (int i = 0; i < g.n; ++i) e[i] = -eval_potential(V, g.node(i));
    return gibbs_normalize(g, e, normalizer);
}

namespace detail {

// Envelope tail mass beyond [-L, L]: segments of fixed-step trapezoid extended
// until a segment contributes a negligible fraction.
inline double envelope_tail_mass(const PotentialSpec& V, double kappa, double L) {
    auto f = [&](double x) {
        return std::pow(1.0 + x * x, 0.5 * kappa) * std::exp(-eval_potential(V, x));
    };
    const double h = 0.01;
    double total = 0.0;
    double x0 = L;
    for (int seg = 0; seg < 400; ++seg) {
        const double x1 = x0 + 2.0;
        double s = 0.5 * (f(x0) + f(x1));
        const int steps = static_cast<int>(std::lround((x1 - x0) / h));
        for (int i = 1; i < steps; ++i) s += f(x0 + h * i);
        const double part = s * h;
        total += part;
        if (part < 1e-3 * std::max(total, 1e-300) || part < 1e-320) break;
        x0 = x1;
    }
    // symmetric potentials dominate in practice; integrate the left tail too
    double total_left = 0.0;
    x0 = -L;
    for (int seg = 0; seg < 400; ++seg) {
        const double x1 = x0 - 2.0;
        double s = 0.5 * (f(x0) + f(x1));
        const int steps = static_cast<int>(std::lround((x0 - x1) / h));
        for (int i = 1; i < steps; ++i) s += f(x0 - h * i);
        const double part = s * h;
        total_left += part;
        if (part < 1e-3 * std::max(total_left, 1e-300) || part < 1e-320) break;
        x0 = x1;
    }
    return total + total_left;
}

} // namespace detail

/// Smallest symmetric interval [-L, L] whose kappa-envelope tail mass is < eps,
/// found by doubling then bisection. Checks the superlogarithmic growth floor
/// at the endpoints.
inline std::pair<double, double> choose_truncation(const PotentialSpec& V, double kappa,
                                                   double eps, double growth_floor = 5.0) {
    if (!(eps > 0.0 && eps < 1.0)) throw error("choose_truncation: eps must lie in (0,1)");
    double lo = 0.5, hi = 1.0;
    int guard = 0;
    while (detail::envelope_tail_mass(V, kappa, hi) >= eps) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 60) throw error("choose_truncation: envelope tail does not decay");
    }
    for (int it = 0; it < 60 && hi - lo > 1e-3; ++it) {
        const double mid = 0.5 * (lo + hi);
        (detail::envelope_tail_mass(V, kappa, mid) < eps ? hi : lo) = mid;
    }
    const double L = hi;
    // admissibility is judged at the pipeline scale: a loose eps can land on a
    // small interval where V/log(1+x^2) says nothing about the growth at infinity
    double L_check = L;
    if (eps > 1e-10) {
        double h2 = L;
        int guard = 0;
        while (detail::envelope_tail_mass(V, kappa, h2) >= 1e-10) {
            h2 *= 2.0;
            if (++guard > 60) throw error("choose_truncation: envelope tail does not decay");
        }
        L_check = h2;
    }
    const double growth = eval_potential(V, L_check) / std::log1p(L_check * L_check);
    const double growth_m = eval_potential(V, -L_check) / std::log1p(L_check * L_check);
    if (growth < growth_floor || growth_m < growth_floor)
        throw error("choose_truncation: potential grows too slowly at the truncation endpoints (V/log(1+x^2) = " +
                    std::to_string(std::min(growth, growth_m)) + " < " + std::to_string(growth_floor) + ")");
    return {-L, L};
}

/// Truncation adequacy required by reference_density: envelope tail (kappa -> 0) below eps.
inline bool truncation_adequate(const PotentialSpec& V, const Grid& g, double eps = 1e-10) {
    const double L = std::min(-g.lo, g.hi);
    return detail::envelope_tail_mass(V, 1e-12, L) < eps;
}

} // namespace loggas
