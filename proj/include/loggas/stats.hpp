#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "loggas/grid.hpp"

namespace loggas {

struct underpowered_error : error {
    using error::error;
};

namespace detail {

inline double lgamma_fn(double x) { return std::lgamma(x); }

// Regularized lower incomplete gamma P(a, x); series for x < a+1, continued
// fraction otherwise (Numerical Recipes style).
inline double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw error("gamma_p: bad arguments");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
        }
        return sum * std::exp(-x + a * std::log(x) - lgamma_fn(a));
    }
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::fabs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return 1.0 - std::exp(-x + a * std::log(x) - lgamma_fn(a)) * h;
}

} // namespace detail

/// Upper-tail probability of a chi-square statistic with `dof` degrees of freedom.
inline double chi2_sf(double stat, int dof) {
    if (dof <= 0) return 1.0;
    return 1.0 - detail::gamma_p(0.5 * dof, 0.5 * stat);
}

inline double poisson_pmf(int k, double mean) {
    if (k < 0) return 0.0;
    return std::exp(k * std::log(mean) - mean - detail::lgamma_fn(k + 1.0));
}

/// One-sample KS statistic of `data` against a fully specified CDF.
inline double ks_statistic(std::vector<double> data, const std::function<double(double)>& cdf) {
    if (data.empty()) throw error("ks_statistic: empty sample");
    std::sort(data.begin(), data.end());
    const double n = static_cast<double>(data.size());
    double d = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double f = cdf(data[i]);
        d = std::max(d, (i + 1) / n - f);
        d = std::max(d, f - i / n);
    }
    return d;
}

/// Two-sample KS statistic (merge scan).
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw error("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::fabs(i / na - j / nb));
    }
    return d;
}

// Kolmogorov coefficient c(alpha): 1.628 at 1%, 1.358 at 5%.
inline double ks_coefficient(double alpha) {
    if (alpha <= 0.011) return 1.628;
    if (alpha <= 0.051) return 1.358;
    return std::sqrt(-0.5 * std::log(alpha / 2.0));
}

/// Asymptotic KS critical value at significance alpha (one-sample, n points).
inline double ks_critical(double alpha, double n) { return ks_coefficient(alpha) / std::sqrt(n); }

inline double ks_two_sample_critical(double alpha, double n, double m) {
    return ks_coefficient(alpha) * std::sqrt((n + m) / (n * m));
}

struct Chi2Result {
    double stat = 0.0;
    int dof = 0;
    double p_value = 1.0;
    int bins = 0;
};

/// Chi-square goodness of fit of integer counts against Poisson(mean).
/// Count values are merged from both tails so every expected bin mass is >= 5;
/// the rightmost bin absorbs the remaining tail probability.
inline Chi2Result chi2_poisson_gof(const std::vector<int>& counts, double mean) {
    if (counts.empty()) throw error("chi2_poisson_gof: empty counts");
    const double r = static_cast<double>(counts.size());
    int kmax = 0;
    for (int c : counts) kmax = std::max(kmax, c);
    // extend until the tail expectation is negligible
    while (r * (1.0 - detail::gamma_p(kmax + 1.0, mean)) > 1e-9 && kmax < 10000) ++kmax;

    std::vector<double> expected(kmax + 1);
    for (int k = 0; k <= kmax; ++k) expected[k] = r * poisson_pmf(k, mean);
    // remaining tail mass goes to the last value bin
    double tail = r;
    for (double e : expected) tail -= e;
    expected[kmax] += std::max(tail, 0.0);

    std::vector<int> observed(kmax + 1, 0);
    for (int c : counts) ++observed[std::min(c, kmax)];

    // merge bins left to right; a trailing light bin merges backwards
    std::vector<double> obins, ebins;
    double oa = 0.0, ea = 0.0;
    for (int k = 0; k <= kmax; ++k) {
        oa += observed[k];
        ea += expected[k];
        if (ea >= 5.0) {
            obins.push_back(oa);
            ebins.push_back(ea);
            oa = ea = 0.0;
        }
    }
    if (ea > 0.0 || oa > 0.0) {
        if (!ebins.empty()) {
            obins.back() += oa;
            ebins.back() += ea;
        } else {
            obins.push_back(oa);
            ebins.push_back(ea);
        }
    }

    Chi2Result res;
    res.bins = static_cast<int>(obins.size());
    for (std::size_t b = 0; b < obins.size(); ++b) {
        const double diff = obins[b] - ebins[b];
        res.stat += diff * diff / ebins[b];
    }
    res.dof = std::max(1, res.bins - 1);
    res.p_value = chi2_sf(res.stat, res.dof);
    return res;
}

/// Delete-one jackknife standard error of a statistic given leave-one-out values.
inline double jackknife_se(const std::vector<double>& leave_one_out) {
    const double n = static_cast<double>(leave_one_out.size());
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (double v : leave_one_out) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : leave_one_out) ss += (v - mean) * (v - mean);
    return std::sqrt((n - 1.0) / n * ss);
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / v.size();
}

inline double variance_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / (v.size() - 1.0);
}

} // namespace loggas
