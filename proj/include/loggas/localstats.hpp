#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "loggas/rng.hpp"
#include "loggas/sampler.hpp"
#include "loggas/stats.hpp"

namespace loggas {

/// Rescaled points N(lambda_i - E) with |N(lambda_i - E)| <= W, sorted.
struct LocalWindow {
    double energy = 0.0;
    double half_width = 0.0;
    std::vector<double> points;

    int count() const { return static_cast<int>(points.size()); }
};

/// Builds the local window around E from a sorted sample; O(log N + m).
inline LocalWindow local_statistics(const Sample& sample, double E, double W) {
    if (!(W > 0.0)) throw error("local_statistics: window half-width must be positive");
    const int n = static_cast<int>(sample.lambdas.size());
    LocalWindow win;
    win.energy = E;
    win.half_width = W;
    const double lo = E - W / n, hi = E + W / n;
    const auto first = std::lower_bound(sample.lambdas.begin(), sample.lambdas.end(), lo);
    const auto last = std::upper_bound(first, sample.lambdas.end(), hi);
    win.points.reserve(last - first);
    for (auto it = first; it != last; ++it) {
        const double p = n * (*it - E);
        if (std::fabs(p) <= W) win.points.push_back(p);
    }
    return win;
}

inline std::vector<LocalWindow> windows_from_batch(const SampleBatch& batch, double E, double W) {
    std::vector<LocalWindow> wins;
    wins.reserve(batch.samples.size());
    for (const auto& s : batch.samples) wins.push_back(local_statistics(s, E, W));
    return wins;
}

/// Null CDF of a pooled interior gap for a homogeneous Poisson process of
/// intensity rho observed through a window of length 2W. Gaps whose endpoints
/// straddle the window boundary are discarded by the harness, which biases
/// the collected gaps by the factor (2W - g); the exponential law only
/// emerges as 2W*rho grows. In closed form, with mu = 2W rho, x = mu - rho t:
///   F(t) = 1 - [ (x - 1) e^{-rho t} + e^{-mu} ] / (mu - 1 + e^{-mu}).
inline double window_gap_null_cdf(double t, double rho, double W) {
    const double mu = 2.0 * W * rho;
    if (t <= 0.0) return 0.0;
    if (t >= 2.0 * W) return 1.0;
    const double x = mu - rho * t;
    const double c = mu - 1.0 + std::exp(-mu);
    return 1.0 - ((x - 1.0) * std::exp(-rho * t) + std::exp(-mu)) / c;
}

/// Pooled interior gaps across replicas (boundary gaps censored).
inline std::vector<double> pooled_gaps(const std::vector<LocalWindow>& windows) {
    std::vector<double> gaps;
    for (const auto& w : windows)
        for (std::size_t i = 1; i < w.points.size(); ++i)
            gaps.push_back(w.points[i] - w.points[i - 1]);
    return gaps;
}

struct SpacingTest {
    double ks_distance = 0.0;
    double critical_value = 0.0;
    long long pooled = 0;
    bool pass = false;
};

/// KS test of the pooled within-window gaps against the Poisson-process null
/// at intensity rho_ref (window-censoring accounted for in the null CDF).
inline SpacingTest spacing_test(const std::vector<LocalWindow>& windows, double rho_ref, double W,
                                double significance = 0.01) {
    auto gaps = pooled_gaps(windows);
    if (gaps.size() < 500)
        throw underpowered_error("spacing_test: fewer than 500 pooled gaps (" +
                                 std::to_string(gaps.size()) + ")");
    SpacingTest t;
    t.pooled = static_cast<long long>(gaps.size());
    t.ks_distance = ks_statistic(std::move(gaps),
                                 [&](double g) { return window_gap_null_cdf(g, rho_ref, W); });
    t.critical_value = ks_critical(significance, static_cast<double>(t.pooled));
    t.pass = t.ks_distance < t.critical_value;
    return t;
}

/// Counting and spacing statistics of the rescaled local process against the
/// homogeneous Poisson null of intensity rho_ref.
struct PoissonReport {
    double energy = 0.0;
    double half_width = 0.0;
    double intensity_ref = 0.0;
    int n_replicas = 0;
    double significance = 0.01;

    double count_mean = 0.0;
    double count_variance = 0.0;
    double fano = 0.0;
    bool no_points = false;

    Chi2Result chi2;
    SpacingTest spacing;
    bool spacing_available = false;

    double fano_lo = 0.85, fano_hi = 1.15;
    bool chi2_pass = false;
    bool fano_pass = false;
    bool spacing_pass = false;

    bool all_pass() const {
        return chi2_pass && fano_pass && (!spacing_available || spacing_pass) && !no_points;
    }
};

inline PoissonReport counting_report(const std::vector<LocalWindow>& windows, double E, double W,
                                     double rho_ref, double significance = 0.01) {
    if (windows.size() < 100)
        throw underpowered_error("counting_report: need at least 100 replicas, got " +
                                 std::to_string(windows.size()));
    if (!(rho_ref > 0.0)) throw error("counting_report: reference intensity must be positive");

    PoissonReport rep;
    rep.energy = E;
    rep.half_width = W;
    rep.intensity_ref = rho_ref;
    rep.n_replicas = static_cast<int>(windows.size());
    rep.significance = significance;

    std::vector<int> counts;
    counts.reserve(windows.size());
    std::vector<double> countsd;
    countsd.reserve(windows.size());
    for (const auto& w : windows) {
        counts.push_back(w.count());
        countsd.push_back(static_cast<double>(w.count()));
    }
    rep.count_mean = mean_of(countsd);
    rep.count_variance = variance_of(countsd);
    if (rep.count_mean <= 0.0) {
        rep.no_points = true;
        return rep;
    }
    rep.fano = rep.count_variance / rep.count_mean;
    rep.fano_pass = rep.fano >= rep.fano_lo && rep.fano <= rep.fano_hi;

    rep.chi2 = chi2_poisson_gof(counts, 2.0 * W * rho_ref);
    rep.chi2_pass = rep.chi2.p_value >= significance;

    try {
        rep.spacing = spacing_test(windows, rho_ref, W, significance);
        rep.spacing_available = true;
        rep.spacing_pass = rep.spacing.pass;
    } catch (const underpowered_error&) {
        rep.spacing_available = false;
    }
    return rep;
}

/// Binned estimate of the k-point correlation function of the rescaled
/// process, k in {1,2}; jackknife standard errors over replicas.
struct CorrelationEstimate {
    int k = 1;
    double half_width = 0.0;
    std::vector<double> edges;        // bin edges on [-W, W]
    std::vector<double> values;       // k=1: per bin; k=2: row-major cells
    std::vector<double> std_errors;   // jackknife, same layout
    std::vector<int> off_diagonal;    // k=2: flat indices of cells with |i-j| >= 2
    int n_replicas = 0;
};

namespace detail {

inline int bin_of(double x, double W, int nbins) {
    const double t = (x + W) / (2.0 * W) * nbins;
    int b = static_cast<int>(t);
    return std::clamp(b, 0, nbins - 1);
}

} // namespace detail

inline CorrelationEstimate correlation_estimate(const std::vector<LocalWindow>& windows, double W,
                                                int k, int nbins) {
    if (windows.empty()) throw error("correlation_estimate: empty batch");
    if (k < 1 || k > 2) throw error("correlation_estimate: k must be 1 or 2");
    if (nbins < 1) throw error("correlation_estimate: need at least one bin");

    const int R = static_cast<int>(windows.size());
    const double width = 2.0 * W / nbins;
    CorrelationEstimate est;
    est.k = k;
    est.half_width = W;
    est.n_replicas = R;
    est.edges.resize(nbins + 1);
    for (int i = 0; i <= nbins; ++i) est.edges[i] = -W + width * i;

    if (k == 1) {
        // per-replica bin counts; R^(1) per unit length per replica
        std::vector<std::vector<double>> per(R, std::vector<double>(nbins, 0.0));
        std::vector<double> tot(nbins, 0.0);
        for (int r = 0; r < R; ++r)
            for (double p : windows[r].points) {
                const int b = detail::bin_of(p, W, nbins);
                per[r][b] += 1.0;
                tot[b] += 1.0;
            }
        est.values.resize(nbins);
        est.std_errors.resize(nbins);
        std::vector<double> loo(R);
        for (int b = 0; b < nbins; ++b) {
            est.values[b] = tot[b] / (R * width);
            for (int r = 0; r < R; ++r) loo[r] = (tot[b] - per[r][b]) / ((R - 1.0) * width);
            est.std_errors[b] = jackknife_se(loo);
        }
        return est;
    }

    // k = 2: ordered distinct pairs on [-W, W]^2, normalized by replicas and cell area
    const double area = width * width;
    const int cells = nbins * nbins;
    std::vector<std::vector<double>> per(R, std::vector<double>(cells, 0.0));
    std::vector<double> tot(cells, 0.0);
    for (int r = 0; r < R; ++r) {
        const auto& pts = windows[r].points;
        std::vector<int> bins(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) bins[i] = detail::bin_of(pts[i], W, nbins);
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = 0; j < pts.size(); ++j) {
                if (i == j) continue;
                const int cell = bins[i] * nbins + bins[j];
                per[r][cell] += 1.0;
                tot[cell] += 1.0;
            }
    }
    est.values.resize(cells);
    est.std_errors.resize(cells);
    std::vector<double> loo(R);
    for (int cidx = 0; cidx < cells; ++cidx) {
        est.values[cidx] = tot[cidx] / (R * area);
        for (int r = 0; r < R; ++r) loo[r] = (tot[cidx] - per[r][cidx]) / ((R - 1.0) * area);
        est.std_errors[cidx] = jackknife_se(loo);
    }
    for (int i = 0; i < nbins; ++i)
        for (int j = 0; j < nbins; ++j)
            if (std::abs(i - j) >= 2) est.off_diagonal.push_back(i * nbins + j);
    return est;
}

/// Per-cell factorization ratio R^(2) / (R^(1) R^(1)) on the off-diagonal
/// cells, with jackknife errors of the ratio itself.
struct CorrelationRatio {
    int nbins = 0;
    std::vector<int> cells;          // flat indices (i * nbins + j), |i-j| >= 2
    std::vector<double> ratio;
    std::vector<double> std_error;
};

inline CorrelationRatio correlation_ratio(const std::vector<LocalWindow>& windows, double W,
                                          int nbins) {
    const int R = static_cast<int>(windows.size());
    if (R < 2) throw error("correlation_ratio: need at least two replicas");
    const double width = 2.0 * W / nbins;
    const double area = width * width;

    std::vector<std::vector<double>> c1(R, std::vector<double>(nbins, 0.0));
    std::vector<std::vector<double>> c2(R, std::vector<double>(nbins * nbins, 0.0));
    std::vector<double> t1(nbins, 0.0), t2(nbins * nbins, 0.0);
    for (int r = 0; r < R; ++r) {
        const auto& pts = windows[r].points;
        std::vector<int> bins(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            bins[i] = detail::bin_of(pts[i], W, nbins);
            c1[r][bins[i]] += 1.0;
            t1[bins[i]] += 1.0;
        }
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = 0; j < pts.size(); ++j)
                if (i != j) {
                    const int cell = bins[i] * nbins + bins[j];
                    c2[r][cell] += 1.0;
                    t2[cell] += 1.0;
                }
    }

    CorrelationRatio out;
    out.nbins = nbins;
    auto ratio_at = [&](double pair_count, double ci, double cj, double reps) {
        const double r1i = ci / (reps * width);
        const double r1j = cj / (reps * width);
        const double r2 = pair_count / (reps * area);
        return (r1i > 0.0 && r1j > 0.0) ? r2 / (r1i * r1j) : 0.0;
    };
    std::vector<double> loo(R);
    for (int i = 0; i < nbins; ++i)
        for (int j = 0; j < nbins; ++j) {
            if (std::abs(i - j) < 2) continue;
            const int cell = i * nbins + j;
            out.cells.push_back(cell);
            out.ratio.push_back(ratio_at(t2[cell], t1[i], t1[j], R));
            for (int r = 0; r < R; ++r)
                loo[r] = ratio_at(t2[cell] - c2[r][cell], t1[i] - c1[r][i], t1[j] - c1[r][j], R - 1.0);
            out.std_error.push_back(jackknife_se(loo));
        }
    return out;
}

struct IndependenceTest {
    double covariance = 0.0;
    double std_error = 0.0;
    double z_score = 0.0;
    bool pass = false;
};

/// Covariance of window counts at two energies with a replica-bootstrap
/// standard error; the windows must be disjoint after rescaling
/// (N |E - E'| > 4W). Pass iff |z| < 2.58.
inline IndependenceTest two_energy_independence(const std::vector<LocalWindow>& at_e,
                                                const std::vector<LocalWindow>& at_eprime,
                                                int n_particles, double E, double E_prime, double W,
                                                int bootstrap = 1000) {
    if (at_e.size() != at_eprime.size() || at_e.empty())
        throw error("two_energy_independence: replica lists must match");
    if (!(n_particles * std::fabs(E - E_prime) > 4.0 * W))
        throw error("two_energy_independence: rescaled windows overlap (need N|E-E'| > 4W)");

    const int R = static_cast<int>(at_e.size());
    std::vector<double> a(R), b(R);
    for (int r = 0; r < R; ++r) {
        a[r] = at_e[r].count();
        b[r] = at_eprime[r].count();
    }
    const double ma = mean_of(a), mb = mean_of(b);
    double cov = 0.0;
    for (int r = 0; r < R; ++r) cov += (a[r] - ma) * (b[r] - mb);
    cov /= (R - 1.0);

    Rng rng(0x5eedBEEFULL); // fixed stream: the test is deterministic per batch
    std::vector<double> boots(bootstrap);
    for (int t = 0; t < bootstrap; ++t) {
        double sa = 0.0, sb = 0.0, sab = 0.0;
        for (int r = 0; r < R; ++r) {
            const int idx = static_cast<int>(rng.uniform() * R);
            const double xa = a[std::min(idx, R - 1)];
            const double xb = b[std::min(idx, R - 1)];
            sa += xa;
            sb += xb;
            sab += xa * xb;
        }
        boots[t] = (sab - sa * sb / R) / (R - 1.0);
    }
    IndependenceTest it;
    it.covariance = cov;
    it.std_error = std::sqrt(variance_of(boots));
    it.z_score = it.std_error > 0.0 ? cov / it.std_error : 0.0;
    it.pass = std::fabs(it.z_score) < 2.58;
    return it;
}

// ---- synthetic fixtures for calibrating the statistical harness ----

/// Replicas of a true homogeneous Poisson process of the given intensity on [-W, W].
inline std::vector<LocalWindow> poisson_windows(Rng& rng, int replicas, double W, double intensity) {
    std::vector<LocalWindow> wins(replicas);
    for (auto& w : wins) {
        w.energy = 0.0;
        w.half_width = W;
        const int k = rng.poisson(2.0 * W * intensity);
        w.points.resize(k);
        for (int i = 0; i < k; ++i) w.points[i] = rng.uniform(-W, W);
        std::sort(w.points.begin(), w.points.end());
    }
    return wins;
}

/// Deterministic equally spaced points: maximally non-exponential gaps.
inline std::vector<LocalWindow> picket_fence_windows(int replicas, double W, double spacing) {
    std::vector<LocalWindow> wins(replicas);
    for (auto& w : wins) {
        w.energy = 0.0;
        w.half_width = W;
        for (double x = -W + 0.5 * spacing; x <= W; x += spacing) w.points.push_back(x);
    }
    return wins;
}

} // namespace loggas
