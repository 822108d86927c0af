#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "loggas/equilibrium.hpp"
#include "loggas/grid.hpp"
#include "loggas/potential.hpp"
#include "loggas/rng.hpp"
#include "loggas/stats.hpp"
#include "loggas/threads.hpp"
#include "loggas/tridiagonal.hpp"

namespace loggas {

struct McmcSettings {
    double step_size = 1.0;
    int sweeps_burnin = 2000;
    int sweeps_between = 10;
    double target_acceptance = 0.35;
    bool adapt = true;
};

/// Finite-N ensemble parameters. The standard high-temperature regime sets
/// beta = 2c/N so that beta*N is the effective interaction strength 2c.
struct EnsembleConfig {
    int n_particles = 100;
    double beta = 0.02;
    PotentialSpec potential;
    McmcSettings mcmc;
    std::uint64_t seed = 0;

    EnsembleConfig() = default;
    EnsembleConfig(int n, double b, PotentialSpec v, std::uint64_t s)
        : n_particles(n), beta(b), potential(std::move(v)), seed(s) {
        validate();
    }

    void validate() const {
        if (n_particles < 1) throw error("EnsembleConfig: need at least one particle");
        if (!(beta > 0.0)) throw error("EnsembleConfig: beta must be positive");
        if (!(mcmc.step_size > 0.0)) throw error("EnsembleConfig: step_size must be positive");
    }

    double interaction_strength() const { return beta * n_particles; } // 2 c_eff

    static EnsembleConfig high_temperature(int n, double c, PotentialSpec v, std::uint64_t s) {
        return EnsembleConfig(n, 2.0 * c / n, std::move(v), s);
    }
};

enum class Provenance { mcmc, tridiagonal, brute };

inline const char* provenance_name(Provenance p) {
    switch (p) {
    case Provenance::mcmc: return "mcmc";
    case Provenance::tridiagonal: return "tridiagonal";
    case Provenance::brute: return "brute";
    }
    return "?";
}

/// One sorted configuration (lambda_1 <= ... <= lambda_N).
struct Sample {
    std::vector<double> lambdas;
    Provenance provenance = Provenance::mcmc;
};

struct ChainDiagnostics {
    double acceptance_rate = 0.0;
    double final_step_size = 0.0;
    long long sweeps_total = 0;
    bool acceptance_warning = false; // post-burn-in rate outside [0.05, 0.9]
};

struct SampleBatch {
    EnsembleConfig config;
    std::vector<Sample> samples;
    ChainDiagnostics chain_diagnostics;

    std::size_t size() const { return samples.size(); }
};

/// log of the unnormalized joint density:
///   beta * sum_{i<j} log|l_j - l_i| - sum_i V(l_i).
/// Coincident coordinates return -infinity (the density vanishes).
inline double log_density_unnormalized(const EnsembleConfig& cfg, const std::vector<double>& lambdas) {
    if (static_cast<int>(lambdas.size()) != cfg.n_particles)
        throw error("log_density_unnormalized: wrong configuration size");
    double s = 0.0;
    const int n = cfg.n_particles;
    for (int i = 0; i < n; ++i) {
        if (!std::isfinite(lambdas[i])) throw error("log_density_unnormalized: non-finite coordinate");
        for (int j = i + 1; j < n; ++j) {
            const double d = std::fabs(lambdas[j] - lambdas[i]);
            if (d == 0.0) return -std::numeric_limits<double>::infinity();
            s += std::log(d);
        }
    }
    s *= cfg.beta;
    for (int i = 0; i < n; ++i) s -= eval_potential(cfg.potential, lambdas[i]);
    return s;
}

/// Energy change of moving coordinate i to `proposal`, computed in O(N).
/// Equals log_density_unnormalized(new) - log_density_unnormalized(old).
inline double log_density_delta(const EnsembleConfig& cfg, const std::vector<double>& lambdas,
                                int i, double proposal) {
    double s = 0.0;
    const int n = cfg.n_particles;
    for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const double dn = std::fabs(proposal - lambdas[j]);
        if (dn == 0.0) return -std::numeric_limits<double>::infinity();
        s += std::log(dn) - std::log(std::fabs(lambdas[i] - lambdas[j]));
    }
    return cfg.beta * s - (eval_potential(cfg.potential, proposal) - eval_potential(cfg.potential, lambdas[i]));
}

namespace detail {

// Inverse-CDF sampling table for the reference density alpha.
struct AlphaSampler {
    Grid grid;
    std::vector<double> cdf;

    AlphaSampler(const PotentialSpec& V, const Grid& g) : grid(g) {
        const auto alpha = reference_density(V, g);
        cdf.resize(g.n);
        cdf[0] = 0.0;
        const double h = g.spacing();
        for (int i = 1; i < g.n; ++i)
            cdf[i] = cdf[i - 1] + 0.5 * h * (alpha.values[i - 1] + alpha.values[i]);
        const double total = cdf.back();
        for (double& v : cdf) v /= total;
    }

    double draw(Rng& rng) const {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        int j = static_cast<int>(it - cdf.begin()) - 1;
        j = std::clamp(j, 0, grid.n - 2);
        const double seg = cdf[j + 1] - cdf[j];
        const double t = seg > 0.0 ? (u - cdf[j]) / seg : 0.5;
        return grid.node(j) + t * grid.spacing();
    }
};

inline Grid sampler_init_grid(const PotentialSpec& V, double beta_n) {
    const auto [lo, hi] = choose_truncation(V, beta_n + 0.5, 1e-10);
    return Grid(lo, hi, 1001);
}

} // namespace detail

/// Single-site Metropolis chain over a configuration. Exposed so tests can
/// verify the incremental energy against full recomputation.
class McmcChain {
public:
    McmcChain(const EnsembleConfig& cfg, std::uint64_t stream_seed)
        : cfg_(cfg), rng_(stream_seed), step_(cfg.mcmc.step_size) {
        cfg_.validate();
        const detail::AlphaSampler init(cfg.potential, detail::sampler_init_grid(cfg.potential, cfg.beta * cfg.n_particles));
        state_.resize(cfg.n_particles);
        for (double& x : state_) x = init.draw(rng_);
        std::sort(state_.begin(), state_.end());
    }

    /// One sweep of N single-coordinate proposals; returns the acceptance fraction.
    double sweep() {
        const int n = cfg_.n_particles;
        int accepted = 0;
        for (int i = 0; i < n; ++i) {
            const double prop = state_[i] + step_ * rng_.normal();
            const double delta = log_density_delta(cfg_, state_, i, prop);
            if (delta >= 0.0 || std::log(rng_.uniform_pos()) < delta) {
                state_[i] = prop;
                ++accepted;
            }
        }
        ++sweeps_;
        return static_cast<double>(accepted) / n;
    }

    void adapt_step(double acceptance) {
        step_ = std::clamp(step_ * std::exp(0.05 * (acceptance - cfg_.mcmc.target_acceptance)), 1e-4, 1e3);
    }

    Sample emit() const {
        Sample s;
        s.lambdas = state_;
        std::sort(s.lambdas.begin(), s.lambdas.end());
        s.provenance = Provenance::mcmc;
        return s;
    }

    const std::vector<double>& state() const { return state_; }
    double step_size() const { return step_; }
    long long sweeps() const { return sweeps_; }

private:
    EnsembleConfig cfg_;
    Rng rng_;
    std::vector<double> state_;
    double step_ = 1.0;
    long long sweeps_ = 0;
};

/// Runs one Metropolis chain: burn-in with step adaptation, then one Sample
/// every sweeps_between sweeps until `count` samples are emitted.
inline SampleBatch mcmc_sample(const EnsembleConfig& cfg, int count, int replica_index = 0) {
    if (count < 1) throw error("mcmc_sample: count must be >= 1");
    McmcChain chain(cfg, derive_seed(cfg.seed, static_cast<std::uint64_t>(replica_index)));

    for (int s = 0; s < cfg.mcmc.sweeps_burnin; ++s) {
        const double acc = chain.sweep();
        if (cfg.mcmc.adapt) chain.adapt_step(acc);
    }

    SampleBatch batch;
    batch.config = cfg;
    batch.samples.reserve(count);
    double acc_sum = 0.0;
    long long acc_sweeps = 0;
    for (int k = 0; k < count; ++k) {
        for (int s = 0; s < cfg.mcmc.sweeps_between; ++s) {
            acc_sum += chain.sweep();
            ++acc_sweeps;
        }
        batch.samples.push_back(chain.emit());
    }
    batch.chain_diagnostics.acceptance_rate = acc_sweeps > 0 ? acc_sum / acc_sweeps : 0.0;
    batch.chain_diagnostics.final_step_size = chain.step_size();
    batch.chain_diagnostics.sweeps_total = chain.sweeps();
    const double ar = batch.chain_diagnostics.acceptance_rate;
    batch.chain_diagnostics.acceptance_warning = (ar < 0.05 || ar > 0.9);
    return batch;
}

/// Independent replica chains with derived seeds; batch ordered by replica.
inline SampleBatch mcmc_sample_replicas(const EnsembleConfig& cfg, int replicas, int per_replica,
                                        int threads = 1) {
    if (replicas < 1) throw error("mcmc_sample_replicas: need at least one replica");
    std::vector<SampleBatch> parts(replicas);
    parallel_for(replicas, threads, [&](int r) { parts[r] = mcmc_sample(cfg, per_replica, r); });
    SampleBatch batch;
    batch.config = cfg;
    batch.samples.reserve(static_cast<std::size_t>(replicas) * per_replica);
    double acc = 0.0;
    long long sweeps = 0;
    bool warn = false;
    for (auto& p : parts) {
        for (auto& s : p.samples) batch.samples.push_back(std::move(s));
        acc += p.chain_diagnostics.acceptance_rate;
        sweeps += p.chain_diagnostics.sweeps_total;
        warn = warn || p.chain_diagnostics.acceptance_warning;
    }
    batch.chain_diagnostics.acceptance_rate = acc / replicas;
    batch.chain_diagnostics.final_step_size = parts.back().chain_diagnostics.final_step_size;
    batch.chain_diagnostics.sweeps_total = sweeps;
    batch.chain_diagnostics.acceptance_warning = warn;
    return batch;
}

/// Exact Gaussian-case sampler: eigenvalues of the symmetric tridiagonal
/// matrix with standard normal diagonal and chi_{beta(N-k)}/sqrt(2)
/// sub-diagonal. Each replica draws from its own derived stream.
inline SampleBatch tridiagonal_gaussian_sample(int n, double beta, std::uint64_t seed, int count,
                                               int threads = 1) {
    if (n < 1 || count < 1) throw error("tridiagonal_gaussian_sample: bad sizes");
    SampleBatch batch;
    batch.config = EnsembleConfig(n, beta, PotentialSpec::gaussian(), seed);
    batch.samples.resize(count);
    parallel_for(count, threads, [&](int m) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(m)));
        std::vector<double> diag(n), off(std::max(0, n - 1));
        for (int i = 0; i < n; ++i) diag[i] = rng.normal();
        for (int k = 1; k <= n - 1; ++k) off[k - 1] = rng.chi(beta * (n - k)) / std::sqrt(2.0);
        Sample s;
        s.lambdas = tridiagonal_eigenvalues(std::move(diag), std::move(off));
        s.provenance = Provenance::tridiagonal;
        batch.samples[m] = std::move(s);
    });
    batch.chain_diagnostics.sweeps_total = 0;
    return batch;
}

/// Config-level entry point; rejects non-Gaussian potentials.
inline SampleBatch tridiagonal_gaussian_sample(const EnsembleConfig& cfg, int count, int threads = 1) {
    if (cfg.potential.kind != PotentialKind::gaussian)
        throw error("tridiagonal_gaussian_sample: exact sampler exists only for the gaussian potential");
    return tridiagonal_gaussian_sample(cfg.n_particles, cfg.beta, cfg.seed, count, threads);
}

/// Histogram of all coordinates on node-centered cells, normalized to a density.
/// Edge nodes carry half-width cells so the trapezoid integral is 1 exactly.
inline DensityOnGrid empirical_marginal(const SampleBatch& batch, const Grid& grid) {
    if (batch.samples.empty()) throw error("empirical_marginal: empty batch");
    std::vector<double> counts(grid.n, 0.0);
    const double h = grid.spacing();
    double total = 0.0;
    for (const auto& s : batch.samples)
        for (double x : s.lambdas) {
            int i = static_cast<int>(std::lround((x - grid.lo) / h));
            i = std::clamp(i, 0, grid.n - 1);
            counts[i] += 1.0;
            total += 1.0;
        }
    std::vector<double> vals(grid.n);
    for (int i = 0; i < grid.n; ++i) {
        const double width = (i == 0 || i == grid.n - 1) ? 0.5 * h : h;
        vals[i] = counts[i] / (total * width);
    }
    return DensityOnGrid::from_unnormalized(grid, std::move(vals));
}

struct MonteCarloEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// E[prod_j |x - lambda_j|^beta] over a batch drawn at parameters (beta, N-1):
/// the inner expectation of the one-point marginal identity. A coincidence
/// x = lambda_j contributes a factor 0, never a NaN.
inline MonteCarloEstimate estimate_exp_log_potential(const SampleBatch& batch, double x) {
    if (batch.samples.empty()) throw error("estimate_exp_log_potential: empty batch");
    const double beta = batch.config.beta;
    std::vector<double> vals;
    vals.reserve(batch.samples.size());
    for (const auto& s : batch.samples) {
        double t = 0.0;
        for (double l : s.lambdas) t += std::log(std::fabs(x - l)); // -inf on coincidence
        vals.push_back(std::exp(beta * t));
    }
    MonteCarloEstimate e;
    e.value = mean_of(vals);
    e.std_error = std::sqrt(variance_of(vals) / vals.size());
    return e;
}

/// Z_{beta,N} / Z_{beta,N-1} from a batch at (beta, N-1): trapezoid integral of
/// E[prod |x - lambda|^beta] e^{-V(x)} over the quadrature grid. The integral is
/// evaluated per sample and then averaged, so the standard error is the plain
/// Monte Carlo error of i.i.d. per-sample integrals.
inline MonteCarloEstimate estimate_partition_ratio(const SampleBatch& batch, const PotentialSpec& V,
                                                   const Grid& quad, int threads = 1) {
    if (batch.samples.empty()) throw error("estimate_partition_ratio: empty batch");
    const double beta = batch.config.beta;
    const auto w = trapezoid_weights(quad);
    std::vector<double> expv(quad.n);
    for (int i = 0; i < quad.n; ++i) expv[i] = std::exp(-eval_potential(V, quad.node(i)));
    std::vector<double> integrals(batch.samples.size());
    parallel_for(static_cast<int>(batch.samples.size()), threads, [&](int m) {
        const auto& lam = batch.samples[m].lambdas;
        double acc = 0.0;
        for (int i = 0; i < quad.n; ++i) {
            double t = 0.0;
            const double x = quad.node(i);
            for (double l : lam) t += std::log(std::fabs(x - l));
            acc += w[i] * std::exp(beta * t) * expv[i];
        }
        integrals[m] = acc;
    });
    MonteCarloEstimate e;
    e.value = mean_of(integrals);
    e.std_error = std::sqrt(variance_of(integrals) / integrals.size());
    return e;
}

/// Deterministic nested-quadrature evaluation of the k-dimensional marginal
/// rho_N^{(k)} for N in {2,3}; the normalizer Z_{beta,N} uses the same rule.
/// Oracle for sampler and correlation tests; N > 3 is rejected on cost.
inline std::vector<double> brute_force_marginal(int n_particles, double beta, const PotentialSpec& V,
                                                int k, const std::vector<double>& points,
                                                const Grid& quad) {
    if (n_particles < 2 || n_particles > 3) throw error("brute_force_marginal: N must be 2 or 3");
    if (k < 1 || k > 2) throw error("brute_force_marginal: k must be 1 or 2");
    const auto w = trapezoid_weights(quad);
    const int n = quad.n;
    std::vector<double> ew(n), xs(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = quad.node(i);
        ew[i] = w[i] * std::exp(-eval_potential(V, xs[i]));
    }
    auto pw = [&](double a, double b) { return std::pow(std::fabs(a - b), beta); };

    double z = 0.0;
    if (n_particles == 2) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) z += ew[i] * ew[j] * pw(xs[i], xs[j]);
    } else {
        for (int i = 0; i < n; ++i) {
            double acc_i = 0.0;
            for (int j = 0; j < n; ++j) {
                const double pij = pw(xs[i], xs[j]);
                double acc_j = 0.0;
                for (int l = 0; l < n; ++l) acc_j += ew[l] * pij * pw(xs[i], xs[l]) * pw(xs[j], xs[l]);
                acc_i += ew[j] * acc_j;
            }
            z += ew[i] * acc_i;
        }
    }

    std::vector<double> out;
    out.reserve(points.size());
    if (k == 1) {
        for (double x : points) {
            const double ex = std::exp(-eval_potential(V, x));
            double inner = 0.0;
            if (n_particles == 2) {
                for (int j = 0; j < n; ++j) inner += ew[j] * pw(x, xs[j]);
            } else {
                for (int j = 0; j < n; ++j) {
                    double acc = 0.0;
                    for (int l = 0; l < n; ++l) acc += ew[l] * pw(x, xs[l]) * pw(xs[j], xs[l]);
                    inner += ew[j] * pw(x, xs[j]) * acc;
                }
            }
            out.push_back(ex * inner / z);
        }
    } else {
        if (points.size() % 2 != 0) throw error("brute_force_marginal: k=2 needs (x1,x2) pairs");
        for (std::size_t p = 0; p + 1 < points.size(); p += 2) {
            const double x1 = points[p], x2 = points[p + 1];
            const double ex = std::exp(-eval_potential(V, x1) - eval_potential(V, x2)) * pw(x1, x2);
            double inner = 1.0;
            if (n_particles == 3) {
                inner = 0.0;
                for (int l = 0; l < n; ++l) inner += ew[l] * pw(x1, xs[l]) * pw(x2, xs[l]);
            }
            out.push_back(ex * inner / z);
        }
    }
    return out;
}

} // namespace loggas
