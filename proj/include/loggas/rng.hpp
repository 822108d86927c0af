#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace loggas {

/// splitmix64 step; used to decorrelate nearby seeds before feeding mt19937_64.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stream seed for replica `index` derived from the batch seed. The seed is
/// mixed before the index is added so that nearby batch seeds do not share
/// replica streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) + index);
}

/// Seeded generator with hand-rolled distributions. The standard library does
/// not pin distribution algorithms, so uniform/normal/gamma are implemented
/// here to make byte-identical reproducibility part of the contract.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t bits() { return eng_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return (eng_() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1]; safe as a log argument.
    double uniform_pos() { return ((eng_() >> 11) + 1.0) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Standard normal via Box-Muller (pairs cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    /// Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 via the boost
    /// Gamma(shape+1) * U^{1/shape}, computed in the log domain.
    double gamma(double shape) {
        if (!(shape > 0.0)) return 0.0;
        if (shape < 1.0) {
            const double g = gamma(shape + 1.0);
            const double u = uniform_pos();
            return g * std::exp(std::log(u) / shape); // may underflow to 0 for tiny shapes
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_pos();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    /// chi_a = sqrt(2 * Gamma(a/2, 1)); valid for non-integer a.
    double chi(double a) { return std::sqrt(2.0 * gamma(0.5 * a)); }

    double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

    /// Poisson count; Knuth product method for small means, normal tail otherwise.
    int poisson(double mean) {
        if (mean <= 0.0) return 0;
        if (mean < 30.0) {
            const double l = std::exp(-mean);
            int k = 0;
            double p = 1.0;
            do {
                ++k;
                p *= uniform();
            } while (p > l);
            return k - 1;
        }
        // PTRS would be overkill here; a clipped normal with continuity correction
        // is adequate for the mean ranges this project uses.
        const int k = static_cast<int>(std::lround(mean + std::sqrt(mean) * normal()));
        return k < 0 ? 0 : k;
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace loggas
