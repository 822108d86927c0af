#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "loggas/rng.hpp"
#include "loggas/stats.hpp"

using namespace loggas;

TEST_CASE("incomplete gamma and chi-square tails") {
    // P(1, x) = 1 - e^{-x}
    for (double x : {0.1, 1.0, 3.0, 10.0})
        REQUIRE(detail::gamma_p(1.0, x) == Catch::Approx(1.0 - std::exp(-x)).margin(1e-12));
    // chi2 sf with 2 dof: e^{-x/2}
    for (double x : {0.5, 2.0, 7.0})
        REQUIRE(chi2_sf(x, 2) == Catch::Approx(std::exp(-0.5 * x)).margin(1e-12));
    // known quantile: P(chi2_1 > 6.635) ~ 0.01
    REQUIRE(chi2_sf(6.634896601021213, 1) == Catch::Approx(0.01).margin(1e-6));
}

TEST_CASE("poisson pmf sums to one") {
    double s = 0.0;
    for (int k = 0; k < 80; ++k) s += poisson_pmf(k, 7.3);
    REQUIRE(s == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("ks statistic on a tiny hand-checked sample") {
    // data {0.25, 0.75} against U(0,1): D = max(0.5-0.25, 0.25-0, 1-0.75, 0.75-0.5) = 0.25
    const double d = ks_statistic({0.25, 0.75}, [](double x) { return x; });
    REQUIRE(d == Catch::Approx(0.25).margin(1e-14));
}

TEST_CASE("two-sample ks on disjoint samples is 1") {
    REQUIRE(ks_two_sample({1.0, 2.0, 3.0}, {10.0, 11.0}) == Catch::Approx(1.0));
    REQUIRE(ks_two_sample({1.0, 2.0}, {1.0, 2.0}) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("ks level on uniform data") {
    int rejects = 0;
    for (int rep = 0; rep < 200; ++rep) {
        Rng rng(derive_seed(991, rep));
        std::vector<double> u(800);
        for (auto& x : u) x = rng.uniform();
        const double d = ks_statistic(u, [](double x) { return x; });
        rejects += (d >= ks_critical(0.01, 800.0));
    }
    REQUIRE(rejects <= 6); // nominal 2 of 200
}

TEST_CASE("chi-square GOF accepts Poisson counts and rejects shifted ones") {
    Rng rng(13);
    std::vector<int> counts(3000);
    for (auto& c : counts) c = rng.poisson(3.0);
    const auto good = chi2_poisson_gof(counts, 3.0);
    REQUIRE(good.p_value > 0.01);
    for (int b = 0; b < good.bins; ++b) REQUIRE(good.dof == good.bins - 1);

    const auto bad = chi2_poisson_gof(counts, 4.0);
    REQUIRE(bad.p_value < 1e-6);
}

TEST_CASE("jackknife SE of the mean matches the classic formula") {
    Rng rng(17);
    const int n = 500;
    std::vector<double> xs(n), loo(n);
    double sum = 0.0;
    for (auto& x : xs) {
        x = rng.normal();
        sum += x;
    }
    for (int i = 0; i < n; ++i) loo[i] = (sum - xs[i]) / (n - 1.0);
    const double classic = std::sqrt(variance_of(xs) / n);
    REQUIRE(jackknife_se(loo) == Catch::Approx(classic).epsilon(1e-10));
}
