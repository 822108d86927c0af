#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "loggas/localstats.hpp"

using namespace loggas;

namespace {

Sample make_sample(std::vector<double> l) {
    std::sort(l.begin(), l.end());
    return Sample{std::move(l), Provenance::brute};
}

} // namespace

TEST_CASE("local window rescaling") {
    const auto s = make_sample({0.1, 0.2});
    const auto w1 = local_statistics(s, 0.0, 1.0);
    REQUIRE(w1.points.size() == 2);
    REQUIRE(w1.points[0] == Catch::Approx(0.2).margin(1e-15));
    REQUIRE(w1.points[1] == Catch::Approx(0.4).margin(1e-15));

    const auto w2 = local_statistics(s, 0.0, 0.3);
    REQUIRE(w2.points.size() == 1);
    REQUIRE(w2.points[0] == Catch::Approx(0.2).margin(1e-15));

    const auto far = local_statistics(s, 100.0, 5.0);
    REQUIRE(far.points.empty());
}

TEST_CASE("rescaling covariance under dyadic shifts is exact") {
    // all values are multiples of 2^-10, so shifted sums stay exact
    Rng rng(44);
    const double q = 1.0 / 1024.0;
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<double> l(40);
        for (auto& x : l) x = q * std::floor(2048.0 * (rng.uniform() - 0.5));
        const auto s = make_sample(l);
        const double E = q * std::floor(1024.0 * rng.uniform());
        const double shift = q * std::floor(4096.0 * (rng.uniform() - 0.5));
        std::vector<double> ls(l.size());
        for (std::size_t i = 0; i < l.size(); ++i) ls[i] = l[i] + shift;
        const auto a = local_statistics(s, E, 5.0);
        const auto b = local_statistics(make_sample(ls), E + shift, 5.0);
        REQUIRE(a.points == b.points);
    }
}

TEST_CASE("count additivity across a split at zero") {
    Rng rng(55);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<double> l(60);
        for (auto& x : l) x = 0.02 * rng.normal();
        const auto win = local_statistics(make_sample(l), 0.0, 5.0);
        int left = 0, right = 0;
        for (double p : win.points) (p < 0.0 ? left : right)++;
        REQUIRE(left + right == win.count());
    }
}

TEST_CASE("window-gap null CDF matches simulation") {
    // empirical check of the censored-gap law used by the spacing test
    Rng rng(66);
    const double W = 5.0, rho = 0.3;
    const auto wins = poisson_windows(rng, 40000, W, rho);
    auto gaps = pooled_gaps(wins);
    const double d = ks_statistic(gaps, [&](double g) { return window_gap_null_cdf(g, rho, W); });
    REQUIRE(d < ks_critical(0.01, static_cast<double>(gaps.size())));
    REQUIRE(window_gap_null_cdf(0.0, rho, W) == 0.0);
    REQUIRE(window_gap_null_cdf(2.0 * W, rho, W) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("counting report on true Poisson data") {
    Rng rng(77);
    const double W = 5.0, rho = 0.3;
    const auto wins = poisson_windows(rng, 2000, W, rho);
    const auto rep = counting_report(wins, 0.0, W, rho, 0.01);
    REQUIRE_FALSE(rep.no_points);
    REQUIRE(rep.fano > 0.85);
    REQUIRE(rep.fano < 1.15);
    REQUIRE(rep.chi2_pass);
    REQUIRE(rep.spacing_available);
    REQUIRE(rep.spacing_pass);
    REQUIRE(rep.count_mean == Catch::Approx(2.0 * W * rho).epsilon(0.05));
}

TEST_CASE("counting report guards") {
    std::vector<LocalWindow> empty_wins(200);
    for (auto& w : empty_wins) {
        w.half_width = 5.0;
    }
    const auto rep = counting_report(empty_wins, 0.0, 5.0, 0.3);
    REQUIRE(rep.no_points);
    REQUIRE(rep.count_mean == 0.0);

    std::vector<LocalWindow> few(50);
    REQUIRE_THROWS_AS(counting_report(few, 0.0, 5.0, 0.3), underpowered_error);
}

TEST_CASE("spacing test rejects the picket fence") {
    const auto picket = picket_fence_windows(2000, 5.0, 1.0 / 0.3);
    const auto t = spacing_test(picket, 0.3, 5.0);
    REQUIRE_FALSE(t.pass);
    REQUIRE(t.ks_distance > 5.0 * t.critical_value);
}

TEST_CASE("spacing test needs enough pooled gaps") {
    Rng rng(88);
    const auto wins = poisson_windows(rng, 120, 5.0, 0.3);
    REQUIRE_THROWS_AS(spacing_test(wins, 0.3, 5.0), underpowered_error);
}

TEST_CASE("correlation estimates factorize on Poisson data") {
    Rng rng(99);
    const double W = 5.0, rho = 0.3;
    const auto wins = poisson_windows(rng, 4000, W, rho);

    const auto r1 = correlation_estimate(wins, W, 1, 10);
    for (int b = 0; b < 10; ++b)
        REQUIRE(std::fabs(r1.values[b] - rho) <= 3.0 * r1.std_errors[b]);

    const auto r2 = correlation_estimate(wins, W, 2, 5);
    REQUIRE_FALSE(r2.off_diagonal.empty());
    for (int cell : r2.off_diagonal)
        REQUIRE(std::fabs(r2.values[cell] - rho * rho) <= 3.0 * r2.std_errors[cell]);

    const auto ratio = correlation_ratio(wins, W, 5);
    REQUIRE(ratio.cells.size() == 12);
    for (std::size_t i = 0; i < ratio.cells.size(); ++i)
        REQUIRE(std::fabs(ratio.ratio[i] - 1.0) <= 3.0 * ratio.std_error[i]);
}

TEST_CASE("intensity consistency: integrated R1 equals the mean count") {
    Rng rng(111);
    const double W = 5.0;
    const auto wins = poisson_windows(rng, 1500, W, 0.3);
    const auto rep = counting_report(wins, 0.0, W, 0.3);
    const auto r1 = correlation_estimate(wins, W, 1, 10);
    double integral = 0.0;
    const double width = 2.0 * W / 10;
    for (double v : r1.values) integral += v * width;
    REQUIRE(integral == Catch::Approx(rep.count_mean).margin(1e-12));
}

TEST_CASE("two-energy independence") {
    Rng rng(222);
    const double W = 5.0;
    const auto a = poisson_windows(rng, 2000, W, 0.3);
    const auto b = poisson_windows(rng, 2000, W, 0.3);

    SECTION("independent streams pass") {
        const auto t = two_energy_independence(a, b, 1000, 0.0, 1.0, W);
        REQUIRE(t.pass);
    }
    SECTION("duplicated streams fail with covariance near the variance") {
        const auto t = two_energy_independence(a, a, 1000, 0.0, 1.0, W);
        REQUIRE_FALSE(t.pass);
        std::vector<double> counts;
        for (const auto& w : a) counts.push_back(w.count());
        REQUIRE(t.covariance == Catch::Approx(variance_of(counts)).epsilon(1e-12));
    }
    SECTION("overlapping rescaled windows are rejected") {
        REQUIRE_THROWS_AS(two_energy_independence(a, b, 10, 0.0, 1.0, W), error);
    }
}

TEST_CASE("statistical tests hold their level over meta-repetitions") {
    // abbreviated version of the calibration criterion: 30 meta-repetitions
    int chi2_ok = 0, spacing_ok = 0;
    for (int m = 0; m < 30; ++m) {
        Rng rng(derive_seed(3333, m));
        const auto wins = poisson_windows(rng, 1000, 5.0, 0.3);
        const auto rep = counting_report(wins, 0.0, 5.0, 0.3, 0.01);
        chi2_ok += rep.chi2_pass;
        spacing_ok += (rep.spacing_available && rep.spacing_pass);
    }
    REQUIRE(chi2_ok >= 28);
    REQUIRE(spacing_ok >= 28);
}
