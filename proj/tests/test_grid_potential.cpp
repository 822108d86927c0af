#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "loggas/potential.hpp"
#include "loggas/rng.hpp"

using namespace loggas;

TEST_CASE("grid basics") {
    Grid g(-2.0, 2.0, 5);
    REQUIRE(g.spacing() == Catch::Approx(1.0));
    REQUIRE(g.node(0) == -2.0);
    REQUIRE(g.node(4) == 2.0);
    REQUIRE_THROWS_AS(Grid(1.0, -1.0, 5), error);
    REQUIRE_THROWS_AS(Grid(0.0, 1.0, 2), error);
}

TEST_CASE("density normalization") {
    Grid g(-1.0, 1.0, 101);
    std::vector<double> v(101, 3.7);
    const auto d = DensityOnGrid::from_unnormalized(g, v);
    REQUIRE(d.integral() == Catch::Approx(1.0).margin(1e-12));
    REQUIRE_THROWS_AS(DensityOnGrid::from_unnormalized(g, std::vector<double>(101, -1.0)), error);
    REQUIRE_THROWS_AS(DensityOnGrid::from_unnormalized(g, std::vector<double>(101, 0.0)), error);
}

TEST_CASE("potential evaluation") {
    const auto gauss = PotentialSpec::gaussian();
    REQUIRE(eval_potential(gauss, 0.0) == 0.0);
    REQUIRE(eval_potential(gauss, 2.0) == 2.0);

    const auto quartic = PotentialSpec::even_polynomial({0.0, 0.0, 0.0, 0.0, 1.0});
    REQUIRE(eval_potential(quartic, 1.5) == Catch::Approx(5.0625).margin(1e-14));
    REQUIRE(eval_potential_derivative(quartic, 1.5) == Catch::Approx(4.0 * 1.5 * 1.5 * 1.5));

    REQUIRE_THROWS_AS(PotentialSpec::even_polynomial({0.0, 1.0}), error);        // odd degree
    REQUIRE_THROWS_AS(PotentialSpec::even_polynomial({0.0, 0.0, -1.0}), error);  // leading < 0
}

TEST_CASE("tabulated potential interpolates and extrapolates quadratically") {
    // table of x^2/2 on a coarse grid
    std::vector<double> xs, vs;
    for (double x = -3.0; x <= 3.0001; x += 0.5) {
        xs.push_back(x);
        vs.push_back(0.5 * x * x);
    }
    const auto tab = PotentialSpec::tabulated(xs, vs);
    REQUIRE(eval_potential(tab, 0.25) == Catch::Approx(0.0625).margin(0.07)); // linear interp error
    // quadratic extrapolation through the last three points reproduces x^2/2 exactly
    REQUIRE(eval_potential(tab, 5.0) == Catch::Approx(12.5).margin(1e-9));
    REQUIRE(eval_potential(tab, -6.0) == Catch::Approx(18.0).margin(1e-9));
    REQUIRE_THROWS_AS(eval_potential_derivative(tab, 0.0), error);
    REQUIRE_THROWS_AS(PotentialSpec::tabulated({0.0, 0.0, 1.0}, {0.0, 0.0, 0.0}), error);
}

TEST_CASE("reference density matches the standard normal for the gaussian potential") {
    const auto V = PotentialSpec::gaussian();
    Grid g(-8.0, 8.0, 1601);
    double z = 0.0;
    const auto alpha = reference_density(V, g, &z);
    REQUIRE(z == Catch::Approx(std::sqrt(2.0 * M_PI)).margin(1e-10));
    const double inv = 1.0 / std::sqrt(2.0 * M_PI);
    for (int i = 0; i < g.n; i += 7) {
        const double x = g.node(i);
        REQUIRE(alpha.values[i] == Catch::Approx(inv * std::exp(-0.5 * x * x)).margin(1e-10));
    }
}

TEST_CASE("quartic normalizer equals 2 Gamma(5/4)") {
    const auto V = PotentialSpec::even_polynomial({0.0, 0.0, 0.0, 0.0, 1.0});
    Grid g(-6.0, 6.0, 1201);
    double z = 0.0;
    reference_density(V, g, &z);
    REQUIRE(z == Catch::Approx(1.8128049541109543).margin(1e-8));
}

TEST_CASE("reference density normalizes and is symmetric for even potentials") {
    Rng rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        const double a2 = 0.2 + rng.uniform();
        const double a4 = 0.1 + 0.5 * rng.uniform();
        const auto V = PotentialSpec::even_polynomial({0.0, 0.0, a2, 0.0, a4});
        // integer half-width and 2^k cells keep the node reflection exact
        const double L = 4.0 + std::floor(3.0 * rng.uniform());
        Grid g(-L, L, 513);
        const auto alpha = reference_density(V, g);
        REQUIRE(alpha.integral() == Catch::Approx(1.0).margin(1e-9));
        for (int i = 0; i < g.n; i += 13)
            REQUIRE(alpha.values[i] == alpha.values[g.n - 1 - i]); // exact mirror
    }
}

TEST_CASE("envelope bound evaluation and domination") {
    const auto V = PotentialSpec::gaussian();
    REQUIRE(envelope_bound(V, 2.0, 1.0, 0.0) == Catch::Approx(1.0));
    REQUIRE(envelope_bound(V, 2.0, 1.0, 1.0) == Catch::Approx(2.0 * std::exp(-0.5)).margin(1e-10));
    REQUIRE(envelope_bound(V, 4.0, 3.0, 2.0) == Catch::Approx(3.0 * 25.0 * std::exp(-2.0)).margin(1e-10));

    Grid g(-8.0, 8.0, 801);
    double z = 0.0;
    const auto alpha = reference_density(V, g, &z);
    const double lambda = 1.0 / z;
    for (int i = 0; i < g.n; ++i)
        REQUIRE(envelope_bound(V, 2.0, lambda, g.node(i)) >= alpha.values[i] - 1e-15);
}

TEST_CASE("truncation choice: containment and monotonicity in eps") {
    const auto V = PotentialSpec::gaussian();
    const auto tight = choose_truncation(V, 2.0, 1e-10);
    REQUIRE(tight.first <= -7.0);
    REQUIRE(tight.second >= 7.0);

    const auto loose = choose_truncation(V, 2.0, 1e-2);
    REQUIRE(loose.first >= tight.first);
    REQUIRE(loose.second <= tight.second);

    const auto quartic = PotentialSpec::even_polynomial({0.0, 0.0, 0.0, 0.0, 1.0});
    const auto quartic_box = choose_truncation(quartic, 2.0, 1e-10);
    REQUIRE(quartic_box.second <= tight.second);
    REQUIRE(quartic_box.first >= tight.first);
}

TEST_CASE("truncation rejects potentials that grow too slowly") {
    // a tabulated curve that flattens out: quadratic extrapolation through the
    // last three equal values is constant, so V/log(1+x^2) -> 0
    std::vector<double> xs = {-2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0};
    std::vector<double> vs = {3.0, 3.0, 0.0, 3.0, 3.0, 3.0, 3.0};
    const auto flat = PotentialSpec::tabulated(xs, vs);
    REQUIRE_THROWS_AS(choose_truncation(flat, 2.0, 1e-6), error);
}
