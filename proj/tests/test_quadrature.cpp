#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "thermotail/analytic.hpp"
#include "thermotail/quadrature.hpp"

using namespace thermotail;
using namespace testutil;
using Catch::Approx;

TEST_CASE("simpson on polynomials", "[quadrature]") {
    CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0) == Approx(1.0 / 3.0).margin(1e-10));

    // Simpson is exact on cubics; random cubic over a random interval.
    rng::SplitMix64 g(3);
    for (int trial = 0; trial < 20; ++trial) {
        const double a = -2.0 + 4.0 * g.unit();
        const double b = a + 3.0 * g.unit();
        const double c0 = -1.0 + 2.0 * g.unit(), c1 = -1.0 + 2.0 * g.unit();
        const double c2 = -1.0 + 2.0 * g.unit(), c3 = -1.0 + 2.0 * g.unit();
        auto poly = [=](double x) { return c0 + x * (c1 + x * (c2 + x * c3)); };
        auto anti = [=](double x) {
            return x * (c0 + x * (c1 / 2 + x * (c2 / 3 + x * c3 / 4)));
        };
        CHECK(integrate(poly, a, b) == Approx(anti(b) - anti(a)).margin(1e-12));
    }
}

TEST_CASE("simpson interval edge cases", "[quadrature]") {
    CHECK(integrate([](double x) { return x; }, 2.0, 2.0) == 0.0);
    CHECK_THROWS_AS(integrate([](double x) { return x; }, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(integrate([](double x) { return x; }, 0.0, 1.0, -1.0, 1e-8),
                    std::invalid_argument);
}

TEST_CASE("bennett weight integral", "[quadrature]") {
    // integral_0^b (g e^g - e^g + 1)/g^2 dg = psi(b)/b, removable at 0.
    Integrand g{[](double x) { return (x * std::exp(x) - std::exp(x) + 1.0) / (x * x); }, 0.5};
    for (double b : {0.5, 1.0, 2.0}) {
        CHECK(integrate(g, 0.0, b) == Approx(psi(b) / b).epsilon(1e-9));
    }
    CHECK(integrate(g, 0.0, 1.0) == Approx(std::exp(1.0) - 2.0).epsilon(1e-9));
}

TEST_CASE("depth cap raises with best estimate", "[quadrature]") {
    // A jump discontinuity cannot meet a 1e-15 absolute target.
    auto step = [](double x) { return x < 1.0 / 3.0 ? 0.0 : 1.0; };
    try {
        integrate(step, 0.0, 1.0, 1e-15, 1e-15);
        FAIL("expected QuadratureError");
    } catch (const QuadratureError& e) {
        CHECK(e.best_estimate == Approx(2.0 / 3.0).margin(1e-6));
    }
}

TEST_CASE("fluctuation integral equals the canonical entropy", "[quadrature]") {
    SpacePtr two_coins = coin_space(2);
    TabulatedFunction f = coord_sum(two_coins);

    TabulatedFunction constant(two_coins, std::vector<double>(4, 3.0));
    CHECK(fluctuation_integral(constant, 2.0) == Approx(0.0).margin(1e-12));
    CHECK(fluctuation_integral(f, 0.0) == 0.0);
    CHECK_THROWS_AS(fluctuation_integral(f, -0.5), std::invalid_argument);

    const double beta = std::log(2.0);
    const double entropy = canonical_entropy(ThermalState(f, beta));
    CHECK(fluctuation_integral(f, beta) == Approx(entropy).epsilon(1e-9));
    CHECK(fluctuation_integral(f, beta) == Approx(0.11326602453).epsilon(1e-7));

    rng::SplitMix64 g(21);
    for (int trial = 0; trial < 10; ++trial) {
        SpacePtr s = small_random_space(g);
        TabulatedFunction h = random_function(s, g);
        for (double b : {0.1, 1.0, 5.0}) {
            const double lhs = fluctuation_integral(h, b);
            const double rhs = canonical_entropy(ThermalState(h, b));
            CHECK(std::abs(lhs - rhs) <= 1e-7 * std::max(1.0, rhs));
        }
    }
}

TEST_CASE("conditional fluctuation integral", "[quadrature]") {
    rng::SplitMix64 g(22);
    for (int trial = 0; trial < 5; ++trial) {
        SpacePtr s = small_random_space(g);
        TabulatedFunction f = random_function(s, g);
        const double beta = 0.3 + 2.0 * g.unit();
        ThermalState ts(f, beta);
        for (std::size_t k = 0; k < s->dimension(); ++k) {
            ConditionalThermal ct = conditional_thermal(ts, f, k);
            StateIndex probe(s->dimension());
            const double direct = ct.entropy(probe);
            const double integral = fluctuation_integral(f, beta, k, probe);
            CHECK(std::abs(direct - integral) <= 1e-7 * std::max(1.0, std::abs(direct)));
        }
    }
}

TEST_CASE("herbst identity on random instances", "[quadrature]") {
    rng::SplitMix64 g(23);
    for (int trial = 0; trial < 10; ++trial) {
        SpacePtr s = small_random_space(g);
        TabulatedFunction f = random_function(s, g);
        const auto profile = detail::ThermalProfile::build(f);
        for (double beta : {0.1, 1.0, 5.0}) {
            const double lhs = profile->centered_log_mgf(beta);
            Integrand integrand{
                [&profile](double gamma) { return profile->entropy(gamma) / (gamma * gamma); },
                0.5 * profile->variance(0.0)};
            const double rhs = beta * integrate(integrand, 0.0, beta);
            CHECK(std::abs(lhs - rhs) <= 1e-7 * std::max(1.0, std::abs(lhs)));
        }
    }
}
