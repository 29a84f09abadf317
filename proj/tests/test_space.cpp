#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "thermotail/rng.hpp"
#include "thermotail/space.hpp"

using namespace thermotail;
using Catch::Approx;

namespace {

SpacePtr coin_space(std::size_t n, double p = 0.5) {
    std::vector<Marginal> ms;
    for (std::size_t k = 0; k < n; ++k) ms.push_back(Marginal({"0", "1"}, {1.0 - p, p}));
    return make_space(std::move(ms));
}

TabulatedFunction coord_sum(const SpacePtr& s) {
    return TabulatedFunction::tabulate(s, [](const StateIndex& x) {
        double sum = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) sum += x[k];
        return sum;
    });
}

SpacePtr random_test_space(rng::SplitMix64& g, std::size_t max_n = 6, std::size_t max_atoms = 5) {
    const std::size_t n = 1 + g.below(max_n);
    std::vector<Marginal> ms;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t m = 2 + g.below(max_atoms - 1);
        std::vector<std::string> atoms;
        std::vector<double> probs(m);
        double total = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            atoms.push_back("x" + std::to_string(a));
            probs[a] = 0.05 + g.unit();
            total += probs[a];
        }
        for (double& p : probs) p /= total;
        ms.emplace_back(std::move(atoms), std::move(probs));
    }
    return make_space(std::move(ms));
}

} // namespace

TEST_CASE("marginal validation", "[space]") {
    CHECK_THROWS_AS(Marginal({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(Marginal({"a"}, {0.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(Marginal({"a", "b"}, {0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(Marginal({"a", "b"}, {-0.1, 1.1}), std::invalid_argument);
    CHECK_THROWS_AS(Marginal({"a", "b"}, {0.6, 0.6}), std::invalid_argument);
    CHECK_NOTHROW(Marginal({"a", "b"}, {0.3, 0.7}));
}

TEST_CASE("state enumeration order and probabilities", "[space]") {
    SpacePtr two_coins = coin_space(2);
    std::vector<StateIndex> seen;
    std::vector<double> probs;
    for (const auto& [x, p] : enumerate_states(two_coins)) {
        seen.push_back(x);
        probs.push_back(p);
    }
    REQUIRE(seen.size() == 4);
    // Row-major, last coordinate fastest.
    CHECK(seen[0].coords == std::vector<std::uint32_t>{0, 0});
    CHECK(seen[1].coords == std::vector<std::uint32_t>{0, 1});
    CHECK(seen[2].coords == std::vector<std::uint32_t>{1, 0});
    CHECK(seen[3].coords == std::vector<std::uint32_t>{1, 1});
    for (double p : probs) CHECK(p == Approx(0.25));

    SpacePtr single = make_space({Marginal({"a", "b"}, {0.3, 0.7})});
    std::vector<double> sp;
    for (const auto& [x, p] : enumerate_states(single)) sp.push_back(p);
    REQUIRE(sp.size() == 2);
    CHECK(sp[0] == Approx(0.3));
    CHECK(sp[1] == Approx(0.7));

    SpacePtr s234 = make_space({Marginal({"a", "b"}, {0.5, 0.5}),
                                Marginal({"a", "b", "c"}, {0.2, 0.3, 0.5}),
                                Marginal({"a", "b", "c", "d"}, {0.25, 0.25, 0.25, 0.25})});
    CHECK(s234->state_count() == 24);
    std::size_t count = 0;
    for ([[maybe_unused]] const auto& pair : enumerate_states(s234)) ++count;
    CHECK(count == 24);
}

TEST_CASE("for_each_state matches the range and linear indexing", "[space]") {
    rng::SplitMix64 g(7);
    SpacePtr s = random_test_space(g);
    std::uint64_t expected = 0;
    for_each_state(*s, [&](std::uint64_t i, const StateIndex& x, double p) {
        CHECK(i == expected);
        CHECK(s->linear_index(x) == i);
        CHECK(s->state_at(i) == x);
        CHECK(p == Approx(s->probability(x)).epsilon(1e-14));
        ++expected;
    });
    CHECK(expected == s->state_count());

    // The iterator range visits the same states in the same order.
    std::vector<StateIndex> from_range;
    std::vector<double> range_probs;
    for (const auto& [x, p] : enumerate_states(s)) {
        from_range.push_back(x);
        range_probs.push_back(p);
    }
    REQUIRE(from_range.size() == s->state_count());
    for_each_state(*s, [&](std::uint64_t i, const StateIndex& x, double p) {
        CHECK(from_range[i] == x);
        CHECK(range_probs[i] == Approx(p).epsilon(1e-14));
    });
}

TEST_CASE("enumeration probabilities sum to one", "[space]") {
    rng::SplitMix64 g(42);
    for (int trial = 0; trial < 30; ++trial) {
        SpacePtr s = random_test_space(g);
        double total = 0.0;
        for_each_state(*s, [&](std::uint64_t, const StateIndex&, double p) { total += p; });
        CHECK(std::abs(total - 1.0) < 1e-10);
    }
}

TEST_CASE("enumeration limit and overflow", "[space]") {
    std::vector<Marginal> big;
    for (int k = 0; k < 25; ++k) big.push_back(Marginal({"0", "1"}, {0.5, 0.5}));
    SpacePtr limited = make_space(std::move(big)); // 2^25 states > default limit
    CHECK_FALSE(limited->dense_enumerable());
    CHECK_THROWS_AS(for_each_state(*limited, [](std::uint64_t, const StateIndex&, double) {}),
                    EnumerationLimitError);
    CHECK_THROWS_AS(TabulatedFunction(limited, std::vector<double>{}), EnumerationLimitError);
    // Callback mode stays available.
    TabulatedFunction f(limited, [](const StateIndex& x) { return double(x[0]); });
    StateIndex x(25);
    CHECK(f(x) == 0.0);

    std::vector<Marginal> huge;
    for (int k = 0; k < 80; ++k)
        huge.push_back(Marginal({"a", "b", "c", "d"}, {0.25, 0.25, 0.25, 0.25}));
    CHECK_THROWS_AS(ProductSpace(std::move(huge)), std::overflow_error);

    SpacePtr custom = make_space({Marginal({"a", "b"}, {0.5, 0.5})}, 1);
    CHECK_FALSE(custom->dense_enumerable());
}

TEST_CASE("fiber iteration", "[space]") {
    SpacePtr two_coins = coin_space(2);
    StateIndex x(std::vector<std::uint32_t>{1, 0});
    std::vector<double> weights;
    for (const auto& [y, w] : fiber(two_coins, x, 1)) {
        weights.push_back(w);
        CHECK(y[0] == 1); // fixed coordinate untouched
    }
    REQUIRE(weights.size() == 2);
    CHECK(weights[0] == Approx(0.5));
    CHECK(weights[1] == Approx(0.5));

    SpacePtr degenerate = make_space({Marginal({"only"}, {1.0}), Marginal({"a", "b"}, {0.5, 0.5})});
    StateIndex d(std::vector<std::uint32_t>{0, 1});
    int count = 0;
    for (const auto& [y, w] : fiber(degenerate, d, 0)) {
        CHECK(w == Approx(1.0));
        CHECK(y == d);
        ++count;
    }
    CHECK(count == 1);

    SpacePtr biased = make_space({Marginal({"a", "b"}, {0.3, 0.7}), Marginal({"a", "b"}, {0.5, 0.5})});
    StateIndex b(std::vector<std::uint32_t>{0, 1});
    std::vector<double> bw;
    for (const auto& [y, w] : fiber(biased, b, 0)) bw.push_back(w);
    CHECK(bw == std::vector<double>{0.3, 0.7});

    CHECK_THROWS_AS(fiber(two_coins, x, 2), std::out_of_range);
}

TEST_CASE("fiber weights do not depend on the fixed coordinates", "[space]") {
    rng::SplitMix64 g(99);
    for (int trial = 0; trial < 10; ++trial) {
        SpacePtr s = random_test_space(g, 4, 4);
        const std::size_t k = g.below(s->dimension());
        std::vector<double> reference;
        for_each_fiber_state(*s, StateIndex(s->dimension()), k,
                             [&](const StateIndex&, double w) { reference.push_back(w); });
        // A different base state on the same coordinate.
        StateIndex other(s->dimension());
        for (std::size_t j = 0; j < s->dimension(); ++j)
            other[j] = static_cast<std::uint32_t>(s->marginal(j).size() - 1);
        std::size_t idx = 0;
        for_each_fiber_state(*s, other, k, [&](const StateIndex&, double w) {
            CHECK(w == reference[idx]);
            ++idx;
        });
    }
}

TEST_CASE("expectation basics", "[space]") {
    SpacePtr two_coins = coin_space(2);
    TabulatedFunction sum = coord_sum(two_coins);
    CHECK(expectation(sum) == Approx(1.0).margin(1e-14));

    TabulatedFunction constant(two_coins, std::vector<double>(4, 3.25));
    CHECK(expectation(constant) == Approx(3.25));

    // Product of the coordinates; oracle: direct 4-state enumeration.
    TabulatedFunction prod = TabulatedFunction::tabulate(
        two_coins, [](const StateIndex& x) { return double(x[0]) * double(x[1]); });
    double oracle = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) oracle += 0.25 * (a * b);
    CHECK(oracle == 0.25);
    CHECK(expectation(prod) == Approx(0.25));
}

TEST_CASE("expectation is linear", "[space]") {
    rng::SplitMix64 g(5);
    for (int trial = 0; trial < 10; ++trial) {
        SpacePtr s = random_test_space(g, 4, 4);
        std::vector<double> gv(s->state_count()), hv(s->state_count());
        for (auto& v : gv) v = -1.0 + 2.0 * g.unit();
        for (auto& v : hv) v = -1.0 + 2.0 * g.unit();
        const double a = -2.0 + 4.0 * g.unit();
        const double b = -2.0 + 4.0 * g.unit();
        std::vector<double> combo(s->state_count());
        for (std::size_t i = 0; i < combo.size(); ++i) combo[i] = a * gv[i] + b * hv[i];
        TabulatedFunction gf(s, gv), hf(s, hv), cf(s, combo);
        CHECK(std::abs(expectation(cf) - (a * expectation(gf) + b * expectation(hf))) < 1e-12);
    }
}

TEST_CASE("function finiteness is enforced", "[space]") {
    SpacePtr two_coins = coin_space(2);
    std::vector<double> bad = {0.0, 1.0, std::nan(""), 2.0};
    CHECK_THROWS_AS(TabulatedFunction(two_coins, std::move(bad)), std::invalid_argument);

    TabulatedFunction f(two_coins, [](const StateIndex&) { return std::nan(""); });
    CHECK_THROWS_AS(f(StateIndex(2)), std::domain_error);
}

TEST_CASE("memoized callback evaluates each state once", "[space]") {
    SpacePtr two_coins = coin_space(2);
    auto calls = std::make_shared<int>(0);
    TabulatedFunction raw(two_coins, [calls](const StateIndex& x) {
        ++*calls;
        return double(x[0]) + double(x[1]);
    });
    TabulatedFunction memo = memoized(raw);
    StateIndex x(std::vector<std::uint32_t>{1, 1});
    CHECK(memo(x) == 2.0);
    CHECK(memo(x) == 2.0);
    CHECK(*calls == 1);
}
