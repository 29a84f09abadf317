#pragma once

#include <string>
#include <vector>

#include "thermotail/rng.hpp"
#include "thermotail/space.hpp"

namespace testutil {

using namespace thermotail;

inline SpacePtr coin_space(std::size_t n, double p = 0.5) {
    std::vector<Marginal> ms;
    for (std::size_t k = 0; k < n; ++k) ms.push_back(Marginal({"0", "1"}, {1.0 - p, p}));
    return make_space(std::move(ms));
}

inline TabulatedFunction coord_sum(const SpacePtr& s) {
    return TabulatedFunction::tabulate(s, [](const StateIndex& x) {
        double sum = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) sum += x[k];
        return sum;
    });
}

inline SpacePtr small_random_space(rng::SplitMix64& g, std::size_t max_n = 4, std::size_t max_atoms = 4) {
    const std::size_t n = 1 + g.below(max_n);
    std::vector<Marginal> ms;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t m = 2 + g.below(max_atoms - 1);
        std::vector<std::string> atoms;
        std::vector<double> probs(m);
        double total = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            atoms.push_back("x" + std::to_string(a));
            probs[a] = 0.1 + g.unit();
            total += probs[a];
        }
        for (double& p : probs) p /= total;
        ms.emplace_back(std::move(atoms), std::move(probs));
    }
    return make_space(std::move(ms));
}

inline TabulatedFunction random_function(const SpacePtr& s, rng::SplitMix64& g, double lo = -2.0,
                                         double hi = 2.0) {
    std::vector<double> values(s->state_count());
    for (double& v : values) v = lo + (hi - lo) * g.unit();
    return TabulatedFunction(s, std::move(values));
}

} // namespace testutil
