#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "thermotail/bounds.hpp"
#include "thermotail/rng.hpp"
#include "thermotail/space.hpp"
#include "thermotail/thermo.hpp"

namespace thermotail {

enum class TailMethod { exact, monte_carlo };

/// One tail-probability estimate. Exact estimates carry a zero-width
/// confidence interval; Monte Carlo ones a 95% normal-approximation
/// half-width.
struct TailEstimate {
    double t = 0.0;
    double probability = 0.0;
    TailMethod method = TailMethod::exact;
    std::uint64_t samples = 0;
    double ci_halfwidth = 0.0;
};

/// Exact Pr{f - Ef > t} (upper) or Pr{Ef - f > t} (lower) by enumeration.
/// The event is strict, matching the tail bounds it calibrates.
inline TailEstimate exact_tail(const TabulatedFunction& f, double t, TailSide side) {
    f.space().require_enumerable();
    const double mean = expectation(f);
    double p = 0.0;
    if (f.dense()) {
        const std::vector<double>& v = f.values();
        for_each_state(f.space(), [&](std::uint64_t i, const StateIndex&, double prob) {
            const double dev = side == TailSide::upper ? v[i] - mean : mean - v[i];
            if (dev > t) p += prob;
        });
    } else {
        for_each_state(f.space(), [&](std::uint64_t, const StateIndex& x, double prob) {
            const double dev = side == TailSide::upper ? f(x) - mean : mean - f(x);
            if (dev > t) p += prob;
        });
    }
    return TailEstimate{t, p, TailMethod::exact, f.space().state_count(), 0.0};
}

namespace detail {

/// Draws the state with sample index `i` from the product measure, using
/// one counter-hash per coordinate. Order-independent by construction.
inline StateIndex sample_state(const ProductSpace& s, std::uint64_t seed, std::uint64_t i) {
    StateIndex x(s.dimension());
    for (std::size_t k = 0; k < s.dimension(); ++k) {
        const double u = rng::unit_from(seed, i, k);
        const std::vector<double>& probs = s.marginal(k).probs;
        double acc = 0.0;
        std::uint32_t pick = static_cast<std::uint32_t>(probs.size() - 1);
        for (std::size_t a = 0; a < probs.size(); ++a) {
            acc += probs[a];
            if (u < acc) {
                pick = static_cast<std::uint32_t>(a);
                break;
            }
        }
        x[k] = pick;
    }
    return x;
}

// Salt separating the mean-estimation stream from the tail stream when
// the centre cannot be computed exactly.
inline constexpr std::uint64_t kMeanStreamSalt = 0x6d65616e73616c74ull;

} // namespace detail

/// Monte Carlo tail estimate with i.i.d. states drawn coordinate-wise via
/// the counter-based generator keyed by (seed, sample, coordinate).
/// Deterministic per seed and independent of evaluation order. The centre
/// E[f] is computed exactly when the space is enumerable, estimated from
/// an independent sample stream otherwise, or taken from `center`.
inline TailEstimate mc_tail(const TabulatedFunction& f, double t, TailSide side,
                            std::uint64_t samples, std::uint64_t seed,
                            std::optional<double> center = std::nullopt) {
    if (samples < 1) throw std::invalid_argument("mc tail: need at least one sample");
    const ProductSpace& s = f.space();
    double mean;
    if (center) {
        mean = *center;
    } else if (s.dense_enumerable()) {
        mean = expectation(f);
    } else {
        double acc = 0.0;
        for (std::uint64_t i = 0; i < samples; ++i)
            acc += f(detail::sample_state(s, seed ^ detail::kMeanStreamSalt, i));
        mean = acc / static_cast<double>(samples);
    }
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < samples; ++i) {
        const double v = f(detail::sample_state(s, seed, i));
        const double dev = side == TailSide::upper ? v - mean : mean - v;
        if (dev > t) ++hits;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(samples);
    const double ci = 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
    return TailEstimate{t, p, TailMethod::monte_carlo, samples, ci};
}

/// A named example instance with the bounds it is meant to exercise.
/// Every claimed bound's hypotheses are verified at construction.
struct ZooEntry {
    std::string name;
    std::string description;
    SpacePtr space;
    TabulatedFunction f;
    std::vector<std::string> intended_bounds;
    Hypotheses hypotheses;
    double mean_f = 0.0;

    ZooEntry(std::string name_in, std::string desc, SpacePtr space_in, TabulatedFunction f_in,
             std::vector<std::string> intended, std::optional<DecoupleCertificate> decouple = std::nullopt)
        : name(std::move(name_in)),
          description(std::move(desc)),
          space(std::move(space_in)),
          f(std::move(f_in)),
          intended_bounds(std::move(intended)) {
        hypotheses = compute_hypotheses(f);
        if (decouple) {
            if (!verify_decouple(f, decouple->g, decouple->a))
                throw std::logic_error("zoo entry " + name + ": decoupling certificate does not hold");
            hypotheses.decouple = std::move(decouple);
        }
        mean_f = expectation(f);
        for (const std::string& bound : intended_bounds) {
            if (!gate_passes(bound))
                throw std::logic_error("zoo entry " + name + ": hypotheses for '" + bound +
                                       "' do not hold");
        }
    }

    bool gate_passes(const std::string& bound) const {
        const Hypotheses& h = hypotheses;
        if (bound == "bounded_difference" || bound == "lower_tail_w" || bound == "df_upper") return true;
        if (bound == "bennett") return h.range_le_one_upper;
        if (bound == "coherent") return h.coherence_holds;
        if (bound == "df_lower") return h.range_le_one_inf;
        if (bound == "self_bounded") return h.self_bound.has_value();
        if (bound == "self_bounded_lower")
            return h.self_bound && h.self_bound->a >= 1.0 - kGateTol && h.range_le_one_inf;
        if (bound == "decoupled") return h.decouple.has_value();
        throw std::invalid_argument("unknown bound name: " + bound);
    }
};

namespace detail {

inline Marginal bernoulli(double p) {
    return Marginal({"0", "1"}, {1.0 - p, p});
}

inline SpacePtr bernoulli_space(std::size_t n, double p) {
    std::vector<Marginal> ms;
    for (std::size_t k = 0; k < n; ++k) ms.push_back(bernoulli(p));
    return make_space(std::move(ms));
}

inline TabulatedFunction coordinate_sum(const SpacePtr& space) {
    return TabulatedFunction::tabulate(space, [](const StateIndex& x) {
        double sum = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) sum += x[k];
        return sum;
    });
}

/// Grid cube {0, 1/4, 2/4, 3/4, 1}^n with uniform marginals.
inline SpacePtr grid_cube_space(std::size_t n) {
    std::vector<std::string> atoms = {"0", "1/4", "1/2", "3/4", "1"};
    std::vector<double> probs(5, 0.2);
    std::vector<Marginal> ms;
    for (std::size_t k = 0; k < n; ++k) ms.push_back(Marginal(atoms, probs));
    return make_space(std::move(ms));
}

inline double grid_value(std::uint32_t atom) { return static_cast<double>(atom) / 4.0; }

/// Shortest closed tour through the six city locations of the state.
/// City 0 is pinned and the remaining five are permuted exhaustively.
inline double tsp_tour_length(const StateIndex& x, const std::array<std::array<double, 5>, 5>& dist) {
    std::array<int, 5> perm = {1, 2, 3, 4, 5};
    double best = std::numeric_limits<double>::infinity();
    do {
        double len = dist[x[0]][x[perm[0]]];
        for (int i = 0; i + 1 < 5; ++i) len += dist[x[perm[i]]][x[perm[i + 1]]];
        len += dist[x[perm[4]]][x[0]];
        best = std::min(best, len);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

inline std::vector<ZooEntry> build_zoo() {
    std::vector<ZooEntry> entries;
    const std::vector<std::string> sum_bounds = {"bounded_difference", "bennett",    "coherent",
                                                 "lower_tail_w",       "df_upper",   "df_lower",
                                                 "self_bounded",       "decoupled"};

    {
        SpacePtr s = bernoulli_space(4, 0.5);
        TabulatedFunction f = coordinate_sum(s);
        entries.emplace_back("coin_sum_4", "sum of 4 fair coins", s, f, sum_bounds,
                             DecoupleCertificate{f, 1.0});
    }
    {
        SpacePtr s = bernoulli_space(10, 0.5);
        TabulatedFunction f = coordinate_sum(s);
        entries.emplace_back("coin_sum_10", "sum of 10 fair coins", s, f, sum_bounds,
                             DecoupleCertificate{f, 1.0});
    }
    {
        SpacePtr s = bernoulli_space(10, 0.9);
        TabulatedFunction f = coordinate_sum(s);
        entries.emplace_back("bernoulli09_sum_10", "sum of 10 Bernoulli(0.9) coordinates", s, f,
                             sum_bounds, DecoupleCertificate{f, 1.0});
    }
    {
        SpacePtr s = bernoulli_space(4, 0.5);
        TabulatedFunction f = TabulatedFunction::tabulate(s, [](const StateIndex& x) {
            double best = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) best = std::max(best, double(x[k]));
            return best;
        });
        entries.emplace_back("max_coins_4", "maximum of 4 fair coins", s, f,
                             std::vector<std::string>{"bounded_difference", "bennett", "coherent",
                                                      "lower_tail_w", "df_upper", "df_lower",
                                                      "self_bounded", "decoupled"},
                             DecoupleCertificate{f, 1.0});
    }
    for (std::size_t n : {std::size_t{3}, std::size_t{4}}) {
        SpacePtr s = grid_cube_space(n);
        const double scale = std::sqrt(static_cast<double>(n));
        TabulatedFunction f = TabulatedFunction::tabulate(s, [scale](const StateIndex& x) {
            double sq = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) {
                const double v = grid_value(x[k]);
                sq += v * v;
            }
            return std::sqrt(sq) / scale;
        });
        entries.emplace_back("norm_cube_" + std::to_string(n),
                             "Euclidean norm / sqrt(n) on the discretized cube, n = " + std::to_string(n),
                             s, f,
                             std::vector<std::string>{"bounded_difference", "bennett", "lower_tail_w",
                                                      "df_upper", "df_lower"});
    }
    {
        // Six cities, each placed on one of five sites of the unit square.
        static const std::array<std::array<double, 2>, 5> sites = {
            {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}, {0.5, 0.5}}};
        std::array<std::array<double, 5>, 5> dist{};
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j)
                dist[i][j] = std::hypot(sites[i][0] - sites[j][0], sites[i][1] - sites[j][1]);

        std::vector<std::string> atoms = {"p0", "p1", "p2", "p3", "p4"};
        std::vector<double> probs(5, 0.2);
        std::vector<Marginal> ms;
        for (int k = 0; k < 6; ++k) ms.push_back(Marginal(atoms, probs));
        SpacePtr s = make_space(std::move(ms));

        TabulatedFunction raw = memoized(TabulatedFunction(
            s, [dist](const StateIndex& x) { return tsp_tour_length(x, dist); }));
        // Normalize so every single-city move shifts the tour by at most 1.
        const Hypotheses raw_h = compute_hypotheses(raw);
        const double scale = std::max(1.0, raw_h.inf_range_sup);
        TabulatedFunction f = memoized(TabulatedFunction(
            s, [dist, scale](const StateIndex& x) { return tsp_tour_length(x, dist) / scale; }));
        entries.emplace_back("tsp_6", "shortest tour through 6 random cities on 5 sites", s, f,
                             std::vector<std::string>{"bounded_difference", "bennett", "lower_tail_w",
                                                      "df_upper", "df_lower"});
    }
    {
        SpacePtr s = bernoulli_space(12, 0.25);
        TabulatedFunction f = coordinate_sum(s);
        entries.emplace_back("self_bounding_sum_12", "sum of 12 Bernoulli(0.25) coordinates", s, f,
                             std::vector<std::string>{"bounded_difference", "bennett", "lower_tail_w",
                                                      "df_upper", "df_lower", "self_bounded",
                                                      "self_bounded_lower", "decoupled"},
                             DecoupleCertificate{f, 1.0});
    }
    return entries;
}

} // namespace detail

/// The example zoo, built once. Thread-safe after first use.
inline const std::vector<ZooEntry>& zoo() {
    static const std::vector<ZooEntry> entries = detail::build_zoo();
    return entries;
}

inline const ZooEntry& zoo_entry(const std::string& name) {
    for (const ZooEntry& e : zoo()) {
        if (e.name == name) return e;
    }
    throw std::invalid_argument("no zoo entry named '" + name + "'");
}

struct TailReportRow {
    double t = 0.0;
    std::string bound_name;
    double bound_value = 0.0;
    double beta_star = 0.0;
    double tail = 0.0;
    TailMethod method = TailMethod::exact;
    double ci = 0.0;
    bool sound = true;
};

struct TailReport {
    std::string entry;
    std::vector<TailReportRow> rows;
};

namespace detail {

inline void check_grid(std::span<const double> t_grid) {
    if (t_grid.empty()) throw std::invalid_argument("compare: t grid must be non-empty");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] >= 0.0)) throw std::invalid_argument("compare: t values must be >= 0");
        if (i > 0 && !(t_grid[i] > t_grid[i - 1]))
            throw std::invalid_argument("compare: t values must be increasing");
    }
}

inline TailEstimate tail_estimate(const TabulatedFunction& f, double t, TailSide side,
                                  std::uint64_t mc_samples, std::uint64_t seed, double mean) {
    if (mc_samples == 0) return exact_tail(f, t, side);
    return mc_tail(f, t, side, mc_samples, seed, mean);
}

inline void append_rows(TailReport& report, const TabulatedFunction& f,
                        const std::vector<BoundCurve>& curves, TailSide side,
                        std::span<const double> t_grid, std::uint64_t mc_samples, std::uint64_t seed,
                        double mean) {
    for (double t : t_grid) {
        std::optional<TailEstimate> est;
        for (const BoundCurve& c : curves) {
            if (c.side != side) continue;
            if (!est) est = tail_estimate(f, t, side, mc_samples, seed, mean);
            TailReportRow row;
            row.t = t;
            row.bound_name = c.name;
            row.bound_value = c.evaluate(t);
            row.beta_star = c.beta_of_t(t);
            row.tail = est->probability;
            row.method = est->method;
            row.ci = est->ci_halfwidth;
            row.sound = row.bound_value >= est->probability - est->ci_halfwidth - 1e-12;
            report.rows.push_back(std::move(row));
        }
    }
}

} // namespace detail

/// Compares every applicable bound against the tail oracle on a common
/// t grid (used for both tails). mc_samples = 0 means exact enumeration.
/// `only` restricts the curves by name; an empty applicable set gives a
/// report with no rows.
inline TailReport compare(const ZooEntry& entry, std::span<const double> t_grid,
                          std::uint64_t mc_samples = 0, std::uint64_t seed = 1,
                          const std::optional<std::vector<std::string>>& only = std::nullopt) {
    detail::check_grid(t_grid);
    std::vector<BoundCurve> curves = catalog_curves(entry.f, entry.hypotheses);
    if (only) {
        std::vector<BoundCurve> kept;
        for (BoundCurve& c : curves) {
            if (std::find(only->begin(), only->end(), c.name) != only->end())
                kept.push_back(std::move(c));
        }
        curves = std::move(kept);
    }
    TailReport report;
    report.entry = entry.name;
    detail::append_rows(report, entry.f, curves, TailSide::upper, t_grid, mc_samples, seed,
                        entry.mean_f);
    detail::append_rows(report, entry.f, curves, TailSide::lower, t_grid, mc_samples, seed,
                        entry.mean_f);
    return report;
}

/// Largest deviations of f on each side of its mean.
inline std::pair<double, double> max_deviations(const TabulatedFunction& f, double mean) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    if (f.dense()) {
        for (double v : f.values()) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    } else {
        for_each_state(f.space(), [&](std::uint64_t, const StateIndex& x, double) {
            const double v = f(x);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        });
    }
    return {hi - mean, mean - lo};
}

/// Default-grid comparison: `grid_points` equally spaced t values per
/// side, spanning [0, max deviation] of that side.
inline TailReport compare(const ZooEntry& entry, std::size_t grid_points, std::uint64_t mc_samples = 0,
                          std::uint64_t seed = 1) {
    if (grid_points < 2) throw std::invalid_argument("compare: need at least two grid points");
    const auto [up_dev, down_dev] = max_deviations(entry.f, entry.mean_f);
    std::vector<BoundCurve> curves = catalog_curves(entry.f, entry.hypotheses);
    TailReport report;
    report.entry = entry.name;
    auto make_grid = [grid_points](double dev) {
        std::vector<double> grid(grid_points);
        for (std::size_t i = 0; i < grid_points; ++i)
            grid[i] = dev * static_cast<double>(i) / static_cast<double>(grid_points - 1);
        return grid;
    };
    const std::vector<double> up_grid = make_grid(up_dev);
    const std::vector<double> down_grid = make_grid(down_dev);
    detail::append_rows(report, entry.f, curves, TailSide::upper, up_grid, mc_samples, seed,
                        entry.mean_f);
    detail::append_rows(report, entry.f, curves, TailSide::lower, down_grid, mc_samples, seed,
                        entry.mean_f);
    return report;
}

} // namespace thermotail
