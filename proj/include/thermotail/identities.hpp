#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "thermotail/analytic.hpp"
#include "thermotail/quadrature.hpp"
#include "thermotail/rng.hpp"
#include "thermotail/space.hpp"
#include "thermotail/thermo.hpp"

namespace thermotail {

enum class CheckKind { identity, inequality };

/// Outcome of one identity or inequality check, with the measured slack.
/// Identities: slack = |lhs - rhs|, pass iff slack <= tolerance.
/// Inequalities (lhs <= rhs): slack = rhs - lhs, pass iff slack >= -tolerance.
struct CheckReport {
    std::string name;
    CheckKind kind = CheckKind::identity;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    bool applicable = true;
    bool equality = false;

    static CheckReport identity(std::string name, double lhs, double rhs, double tol) {
        CheckReport r;
        r.name = std::move(name);
        r.kind = CheckKind::identity;
        r.lhs = lhs;
        r.rhs = rhs;
        r.slack = std::abs(lhs - rhs);
        r.tolerance = tol;
        r.passed = r.slack <= tol;
        return r;
    }

    static CheckReport inequality(std::string name, double lhs, double rhs, double tol) {
        CheckReport r;
        r.name = std::move(name);
        r.kind = CheckKind::inequality;
        r.lhs = lhs;
        r.rhs = rhs;
        r.slack = rhs - lhs;
        r.tolerance = tol;
        r.passed = r.slack >= -tol;
        r.equality = r.slack <= 1e-10;
        return r;
    }

    static CheckReport inapplicable(std::string name, CheckKind kind) {
        CheckReport r;
        r.name = std::move(name);
        r.kind = kind;
        r.passed = true;
        r.applicable = false;
        return r;
    }
};

namespace detail {

inline double thermal_mean_of(const ThermalProfile& p, double beta, const std::vector<double>& vals) {
    std::vector<double> w;
    p.weights(beta, w);
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) sum += w[i] * vals[i];
    return sum;
}

/// Dense table of sum_k S_{k,f}(beta) per state.
inline std::vector<double> conditional_entropy_sum(const TabulatedFunction& f, double beta) {
    const TabulatedFunction fd = densified(f);
    const ProductSpace& s = fd.space();
    const std::vector<double>& fvals = fd.values();
    std::vector<double> out(fvals.size(), 0.0);
    for (std::size_t k = 0; k < s.dimension(); ++k) {
        const std::uint64_t stride = s.stride(k);
        const std::vector<double>& probs = s.marginal(k).probs;
        const std::vector<double>& log_probs = s.log_probs(k);
        const std::size_t mk = probs.size();
        std::vector<double> fv(mk), w(mk);
        for_each_fiber_class(s, k, [&](std::uint64_t base) {
            for (std::size_t y = 0; y < mk; ++y) fv[y] = fvals[base + y * stride];
            double ent = 0.0;
            if (beta != 0.0) {
                const double log_zk = fiber_gibbs(log_probs, fv, beta, w);
                double ef = 0.0;
                for (std::size_t y = 0; y < mk; ++y) ef += w[y] * fv[y];
                ent = beta * ef - log_zk;
            }
            for (std::size_t y = 0; y < mk; ++y) out[base + y * stride] += ent;
        });
    }
    return out;
}

/// max over states and coordinates of f - inf_k f.
inline double max_inf_range(const TabulatedFunction& f) {
    const TabulatedFunction fd = densified(f);
    const ProductSpace& s = fd.space();
    const std::vector<double>& fvals = fd.values();
    double worst = 0.0;
    for (std::size_t k = 0; k < s.dimension(); ++k) {
        const std::uint64_t stride = s.stride(k);
        const std::size_t mk = s.marginal(k).size();
        for_each_fiber_class(s, k, [&](std::uint64_t base) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            for (std::size_t y = 0; y < mk; ++y) {
                const double v = fvals[base + y * stride];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            worst = std::max(worst, hi - lo);
        });
    }
    return worst;
}

inline std::string format_beta(double beta) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", beta);
    return buf;
}

} // namespace detail

/// ln E[e^{beta (f-Ef)}] = beta * integral_0^beta S_f(g)/g^2 dg.
/// The integrand has the removable value sigma^2[f]/2 at g = 0.
inline CheckReport check_herbst(const TabulatedFunction& f, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("herbst check: beta must be positive");
    const auto profile = detail::ThermalProfile::build(f);
    const double lhs = profile->centered_log_mgf(beta);
    Integrand g{[profile](double gamma) { return profile->entropy(gamma) / (gamma * gamma); },
                0.5 * profile->variance(0.0)};
    const double rhs = beta * integrate(g, 0.0, beta);
    return CheckReport::identity("herbst", lhs, rhs, 1e-7 * std::max(1.0, std::abs(lhs)));
}

/// S_f(beta) equals the fluctuation integral of its own thermal variance.
inline CheckReport check_fluctuation(const TabulatedFunction& f, double beta) {
    const auto profile = detail::ThermalProfile::build(f);
    const double lhs = profile->entropy(beta);
    const double rhs = fluctuation_integral(f, beta);
    return CheckReport::identity("fluctuation", lhs, rhs, 1e-7 * std::max(1.0, std::abs(lhs)));
}

/// S_f(beta) <= E_{beta f}[ sum_k S_{k,f}(beta) ], with equality for
/// additive f.
inline CheckReport check_tensorization(const TabulatedFunction& f, double beta) {
    const auto profile = detail::ThermalProfile::build(f);
    const double lhs = profile->entropy(beta);
    const std::vector<double> sk = detail::conditional_entropy_sum(f, beta);
    const double rhs = detail::thermal_mean_of(*profile, beta, sk);
    return CheckReport::inequality("tensorization", lhs, rhs, 1e-10);
}

/// sigma^2[f] <= E[ sum_k sigma_k^2[f] ]; exact arithmetic, no quadrature.
inline CheckReport check_efron_stein(const TabulatedFunction& f) {
    const auto profile = detail::ThermalProfile::build(f);
    const double lhs = profile->variance(0.0);
    const DerivedStatistics stats = derived_statistics(densified(f));
    const double rhs = expectation(stats.variance_sum);
    return CheckReport::inequality("efron_stein", lhs, rhs, 1e-12);
}

/// S_f(beta) <= E_{beta f}[ sum_k psi(-beta (f - f_k)) ] for any choice
/// of f_k independent of coordinate k.
inline CheckReport check_mod_log_sobolev(const TabulatedFunction& f, double beta,
                                         const std::vector<ConditionalField>& fks) {
    const TabulatedFunction fd = densified(f);
    const ProductSpace& s = fd.space();
    if (fks.size() != s.dimension())
        throw std::invalid_argument("mod-log-sobolev: need one conditional field per coordinate");
    for (std::size_t k = 0; k < fks.size(); ++k) {
        if (fks[k].coordinate() != k)
            throw std::invalid_argument("mod-log-sobolev: field coordinate mismatch");
        if (!is_independent_of(fks[k].as_function(), k))
            throw std::invalid_argument("mod-log-sobolev: field depends on its own coordinate");
    }
    const auto profile = detail::ThermalProfile::build(fd);
    const double lhs = profile->entropy(beta);
    const std::vector<double>& fvals = fd.values();
    std::vector<double> psisum(fvals.size(), 0.0);
    for_each_state(s, [&](std::uint64_t i, const StateIndex& x, double) {
        double total = 0.0;
        for (std::size_t k = 0; k < fks.size(); ++k) total += psi(-beta * (fvals[i] - fks[k](x)));
        psisum[i] = total;
    });
    const double rhs = detail::thermal_mean_of(*profile, beta, psisum);
    return CheckReport::inequality("mod_log_sobolev", lhs, rhs, 1e-10);
}

/// Default field choice f_k = inf_k f.
inline CheckReport check_mod_log_sobolev(const TabulatedFunction& f, double beta) {
    std::vector<ConditionalField> fks;
    const TabulatedFunction fd = densified(f);
    for (std::size_t k = 0; k < fd.space().dimension(); ++k)
        fks.push_back(conditional_extrema(fd, k).inf);
    return check_mod_log_sobolev(fd, beta, fks);
}

/// One-constant variational bound S_f(beta) <= E_{beta f}[psi(-beta (f-c))].
inline CheckReport check_variational_bound(const TabulatedFunction& f, double beta, double c) {
    const TabulatedFunction fd = densified(f);
    const auto profile = detail::ThermalProfile::build(fd);
    const double lhs = profile->entropy(beta);
    const std::vector<double>& fvals = fd.values();
    std::vector<double> vals(fvals.size());
    for (std::size_t i = 0; i < fvals.size(); ++i) vals[i] = psi(-beta * (fvals[i] - c));
    const double rhs = detail::thermal_mean_of(*profile, beta, vals);
    return CheckReport::inequality("variational_bound", lhs, rhs, 1e-10);
}

/// Upper bound S_f(beta) <= (beta^2/2) E_{beta f}[Df] and the lower-tail
/// companion S_f(-beta) <= psi(beta) E_{-beta f}[Df]. The companion needs
/// f - inf_k f <= 1 on every fiber and is reported inapplicable otherwise.
inline std::pair<CheckReport, CheckReport> check_entropy_bounds_df(const TabulatedFunction& f,
                                                                   double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("entropy bounds: beta must be positive");
    const TabulatedFunction fd = densified(f);
    const auto profile = detail::ThermalProfile::build(fd);
    const std::vector<double> df = derived_statistics(fd).variance_proxy.values();

    const double lhs_up = profile->entropy(beta);
    const double rhs_up = 0.5 * beta * beta * detail::thermal_mean_of(*profile, beta, df);
    CheckReport upper = CheckReport::inequality("entropy_bound_df_upper", lhs_up, rhs_up, 1e-10);

    CheckReport lower;
    if (detail::max_inf_range(fd) <= 1.0 + 1e-12) {
        const double lhs_lo = profile->entropy(-beta);
        const double rhs_lo = psi(beta) * detail::thermal_mean_of(*profile, -beta, df);
        lower = CheckReport::inequality("entropy_bound_df_lower", lhs_lo, rhs_lo, 1e-10);
    } else {
        lower = CheckReport::inapplicable("entropy_bound_df_lower", CheckKind::inequality);
    }
    return {upper, lower};
}

/// Finite-difference checks of the derivative formulas for ln Z and the
/// thermal moments.
inline std::vector<CheckReport> check_derivative_formulas(const TabulatedFunction& f, double beta) {
    const auto profile = detail::ThermalProfile::build(f);
    std::vector<CheckReport> out;

    const double h1 = 1e-5;
    const double fd1 = (profile->log_partition(beta + h1) - profile->log_partition(beta - h1)) / (2.0 * h1);
    const double mean = profile->mean(beta);
    out.push_back(CheckReport::identity("dlogz_is_thermal_mean", fd1, mean,
                                        1e-6 * std::max(1.0, std::abs(mean))));

    const double h2 = 1e-4;
    const double fd2 = (profile->log_partition(beta + h2) - 2.0 * profile->log_partition(beta) +
                        profile->log_partition(beta - h2)) /
                       (h2 * h2);
    const double var = profile->variance(beta);
    out.push_back(CheckReport::identity("d2logz_is_thermal_variance", fd2, var,
                                        1e-4 * std::max(1.0, std::abs(var))));

    // d/dbeta E[f^k] = E[f^{k+1}] - E[f^k] E[f] for k = 1, 2.
    const std::size_t n = profile->centered.size();
    std::vector<double> f1(n), f2(n), f3(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = profile->centered[i] + profile->mean0;
        f1[i] = v;
        f2[i] = v * v;
        f3[i] = v * v * v;
    }
    for (int k = 1; k <= 2; ++k) {
        const std::vector<double>& fk = (k == 1) ? f1 : f2;
        const std::vector<double>& fk1 = (k == 1) ? f2 : f3;
        const double fd = (detail::thermal_mean_of(*profile, beta + h1, fk) -
                           detail::thermal_mean_of(*profile, beta - h1, fk)) /
                          (2.0 * h1);
        const double exact = detail::thermal_mean_of(*profile, beta, fk1) -
                             detail::thermal_mean_of(*profile, beta, fk) *
                                 detail::thermal_mean_of(*profile, beta, f1);
        out.push_back(CheckReport::identity("dmoment" + std::to_string(k), fd, exact,
                                            1e-6 * std::max(1.0, std::abs(exact))));
    }
    return out;
}

/// A seeded random instance for property runs: 1-4 coordinates, 2-4 atoms
/// each, probabilities normalized away from zero, values in [-2, 2].
struct RandomInstance {
    SpacePtr space;
    TabulatedFunction f;
};

namespace detail {

inline SpacePtr random_space(rng::SplitMix64& g) {
    const std::size_t n = 1 + static_cast<std::size_t>(g.below(4));
    std::vector<Marginal> marginals;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t m = 2 + static_cast<std::size_t>(g.below(3));
        std::vector<std::string> atoms;
        std::vector<double> probs(m);
        double total = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            atoms.push_back("a" + std::to_string(a));
            probs[a] = 0.1 + 0.9 * g.unit();
            total += probs[a];
        }
        for (double& p : probs) p /= total;
        marginals.emplace_back(std::move(atoms), std::move(probs));
    }
    return make_space(std::move(marginals));
}

} // namespace detail

inline RandomInstance random_instance(std::uint64_t seed) {
    rng::SplitMix64 g(seed);
    SpacePtr space = detail::random_space(g);
    std::vector<double> values(space->state_count());
    for (double& v : values) v = -2.0 + 4.0 * g.unit();
    TabulatedFunction f(space, std::move(values));
    return RandomInstance{std::move(space), std::move(f)};
}

/// Random instance whose function is a sum of per-coordinate terms, for
/// which the entropy identities hold with equality.
inline RandomInstance random_additive_instance(std::uint64_t seed) {
    rng::SplitMix64 g(seed);
    SpacePtr space = detail::random_space(g);
    std::vector<std::vector<double>> terms;
    for (std::size_t k = 0; k < space->dimension(); ++k) {
        std::vector<double> t(space->marginal(k).size());
        for (double& v : t) v = -1.0 + 2.0 * g.unit();
        terms.push_back(std::move(t));
    }
    TabulatedFunction f = TabulatedFunction::tabulate(space, [&terms](const StateIndex& x) {
        double sum = 0.0;
        for (std::size_t k = 0; k < terms.size(); ++k) sum += terms[k][x[k]];
        return sum;
    });
    return RandomInstance{std::move(space), std::move(f)};
}

inline const std::vector<double>& suite_betas() {
    static const std::vector<double> betas = {0.1, 0.5, 1.0, 3.0};
    return betas;
}

/// Runs every check on `trials` seeded random instances. Deterministic
/// given the seed; the report order is fixed.
inline std::vector<CheckReport> run_suite(std::uint64_t seed, std::uint64_t trials) {
    if (trials < 1) throw std::invalid_argument("suite: need at least one trial");
    std::vector<CheckReport> reports;
    for (std::uint64_t trial = 0; trial < trials; ++trial) {
        const RandomInstance inst = random_instance(rng::counter_hash(seed, trial, 0));
        const std::string tag = "[trial=" + std::to_string(trial) + "]";
        auto push = [&](CheckReport r, const std::string& suffix) {
            r.name += suffix + tag;
            reports.push_back(std::move(r));
        };
        push(check_efron_stein(inst.f), "");
        const std::vector<double>& fvals = inst.f.values();
        const auto [lo_it, hi_it] = std::minmax_element(fvals.begin(), fvals.end());
        const double mean = expectation(inst.f);
        for (double beta : suite_betas()) {
            const std::string bs = "[beta=" + detail::format_beta(beta) + "]";
            push(check_herbst(inst.f, beta), bs);
            push(check_fluctuation(inst.f, beta), bs);
            push(check_tensorization(inst.f, beta), bs);
            push(check_mod_log_sobolev(inst.f, beta), bs);
            push(check_variational_bound(inst.f, beta, *lo_it), "[c=min]" + bs);
            push(check_variational_bound(inst.f, beta, mean), "[c=mean]" + bs);
            push(check_variational_bound(inst.f, beta, *hi_it), "[c=max]" + bs);
            auto [upper, lower] = check_entropy_bounds_df(inst.f, beta);
            push(std::move(upper), bs);
            push(std::move(lower), bs);
            for (CheckReport& r : check_derivative_formulas(inst.f, beta)) push(std::move(r), bs);
        }
    }
    return reports;
}

} // namespace thermotail
