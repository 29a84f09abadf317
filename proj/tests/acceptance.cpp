// Acceptance suite: one pass/fail line per criterion, exit status equal
// to the number of failed criteria. Tolerances are fixed here, not
// configurable, so a regression cannot be calibrated away.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "thermotail/thermotail.hpp"

using namespace thermotail;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr std::uint64_t kMasterSeed = 2026;
constexpr int kInstances = 50;
const std::vector<double> kBetas = {0.1, 0.5, 1.0, 3.0};

std::vector<RandomInstance> instance_set() {
    std::vector<RandomInstance> out;
    out.reserve(kInstances);
    for (int i = 0; i < kInstances; ++i)
        out.push_back(random_instance(rng::counter_hash(kMasterSeed, i, 0)));
    return out;
}

std::vector<RandomInstance> additive_set(int count) {
    std::vector<RandomInstance> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i)
        out.push_back(random_additive_instance(rng::counter_hash(kMasterSeed, i, 1)));
    return out;
}

struct Criterion {
    int id;
    std::string name;
    std::function<bool(std::string&)> run;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

// Exact upper tail of Binomial(n, 1/2) deviations, from Pascal's triangle.
double binomial_tail(int n, double t) {
    std::vector<double> choose(n + 1, 0.0);
    choose[0] = 1.0;
    for (int i = 1; i <= n; ++i)
        for (int j = i; j >= 1; --j) choose[j] += choose[j - 1];
    const double denom = std::pow(2.0, n);
    double tail = 0.0;
    for (int k = 0; k <= n; ++k)
        if (k - n / 2.0 > t) tail += choose[k] / denom;
    return tail;
}

bool criterion_herbst(std::string& detail) {
    const auto start = Clock::now();
    double worst = 0.0;
    for (const RandomInstance& inst : instance_set()) {
        for (double beta : kBetas) {
            const CheckReport r = check_herbst(inst.f, beta);
            worst = std::max(worst, r.slack / std::max(1.0, std::abs(r.lhs)));
            if (!r.passed) {
                detail = "identity violated at beta=" + fmt("%g", beta);
                return false;
            }
        }
    }
    const double elapsed = seconds_since(start);
    detail = "max rel err " + fmt("%.2e", worst) + ", " + fmt("%.2f", elapsed) + " s";
    return elapsed < 10.0;
}

bool criterion_fluctuation(std::string& detail) {
    double worst = 0.0;
    for (const RandomInstance& inst : instance_set()) {
        const auto profile = detail::ThermalProfile::build(inst.f);
        for (double beta : kBetas) {
            const double entropy = profile->entropy(beta);
            const double integral = fluctuation_integral(inst.f, beta);
            const double err = std::abs(entropy - integral) / std::max(1.0, entropy);
            worst = std::max(worst, err);
            if (err > 1e-7) {
                detail = "identity violated at beta=" + fmt("%g", beta);
                return false;
            }
        }
    }
    detail = "max rel err " + fmt("%.2e", worst);
    return true;
}

bool criterion_derivatives(std::string& detail) {
    double worst1 = 0.0, worst2 = 0.0;
    for (const RandomInstance& inst : instance_set()) {
        const auto profile = detail::ThermalProfile::build(inst.f);
        for (double beta : kBetas) {
            const double h1 = 1e-5;
            const double d1 =
                (profile->log_partition(beta + h1) - profile->log_partition(beta - h1)) / (2 * h1);
            const double mean = profile->mean(beta);
            worst1 = std::max(worst1, std::abs(d1 - mean) / std::max(1.0, std::abs(mean)));

            const double h2 = 1e-4;
            const double d2 = (profile->log_partition(beta + h2) - 2 * profile->log_partition(beta) +
                               profile->log_partition(beta - h2)) /
                              (h2 * h2);
            const double var = profile->variance(beta);
            worst2 = std::max(worst2, std::abs(d2 - var) / std::max(1.0, var));
        }
    }
    detail = "first " + fmt("%.2e", worst1) + " (tol 1e-6), second " + fmt("%.2e", worst2) +
             " (tol 1e-4)";
    return worst1 <= 1e-6 && worst2 <= 1e-4;
}

bool criterion_tensorization(std::string& detail) {
    double worst_slack = 0.0, worst_eq = 0.0;
    for (const RandomInstance& inst : instance_set()) {
        for (double beta : kBetas) {
            const CheckReport r = check_tensorization(inst.f, beta);
            worst_slack = std::min(worst_slack, r.slack);
            if (r.slack < -1e-10) {
                detail = "subadditivity violated";
                return false;
            }
        }
    }
    for (const RandomInstance& inst : additive_set(20)) {
        for (double beta : kBetas) {
            const CheckReport r = check_tensorization(inst.f, beta);
            worst_eq = std::max(worst_eq, std::abs(r.slack));
        }
    }
    detail = "min slack " + fmt("%.2e", worst_slack) + ", additive |slack| <= " + fmt("%.2e", worst_eq);
    return worst_eq <= 1e-10;
}

bool criterion_efron_stein(std::string& detail) {
    double worst_slack = 0.0, worst_eq = 0.0;
    for (const RandomInstance& inst : instance_set()) {
        const CheckReport r = check_efron_stein(inst.f);
        worst_slack = std::min(worst_slack, r.slack);
    }
    for (const RandomInstance& inst : additive_set(20)) {
        const CheckReport r = check_efron_stein(inst.f);
        worst_eq = std::max(worst_eq, std::abs(r.slack));
    }
    detail = "min slack " + fmt("%.2e", worst_slack) + ", additive |slack| <= " + fmt("%.2e", worst_eq);
    return worst_slack >= -1e-12 && worst_eq <= 1e-12;
}

bool criterion_mod_log_sobolev(std::string& detail) {
    double worst = 0.0;
    for (const RandomInstance& inst : instance_set()) {
        const std::vector<double>& v = inst.f.values();
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        const double mean = expectation(inst.f);
        for (double beta : kBetas) {
            const CheckReport mlsi = check_mod_log_sobolev(inst.f, beta);
            worst = std::min(worst, mlsi.slack);
            for (double c : {*lo, mean, *hi}) {
                const CheckReport var = check_variational_bound(inst.f, beta, c);
                worst = std::min(worst, var.slack);
            }
        }
    }
    detail = "min slack " + fmt("%.2e", worst);
    return worst >= -1e-10;
}

bool criterion_soundness(std::string& detail) {
    double worst = std::numeric_limits<double>::infinity();
    std::size_t rows = 0;
    for (const ZooEntry& entry : zoo()) {
        const TailReport report = compare(entry, std::size_t{20}, 0, 1);
        for (const TailReportRow& row : report.rows) {
            worst = std::min(worst, row.bound_value - row.tail);
            ++rows;
            if (row.bound_value < row.tail - 1e-12) {
                detail = entry.name + "/" + row.bound_name + " unsound at t=" + fmt("%g", row.t);
                return false;
            }
        }
    }
    // Frozen binomial spot checks for the ten-coin sum.
    const ZooEntry& coins = zoo_entry("coin_sum_10");
    const BoundCurve bd = bounded_difference(coins.hypotheses);
    const std::vector<std::pair<double, double>> frozen = {
        {1.0, 176.0 / 1024.0}, {2.0, 56.0 / 1024.0}, {3.0, 11.0 / 1024.0}, {4.0, 1.0 / 1024.0}};
    for (const auto& [t, tail] : frozen) {
        if (std::abs(binomial_tail(10, t) - tail) > 1e-15) {
            detail = "binomial oracle drift at t=" + fmt("%g", t);
            return false;
        }
        const double exact = exact_tail(coins.f, t, TailSide::upper).probability;
        if (std::abs(exact - tail) > 1e-12) {
            detail = "enumerated tail differs from binomial at t=" + fmt("%g", t);
            return false;
        }
        const double bound = std::exp(-2.0 * t * t / 10.0);
        if (std::abs(bd.evaluate(t) - bound) > 1e-12 || bound < tail) {
            detail = "bounded-difference spot check failed at t=" + fmt("%g", t);
            return false;
        }
    }
    detail = fmt("%g", double(rows)) + " rows, min slack " + fmt("%.2e", worst) +
             "; binomial spot checks exact";
    return true;
}

bool criterion_beta_star(std::string& detail) {
    const ZooEntry& coins = zoo_entry("coin_sum_4");
    const Hypotheses h = coins.hypotheses;
    const BoundCurve bd = bounded_difference(h);
    Integrand envelope{[r2 = h.r2_sup](double g) { return g * g * r2 / 8.0; }, h.r2_sup / 8.0};
    double worst_bound = 0.0, worst_beta = 0.0;
    for (double t : {0.25, 0.5, 1.0, 2.0, 3.0}) {
        const GenericBound gb = generic_entropy_bound(t, envelope);
        const double closed = bd.evaluate(t);
        worst_bound = std::max(worst_bound, std::abs(gb.bound - closed) / closed);
        worst_beta = std::max(worst_beta, std::abs(gb.beta_star - 4.0 * t / h.r2_sup));
    }
    detail = "bound rel err " + fmt("%.2e", worst_bound) + " (tol 1e-8), beta* err " +
             fmt("%.2e", worst_beta) + " (tol 1e-6)";
    return worst_bound <= 1e-8 && worst_beta <= 1e-6;
}

bool criterion_lipschitz(std::string& detail) {
    std::string parts;
    for (std::size_t n : {std::size_t{3}, std::size_t{4}}) {
        const ZooEntry& e = zoo_entry("norm_cube_" + std::to_string(n));
        const DerivedStatistics st = derived_statistics(e.f);
        double worst = 0.0;
        for_each_state(*e.space, [&](std::uint64_t, const StateIndex& x, double) {
            worst = std::max(worst, st.variance_proxy(x));
        });
        if (worst > 1.0 / double(n) + 1e-12) {
            detail = "Df exceeds 1/n on norm_cube_" + std::to_string(n);
            return false;
        }
        parts += " n=" + std::to_string(n) + ": max Df=" + fmt("%.6g", worst);
    }
    detail = "Df <= 1/n on the cube entries;" + parts;
    return true;
}

bool criterion_analytic_facts(std::string& detail) {
    double last = 0.0;
    for (double g = 0.01; g <= 50.0; g += 0.01) {
        const double v = psi(g) / (g * g);
        if (v < last - 1e-12) {
            detail = "psi(g)/g^2 decreased at g=" + fmt("%g", g);
            return false;
        }
        last = v;
    }
    for (double a : {1.0, 1.25, 2.0, 5.0, 10.0}) {
        for (double b = 0.01; b <= 50.0; b += 0.01) {
            if (psi(b) / (1.0 + a * psi(b) / b) > b * b / 2.0 + 1e-12) {
                detail = "psi self-bound inequality failed at a=" + fmt("%g", a);
                return false;
            }
        }
    }
    for (auto [a, b] : std::vector<std::pair<double, double>>{{0.0, 1.0}, {-1.0, 2.0}, {0.5, 0.75}}) {
        double prev = std::numeric_limits<double>::infinity();
        for (double t = 0.5 * (a + b); t <= b + 2.0; t += 0.01) {
            const double v = zeta(a, b, t);
            if (v > prev + 1e-12) {
                detail = "zeta increased past the midpoint";
                return false;
            }
            prev = v;
        }
    }
    detail = "psi monotone/self-bound and zeta monotone on their grids";
    return true;
}

bool criterion_monte_carlo(std::string& detail) {
    const ZooEntry& coins = zoo_entry("coin_sum_10");
    const double exact = exact_tail(coins.f, 1.0, TailSide::upper).probability;
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const TailEstimate est = mc_tail(coins.f, 1.0, TailSide::upper, 100000, seed);
        if (std::abs(est.probability - exact) <= 3.0 * est.ci_halfwidth) ++hits;
    }
    const auto start = Clock::now();
    std::ostringstream sink;
    const int unsound = run_demo(sink, 20, 0, 1);
    const double demo_seconds = seconds_since(start);
    detail = std::to_string(hits) + "/50 trials within 3 ci; demo " + fmt("%.2f", demo_seconds) +
             " s, " + std::to_string(unsound) + " unsound rows";
    return hits >= 50 * 0.99 && demo_seconds < 60.0 && unsound == 0;
}

} // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "herbst-identity", criterion_herbst},
        {2, "fluctuation-identity", criterion_fluctuation},
        {3, "derivative-formulas", criterion_derivatives},
        {4, "tensorization", criterion_tensorization},
        {5, "efron-stein", criterion_efron_stein},
        {6, "mod-log-sobolev-and-variational", criterion_mod_log_sobolev},
        {7, "bound-soundness", criterion_soundness},
        {8, "closed-form-beta-star", criterion_beta_star},
        {9, "convex-lipschitz-proxy", criterion_lipschitz},
        {10, "psi-zeta-facts", criterion_analytic_facts},
        {11, "monte-carlo-and-demo", criterion_monte_carlo},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        if (!ok) ++failures;
        std::printf("%s %2d %-32s %s\n", ok ? "PASS" : "FAIL", c.id, c.name.c_str(), detail.c_str());
        std::fflush(stdout);
    }
    if (failures == 0) {
        std::printf("all %zu criteria passed\n", criteria.size());
    } else {
        std::printf("%d criteria FAILED\n", failures);
    }
    return failures;
}
