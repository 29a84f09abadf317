#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "thermotail/thermo.hpp"

namespace thermotail {

/// Thrown when adaptive refinement hits the depth cap; carries the best
/// estimate accumulated so far.
class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double best)
        : std::runtime_error(what), best_estimate(best) {}
    double best_estimate;
};

/// A scalar integrand with an optional removable-singularity value used
/// when it is evaluated at exactly zero.
struct Integrand {
    std::function<double(double)> evaluate;
    std::optional<double> limit_at_zero;

    double operator()(double x) const {
        if (x == 0.0 && limit_at_zero) return *limit_at_zero;
        return evaluate(x);
    }
};

inline constexpr double kQuadAbsTol = 1e-10;
inline constexpr double kQuadRelTol = 1e-8;
inline constexpr int kQuadMaxDepth = 40;

namespace detail {

struct SimpsonPanel {
    double a, fa, b, fb, m, fm, s;
};

inline SimpsonPanel make_panel(const Integrand& g, double a, double fa, double b, double fb) {
    const double m = 0.5 * (a + b);
    const double fm = g(m);
    const double s = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return SimpsonPanel{a, fa, b, fb, m, fm, s};
}

inline double simpson_recurse(const Integrand& g, const SimpsonPanel& p, double eps, int depth,
                              bool& overflowed) {
    const SimpsonPanel left = make_panel(g, p.a, p.fa, p.m, p.fm);
    const SimpsonPanel right = make_panel(g, p.m, p.fm, p.b, p.fb);
    const double s2 = left.s + right.s;
    const double err = (s2 - p.s) / 15.0;
    if (std::abs(err) <= eps || (p.b - p.a) < 1e-300) return s2 + err;
    if (depth >= kQuadMaxDepth) {
        overflowed = true;
        return s2 + err;
    }
    return simpson_recurse(g, left, 0.5 * eps, depth + 1, overflowed) +
           simpson_recurse(g, right, 0.5 * eps, depth + 1, overflowed);
}

} // namespace detail

/// Adaptive Simpson quadrature of g over [a, b] with a deterministic
/// subdivision rule. The error target is max(abs_tol, rel_tol * |I|),
/// seeded from a coarse first estimate of I.
inline double integrate(const Integrand& g, double a, double b, double abs_tol = kQuadAbsTol,
                        double rel_tol = kQuadRelTol) {
    if (a > b) throw std::invalid_argument("integrate: need a <= b");
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
        throw std::invalid_argument("integrate: tolerances must be positive");
    if (a == b) return 0.0;
    const double fa = g(a);
    const double fb = g(b);
    const detail::SimpsonPanel whole = detail::make_panel(g, a, fa, b, fb);
    const double eps = std::max(abs_tol, rel_tol * std::abs(whole.s));
    bool overflowed = false;
    const double result = detail::simpson_recurse(g, whole, eps, 0, overflowed);
    if (overflowed)
        throw QuadratureError("integrate: max recursion depth exceeded", result);
    return result;
}

inline double integrate(const std::function<double(double)>& g, double a, double b,
                        double abs_tol = kQuadAbsTol, double rel_tol = kQuadRelTol) {
    return integrate(Integrand{g, std::nullopt}, a, b, abs_tol, rel_tol);
}

/// S_f(beta) recovered from thermal energy fluctuations. The double
/// integral of sigma^2_{sf}[f] over the triangle {0 <= t <= s <= beta}
/// collapses to the single integral of s * sigma^2_{sf}[f].
inline double fluctuation_integral(const TabulatedFunction& f, double beta) {
    if (beta < 0.0) throw std::invalid_argument("fluctuation integral: beta must be >= 0");
    if (beta == 0.0) return 0.0;
    const auto profile = detail::ThermalProfile::build(f);
    Integrand g{[profile](double s) { return s * profile->variance(s); }, 0.0};
    return integrate(g, 0.0, beta);
}

/// Conditional variant: S_{k,f}(beta) at the state x, from the
/// conditional thermal variance along the k-fiber through x.
inline double fluctuation_integral(const TabulatedFunction& f, double beta, std::size_t k,
                                   const StateIndex& x) {
    if (beta < 0.0) throw std::invalid_argument("fluctuation integral: beta must be >= 0");
    const ProductSpace& space = f.space();
    space.check_coordinate(k);
    if (beta == 0.0) return 0.0;
    const std::vector<double>& log_probs = space.log_probs(k);
    const std::size_t mk = space.marginal(k).size();
    std::vector<double> fv(mk);
    StateIndex y = x;
    for (std::size_t a = 0; a < mk; ++a) {
        y[k] = static_cast<std::uint32_t>(a);
        fv[a] = f(y);
    }
    auto variance_at = [log_probs, fv](double s) {
        std::vector<double> w;
        detail::fiber_gibbs(log_probs, fv, s, w);
        double m = 0.0;
        for (std::size_t a = 0; a < fv.size(); ++a) m += w[a] * fv[a];
        double var = 0.0;
        for (std::size_t a = 0; a < fv.size(); ++a) {
            const double d = fv[a] - m;
            var += w[a] * d * d;
        }
        return var;
    };
    Integrand g{[variance_at](double s) { return s * variance_at(s); }, 0.0};
    return integrate(g, 0.0, beta);
}

} // namespace thermotail
