#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "thermotail/analytic.hpp"
#include "thermotail/quadrature.hpp"
#include "thermotail/space.hpp"
#include "thermotail/thermo.hpp"

namespace thermotail {

/// Thrown when a bound's hypotheses are not satisfied by the instance.
/// Hypothesis checks are hard gates; there are no silent fallbacks.
class InapplicableError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Pointwise certificate Df <= a f + b with a, b >= 0.
struct SelfBoundCertificate {
    double a = 0.0;
    double b = 0.0;
};

/// Certificate 0 <= f <= g, Df <= a g, Dg <= a g with a >= 1.
struct DecoupleCertificate {
    TabulatedFunction g;
    double a = 1.0;
};

/// Rounding allowance on hard hypothesis gates; exact-arithmetic
/// hypotheses can land a few ulps past their boundary.
inline constexpr double kGateTol = 1e-12;

/// The instance quantities the tail-bound catalog consumes. All norms are
/// maxima over states, recomputable from f via derived_statistics.
struct Hypotheses {
    double r2_sup = 0.0;        // || sum_k ran_k^2(f) ||_inf
    double v_sup = 0.0;         // || sum_k sigma_k^2(f) ||_inf
    double w_sup = 0.0;         // || sum_k E_k (f - inf_k f)^2 ||_inf
    double df_sup = 0.0;        // || Df ||_inf
    double centered_sup = 0.0;  // max_{k,x} (f - E_k f)
    double inf_range_sup = 0.0; // max_{k,x} (f - inf_k f)
    bool range_le_one_upper = false; // f - E_k f <= 1 for all k
    bool range_le_one_inf = false;   // f - inf_k f <= 1 for all k
    bool coherence_holds = false;    // E_k f >= (sup_k f + inf_k f)/2 everywhere
    std::optional<double> coherence_a; // || sum_k (sup_k f - E_k f)(E_k f - inf_k f) ||_inf
    std::optional<SelfBoundCertificate> self_bound;
    std::optional<DecoupleCertificate> decouple;
};

/// Computes every instance quantity by dense enumeration. The self-bound
/// slope is chosen from `self_bound_as` (each candidate gets the smallest
/// valid intercept b = max(0, max(Df - a f))); the candidate with the
/// smallest b wins, ties resolved toward the larger slope so the
/// lower-tail theorem (which needs a >= 1) stays available.
inline Hypotheses compute_hypotheses(const TabulatedFunction& f,
                                     std::vector<double> self_bound_as = {1.0 / 3.0, 1.0}) {
    const TabulatedFunction fd = densified(f);
    const ProductSpace& s = fd.space();
    s.require_enumerable();
    const std::vector<double>& fvals = fd.values();
    const std::size_t count = fvals.size();

    const DerivedStatistics stats = derived_statistics(fd);
    const std::vector<double>& r2 = stats.squared_range_sum.values();
    const std::vector<double>& s2 = stats.variance_sum.values();
    const std::vector<double>& df = stats.variance_proxy.values();
    const std::vector<double>& wf = stats.centered_sq_sum.values();

    Hypotheses h;
    for (std::size_t i = 0; i < count; ++i) {
        h.r2_sup = std::max(h.r2_sup, r2[i]);
        h.v_sup = std::max(h.v_sup, s2[i]);
        h.df_sup = std::max(h.df_sup, df[i]);
        h.w_sup = std::max(h.w_sup, wf[i]);
    }

    std::vector<double> zeta_sum(count, 0.0);
    bool coherent = true;
    double centered_sup = -std::numeric_limits<double>::infinity();
    double inf_range_sup = 0.0;
    for (std::size_t k = 0; k < s.dimension(); ++k) {
        const std::uint64_t stride = s.stride(k);
        const std::vector<double>& probs = s.marginal(k).probs;
        const std::size_t mk = probs.size();
        std::vector<double> fv(mk);
        detail::for_each_fiber_class(s, k, [&](std::uint64_t base) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            double ek = 0.0;
            for (std::size_t y = 0; y < mk; ++y) {
                fv[y] = fvals[base + y * stride];
                lo = std::min(lo, fv[y]);
                hi = std::max(hi, fv[y]);
                ek += probs[y] * fv[y];
            }
            if (ek < 0.5 * (hi + lo) - kGateTol) coherent = false;
            const double z = zeta(lo, hi, ek);
            for (std::size_t y = 0; y < mk; ++y) {
                zeta_sum[base + y * stride] += z;
                centered_sup = std::max(centered_sup, fv[y] - ek);
                inf_range_sup = std::max(inf_range_sup, fv[y] - lo);
            }
        });
    }
    h.centered_sup = centered_sup;
    h.inf_range_sup = inf_range_sup;
    h.range_le_one_upper = centered_sup <= 1.0 + kGateTol;
    h.range_le_one_inf = inf_range_sup <= 1.0 + kGateTol;
    h.coherence_holds = coherent;
    if (coherent) {
        double a = 0.0;
        for (double z : zeta_sum) a = std::max(a, z);
        h.coherence_a = a;
    }

    std::optional<SelfBoundCertificate> best;
    for (double a : self_bound_as) {
        if (!(a >= 0.0)) continue;
        double braw = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < count; ++i) braw = std::max(braw, df[i] - a * fvals[i]);
        const double b = std::max(0.0, braw);
        if (!best || b < best->b - kGateTol || (std::abs(b - best->b) <= kGateTol && a > best->a))
            best = SelfBoundCertificate{a, b};
    }
    h.self_bound = best;
    return h;
}

/// Pointwise check of a decoupling certificate.
inline bool verify_decouple(const TabulatedFunction& f, const TabulatedFunction& g, double a) {
    if (!(a >= 1.0)) return false;
    if (f.space_ptr().get() != g.space_ptr().get()) return false;
    const TabulatedFunction fd = densified(f);
    const TabulatedFunction gd = densified(g);
    const std::vector<double>& fv = fd.values();
    const std::vector<double>& gv = gd.values();
    const DerivedStatistics fstats = derived_statistics(fd);
    const DerivedStatistics gstats = derived_statistics(gd);
    const std::vector<double>& dfv = fstats.variance_proxy.values();
    const std::vector<double>& dgv = gstats.variance_proxy.values();
    for (std::size_t i = 0; i < fv.size(); ++i) {
        const double tol = kGateTol * std::max(1.0, std::abs(gv[i]));
        if (fv[i] < -tol || fv[i] > gv[i] + tol) return false;
        if (dfv[i] > a * gv[i] + tol || dgv[i] > a * gv[i] + tol) return false;
    }
    return true;
}

enum class TailSide { upper, lower };

/// A named tail bound: t maps to a probability bound in [0, 1], together
/// with the Chernoff parameter behind it. Bounds are 1 for t <= 0 (the
/// theorems assume t > 0) and capped at 1 elsewhere.
struct BoundCurve {
    std::string name;
    TailSide side = TailSide::upper;
    std::function<double(double)> evaluate;
    std::function<double(double)> beta_of_t;
    std::string hypotheses_used;
};

namespace detail {

inline std::string describe(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

inline double cap01(double v) { return std::clamp(v, 0.0, 1.0); }

/// exp(-t^2 / denom(t)) with the degenerate convention: a zero
/// denominator means the relevant variance proxy vanishes, so the bound
/// is 0 for t > 0 and 1 at t = 0.
inline std::function<double(double)> sub_gaussian(std::function<double(double)> denom) {
    return [denom = std::move(denom)](double t) {
        if (t <= 0.0) return 1.0;
        const double d = denom(t);
        if (d <= 0.0) return 0.0;
        return cap01(std::exp(-t * t / d));
    };
}

} // namespace detail

/// Pr{f - Ef > t} <= exp(-2 t^2 / ||R^2(f)||_inf).
inline BoundCurve bounded_difference(const Hypotheses& h) {
    const double r2 = h.r2_sup;
    BoundCurve c;
    c.name = "bounded_difference";
    c.side = TailSide::upper;
    c.evaluate = detail::sub_gaussian([r2](double) { return 0.5 * r2; });
    c.beta_of_t = [r2](double t) { return (t <= 0.0 || r2 <= 0.0) ? 0.0 : 4.0 * t / r2; };
    c.hypotheses_used = detail::describe("r2_sup=%.12g", r2);
    return c;
}

struct BennettCurves {
    BoundCurve bennett;
    BoundCurve bernstein;
};

/// Bennett bound and its Bernstein relaxation under the one-sided range
/// condition f - E_k f <= scale. Internally the variable is rescaled to
/// range one, matching the unit-range statement of the theorem.
inline BennettCurves bennett(const Hypotheses& h, double scale = 1.0) {
    if (!(scale > 0.0)) throw std::invalid_argument("bennett: scale must be positive");
    if (h.centered_sup > scale + kGateTol * std::max(1.0, scale))
        throw InapplicableError("bennett: need f - E_k f <= scale for every coordinate");
    const double v = h.v_sup / (scale * scale);
    BennettCurves out;
    out.bennett.name = "bennett";
    out.bennett.side = TailSide::upper;
    out.bennett.evaluate = [v, scale](double t) {
        if (t <= 0.0) return 1.0;
        if (v <= 0.0) return 0.0;
        const double u = (t / scale) / v;
        return detail::cap01(std::exp(-v * ((1.0 + u) * std::log1p(u) - u)));
    };
    out.bennett.beta_of_t = [v, scale](double t) {
        if (t <= 0.0 || v <= 0.0) return 0.0;
        return std::log1p((t / scale) / v) / scale;
    };
    out.bennett.hypotheses_used =
        detail::describe("v_sup=%.12g", h.v_sup) + detail::describe(", scale=%.12g", scale);

    out.bernstein.name = "bernstein";
    out.bernstein.side = TailSide::upper;
    out.bernstein.evaluate = [v, scale](double t) {
        if (t <= 0.0) return 1.0;
        if (v <= 0.0) return 0.0;
        const double ts = t / scale;
        return detail::cap01(std::exp(-ts * ts / (2.0 * v + 2.0 * ts / 3.0)));
    };
    out.bernstein.beta_of_t = [v, scale](double t) {
        if (t <= 0.0 || v <= 0.0) return 0.0;
        const double ts = t / scale;
        return (ts / (v + ts / 3.0)) / scale;
    };
    out.bernstein.hypotheses_used = out.bennett.hypotheses_used;
    return out;
}

/// Pr{f - Ef > t} <= exp(-t^2 / (2A)) when every conditional mean sits in
/// the upper half of its fiber range.
inline BoundCurve coherent(const Hypotheses& h) {
    if (!h.coherence_holds)
        throw InapplicableError("coherent: conditional means must sit in the upper half-ranges");
    const double a = *h.coherence_a;
    BoundCurve c;
    c.name = "coherent";
    c.side = TailSide::upper;
    c.evaluate = detail::sub_gaussian([a](double) { return 2.0 * a; });
    c.beta_of_t = [a](double t) { return (t <= 0.0 || a <= 0.0) ? 0.0 : t / a; };
    c.hypotheses_used = detail::describe("coherence_a=%.12g", a);
    return c;
}

/// Pr{Ef - f > t} <= exp(-t^2 / (2W)).
inline BoundCurve lower_tail_w(const Hypotheses& h) {
    const double w = h.w_sup;
    BoundCurve c;
    c.name = "lower_tail_w";
    c.side = TailSide::lower;
    c.evaluate = detail::sub_gaussian([w](double) { return 2.0 * w; });
    c.beta_of_t = [w](double t) { return (t <= 0.0 || w <= 0.0) ? 0.0 : t / w; };
    c.hypotheses_used = detail::describe("w_sup=%.12g", w);
    return c;
}

/// Pr{f - Ef > t} <= exp(-t^2 / (2 ||Df||_inf)); no hypothesis needed.
inline BoundCurve df_upper_tail(const Hypotheses& h) {
    const double d = h.df_sup;
    BoundCurve c;
    c.name = "df_upper";
    c.side = TailSide::upper;
    c.evaluate = detail::sub_gaussian([d](double) { return 2.0 * d; });
    c.beta_of_t = [d](double t) { return (t <= 0.0 || d <= 0.0) ? 0.0 : t / d; };
    c.hypotheses_used = detail::describe("df_sup=%.12g", d);
    return c;
}

struct DfTailCurves {
    BoundCurve upper;
    BoundCurve lower_bennett;
    BoundCurve lower_bernstein;
};

/// Upper and lower tails from the worst-case variance proxy; the lower
/// pair needs f - inf_k f <= 1 on every fiber.
inline DfTailCurves df_tails(const Hypotheses& h) {
    if (!h.range_le_one_inf)
        throw InapplicableError("df lower tail: need f - inf_k f <= 1 for every coordinate");
    DfTailCurves out;
    out.upper = df_upper_tail(h);
    const double d = h.df_sup;
    out.lower_bennett.name = "df_lower_bennett";
    out.lower_bennett.side = TailSide::lower;
    out.lower_bennett.evaluate = [d](double t) {
        if (t <= 0.0) return 1.0;
        if (d <= 0.0) return 0.0;
        const double u = t / d;
        return detail::cap01(std::exp(-d * ((1.0 + u) * std::log1p(u) - u)));
    };
    out.lower_bennett.beta_of_t = [d](double t) {
        return (t <= 0.0 || d <= 0.0) ? 0.0 : std::log1p(t / d);
    };
    out.lower_bennett.hypotheses_used = detail::describe("df_sup=%.12g, inf-ranges <= 1", d);

    out.lower_bernstein.name = "df_lower_bernstein";
    out.lower_bernstein.side = TailSide::lower;
    out.lower_bernstein.evaluate = [d](double t) {
        if (t <= 0.0) return 1.0;
        if (d <= 0.0) return 0.0;
        return detail::cap01(std::exp(-t * t / (2.0 * d + 2.0 * t / 3.0)));
    };
    out.lower_bernstein.beta_of_t = [d](double t) {
        return (t <= 0.0 || d <= 0.0) ? 0.0 : t / (d + t / 3.0);
    };
    out.lower_bernstein.hypotheses_used = out.lower_bennett.hypotheses_used;
    return out;
}

struct TailPair {
    BoundCurve upper;
    BoundCurve lower;
};

/// Upper tail under a self-bound certificate Df <= a f + b.
inline BoundCurve self_bounded_upper(const Hypotheses& h, double mean_f) {
    if (!h.self_bound) throw InapplicableError("self-bounded: no certificate Df <= a f + b");
    const double a = h.self_bound->a, b = h.self_bound->b;
    BoundCurve c;
    c.name = "self_bounded_upper";
    c.side = TailSide::upper;
    c.evaluate = detail::sub_gaussian(
        [a, b, mean_f](double t) { return 2.0 * (a * mean_f + b + 0.5 * a * t); });
    c.beta_of_t = [a, b, mean_f](double t) {
        const double denom = a * mean_f + b + 0.5 * a * t;
        return (t <= 0.0 || denom <= 0.0) ? 0.0 : t / denom;
    };
    c.hypotheses_used = detail::describe("a=%.12g", a) + detail::describe(", b=%.12g", b) +
                        detail::describe(", E[f]=%.12g", mean_f);
    return c;
}

/// Both tails under a self-bound certificate; the lower tail additionally
/// needs a >= 1 and unit inf-ranges.
inline TailPair self_bounded(const Hypotheses& h, double mean_f) {
    TailPair out;
    out.upper = self_bounded_upper(h, mean_f);
    const double a = h.self_bound->a, b = h.self_bound->b;
    if (!(a >= 1.0 - kGateTol))
        throw InapplicableError("self-bounded lower tail: need a >= 1");
    if (!h.range_le_one_inf)
        throw InapplicableError("self-bounded lower tail: need f - inf_k f <= 1 for every coordinate");
    out.lower.name = "self_bounded_lower";
    out.lower.side = TailSide::lower;
    out.lower.evaluate = detail::sub_gaussian([a, b, mean_f](double) { return 2.0 * (a * mean_f + b); });
    out.lower.beta_of_t = [a, b, mean_f](double t) {
        const double denom = a * mean_f + b;
        return (t <= 0.0 || denom <= 0.0) ? 0.0 : t / denom;
    };
    out.lower.hypotheses_used = out.upper.hypotheses_used + ", inf-ranges <= 1";
    return out;
}

/// Upper tail under a decoupling certificate (0 <= f <= g, Df <= a g,
/// Dg <= a g): exp(-t^2 / (4 a E[g] + 3 a t / 2)).
inline BoundCurve decoupled_upper(const Hypotheses& h, double mean_g) {
    if (!h.decouple) throw InapplicableError("decoupled: no certificate");
    const double a = h.decouple->a;
    BoundCurve c;
    c.name = "decoupled_upper";
    c.side = TailSide::upper;
    c.evaluate = detail::sub_gaussian([a, mean_g](double t) { return 4.0 * a * mean_g + 1.5 * a * t; });
    c.beta_of_t = [a, mean_g](double t) {
        const double denom = 2.0 * a * mean_g + 0.75 * a * t;
        return (t <= 0.0 || denom <= 0.0) ? 0.0 : t / denom;
    };
    c.hypotheses_used =
        detail::describe("a=%.12g", a) + detail::describe(", E[g]=%.12g", mean_g);
    return c;
}

/// Both tails under the decoupling certificate; the lower tail needs
/// unit inf-ranges of f.
inline TailPair decoupled(const Hypotheses& h, double mean_g) {
    TailPair out;
    out.upper = decoupled_upper(h, mean_g);
    if (!h.range_le_one_inf)
        throw InapplicableError("decoupled lower tail: need f - inf_k f <= 1 for every coordinate");
    const double a = h.decouple->a;
    out.lower.name = "decoupled_lower";
    out.lower.side = TailSide::lower;
    out.lower.evaluate = detail::sub_gaussian([a, mean_g](double t) { return 4.0 * a * mean_g + a * t; });
    out.lower.beta_of_t = [a, mean_g](double t) {
        const double denom = 2.0 * a * mean_g + 0.5 * a * t;
        return (t <= 0.0 || denom <= 0.0) ? 0.0 : t / denom;
    };
    out.lower.hypotheses_used = out.upper.hypotheses_used + ", inf-ranges <= 1";
    return out;
}

struct GenericBound {
    double bound = 1.0;
    double beta_star = 0.0;
};

/// Minimizes the Chernoff exponent beta * integral_0^beta env(g)/g^2 dg -
/// beta t over beta in (0, beta_max] by golden-section search. `envelope`
/// evaluates the entropy envelope at g > 0; its limit_at_zero member must
/// hold lim_{g->0} env(g)/g^2. The search range doubles while the
/// exponent still decreases at its right end, up to 1024 * beta_max.
inline GenericBound generic_entropy_bound(double t, const Integrand& envelope, double beta_max = 100.0) {
    if (!(t >= 0.0)) throw std::invalid_argument("generic bound: t must be >= 0");
    if (!(beta_max > 0.0)) throw std::invalid_argument("generic bound: beta_max must be positive");
    if (!envelope.limit_at_zero)
        throw std::invalid_argument("generic bound: envelope needs the g->0 limit of env(g)/g^2");
    if (t == 0.0) return GenericBound{1.0, 0.0};

    const Integrand over_g2{
        [&envelope](double g) { return envelope.evaluate(g) / (g * g); }, envelope.limit_at_zero};
    auto exponent = [&](double beta) {
        if (beta <= 0.0) return 0.0;
        return beta * integrate(over_g2, 0.0, beta) - beta * t;
    };

    double hi = beta_max;
    const double cap = 1024.0 * beta_max;
    while (hi < cap) {
        const double h = hi * 1e-6;
        if (exponent(hi) - exponent(hi - h) < 0.0) hi *= 2.0;
        else break;
    }

    double lo = 0.0;
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - invphi * (hi - lo);
    double x2 = lo + invphi * (hi - lo);
    double e1 = exponent(x1);
    double e2 = exponent(x2);
    while (hi - lo > 1e-10) {
        if (e1 <= e2) {
            hi = x2;
            x2 = x1;
            e2 = e1;
            x1 = hi - invphi * (hi - lo);
            e1 = exponent(x1);
        } else {
            lo = x1;
            x1 = x2;
            e1 = e2;
            x2 = lo + invphi * (hi - lo);
            e2 = exponent(x2);
        }
    }
    const double beta_star = 0.5 * (lo + hi);
    const double value = exponent(beta_star);
    return GenericBound{detail::cap01(std::exp(value)), beta_star};
}

/// Same, with the exact canonical entropy of f as the envelope. This is
/// the tightest Chernoff bound the method can give and dominates every
/// catalog bound built from a uniform envelope.
inline GenericBound generic_entropy_bound(const TabulatedFunction& f, double t, double beta_max = 100.0) {
    const auto profile = detail::ThermalProfile::build(f);
    Integrand envelope{[profile](double g) { return profile->entropy(g); },
                       0.5 * profile->variance(0.0)};
    return generic_entropy_bound(t, envelope, beta_max);
}

/// Assembles every curve whose gate the instance passes. Used by the
/// comparison report; strict callers use the individual constructors.
inline std::vector<BoundCurve> catalog_curves(const TabulatedFunction& f, const Hypotheses& h) {
    std::vector<BoundCurve> out;
    out.push_back(bounded_difference(h));
    if (h.range_le_one_upper) {
        BennettCurves bc = bennett(h, 1.0);
        out.push_back(std::move(bc.bennett));
        out.push_back(std::move(bc.bernstein));
    }
    if (h.coherence_holds) out.push_back(coherent(h));
    out.push_back(lower_tail_w(h));
    if (h.range_le_one_inf) {
        DfTailCurves dc = df_tails(h);
        out.push_back(std::move(dc.upper));
        out.push_back(std::move(dc.lower_bennett));
        out.push_back(std::move(dc.lower_bernstein));
    } else {
        out.push_back(df_upper_tail(h));
    }
    if (h.self_bound) {
        const double mean_f = expectation(f);
        if (h.self_bound->a >= 1.0 - kGateTol && h.range_le_one_inf) {
            TailPair pair = self_bounded(h, mean_f);
            out.push_back(std::move(pair.upper));
            out.push_back(std::move(pair.lower));
        } else {
            out.push_back(self_bounded_upper(h, mean_f));
        }
    }
    if (h.decouple) {
        const double mean_g = expectation(h.decouple->g);
        if (h.range_le_one_inf) {
            TailPair pair = decoupled(h, mean_g);
            out.push_back(std::move(pair.upper));
            out.push_back(std::move(pair.lower));
        } else {
            out.push_back(decoupled_upper(h, mean_g));
        }
    }
    return out;
}

} // namespace thermotail
