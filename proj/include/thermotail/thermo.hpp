#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "thermotail/space.hpp"

namespace thermotail {
namespace detail {

/// Dense per-state tables for one function: probabilities, log
/// probabilities and centered values f - E[f]. All exponentially tilted
/// quantities are computed from the centered values; the centered
/// log-moment-generating-function uses expm1/log1p so that quantities of
/// order beta^2 keep full relative accuracy down to beta ~ 1e-300. The
/// naive beta*E - ln Z difference is O(1)-minus-O(1) and would drown the
/// entropy in rounding noise for small beta.
struct ThermalProfile {
    SpacePtr space;
    std::vector<double> mu;       // state probabilities
    std::vector<double> log_mu;   // log state probabilities
    std::vector<double> centered; // f - E[f]
    double mean0 = 0.0;           // E[f]
    double mu_sum_minus_1 = 0.0;  // sum(mu) - 1, kept for exact normalization
    double centered_residual = 0.0; // sum(mu * centered), ~0 up to rounding

    static std::shared_ptr<const ThermalProfile> build(const TabulatedFunction& f) {
        auto p = std::make_shared<ThermalProfile>();
        p->space = f.space_ptr();
        const ProductSpace& s = *p->space;
        s.require_enumerable();
        const std::size_t n = static_cast<std::size_t>(s.state_count());
        p->mu.resize(n);
        p->log_mu.resize(n);
        p->centered.resize(n);
        if (f.dense()) {
            const std::vector<double>& v = f.values();
            for_each_state(s, [&](std::uint64_t i, const StateIndex& x, double prob) {
                p->mu[i] = prob;
                p->log_mu[i] = s.log_probability(x);
                p->centered[i] = v[i];
            });
        } else {
            for_each_state(s, [&](std::uint64_t i, const StateIndex& x, double prob) {
                p->mu[i] = prob;
                p->log_mu[i] = s.log_probability(x);
                p->centered[i] = f(x);
            });
        }
        double mean = 0.0, musum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mean += p->mu[i] * p->centered[i];
            musum += p->mu[i];
        }
        p->mean0 = mean;
        p->mu_sum_minus_1 = musum - 1.0;
        double residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            p->centered[i] -= mean;
            residual += p->mu[i] * p->centered[i];
        }
        p->centered_residual = residual;
        return p;
    }

    /// ln E[e^{beta (f - E f)}]. Exactly 0 at beta = 0.
    double centered_log_mgf(double beta) const {
        if (beta == 0.0) return 0.0;
        double amax = -std::numeric_limits<double>::infinity();
        for (double c : centered) amax = std::max(amax, beta * c);
        if (amax <= 500.0) {
            double delta = mu_sum_minus_1;
            for (std::size_t i = 0; i < centered.size(); ++i)
                delta += mu[i] * std::expm1(beta * centered[i]);
            return std::log1p(delta);
        }
        double sum = 0.0;
        for (std::size_t i = 0; i < centered.size(); ++i)
            sum += std::exp(log_mu[i] + beta * centered[i] - amax);
        return amax + std::log(sum);
    }

    double log_partition(double beta) const {
        if (beta == 0.0) return 0.0;
        return centered_log_mgf(beta) + beta * mean0;
    }

    /// Normalized Gibbs weights exp(log mu + beta (f-Ef)) / Z into w.
    void weights(double beta, std::vector<double>& w) const {
        const std::size_t n = centered.size();
        w.resize(n);
        if (beta == 0.0) {
            std::copy(mu.begin(), mu.end(), w.begin());
            return;
        }
        double amax = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) amax = std::max(amax, log_mu[i] + beta * centered[i]);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = std::exp(log_mu[i] + beta * centered[i] - amax);
            total += w[i];
        }
        for (std::size_t i = 0; i < n; ++i) w[i] /= total;
    }

    /// E_{beta f}[f] - E[f].
    double mean_shift(double beta) const {
        if (beta == 0.0) return centered_residual;
        std::vector<double> w;
        weights(beta, w);
        double m = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) m += w[i] * centered[i];
        return m;
    }

    double mean(double beta) const { return mean0 + mean_shift(beta); }

    /// sigma^2_{beta f}[f], two-pass on centered values.
    double variance(double beta) const {
        std::vector<double> w;
        weights(beta, w);
        double m = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) m += w[i] * centered[i];
        double var = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double d = centered[i] - m;
            var += w[i] * d * d;
        }
        return var;
    }

    /// S_f(beta) = beta (E_{beta f}[f] - E[f]) - ln E[e^{beta (f-Ef)}].
    double entropy(double beta) const {
        if (beta == 0.0) return 0.0;
        return beta * mean_shift(beta) - centered_log_mgf(beta);
    }
};

/// Visits one representative (coordinate k set to atom 0) of every
/// k-fiber, by linear index.
template <class Fn>
void for_each_fiber_class(const ProductSpace& space, std::size_t k, Fn&& fn) {
    space.require_enumerable();
    space.check_coordinate(k);
    const std::uint64_t stride = space.stride(k);
    const std::uint64_t block = stride * space.marginal(k).size();
    const std::uint64_t total = space.state_count();
    for (std::uint64_t base = 0; base < total; base += block)
        for (std::uint64_t off = 0; off < stride; ++off) fn(base + off);
}

/// Normalized Gibbs weights on one fiber; returns ln Z_{k,beta f}.
/// probs/fv are the marginal weights and f values along the fiber.
inline double fiber_gibbs(const std::vector<double>& log_probs, const std::vector<double>& fv,
                          double beta, std::vector<double>& w) {
    const std::size_t m = fv.size();
    w.resize(m);
    double amax = -std::numeric_limits<double>::infinity();
    for (std::size_t y = 0; y < m; ++y) amax = std::max(amax, log_probs[y] + beta * fv[y]);
    double total = 0.0;
    for (std::size_t y = 0; y < m; ++y) {
        w[y] = std::exp(log_probs[y] + beta * fv[y] - amax);
        total += w[y];
    }
    for (std::size_t y = 0; y < m; ++y) w[y] /= total;
    return amax + std::log(total);
}

} // namespace detail

/// The canonical ensemble of a function at one inverse temperature.
/// The log-partition value and the dense thermal tables are computed
/// eagerly; afterwards every operation is a pure read.
class ThermalState {
public:
    ThermalState(TabulatedFunction f, double beta)
        : f_(std::move(f)), beta_(beta), profile_(detail::ThermalProfile::build(f_)) {
        log_z_ = profile_->log_partition(beta_);
        if (!std::isfinite(log_z_)) throw std::domain_error("thermal state: log partition not finite");
    }

    double beta() const { return beta_; }
    double log_partition() const { return log_z_; }
    const TabulatedFunction& potential() const { return f_; }
    const detail::ThermalProfile& profile() const { return *profile_; }

private:
    TabulatedFunction f_;
    double beta_;
    std::shared_ptr<const detail::ThermalProfile> profile_;
    double log_z_;
};

namespace detail {

inline void require_same_space(const ThermalState& ts, const TabulatedFunction& g) {
    if (ts.potential().space_ptr().get() != g.space_ptr().get())
        throw std::invalid_argument("thermal: function lives on a different space");
}

/// Weighted sum of g under normalized Gibbs weights.
inline double weighted_sum(const TabulatedFunction& g, const std::vector<double>& w) {
    double sum = 0.0;
    if (g.dense()) {
        const std::vector<double>& v = g.values();
        for (std::size_t i = 0; i < w.size(); ++i) sum += w[i] * v[i];
    } else {
        const ProductSpace& s = g.space();
        for_each_state(s, [&](std::uint64_t i, const StateIndex& x, double) { sum += w[i] * g(x); });
    }
    return sum;
}

} // namespace detail

/// E_{beta f}[g]. At beta = 0 this is exactly expectation(g).
inline double thermal_expectation(const ThermalState& ts, const TabulatedFunction& g) {
    detail::require_same_space(ts, g);
    if (ts.beta() == 0.0) return expectation(g);
    std::vector<double> w;
    ts.profile().weights(ts.beta(), w);
    return detail::weighted_sum(g, w);
}

/// S_f(beta) = beta E_{beta f}[f] - ln Z_{beta f}; zero at beta = 0.
inline double canonical_entropy(const ThermalState& ts) {
    return ts.profile().entropy(ts.beta());
}

/// A_f(beta) = ln Z / beta for beta != 0, continuously extended by E[f].
inline double free_energy(const ThermalState& ts) {
    if (ts.beta() == 0.0) return ts.profile().mean0;
    return ts.log_partition() / ts.beta();
}

/// sigma^2_{beta f}[g], computed two-pass around the thermal mean.
inline double thermal_variance(const ThermalState& ts, const TabulatedFunction& g) {
    detail::require_same_space(ts, g);
    std::vector<double> w;
    ts.profile().weights(ts.beta(), w);
    const double m = detail::weighted_sum(g, w);
    double var = 0.0;
    if (g.dense()) {
        const std::vector<double>& v = g.values();
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double d = v[i] - m;
            var += w[i] * d * d;
        }
    } else {
        for_each_state(g.space(), [&](std::uint64_t i, const StateIndex& x, double) {
            const double d = g(x) - m;
            var += w[i] * d * d;
        });
    }
    return var;
}

/// A function that is constant along every fiber of its coordinate,
/// i.e. a member of the sub-algebra of functions independent of it.
class ConditionalField {
public:
    ConditionalField(TabulatedFunction fn, std::size_t k) : fn_(std::move(fn)), coord_(k) {
        fn_.space().check_coordinate(k);
    }

    double operator()(const StateIndex& x) const { return fn_(x); }
    const TabulatedFunction& as_function() const { return fn_; }
    std::size_t coordinate() const { return coord_; }

private:
    TabulatedFunction fn_;
    std::size_t coord_;
};

/// True when g is constant along every k-fiber (within tol, relative to
/// max(1, |g|)). Requires dense enumerability.
inline bool is_independent_of(const TabulatedFunction& g, std::size_t k, double tol = 1e-10) {
    const ProductSpace& s = g.space();
    s.require_enumerable();
    s.check_coordinate(k);
    const std::uint64_t stride = s.stride(k);
    const std::size_t mk = s.marginal(k).size();
    bool ok = true;
    detail::for_each_fiber_class(s, k, [&](std::uint64_t base) {
        if (!ok) return;
        const double v0 = g.at_linear(base);
        for (std::size_t y = 1; y < mk; ++y) {
            const double v = g.at_linear(base + y * stride);
            if (std::abs(v - v0) > tol * std::max(1.0, std::abs(v0))) {
                ok = false;
                return;
            }
        }
    });
    return ok;
}

namespace detail {

/// Builds a dense conditional field for coordinate k. `compute` receives
/// the fiber values of the source function and returns the fiber-constant
/// result written to every member state.
template <class Compute>
TabulatedFunction dense_fiber_constant(const TabulatedFunction& src, std::size_t k, Compute&& compute) {
    const ProductSpace& s = src.space();
    s.require_enumerable();
    const std::uint64_t stride = s.stride(k);
    const std::size_t mk = s.marginal(k).size();
    std::vector<double> out(s.state_count());
    std::vector<double> fv(mk);
    for_each_fiber_class(s, k, [&](std::uint64_t base) {
        for (std::size_t y = 0; y < mk; ++y) fv[y] = src.at_linear(base + y * stride);
        const double value = compute(fv);
        for (std::size_t y = 0; y < mk; ++y) out[base + y * stride] = value;
    });
    return TabulatedFunction(src.space_ptr(), std::move(out));
}

/// Callback-mode conditional field: evaluates `compute` on the fiber
/// values of src at the queried state.
template <class Compute>
TabulatedFunction callback_fiber_constant(const TabulatedFunction& src, std::size_t k, Compute compute) {
    const SpacePtr space = src.space_ptr();
    space->check_coordinate(k);
    TabulatedFunction local = src;
    return TabulatedFunction(space, [local, space, k, compute](const StateIndex& x) {
        const std::size_t mk = space->marginal(k).size();
        std::vector<double> fv(mk);
        StateIndex y = x;
        for (std::size_t a = 0; a < mk; ++a) {
            y[k] = static_cast<std::uint32_t>(a);
            fv[a] = local(y);
        }
        return compute(fv);
    });
}

template <class Compute>
TabulatedFunction fiber_constant(const TabulatedFunction& src, std::size_t k, Compute&& compute) {
    if (src.dense()) return dense_fiber_constant(src, k, compute);
    return callback_fiber_constant(src, k, std::forward<Compute>(compute));
}

} // namespace detail

/// E_k[g]: the expectation over the k-th coordinate with all others held
/// fixed; a linear projection onto the k-independent sub-algebra.
inline ConditionalField conditional_expectation(const TabulatedFunction& g, std::size_t k) {
    g.space().check_coordinate(k);
    const std::vector<double>& probs = g.space().marginal(k).probs;
    auto mean = [probs](const std::vector<double>& fv) {
        double e = 0.0;
        for (std::size_t y = 0; y < fv.size(); ++y) e += probs[y] * fv[y];
        return e;
    };
    return ConditionalField(detail::fiber_constant(g, k, mean), k);
}

struct ConditionalThermal {
    ConditionalField expectation; // E_{k,beta f}[g]
    ConditionalField variance;    // sigma^2_{k,beta f}[g]
    ConditionalField entropy;     // S_{k,f}(beta)
};

/// Conditional thermal expectation and variance of g, and the conditional
/// entropy of f, all over the k-fibers with Gibbs weights e^{beta f}.
/// At beta = 0 this reduces to (E_k[g], sigma_k^2[g], 0).
inline ConditionalThermal conditional_thermal(const ThermalState& ts, const TabulatedFunction& g,
                                              std::size_t k) {
    detail::require_same_space(ts, g);
    const TabulatedFunction& f = ts.potential();
    const ProductSpace& s = f.space();
    s.check_coordinate(k);
    const double beta = ts.beta();
    const std::vector<double>& probs = s.marginal(k).probs;
    const std::vector<double>& log_probs = s.log_probs(k);
    const std::size_t mk = probs.size();

    if (f.dense() && g.dense() && s.dense_enumerable()) {
        const std::uint64_t stride = s.stride(k);
        const std::vector<double>& fvals = f.values();
        const std::vector<double>& gvals = g.values();
        std::vector<double> e_out(s.state_count()), v_out(s.state_count()), s_out(s.state_count());
        std::vector<double> fv(mk), gv(mk), w(mk);
        detail::for_each_fiber_class(s, k, [&](std::uint64_t base) {
            for (std::size_t y = 0; y < mk; ++y) {
                fv[y] = fvals[base + y * stride];
                gv[y] = gvals[base + y * stride];
            }
            double log_zk = 0.0;
            if (beta == 0.0) {
                std::copy(probs.begin(), probs.end(), w.begin());
            } else {
                log_zk = detail::fiber_gibbs(log_probs, fv, beta, w);
            }
            double eg = 0.0, ef = 0.0;
            for (std::size_t y = 0; y < mk; ++y) {
                eg += w[y] * gv[y];
                ef += w[y] * fv[y];
            }
            double var = 0.0;
            for (std::size_t y = 0; y < mk; ++y) {
                const double d = gv[y] - eg;
                var += w[y] * d * d;
            }
            const double ent = beta == 0.0 ? 0.0 : beta * ef - log_zk;
            for (std::size_t y = 0; y < mk; ++y) {
                const std::uint64_t i = base + y * stride;
                e_out[i] = eg;
                v_out[i] = var;
                s_out[i] = ent;
            }
        });
        return ConditionalThermal{
            ConditionalField(TabulatedFunction(f.space_ptr(), std::move(e_out)), k),
            ConditionalField(TabulatedFunction(f.space_ptr(), std::move(v_out)), k),
            ConditionalField(TabulatedFunction(f.space_ptr(), std::move(s_out)), k)};
    }

    // Callback mode: each field evaluates its own fiber on demand.
    const SpacePtr space = f.space_ptr();
    TabulatedFunction flocal = f, glocal = g;
    auto fiber_stats = [space, flocal, glocal, k, beta](const StateIndex& x, int which) {
        const std::vector<double>& pr = space->marginal(k).probs;
        const std::vector<double>& lpr = space->log_probs(k);
        const std::size_t m = pr.size();
        std::vector<double> fv(m), gv(m), w(m);
        StateIndex y = x;
        for (std::size_t a = 0; a < m; ++a) {
            y[k] = static_cast<std::uint32_t>(a);
            fv[a] = flocal(y);
            gv[a] = glocal(y);
        }
        double log_zk = 0.0;
        if (beta == 0.0) {
            std::copy(pr.begin(), pr.end(), w.begin());
        } else {
            log_zk = detail::fiber_gibbs(lpr, fv, beta, w);
        }
        double eg = 0.0, ef = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            eg += w[a] * gv[a];
            ef += w[a] * fv[a];
        }
        if (which == 0) return eg;
        if (which == 1) {
            double var = 0.0;
            for (std::size_t a = 0; a < m; ++a) {
                const double d = gv[a] - eg;
                var += w[a] * d * d;
            }
            return var;
        }
        return beta == 0.0 ? 0.0 : beta * ef - log_zk;
    };
    auto make = [&](int which) {
        return TabulatedFunction(space,
                                 [fiber_stats, which](const StateIndex& x) { return fiber_stats(x, which); });
    };
    return ConditionalThermal{ConditionalField(make(0), k), ConditionalField(make(1), k),
                              ConditionalField(make(2), k)};
}

struct ConditionalExtrema {
    ConditionalField sup;
    ConditionalField inf;
    ConditionalField range; // sup - inf, always >= 0
};

/// Exact fiber maxima/minima of g over the k-th coordinate.
inline ConditionalExtrema conditional_extrema(const TabulatedFunction& g, std::size_t k) {
    g.space().check_coordinate(k);
    auto maxv = [](const std::vector<double>& fv) { return *std::max_element(fv.begin(), fv.end()); };
    auto minv = [](const std::vector<double>& fv) { return *std::min_element(fv.begin(), fv.end()); };
    auto ran = [](const std::vector<double>& fv) {
        const auto [lo, hi] = std::minmax_element(fv.begin(), fv.end());
        return *hi - *lo;
    };
    return ConditionalExtrema{ConditionalField(detail::fiber_constant(g, k, maxv), k),
                              ConditionalField(detail::fiber_constant(g, k, minv), k),
                              ConditionalField(detail::fiber_constant(g, k, ran), k)};
}

struct DerivedStatistics {
    TabulatedFunction squared_range_sum;  // R^2(f) = sum_k ran_k(f)^2
    TabulatedFunction variance_sum;       // Sigma^2(f) = sum_k sigma_k^2[f]
    TabulatedFunction variance_proxy;     // Df = sum_k (f - inf_k f)^2
    TabulatedFunction centered_sq_sum;    // sum_k E_k[(f - inf_k f)^2]
};

/// The four per-state sensitivity statistics used by the tail bounds.
/// Dense input gives dense tables in one fused pass; callback input gives
/// callback functions that scan the fibers on demand.
inline DerivedStatistics derived_statistics(const TabulatedFunction& f) {
    const ProductSpace& s = f.space();
    const std::size_t n = s.dimension();

    if (f.dense() && s.dense_enumerable()) {
        const std::vector<double>& fvals = f.values();
        const std::size_t count = fvals.size();
        std::vector<double> r2(count, 0.0), s2(count, 0.0), d(count, 0.0), w(count, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const std::uint64_t stride = s.stride(k);
            const std::vector<double>& probs = s.marginal(k).probs;
            const std::size_t mk = probs.size();
            std::vector<double> fv(mk);
            detail::for_each_fiber_class(s, k, [&](std::uint64_t base) {
                double lo = std::numeric_limits<double>::infinity();
                double hi = -std::numeric_limits<double>::infinity();
                double mean = 0.0;
                for (std::size_t y = 0; y < mk; ++y) {
                    fv[y] = fvals[base + y * stride];
                    lo = std::min(lo, fv[y]);
                    hi = std::max(hi, fv[y]);
                    mean += probs[y] * fv[y];
                }
                double var = 0.0, wsum = 0.0;
                for (std::size_t y = 0; y < mk; ++y) {
                    const double dm = fv[y] - mean;
                    var += probs[y] * dm * dm;
                    const double dl = fv[y] - lo;
                    wsum += probs[y] * dl * dl;
                }
                const double range2 = (hi - lo) * (hi - lo);
                for (std::size_t y = 0; y < mk; ++y) {
                    const std::uint64_t i = base + y * stride;
                    r2[i] += range2;
                    s2[i] += var;
                    const double dl = fv[y] - lo;
                    d[i] += dl * dl;
                    w[i] += wsum;
                }
            });
        }
        const SpacePtr sp = f.space_ptr();
        return DerivedStatistics{TabulatedFunction(sp, std::move(r2)), TabulatedFunction(sp, std::move(s2)),
                                 TabulatedFunction(sp, std::move(d)), TabulatedFunction(sp, std::move(w))};
    }

    const SpacePtr space = f.space_ptr();
    TabulatedFunction local = f;
    // which: 0 -> R^2, 1 -> Sigma^2, 2 -> Df, 3 -> sum_k E_k (f - inf_k f)^2
    auto stat = [space, local](const StateIndex& x, int which) {
        double total = 0.0;
        const double fx = local(x);
        for (std::size_t k = 0; k < space->dimension(); ++k) {
            const std::vector<double>& probs = space->marginal(k).probs;
            const std::size_t mk = probs.size();
            StateIndex y = x;
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            double mean = 0.0;
            std::vector<double> fv(mk);
            for (std::size_t a = 0; a < mk; ++a) {
                y[k] = static_cast<std::uint32_t>(a);
                fv[a] = local(y);
                lo = std::min(lo, fv[a]);
                hi = std::max(hi, fv[a]);
                mean += probs[a] * fv[a];
            }
            switch (which) {
                case 0: total += (hi - lo) * (hi - lo); break;
                case 1: {
                    double var = 0.0;
                    for (std::size_t a = 0; a < mk; ++a) {
                        const double dm = fv[a] - mean;
                        var += probs[a] * dm * dm;
                    }
                    total += var;
                    break;
                }
                case 2: total += (fx - lo) * (fx - lo); break;
                default: {
                    double wsum = 0.0;
                    for (std::size_t a = 0; a < mk; ++a) {
                        const double dl = fv[a] - lo;
                        wsum += probs[a] * dl * dl;
                    }
                    total += wsum;
                }
            }
        }
        return total;
    };
    auto make = [&](int which) {
        return TabulatedFunction(space, [stat, which](const StateIndex& x) { return stat(x, which); });
    };
    return DerivedStatistics{make(0), make(1), make(2), make(3)};
}

} // namespace thermotail
