#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace thermotail {

/// Thrown when an operation needs to visit every state of a space whose
/// state count exceeds the configured enumeration limit.
class EnumerationLimitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One coordinate of a product space: a finite set of labelled atoms with
/// strictly positive probabilities summing to one.
struct Marginal {
    std::vector<std::string> atoms;
    std::vector<double> probs;

    Marginal(std::vector<std::string> atoms_in, std::vector<double> probs_in)
        : atoms(std::move(atoms_in)), probs(std::move(probs_in)) {
        if (atoms.empty()) throw std::invalid_argument("marginal: atoms must be non-empty");
        if (atoms.size() != probs.size())
            throw std::invalid_argument("marginal: atoms and probs must have equal length");
        double sum = 0.0;
        for (double p : probs) {
            if (!(p > 0.0) || !std::isfinite(p))
                throw std::invalid_argument("marginal: probabilities must be strictly positive and finite");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("marginal: probabilities must sum to 1 within 1e-12");
    }

    std::size_t size() const { return atoms.size(); }
};

/// Index of one state of a product space: one atom index per coordinate.
struct StateIndex {
    std::vector<std::uint32_t> coords;

    StateIndex() = default;
    explicit StateIndex(std::vector<std::uint32_t> c) : coords(std::move(c)) {}
    explicit StateIndex(std::size_t n) : coords(n, 0) {}

    std::size_t size() const { return coords.size(); }
    std::uint32_t operator[](std::size_t k) const { return coords[k]; }
    std::uint32_t& operator[](std::size_t k) { return coords[k]; }
    bool operator==(const StateIndex& other) const { return coords == other.coords; }
};

inline constexpr std::uint64_t kDefaultEnumerationLimit = std::uint64_t{1} << 24;

/// A finite product probability space: n independent marginals.
///
/// Immutable after construction; all member functions are const and safe
/// to call concurrently. Instances are shared through shared_ptr (see
/// make_space) so functions on the space can hold cheap references.
class ProductSpace {
public:
    explicit ProductSpace(std::vector<Marginal> marginals,
                          std::uint64_t enumeration_limit = kDefaultEnumerationLimit)
        : marginals_(std::move(marginals)), limit_(enumeration_limit) {
        if (marginals_.empty()) throw std::invalid_argument("space: need at least one marginal");
        state_count_ = 1;
        for (const Marginal& m : marginals_) {
            const auto size = static_cast<std::uint64_t>(m.size());
            if (state_count_ > std::numeric_limits<std::uint64_t>::max() / size)
                throw std::overflow_error("space: state count overflows 64 bits");
            state_count_ *= size;
        }
        // Row-major strides, last coordinate fastest.
        strides_.assign(marginals_.size(), 1);
        for (std::size_t k = marginals_.size(); k-- > 1;)
            strides_[k - 1] = strides_[k] * marginals_[k].size();
        log_probs_.reserve(marginals_.size());
        for (const Marginal& m : marginals_) {
            std::vector<double> lp(m.size());
            for (std::size_t a = 0; a < m.size(); ++a) lp[a] = std::log(m.probs[a]);
            log_probs_.push_back(std::move(lp));
        }
    }

    ProductSpace(const ProductSpace&) = delete;
    ProductSpace& operator=(const ProductSpace&) = delete;

    std::size_t dimension() const { return marginals_.size(); }
    const Marginal& marginal(std::size_t k) const {
        check_coordinate(k);
        return marginals_[k];
    }
    std::uint64_t state_count() const { return state_count_; }
    std::uint64_t enumeration_limit() const { return limit_; }
    bool dense_enumerable() const { return state_count_ <= limit_; }

    void require_enumerable() const {
        if (!dense_enumerable())
            throw EnumerationLimitError("space: state count " + std::to_string(state_count_) +
                                        " exceeds enumeration limit " + std::to_string(limit_));
    }

    void check_coordinate(std::size_t k) const {
        if (k >= marginals_.size()) throw std::out_of_range("space: coordinate out of range");
    }

    std::uint64_t stride(std::size_t k) const { return strides_[k]; }

    std::uint64_t linear_index(const StateIndex& x) const {
        std::uint64_t i = 0;
        for (std::size_t k = 0; k < marginals_.size(); ++k) i += strides_[k] * x[k];
        return i;
    }

    StateIndex state_at(std::uint64_t linear) const {
        StateIndex x(marginals_.size());
        for (std::size_t k = 0; k < marginals_.size(); ++k) {
            x[k] = static_cast<std::uint32_t>((linear / strides_[k]) % marginals_[k].size());
        }
        return x;
    }

    double probability(const StateIndex& x) const {
        double p = 1.0;
        for (std::size_t k = 0; k < marginals_.size(); ++k) p *= marginals_[k].probs[x[k]];
        return p;
    }

    double log_probability(const StateIndex& x) const {
        double lp = 0.0;
        for (std::size_t k = 0; k < marginals_.size(); ++k) lp += log_probs_[k][x[k]];
        return lp;
    }

    const std::vector<double>& log_probs(std::size_t k) const { return log_probs_[k]; }

private:
    std::vector<Marginal> marginals_;
    std::uint64_t limit_;
    std::uint64_t state_count_ = 0;
    std::vector<std::uint64_t> strides_;
    std::vector<std::vector<double>> log_probs_;
};

using SpacePtr = std::shared_ptr<const ProductSpace>;

inline SpacePtr make_space(std::vector<Marginal> marginals,
                           std::uint64_t enumeration_limit = kDefaultEnumerationLimit) {
    return std::make_shared<const ProductSpace>(std::move(marginals), enumeration_limit);
}

/// Visits every state in row-major order (last coordinate fastest),
/// passing (linear index, state, probability). Probabilities are fresh
/// products along the recursion path, so no rounding drift accumulates.
template <class Fn>
void for_each_state(const ProductSpace& space, Fn&& fn) {
    space.require_enumerable();
    const std::size_t n = space.dimension();
    StateIndex x(n);
    std::uint64_t linear = 0;
    auto descend = [&](auto&& self, std::size_t k, double p) -> void {
        if (k == n) {
            fn(linear, static_cast<const StateIndex&>(x), p);
            ++linear;
            return;
        }
        const Marginal& m = space.marginal(k);
        for (std::uint32_t a = 0; a < m.size(); ++a) {
            x[k] = a;
            self(self, k + 1, p * m.probs[a]);
        }
    };
    descend(descend, 0, 1.0);
}

/// Visits the k-fiber through x: every state obtained by replacing the
/// k-th coordinate, with the marginal weight of the replacement atom.
template <class Fn>
void for_each_fiber_state(const ProductSpace& space, const StateIndex& x, std::size_t k, Fn&& fn) {
    space.check_coordinate(k);
    StateIndex y = x;
    const Marginal& m = space.marginal(k);
    for (std::uint32_t a = 0; a < m.size(); ++a) {
        y[k] = a;
        fn(static_cast<const StateIndex&>(y), m.probs[a]);
    }
}

/// Range over all states yielding (StateIndex, probability) pairs.
class StateRange {
public:
    explicit StateRange(SpacePtr space) : space_(std::move(space)) {
        space_->require_enumerable();
    }

    class iterator {
    public:
        using value_type = std::pair<StateIndex, double>;

        iterator() : space_(nullptr), linear_(0) {}
        iterator(const ProductSpace* space, std::uint64_t linear) : space_(space), linear_(linear) {
            if (space_ && linear_ < space_->state_count()) state_ = space_->state_at(linear_);
        }

        value_type operator*() const { return {state_, space_->probability(state_)}; }

        iterator& operator++() {
            ++linear_;
            if (linear_ < space_->state_count()) {
                std::size_t j = space_->dimension();
                while (j-- > 0) {
                    if (++state_[j] < space_->marginal(j).size()) break;
                    state_[j] = 0;
                }
            }
            return *this;
        }

        bool operator==(const iterator& other) const { return linear_ == other.linear_; }
        bool operator!=(const iterator& other) const { return linear_ != other.linear_; }

    private:
        const ProductSpace* space_;
        std::uint64_t linear_;
        StateIndex state_;
    };

    iterator begin() const { return iterator(space_.get(), 0); }
    iterator end() const { return iterator(space_.get(), space_->state_count()); }

private:
    SpacePtr space_;
};

inline StateRange enumerate_states(SpacePtr space) { return StateRange(std::move(space)); }

/// Range over a k-fiber yielding (StateIndex, marginal weight) pairs.
class FiberRange {
public:
    FiberRange(SpacePtr space, StateIndex x, std::size_t k)
        : space_(std::move(space)), base_(std::move(x)), coord_(k) {
        space_->check_coordinate(k);
        if (base_.size() != space_->dimension())
            throw std::invalid_argument("fiber: state has wrong dimension");
    }

    class iterator {
    public:
        using value_type = std::pair<StateIndex, double>;

        iterator(const FiberRange* range, std::uint32_t atom) : range_(range), atom_(atom) {}

        value_type operator*() const {
            StateIndex y = range_->base_;
            y[range_->coord_] = atom_;
            return {std::move(y), range_->space_->marginal(range_->coord_).probs[atom_]};
        }

        iterator& operator++() {
            ++atom_;
            return *this;
        }
        bool operator!=(const iterator& other) const { return atom_ != other.atom_; }

    private:
        const FiberRange* range_;
        std::uint32_t atom_;
    };

    iterator begin() const { return iterator(this, 0); }
    iterator end() const {
        return iterator(this, static_cast<std::uint32_t>(space_->marginal(coord_).size()));
    }

private:
    friend class iterator;
    SpacePtr space_;
    StateIndex base_;
    std::size_t coord_;
};

inline FiberRange fiber(SpacePtr space, StateIndex x, std::size_t k) {
    return FiberRange(std::move(space), std::move(x), k);
}

/// A real-valued function on a product space. Dense mode stores one value
/// per state in row-major order; callback mode evaluates on demand and is
/// the only mode available beyond the enumeration limit.
class TabulatedFunction {
public:
    using Evaluator = std::function<double(const StateIndex&)>;

    TabulatedFunction(SpacePtr space, std::vector<double> values)
        : space_(std::move(space)) {
        space_->require_enumerable();
        if (values.size() != space_->state_count())
            throw std::invalid_argument("function: value table size must equal the state count");
        for (double v : values) {
            if (!std::isfinite(v)) throw std::invalid_argument("function: values must be finite");
        }
        values_ = std::make_shared<const std::vector<double>>(std::move(values));
    }

    TabulatedFunction(SpacePtr space, Evaluator eval)
        : space_(std::move(space)), eval_(std::move(eval)) {
        if (!eval_) throw std::invalid_argument("function: null evaluator");
    }

    /// Evaluates `eval` at every state and stores the results densely.
    static TabulatedFunction tabulate(const SpacePtr& space, const Evaluator& eval) {
        space->require_enumerable();
        std::vector<double> values(space->state_count());
        for_each_state(*space, [&](std::uint64_t i, const StateIndex& x, double) { values[i] = eval(x); });
        return TabulatedFunction(space, std::move(values));
    }

    bool dense() const { return values_ != nullptr; }

    double operator()(const StateIndex& x) const {
        if (values_) return (*values_)[space_->linear_index(x)];
        double v = eval_(x);
        if (!std::isfinite(v)) throw std::domain_error("function: evaluator produced a non-finite value");
        return v;
    }

    double at_linear(std::uint64_t i) const {
        if (values_) return (*values_)[i];
        return (*this)(space_->state_at(i));
    }

    const std::vector<double>& values() const {
        if (!values_) throw std::logic_error("function: value table requested in callback mode");
        return *values_;
    }

    const ProductSpace& space() const { return *space_; }
    const SpacePtr& space_ptr() const { return space_; }

    bool same_space(const TabulatedFunction& other) const {
        return space_.get() == other.space_.get();
    }

private:
    SpacePtr space_;
    std::shared_ptr<const std::vector<double>> values_ = nullptr;
    Evaluator eval_;
};

/// Dense copy of f (no-op when f is already dense).
inline TabulatedFunction densified(const TabulatedFunction& f) {
    if (f.dense()) return f;
    return TabulatedFunction::tabulate(f.space_ptr(), [&f](const StateIndex& x) { return f(x); });
}

/// E[g] = sum over states of mu(x) g(x). Requires dense enumerability.
inline double expectation(const TabulatedFunction& g) {
    g.space().require_enumerable();
    double sum = 0.0;
    if (g.dense()) {
        const std::vector<double>& v = g.values();
        for_each_state(g.space(), [&](std::uint64_t i, const StateIndex&, double p) { sum += p * v[i]; });
    } else {
        for_each_state(g.space(), [&](std::uint64_t, const StateIndex& x, double p) { sum += p * g(x); });
    }
    return sum;
}

/// Wraps a callback-mode function with a mutex-protected memo table keyed
/// by linear state index, so repeated fiber scans pay each state once.
inline TabulatedFunction memoized(const TabulatedFunction& f) {
    if (f.dense()) return f;
    struct Cache {
        std::mutex mutex;
        std::unordered_map<std::uint64_t, double> table;
    };
    auto cache = std::make_shared<Cache>();
    const SpacePtr space = f.space_ptr();
    TabulatedFunction inner = f;
    return TabulatedFunction(space, [cache, inner, space](const StateIndex& x) {
        const std::uint64_t key = space->linear_index(x);
        {
            std::lock_guard<std::mutex> lock(cache->mutex);
            auto it = cache->table.find(key);
            if (it != cache->table.end()) return it->second;
        }
        const double v = inner(x);
        std::lock_guard<std::mutex> lock(cache->mutex);
        cache->table.emplace(key, v);
        return v;
    });
}

} // namespace thermotail
