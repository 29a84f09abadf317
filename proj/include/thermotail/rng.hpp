#pragma once

#include <cstdint>

namespace thermotail {

/// Counter-based pseudo-random bits built from the SplitMix64 finalizer.
///
/// All randomness in the library is derived from explicit 64-bit keys so
/// that every result is reproducible and independent of evaluation order.
/// Monte Carlo draws are keyed by (seed, sample index, coordinate index),
/// which makes sample streams splittable: any subset of samples can be
/// regenerated without running through the whole stream.
namespace rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

/// SplitMix64 finalizer: bijective avalanche mix of a 64-bit word.
inline std::uint64_t mix(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Stateless hash of a (seed, sample, coordinate) triple.
inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t sample, std::uint64_t coordinate) {
    std::uint64_t h = mix(seed);
    h = mix(h ^ sample);
    h = mix(h ^ coordinate);
    return h;
}

/// Maps 64 random bits to a double in [0, 1).
inline double to_unit(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double unit_from(std::uint64_t seed, std::uint64_t sample, std::uint64_t coordinate) {
    return to_unit(counter_hash(seed, sample, coordinate));
}

/// Sequential SplitMix64 stream, used where a plain deterministic
/// sequence is enough (e.g. random test-instance generation).
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += kGolden;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double unit() { return to_unit(next()); }

    /// Uniform integer in {0, ..., n-1}. Modulo bias is negligible for the
    /// small n used here and keeps the mapping trivially portable.
    std::uint64_t below(std::uint64_t n) { return next() % n; }

private:
    std::uint64_t state_;
};

} // namespace rng
} // namespace thermotail
