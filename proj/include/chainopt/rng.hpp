#pragma once

#include <cstdint>
#include <random>

namespace chainopt {

/// SplitMix64 finalizer. Bijective mixing of a 64-bit word.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derives the seed for sub-stream `index` of a master seed. Used by the
/// harness to give trial t of every algorithm the same per-trial seed.
constexpr std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return mix64(master ^ mix64(index));
}

/// Deterministic random source. Wraps std::mt19937_64 (bit-exact engine by
/// the standard) with hand-rolled uniform draws so that a given 64-bit seed
/// produces the same stream on every platform and standard library.
class Rng {
 public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1), 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n), unbiased (multiply-shift with rejection).
    /// n must be > 0.
    std::uint64_t bounded(std::uint64_t n) {
        unsigned __int128 product = static_cast<unsigned __int128>(engine_()) * n;
        auto low = static_cast<std::uint64_t>(product);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n; // 2^64 mod n
            while (low < threshold) {
                product = static_cast<unsigned __int128>(engine_()) * n;
                low = static_cast<std::uint64_t>(product);
            }
        }
        return static_cast<std::uint64_t>(product >> 64);
    }

    /// Uniform integer in the inclusive range [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(
                        bounded(static_cast<std::uint64_t>(hi - lo) + 1));
    }

 private:
    std::mt19937_64 engine_;
};

} // namespace chainopt
