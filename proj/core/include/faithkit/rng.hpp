#ifndef FAITHKIT_RNG_HPP
#define FAITHKIT_RNG_HPP

#include <cstdint>

namespace faithkit {

/// Deterministic 64-bit generator (splitmix64). Used everywhere a seeded
/// stream is required so results do not depend on the standard library's
/// distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) {
        // Rejection-free modulo is fine here: n is tiny relative to 2^64.
        return next_u64() % n;
    }

private:
    std::uint64_t state_;
};

/// Derives an independent stream for (seed, index) pairs, e.g. one generator
/// per evaluated example, so results do not depend on traversal or worker
/// order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index,
                                 std::uint64_t salt = 0) {
    Rng mix(seed ^ (0x632be59bd9b4e019ULL * (index + 1)) ^ salt);
    return mix.next_u64();
}

} // namespace faithkit

#endif
