#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace l2dcd {

/// SplitMix64 finalizer. Used to derive independent stream seeds from keys.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Combine an ordered list of keys into one 64-bit seed.
constexpr std::uint64_t derive_seed(std::initializer_list<std::uint64_t> keys) noexcept {
    std::uint64_t h = 0x6a09e667f3bcc909ULL;
    for (auto k : keys) h = mix64(h ^ mix64(k));
    return h;
}

/// Portable seeded generator: std::mt19937_64 for the bit stream (its output
/// sequence is fixed by the standard) with distribution transforms written
/// here, since the std:: distributions are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Independent stream for a tuple of keys, e.g. (expert seed, pair id).
    static Rng keyed(std::initializer_list<std::uint64_t> keys) { return Rng(derive_seed(keys)); }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), unbiased (rejection sampling).
    std::uint64_t below(std::uint64_t n);

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller (one value per call; the pair's second half is cached).
    double normal();

    /// Laplace(0, scale) by inverse CDF.
    double laplace(double scale = 1.0);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace l2dcd
