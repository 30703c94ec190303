#pragma once

#include <cstdint>
#include <optional>
#include <random>

namespace gbl {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Combine several words into one seed; order-sensitive.
inline std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) noexcept {
    return splitmix64(splitmix64(splitmix64(a) ^ b) ^ c);
}

/// Seeded stream with platform-independent draws. The standard
/// distributions are implementation-defined, so draws are built directly
/// from mt19937_64 output. The engine is seeded on first use, since many
/// short-lived streams never draw.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed) {}

    std::uint64_t next() { return engine()(); }

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n), n > 0, rejection-sampled (unbiased).
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64& engine() {
        if (!engine_) engine_.emplace(seed_);
        return *engine_;
    }

    std::uint64_t seed_;
    std::optional<std::mt19937_64> engine_;
};

}  // namespace gbl
