#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace excursor {

// All stochastic paths in the library draw from one named generator stack:
// stream seeds are derived with splitmix64 hashing, the stream itself is
// std::mt19937_64 (output pinned by the C++ standard), and normal deviates
// come from the Marsaglia polar transform on 53-bit uniforms. Distribution
// code is spelled out here rather than taken from <random> because the
// standard leaves distribution algorithms implementation-defined, which
// would break bit-reproducibility of outputs.
inline constexpr std::string_view kRngVersion = "splitmix64+mt19937_64+polar/1";

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Folds one component into a seed. Chain calls to derive independent
/// sub-streams, e.g. derive(derive(seed, "rr"), m) for realization m.
inline constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t part) noexcept {
    return splitmix64(seed ^ splitmix64(part));
}

inline constexpr std::uint64_t derive(std::uint64_t seed, std::string_view part) noexcept {
    return derive(seed, fnv1a64(part));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Unbiased uniform integer in [0, bound) via rejection.
    std::uint64_t uniform_below(std::uint64_t bound) {
        if (bound == 0) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % bound;
    }

    /// Standard normal deviate (Marsaglia polar method, pair-cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace excursor
