// Deterministic randomness: a counter-based hash RNG for the simulator and a
// small sequential generator for catalog synthesis.
//
// The simulator draws every random quantity as a pure function of
// (seed, stream, counter, ...) so that two runs differing only in sinking or
// treatment consume identical randomness. This is what makes twin runs share
// demand shocks (the common-random-numbers contract).
#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>
#include <utility>
#include <vector>

namespace cipsm {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return hash_mix(hash_mix(a, b), c);
}

inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
    return hash_mix(hash_mix(a, b, c), d);
}

// Uniform in [0, 1) from the top 53 bits.
inline double u01(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * (1.0 / 9007199254740992.0);
}

// Standard Gumbel(0,1) via inverse CDF; input clamped away from 0 and 1.
inline double gumbel_from_u01(double u) {
    constexpr double eps = 1e-12;
    if (u < eps) u = eps;
    if (u > 1.0 - eps) u = 1.0 - eps;
    return -std::log(-std::log(u));
}

// Sequential generator for one-shot synthesis (catalogs, graph fixtures).
// splitmix64 stream; normal deviates via Box-Muller so the output does not
// depend on a standard library's distribution implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    double uniform() { return u01(next_u64()); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // One integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    double normal(double mean = 0.0, double stddev = 1.0) {
        constexpr double eps = 1e-300;
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < eps) u1 = eps;
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
    }

    double lognormal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace cipsm
