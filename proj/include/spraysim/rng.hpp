#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

// Self-contained PRNG and samplers. The standard <random> distributions are
// implementation-defined, which would break the byte-identical reproducibility
// contract, so everything random in this library flows through this header.

namespace spraysim {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++ seeded via splitmix64.
class Rng {
  public:
    explicit Rng(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // [0, 1), 53-bit resolution
    double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller; consumes two uniforms, returns one variate.
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    double exponential() {
        double u = uniform01();
        while (u <= 0.0) u = uniform01();
        return -std::log(u);
    }

    // median * exp(sigma_log * z)
    double lognormal_from_median(double median, double sigma_log) {
        return median * std::exp(sigma_log * normal());
    }

    // Exact Poisson via exponential inter-arrivals; cost is O(lambda) which is
    // fine for the small rates this library draws (false-positive counts).
    uint64_t poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        uint64_t n = 0;
        double acc = exponential();
        while (acc <= lambda) {
            ++n;
            acc += exponential();
        }
        return n;
    }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
};

// Derive an independent stream from a root seed and a path of stream ids,
// e.g. (seed, {kStreamDetector, frame_index}).
inline Rng derive_rng(uint64_t seed, std::initializer_list<uint64_t> path) {
    uint64_t state = seed ^ 0x5851f42d4c957f2dULL;
    splitmix64(state);
    for (uint64_t p : path) {
        state ^= splitmix64(state) ^ (p * 0x9e3779b97f4a7c15ULL);
        splitmix64(state);
    }
    return Rng(state);
}

inline constexpr uint64_t kStreamDetector = 0xDE7EC7;
inline constexpr uint64_t kStreamDeposition = 0xD20917;

}  // namespace spraysim
