#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace cwnet {

// Deterministic PRNG used throughout the simulator. xoshiro256++ seeded via
// splitmix64 so that every (component, purpose, index) tuple owns a disjoint
// stream and parallel sweeps reproduce serial results byte for byte.
// Derivation: seed = splitmix chain over (master, fnv1a(name), a, b); see
// docs/formats.md.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
        has_cached_ = false;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        // Multiply-shift rejection-free mapping; bias < 2^-64, irrelevant here.
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller. Caches the second variate.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4]{};
    bool has_cached_ = false;
    double cached_ = 0.0;
};

// Named deterministic stream factory. Streams for distinct (name, a, b)
// tuples are independent for all practical purposes; identical tuples always
// reproduce the identical sequence.
class StreamFactory {
  public:
    explicit StreamFactory(std::uint64_t master_seed) : master_(master_seed) {}

    std::uint64_t master_seed() const { return master_; }

    std::uint64_t derive(std::string_view name, std::uint64_t a = 0, std::uint64_t b = 0) const {
        std::uint64_t state = master_ ^ 0xA5A5A5A55A5A5A5AULL;
        state ^= splitmix64(state) + fnv1a64(name);
        state ^= splitmix64(state) + a;
        state ^= splitmix64(state) + b;
        return splitmix64(state);
    }

    Rng stream(std::string_view name, std::uint64_t a = 0, std::uint64_t b = 0) const {
        return Rng(derive(name, a, b));
    }

  private:
    std::uint64_t master_;
};

}  // namespace cwnet
