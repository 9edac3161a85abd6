#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace mpvad {

// ============================================================================
// Deterministic PRNG
//
// std::mt19937 is portable but the standard distributions are not; every
// stream here is fully specified arithmetic so results are identical across
// compilers and platforms. splitmix64 seeds an xoshiro256** state machine.
// ============================================================================

namespace detail {
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
inline uint64_t rotl64(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace detail

class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t s = seed;
        for (auto& w : state_) w = detail::splitmix64(s);
    }

    uint64_t next_u64() {
        uint64_t* s = state_;
        uint64_t result = detail::rotl64(s[1] * 5, 7) * 9;
        uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = detail::rotl64(s[3], 45);
        return result;
    }

    // Uniform integer in [0, n), n > 0. Rejection-free bias is fine here
    // (n << 2^64), but keep it exact with rejection sampling anyway.
    uint64_t next_below(uint64_t n) {
        uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Integer in [lo, hi] inclusive.
    int64_t next_int(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(next_below(static_cast<uint64_t>(hi - lo + 1)));
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Standard normal via Box-Muller. Used only for weight noise in tests and
    // loss-network randomization; dataset generation sticks to integer math.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = next_double();
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    template <typename It>
    void shuffle(It first, It last) {
        auto n = static_cast<uint64_t>(last - first);
        for (uint64_t i = n; i > 1; --i) {
            uint64_t j = next_below(i);
            std::swap(first[i - 1], first[j]);
        }
    }

private:
    uint64_t state_[4];
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Derives an independent child seed from a root seed and a label. Every
// module consumes its own stream so adding a consumer never shifts another.
inline uint64_t derive_seed(uint64_t root, const std::string& label) {
    uint64_t h = root ^ 0x51f35db2u;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;  // FNV-1a step
    }
    uint64_t s = h;
    return detail::splitmix64(s);
}

inline uint64_t derive_seed(uint64_t root, const std::string& label, uint64_t index) {
    return derive_seed(root ^ (0x9e3779b97f4a7c15ULL * (index + 1)), label);
}

}  // namespace mpvad
