#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace fpk {

// SplitMix64 finalizer, used to derive independent stream seeds from a
// master seed. Streams with distinct indices are statistically independent.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(splitmix64(master) ^ (stream * 0xd6e8feb86659fd93ULL + 1));
}

// Seeded generator with fixed, documented variate algorithms so results are
// reproducible bit-for-bit for a given seed:
//  - engine: std::mt19937_64 (output sequence fixed by the standard)
//  - uniform: 53-bit mantissa scaling, (x >> 11) * 2^-53 in [0, 1)
//  - normal: Marsaglia polar method with one cached variate
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        cached_ = v * f;
        has_cached_ = true;
        return u * f;
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // rejection sampling to avoid modulo bias
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % n;
    }

private:
    std::mt19937_64 eng_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace fpk
