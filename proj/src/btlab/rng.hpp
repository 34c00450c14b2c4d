#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace btlab {

// splitmix64 finalizer. Bijective mixer used for seed derivation.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Substream split function. Stream `index` of a master seed is
//   mix64(mix64(master) ^ mix64((index + 1) * 0x9E3779B97F4A7C15)).
// Substreams are random-access, so per-path work can run on any number of
// workers without changing results.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(mix64(master) ^ mix64((index + 1) * 0x9E3779B97F4A7C15ull));
}

// Seeded generator: std::mt19937_64 for raw 64-bit draws (fully specified by
// the standard), uniforms as (x >> 11) * 2^-53, Gaussians via the Marsaglia
// polar transform. Bit-reproducible for a fixed build; cross-implementation
// equality is not promised.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1).
    double uniform01() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal, Marsaglia polar method.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    // Uniform integer in [0, n), rejection sampled to avoid modulo bias.
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % n;
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace btlab
