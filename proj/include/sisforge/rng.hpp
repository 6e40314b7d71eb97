// SPDX-License-Identifier: Apache-2.0
//
// Seeded random streams. std::mt19937_64 is bit-exact across platforms,
// and the Gaussian draw is our own Box-Muller on top of it, so every
// stream is reproducible from (base seed, stream id, realization index)
// regardless of compiler, stdlib, or thread count.

#ifndef SISFORGE_RNG_HPP
#define SISFORGE_RNG_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace sisforge {

// Logical sub-streams of one experiment seed. Training and evaluation
// channels live in disjoint namespaces by construction.
enum class Stream : std::uint64_t {
    phase_init = 1,
    train_channel = 2,
    train_noise = 3,
    train_symbols = 4,
    eval_channel = 5,
    eval_noise = 6,
    eval_symbols = 7,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// One seed per (experiment seed, stream).
inline std::uint64_t stream_seed(std::uint64_t base, Stream s) {
    return splitmix64(base ^ (0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(s) + 1)));
}

// Per-realization derived seed: stream seed XOR realization index, so
// parallel and serial sampling agree exactly.
inline std::uint64_t realization_seed(std::uint64_t stream, std::uint64_t index) {
    return stream ^ index;
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform on [0, hi).
    double uniform(double hi) { return uniform01() * hi; }

    // Uniform integer in [0, n).
    std::uint32_t uniform_index(std::uint32_t n) {
        // Rejection-free scaling is fine here: n is tiny (constellation
        // sizes, element counts), bias is < n / 2^64.
        return static_cast<std::uint32_t>((static_cast<unsigned __int128>(engine_()) * n) >> 64);
    }

    // Standard normal pair via Box-Muller (fixed consumption: two u64 per pair).
    void normal_pair(double &a, double &b) {
        double u1 = uniform01();
        double u2 = uniform01();
        // Guard u1 = 0; log(0) is the only hazard.
        if (u1 <= 0.0)
            u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        a = r * std::cos(2.0 * M_PI * u2);
        b = r * std::sin(2.0 * M_PI * u2);
    }

    // Circular complex Gaussian with E[|z|^2] = 1.
    std::complex<double> normal_complex_unit() {
        double a, b;
        normal_pair(a, b);
        return {a * M_SQRT1_2, b * M_SQRT1_2};
    }

  private:
    std::mt19937_64 engine_;
};

} // namespace sisforge

#endif
