/**
 * @file rng.hpp
 * @brief Fixed, documented pseudo-random generator for reproducible fixtures.
 *
 * xorshift64* (Vigna 2016):
 *   x ^= x >> 12;  x ^= x << 25;  x ^= x >> 27;  return x * 0x2545F4914F6CDD1D
 * A zero seed is remapped to 0x9E3779B97F4A7C15. Doubles are drawn as the top
 * 53 bits scaled by 2^-53; gaussians use Box-Muller on two uniform draws.
 * Any implementation following these rules reproduces streams bit-exactly.
 */
#pragma once

#include <cmath>
#include <cstdint>

namespace lfb {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9E3779B97F4A7C15ull) {}

    std::uint64_t next_u64() {
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545F4914F6CDD1Dull;
    }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return n ? next_u64() % n : 0; }

    /// Standard normal via Box-Muller; consumes exactly two uniform draws.
    double gaussian() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

  private:
    std::uint64_t state_;
};

}  // namespace lfb
