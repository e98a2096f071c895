#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "cathkin/angles.hpp"

namespace cathkin {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seeded random stream for Monte Carlo trials.
///
/// Every draw is spelled out (Box-Muller for gaussians, explicit 53-bit
/// uniforms) so a given seed reproduces the same sequence on any platform,
/// independent of standard-library distribution internals. Study workers
/// derive one stream per (master seed, cell, trial), which makes results
/// independent of execution order.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static Rng for_trial(std::uint64_t master_seed, std::uint64_t cell, std::uint64_t trial) {
        const std::uint64_t mixed =
            splitmix64(splitmix64(splitmix64(master_seed) ^ (cell + 1)) ^ (trial + 1));
        return Rng(mixed);
    }

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    /// Zero-mean gaussian; consumes exactly two uniforms per call.
    double gaussian(double sigma) {
        const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        const double u2 = uniform();
        return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace cathkin
