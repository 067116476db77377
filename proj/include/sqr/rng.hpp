#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "sqr/math_util.hpp"

namespace sqr {

/// Deterministic random stream. All samplers in the library draw through
/// this wrapper (never through std:: distributions, whose algorithms are
/// implementation-defined), so seeded pipelines are bit-reproducible.
///
/// Child streams are derived from the stored seed, not from engine state,
/// so derive() is order-free: worker i always gets the same stream no
/// matter which thread asks first.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed)
        : seed_(seed), eng_(splitmix64(seed)) {}

    /// Uniform double strictly inside (0, 1).
    double uniform01() {
        return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Exponential with the given rate (mean 1/rate).
    double exponential(double rate) {
        return -std::log(uniform01()) / rate;
    }

    /// Normal via Box-Muller (one value per pair of uniforms; stateless).
    double normal(double mean, double sd) {
        const double u1 = uniform01();
        const double u2 = uniform01();
        return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    std::uint64_t raw() { return eng_(); }

    std::uint64_t seed() const { return seed_; }

    /// Independent child stream identified by index.
    RandomStream derive(std::uint64_t index) const {
        return RandomStream(splitmix64(seed_ ^ (0xA076'1D64'78BD'642FULL * (index + 1))));
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 eng_;
};

}  // namespace sqr
