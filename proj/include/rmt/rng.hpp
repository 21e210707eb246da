#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "rmt/errors.hpp"

namespace rmt {

// Deterministic random number generation ("rmt-rng v1").
//
// Core generator: SplitMix64 (Steele, Lea & Flood 2014) — a counter-based
// 64-bit generator whose output is a bijective hash of an additive counter.
// Stream derivation rule for parallel/per-trial streams:
//
//     state0(seed, stream) = mix64(mix64(seed) ^ mix64(stream + 0x9E3779B97F4A7C15))
//
// so any (seed, stream_id) pair yields an independent, reproducible sequence.
// All variate transforms below are hand-rolled on top of the raw 64-bit
// output; nothing depends on implementation-defined std:: distributions, so
// identical seeds give identical panels on any conforming toolchain.

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static SplitMix64 stream(std::uint64_t seed, std::uint64_t stream_id) {
        return SplitMix64(mix64(mix64(seed) ^ mix64(stream_id + GAMMA)));
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<std::uint64_t>::max(); }

    result_type operator()() {
        state_ += GAMMA;
        return mix64(state_);
    }

    /// Uniform double in [0, 1), 53 random bits.
    double uniform() {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in (0, 1) — safe as a log() argument.
    double uniform_pos() {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box–Muller; the pair's second variate is cached.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    /// Gamma(shape, 1) via Marsaglia–Tsang; shape-boost for shape < 1.
    double gamma(double shape) {
        if (shape <= 0.0)
            throw InvalidParameter("gamma shape must be positive");
        if (shape < 1.0) {
            const double u = uniform_pos();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_pos();
            if (u < 1.0 - 0.0331 * x * x * x * x)
                return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
                return d * v;
        }
    }

    /// Inverse-gamma(shape, scale): scale / Gamma(shape, 1).
    double inverse_gamma(double shape, double scale) {
        return scale / gamma(shape);
    }

private:
    static constexpr std::uint64_t GAMMA = 0x9E3779B97F4A7C15ULL;

    std::uint64_t state_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

} // namespace rmt
