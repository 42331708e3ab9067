#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace qa {

// Seedable, splittable random stream. The engine is std::mt19937_64 (its
// output sequence is fully specified by the standard); the variate mappings
// below are implemented here rather than with std:: distributions so that a
// (seed, stream) pair reproduces the same draws on every platform, up to
// floating-point evaluation of exp/log/sqrt.
//
// Streams are derived from a base seed with a SplitMix64 mix of the stream
// id, so independent chains/walkers get decorrelated generators.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : engine_(mix(seed, stream)) {}

    // Derive an independent stream from the same logical seed.
    Rng split(std::uint64_t stream) const { return Rng(base_, stream); }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Multiply-shift; bias < 2^-64, irrelevant here.
    std::uint64_t uniform_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(engine_()) * n) >> 64);
    }

    // Fair +-1.
    int spin() { return (engine_() >> 63) ? -1 : +1; }

    bool bernoulli(double p) { return uniform01() < p; }

    // Standard normal via Box-Muller (one value cached).
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
        base_ = seed;
        std::uint64_t s = seed;
        std::uint64_t a = splitmix64(s);
        s ^= stream * 0xda942042e4dd58b5ULL;
        std::uint64_t b = splitmix64(s);
        return a ^ (b + 0x9e3779b97f4a7c15ULL);
    }

    std::uint64_t base_ = 0;
    std::mt19937_64 engine_;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace qa
