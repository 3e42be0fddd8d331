#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "stubmatch/errors.hpp"

namespace stubmatch {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Deterministic random source. Every distribution transform is implemented on
// top of the raw 64-bit stream so a seed and call sequence pin the output
// exactly; std:: distribution adapters are avoided because their algorithms
// are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    // Unbiased uniform in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw invalid_parameter("uniform_int: n must be positive");
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Exact Poisson sampling: product-of-uniforms inversion for small means,
    // Hormann's PTRS transformed rejection for large ones.
    long long poisson(double mean) {
        if (!(mean >= 0.0) || !std::isfinite(mean))
            throw invalid_parameter("poisson: mean must be finite and non-negative");
        if (mean == 0.0) return 0;
        if (mean < 10.0) {
            const double limit = std::exp(-mean);
            long long k = 0;
            double p = 1.0;
            do {
                ++k;
                p *= uniform01();
            } while (p > limit);
            return k - 1;
        }
        const double b = 0.931 + 2.53 * std::sqrt(mean);
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        const double log_mean = std::log(mean);
        for (;;) {
            const double u = uniform01() - 0.5;
            const double v = uniform01();
            const double us = 0.5 - std::fabs(u);
            const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= v_r) return static_cast<long long>(kf);
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            const long long k = static_cast<long long>(kf);
            const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
            const double rhs = kf * log_mean - mean - std::lgamma(kf + 1.0);
            if (lhs <= rhs) return k;
        }
    }

    // Fisher-Yates.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Independent child stream; advances this stream by one draw.
    Rng fork() { return Rng(splitmix64(next_u64())); }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
};

}  // namespace stubmatch
