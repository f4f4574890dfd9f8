#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace dcf {

// Deterministic named-stream generator. Every consumer derives its stream from
// (global seed, stable stream name), so independent modules can draw in any
// order (or in parallel) without perturbing each other's sequences.
class Rng {
public:
    Rng(std::uint64_t seed, std::string_view stream)
        : engine_(mix(seed ^ fnv1a(stream))) {}

    explicit Rng(std::uint64_t raw_state) : engine_(raw_state) {}

    // Uniform on [0,1), 53-bit resolution, never exactly 0.
    double uniform() {
        double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; one normal per call keeps the stream layout obvious.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Marsaglia-Tsang for shape >= 1, boosted below 1. Unit scale.
    double gamma(double shape) {
        if (shape < 1.0) {
            double u = uniform();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double exponential() { return -std::log(uniform()); }

    // Integer in [0, n).
    std::uint64_t index(std::uint64_t n) {
        // Rejection-free modulo is biased for huge n; n here is always << 2^53.
        return engine_() % n;
    }

    std::uint64_t raw() { return engine_(); }

    static std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        return h;
    }

private:
    static constexpr double kPi = 3.14159265358979323846;

    // splitmix64 finalizer; decorrelates nearby seeds before feeding mt19937_64.
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    std::mt19937_64 engine_;
};

}  // namespace dcf
