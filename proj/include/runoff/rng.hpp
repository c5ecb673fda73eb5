#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "runoff/errors.hpp"

namespace runoff {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stable 64-bit tag hash used to derive independent sub-seeds from a master
// seed. Seeds depend only on the (master, tags, index) tuple, never on
// scheduling order, so parallel runs reproduce sequential ones.
class SeedTag {
public:
    explicit SeedTag(std::uint64_t master) : state_(0xcbf29ce484222325ULL ^ splitmix64(master)) {}

    SeedTag& mix(std::string_view tag) {
        for (unsigned char c : tag) {
            state_ ^= c;
            state_ *= 0x100000001b3ULL;  // FNV-1a prime
        }
        state_ ^= 0xff;
        state_ *= 0x100000001b3ULL;
        return *this;
    }

    SeedTag& mix(std::uint64_t value) {
        for (int k = 0; k < 8; ++k) {
            state_ ^= (value >> (8 * k)) & 0xffU;
            state_ *= 0x100000001b3ULL;
        }
        return *this;
    }

    std::uint64_t seed() const { return splitmix64(state_); }

private:
    std::uint64_t state_;
};

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view a) {
    return SeedTag(master).mix(a).seed();
}
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view a, std::uint64_t idx) {
    return SeedTag(master).mix(a).mix(idx).seed();
}
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view a, std::string_view b) {
    return SeedTag(master).mix(a).mix(b).seed();
}
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view a, std::string_view b,
                                 std::string_view c) {
    return SeedTag(master).mix(a).mix(b).mix(c).seed();
}

// mt19937_64 with explicit sampling algorithms. The standard engine is
// bit-exact everywhere, but the standard <random> distributions are
// implementation-defined, so all transformations are written out here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1): 53 random mantissa bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform on (0, 1), safe as a log argument.
    double uniform_pos() {
        double u = uniform();
        return u > 0.0 ? u : 0x1.0p-53;
    }

    // Unbiased integer in [0, n).
    std::size_t index(std::size_t n) {
        if (n == 0) throw ArgumentError("Rng::index: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return static_cast<std::size_t>(x % n);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller; draws two uniforms per call.
    double normal() {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    double lognormal(double mu, double sigma) { return std::exp(mu + sigma * normal()); }

    // Marsaglia-Tsang squeeze; shape < 1 handled by boosting.
    double gamma(double shape, double scale) {
        if (!(shape > 0.0) || !(scale > 0.0))
            throw ArgumentError("Rng::gamma: shape and scale must be positive");
        if (shape < 1.0) {
            const double u = uniform_pos();
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double t = 1.0 + c * x;
            if (t <= 0.0) continue;
            const double v = t * t * t;
            const double u = uniform_pos();
            const double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2) return d * v * scale;
            if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v * scale;
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace runoff
