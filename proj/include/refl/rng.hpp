#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace refl {

// Deterministic random source. All transforms are written out against raw
// mt19937_64 output, whose sequence is pinned by the standard, so a given
// seed reproduces the same stream byte for byte on any platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // uniform on [0, 1)
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    // uniform on (0, 1)
    double uniform_open() {
        double u;
        do {
            u = uniform();
        } while (u <= 0.0);
        return u;
    }

    // standard exponential via inverse transform; -log1p(-u) maps [0,1) to
    // [0, inf) without ever taking log of zero
    double exponential() { return -std::log1p(-uniform()); }

    // standard normal, Box-Muller with the partner draw cached
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(2.0 * exponential());
        const double a = 6.283185307179586476925286766559 * uniform();
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Gamma(shape, 1), Marsaglia-Tsang squeeze for shape >= 1 and the
    // boosting identity Gamma(a) = Gamma(a+1) U^(1/a) below one.
    double gamma(double shape) {
        if (shape < 1.0)
            return gamma(shape + 1.0) *
                   std::pow(uniform_open(), 1.0 / shape);
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_open();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
                return d * v;
        }
    }

    double chi_square(double df) { return 2.0 * gamma(0.5 * df); }

    std::uint64_t raw() { return eng_(); }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Disjoint seed streams for replicated experiments: replicate k runs on
// seed + k.
inline std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t index) {
    return base + index;
}

} // namespace refl
