#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace doatrack {

/// Seeded random stream with portable derived draws.
///
/// The core engine is std::mt19937_64, whose output is fully specified by the
/// standard, and every derived distribution below is implemented from raw
/// 64-bit words rather than the implementation-defined std::*_distribution
/// adapters. A given seed therefore produces the same sample sequence on
/// every platform and standard library.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t bits() { return engine_(); }

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Standard normal via Box-Muller. Consumes two uniforms per draw; the
    /// second variate is discarded to keep the stream position predictable.
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    /// Poisson count by multiplicative inversion (Knuth). Intended for the
    /// small rates used by the clutter and birth models.
    int poisson(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        double p = 1.0;
        int k = 0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

    /// Uniform integer in [0, n).
    std::uint64_t index(std::uint64_t n) { return engine_() % n; }

private:
    std::mt19937_64 engine_;
};

}  // namespace doatrack
