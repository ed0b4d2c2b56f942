#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gdepth {

// Deterministic Gaussian/uniform source: mt19937_64 + explicit Box-Muller.
// std::normal_distribution's algorithm is implementation-defined, so results
// would differ across standard libraries; spelling the transform out keeps
// every seeded artifact reproducible anywhere.
class GaussianSource {
  public:
    explicit GaussianSource(uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0);
    }

    // Uniform integer in [0, n).
    uint64_t uniform_index(uint64_t n) {
        // Rejection-free modulo is fine here: n is tiny against 2^64, the
        // bias is ~n/2^64 and nothing statistical depends on it.
        return engine_() % n;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] so the log is finite.
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    void fill_normal(double* out, size_t n) {
        for (size_t i = 0; i < n; ++i) out[i] = normal();
    }

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace gdepth
