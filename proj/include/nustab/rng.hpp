#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

#include <Eigen/Core>

namespace nustab {

// Counter-based generator (splitmix64 output function over seed + counter).
// Stateless apart from the counter, so sample i is the same no matter how many
// workers produced samples 0..i-1.  All randomized routines take one of these
// seeded from the experiment config.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t start = 0)
        : seed_(seed), counter_(start) {}

    static std::uint64_t mix(std::uint64_t seed, std::uint64_t counter) {
        std::uint64_t z = seed + counter * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() { return mix(seed_, counter_++); }

    // Uniform in [0, 1) with 53 random bits.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    // Box-Muller; consumes two uniforms per pair.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = next_unit();
        } while (u1 <= 0.0);
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    Eigen::VectorXd unit_vector(Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = next_gaussian();
        v.normalize();
        return v;
    }

    Eigen::VectorXcd unit_vector_complex(Eigen::Index n) {
        Eigen::VectorXcd v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double re = next_gaussian();
            const double im = next_gaussian();
            v[i] = std::complex<double>(re, im);
        }
        v.normalize();
        return v;
    }

  private:
    std::uint64_t seed_;
    std::uint64_t counter_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace nustab
