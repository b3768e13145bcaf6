#pragma once

// Deterministic random source. Distribution tails are generated from raw
// mt19937_64 output with explicit arithmetic so that streams do not depend
// on standard-library distribution internals.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace hamflow {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform01() {
        // 53 mantissa bits, in [0, 1)
        return double(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01(), u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    std::uint64_t integer(std::uint64_t n) { // uniform in [0, n)
        const std::uint64_t lim = std::numeric_limits<std::uint64_t>::max() -
                                  std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x = eng_();
        while (x >= lim) x = eng_();
        return x % n;
    }

    std::uint64_t raw() { return eng_(); }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace hamflow
