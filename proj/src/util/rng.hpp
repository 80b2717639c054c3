#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include "util/mathx.hpp"

namespace forager {

// mt19937_64 with explicit draw algorithms. std::uniform_*_distribution is
// implementation-defined, which would break cross-platform reproducibility;
// the engine's output sequence itself is fully standardized.
class Rng {
  public:
    Rng() : eng_(0x853c49e6748fea9bULL) {}
    explicit Rng(uint64_t seed) : eng_(seed) {}

    void seed(uint64_t s) { eng_.seed(s); }

    uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform in [0, n) via widening multiply.
    uint64_t uniform_int(uint64_t n) {
        return static_cast<uint64_t>((static_cast<__uint128_t>(eng_()) * n) >> 64);
    }

    // Box-Muller; fresh pair each call, no cached spare.
    double gaussian() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * det_cos(kTwoPi * u2);
    }

    std::string save_state() const {
        std::ostringstream os;
        os << eng_;
        return os.str();
    }

    void load_state(const std::string& s) {
        std::istringstream is(s);
        is >> eng_;
    }

    bool operator==(const Rng& other) const { return eng_ == other.eng_; }

  private:
    std::mt19937_64 eng_;
};

// Stable seed derivation for workers / repeats / episode resets.
inline uint64_t derive_seed(uint64_t base, uint64_t stream, uint64_t index = 0) {
    return splitmix64(hash_combine(hash_combine(base, stream), index));
}

} // namespace forager
