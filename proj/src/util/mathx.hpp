#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>

// Deterministic math helpers. Simulation trajectories and golden-image tests
// must be bit-identical across platforms, and libm's sin/cos/exp are not
// (last-ulp differences between implementations). Everything here is built
// from IEEE-exact primitives (+, -, *, /, fmod, sqrt, floor) only.

namespace forager {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 6.28318530717958647692;

namespace detail {

// Cody-Waite split of pi/2.
inline constexpr double kPio2Hi = 1.57079632679489655800e+00;
inline constexpr double kPio2Lo = 6.12323399573676603587e-17;

// Taylor polynomials on |r| <= pi/4 + small slack; error < 1e-13.
inline double sin_poly(double r) {
    const double r2 = r * r;
    double p = 1.0 / 6227020800.0;           // 1/13!
    p = p * r2 - 1.0 / 39916800.0;           // 1/11!
    p = p * r2 + 1.0 / 362880.0;             // 1/9!
    p = p * r2 - 1.0 / 5040.0;               // 1/7!
    p = p * r2 + 1.0 / 120.0;                // 1/5!
    p = p * r2 - 1.0 / 6.0;                  // 1/3!
    return r + r * r2 * p;
}

inline double cos_poly(double r) {
    const double r2 = r * r;
    double p = 1.0 / 87178291200.0;          // 1/14!
    p = p * r2 - 1.0 / 479001600.0;          // 1/12!
    p = p * r2 + 1.0 / 3628800.0;            // 1/10!
    p = p * r2 - 1.0 / 40320.0;              // 1/8!
    p = p * r2 + 1.0 / 720.0;                // 1/6!
    p = p * r2 - 1.0 / 24.0;                 // 1/4!
    p = p * r2 + 1.0 / 2.0;                  // 1/2!
    return 1.0 - r2 * p;
}

inline int quadrant_reduce(double x, double& r) {
    x = std::fmod(x, kTwoPi); // fmod is exactly rounded, hence deterministic
    const double k = std::floor(x / kPio2Hi + 0.5);
    r = (x - k * kPio2Hi) - k * kPio2Lo;
    const int q = static_cast<int>(k);
    return ((q % 4) + 4) % 4;
}

} // namespace detail

inline double det_sin(double x) {
    double r;
    switch (detail::quadrant_reduce(x, r)) {
        case 0: return detail::sin_poly(r);
        case 1: return detail::cos_poly(r);
        case 2: return -detail::sin_poly(r);
        default: return -detail::cos_poly(r);
    }
}

inline double det_cos(double x) {
    double r;
    switch (detail::quadrant_reduce(x, r)) {
        case 0: return detail::cos_poly(r);
        case 1: return -detail::sin_poly(r);
        case 2: return -detail::cos_poly(r);
        default: return detail::sin_poly(r);
    }
}

// --- Integer hashing ---

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) {
    return splitmix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

inline uint64_t fnv1a64(const void* data, size_t len, uint64_t seed = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace forager
