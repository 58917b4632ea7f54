#pragma once

#include <bit>
#include <cmath>
#include <cstdint>

#include "simd/poly.hpp"
#include "tesl/rng.hpp"
#include "tesl/simd/kernels.hpp"

// Scalar building blocks shared by the reference kernels and the AVX2 tails.
namespace tesl::simd::scalar {

inline double uniform_at(std::uint64_t key, std::uint64_t counter) {
  const std::uint64_t bits = mix64(key + counter * kGolden);
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1p-52;
}

// Natural log for u in (0, 1]; mirrors log_avx2 operation for operation.
inline double log_poly(double u) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(u);
  double e = static_cast<double>((bits >> 52) & 0x7ff) - 1023.0;
  double m = std::bit_cast<double>((bits & 0x000fffffffffffffULL) | 0x3ff0000000000000ULL);
  if (m > poly::kSqrt2) {
    m = m * 0.5;
    e = e + 1.0;
  }
  const double s = (m - 1.0) / (m + 1.0);
  const double s2 = s * s;
  double p = poly::kLogCoef[0];
  for (int i = 1; i < 9; ++i) p = p * s2 + poly::kLogCoef[i];
  return e * poly::kLn2 + (2.0 * s) * p;
}

// cos and sin of 2 pi v.
inline void sincos_turns(double v, double& c, double& s) {
  const double q = std::floor(v * 4.0 + 0.5);
  const double r = v - q * 0.25;
  const double x = r * poly::kTwoPi;
  const double x2 = x * x;
  double sp = poly::kSinCoef[0];
  for (int i = 1; i < 8; ++i) sp = sp * x2 + poly::kSinCoef[i];
  sp = sp * x;
  double cp = poly::kCosCoef[0];
  for (int i = 1; i < 9; ++i) cp = cp * x2 + poly::kCosCoef[i];

  const int quadrant = static_cast<int>(q) & 3;
  const bool swap = quadrant == 1 || quadrant == 3;
  c = swap ? sp : cp;
  s = swap ? cp : sp;
  if (quadrant == 1 || quadrant == 2) c = -c;
  if (quadrant == 2 || quadrant == 3) s = -s;
}

struct Terms {
  double jaa, jam, jas, jmm, jms, jss, ra, rm, rs, rr;
};

inline Terms gauss_terms(double x, double y, double amp, double mean, double inv_sigma) {
  const double d = x - mean;
  const double z = d * inv_sigma;
  const double g = exp_poly(-0.5 * (z * z));
  const double f = amp * g;
  const double r = y - f;
  const double da = g;
  const double dm = (f * z) * inv_sigma;
  const double ds = (f * (z * z)) * inv_sigma;
  return {da * da, da * dm, da * ds, dm * dm, dm * ds, ds * ds, da * r, dm * r, ds * r, r * r};
}

}  // namespace tesl::simd::scalar
