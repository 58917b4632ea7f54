#include <bit>
#include <cmath>
#include <cstdint>

#include "simd/poly.hpp"
#include "simd/scalar_math.hpp"
#include "tesl/rng.hpp"
#include "tesl/simd/kernels.hpp"

namespace tesl::simd {
namespace {

using namespace scalar;

void uniform_fill(std::uint64_t key, std::uint64_t counter0, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = uniform_at(key, counter0 + i + 1);
}

void normal_fill(std::uint64_t key, std::uint64_t counter0, std::span<double> out) {
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; i += 2) {
    const std::uint64_t c = counter0 + i;
    const double u1 = uniform_at(key, c + 1);
    const double u2 = uniform_at(key, c + 2);
    const double radius = std::sqrt(-2.0 * log_poly(u1));
    double cs = 0.0, sn = 0.0;
    sincos_turns(u2, cs, sn);
    out[i] = radius * cs;
    if (i + 1 < n) out[i + 1] = radius * sn;
  }
}

void add_noise_to_f32(std::span<const double> signal, std::span<const double> noise, double sigma,
                      std::span<float> out) {
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<float>(signal[i] + sigma * noise[i]);
}

std::size_t argmax(std::span<const double> x) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < x.size(); ++i)
    if (x[i] > x[best]) best = i;
  return best;
}

std::size_t first_crossing(std::span<const double> x, double threshold) {
  for (std::size_t i = 1; i < x.size(); ++i)
    if (x[i - 1] <= threshold && x[i] > threshold) return i;
  return x.size();
}

GaussNormalEq gauss_normal_eq(std::span<const double> x, std::span<const double> y, double amp,
                              double mean, double sigma) {
  const double inv_sigma = 1.0 / sigma;
  double lane[10][4] = {};
  const std::size_t n = x.size();
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    for (std::size_t l = 0; l < 4; ++l) {
      const Terms t = gauss_terms(x[i + l], y[i + l], amp, mean, inv_sigma);
      const double v[10] = {t.jaa, t.jam, t.jas, t.jmm, t.jms, t.jss, t.ra, t.rm, t.rs, t.rr};
      for (int k = 0; k < 10; ++k) lane[k][l] = lane[k][l] + v[k];
    }
  }
  double tail[10] = {};
  for (std::size_t i = n4; i < n; ++i) {
    const Terms t = gauss_terms(x[i], y[i], amp, mean, inv_sigma);
    const double v[10] = {t.jaa, t.jam, t.jas, t.jmm, t.jms, t.jss, t.ra, t.rm, t.rs, t.rr};
    for (int k = 0; k < 10; ++k) tail[k] = tail[k] + v[k];
  }
  double sum[10];
  for (int k = 0; k < 10; ++k)
    sum[k] = ((lane[k][0] + lane[k][1]) + (lane[k][2] + lane[k][3])) + tail[k];

  GaussNormalEq eq;
  for (int k = 0; k < 6; ++k) eq.jtj[k] = sum[k];
  for (int k = 0; k < 3; ++k) eq.jtr[k] = sum[6 + k];
  eq.chi2 = sum[9];
  return eq;
}

}  // namespace

double exp_poly(double t) noexcept {
  t = std::fmin(std::fmax(t, -poly::kExpClamp), poly::kExpClamp);
  const double k = std::floor(t * poly::kLog2e + 0.5);
  const double r = (t - k * poly::kLn2Hi) - k * poly::kLn2Lo;
  double p = poly::kExpCoef[0];
  for (int i = 1; i < 14; ++i) p = p * r + poly::kExpCoef[i];
  const auto ki = static_cast<std::int64_t>(k);
  const double scale = std::bit_cast<double>(static_cast<std::uint64_t>(ki + 1023) << 52);
  return p * scale;
}

const Kernels& scalar_kernels() noexcept {
  static const Kernels table{Isa::Scalar, &uniform_fill,   &normal_fill,    &add_noise_to_f32,
                             &argmax,     &first_crossing, &gauss_normal_eq};
  return table;
}

}  // namespace tesl::simd
