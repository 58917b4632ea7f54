#include "tesl/rng.hpp"

#include <cmath>

#include "tesl/simd/kernels.hpp"

namespace tesl {

std::uint64_t derive_key(std::uint64_t master_seed, std::string_view label) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(master_seed ^ mix64(h + kGolden));
}

double CounterRng::exponential(double rate) noexcept { return -std::log(uniform()) / rate; }

double CounterRng::normal() noexcept {
  double z = 0.0;
  simd::scalar_kernels().normal_fill(key_, counter_, std::span<double>(&z, 1));
  counter_ += 2;
  return z;
}

void CounterRng::fill_normal(std::span<double> out) noexcept {
  simd::active().normal_fill(key_, counter_, out);
  counter_ += out.size() + (out.size() & 1);
}

std::uint64_t CounterRng::poisson(double mean) noexcept {
  if (!(mean > 0.0)) return 0;
  if (mean < 30.0) {
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }
  // Transformed rejection with squeeze (Hoermann, PTRS).
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform() - 0.5;
    const double v = uniform();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0))
      return static_cast<std::uint64_t>(k);
  }
}

}  // namespace tesl
