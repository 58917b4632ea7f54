#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

// Data-parallel inner loops of the pipeline. Every kernel has a scalar
// reference and (on x86-64) an AVX2 variant picked at runtime. The variants
// are written to produce bit-identical results: same operation order, same
// polynomial approximations, reductions accumulated in four interleaved
// lanes in both paths.
namespace tesl::simd {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa) noexcept;

// Normal equations of an unweighted Gaussian least-squares fit,
// model amp * exp(-(x - mean)^2 / (2 sigma^2)), parameters ordered
// (amp, mean, sigma). jtj holds the upper triangle row by row.
struct GaussNormalEq {
  double jtj[6] = {};
  double jtr[3] = {};
  double chi2 = 0.0;
};

struct Kernels {
  Isa isa;

  // out[i] = uniform draw number counter0 + i + 1 of the stream `key`,
  // identical to CounterRng(key, counter0).uniform() called repeatedly.
  void (*uniform_fill)(std::uint64_t key, std::uint64_t counter0, std::span<double> out);

  // Box-Muller normals. Pair p uses draws counter0 + 2p + 1 and + 2; an odd
  // tail consumes a full pair and keeps the cosine branch.
  void (*normal_fill)(std::uint64_t key, std::uint64_t counter0, std::span<double> out);

  // out[i] = float(signal[i] + sigma * noise[i]).
  void (*add_noise_to_f32)(std::span<const double> signal, std::span<const double> noise,
                           double sigma, std::span<float> out);

  // Index of the first maximum; 0 for an empty span.
  std::size_t (*argmax)(std::span<const double> x);

  // First i >= 1 with x[i-1] <= threshold < x[i]; x.size() if none.
  std::size_t (*first_crossing)(std::span<const double> x, double threshold);

  GaussNormalEq (*gauss_normal_eq)(std::span<const double> x, std::span<const double> y,
                                   double amp, double mean, double sigma);
};

const Kernels& scalar_kernels() noexcept;

// nullptr when the binary was built without AVX2 support or the CPU lacks it.
const Kernels* avx2_kernels() noexcept;

// Best available table. TESL_SIMD=scalar|avx2 in the environment overrides
// detection (an unavailable request falls back to scalar).
const Kernels& active() noexcept;

// Polynomial exp used by the Gaussian kernels, exposed for tests.
double exp_poly(double t) noexcept;

}  // namespace tesl::simd
