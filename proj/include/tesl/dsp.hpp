#pragma once

#include <algorithm>
#include <span>
#include <utility>
#include <vector>

#include "tesl/daq.hpp"

namespace tesl::dsp {

// CR-(RC)^n semi-Gaussian shaper. All stages share tau = peaking_time / n,
// which puts the peak of the step response at peaking_time.
struct ShaperConfig {
  double peaking_time = 2e-6;  // s
  int stages = 4;              // number of RC integrators

  // Throws InvalidParams.
  void validate() const;
};

// Bilinear-transform discretization, zero initial state, normalized so a
// step of amplitude A peaks at A. Throws SampleRateTooLow when
// sample_rate * peaking_time < 20.
std::vector<double> shape(std::span<const double> x, double sample_rate, const ShaperConfig& cfg);
std::vector<double> shape(std::span<const float> x, double sample_rate, const ShaperConfig& cfg);

enum class HeightMode { MaxInWindow, AtExpectedArrival };

// MaxInWindow: maximum of the samples at or after the expected arrival.
// AtExpectedArrival: the sample nearest expected arrival + peaking time,
// clamped to the window.
double pulse_height(const daq::Window& window, const ShaperConfig& cfg, HeightMode mode);

class LinearizationMap {
 public:
  LinearizationMap() = default;
  explicit LinearizationMap(std::vector<std::pair<double, double>> knots);

  // (raw height, energy in eV), strictly increasing in both, starting at (0, 0).
  const std::vector<std::pair<double, double>>& knots() const { return knots_; }

  // Piecewise-linear; outside the knots the nearest segment is extended.
  double apply(double raw_height) const;

  // Raw height mapping to `energy`, same extension rule as apply.
  double invert(double energy) const;

 private:
  std::vector<std::pair<double, double>> knots_;
};

// Knots (0, 0) and (means[n], n * photon_energy) for n >= 1. means[0] (the
// zero-photon peak) only has to sit below means[1]. Throws NonMonotonePeaks
// unless means are strictly increasing and positive from n = 1, and
// InvalidParams for fewer than three means.
LinearizationMap build_linearization(std::span<const double> peak_means, double photon_energy_ev);

// Energy estimate for counting; negative results clamp to 0. Histograms of
// the zero-photon peak use map.apply directly to keep both tails.
inline double apply_linearization(const LinearizationMap& map, double raw_height) {
  return std::max(0.0, map.apply(raw_height));
}

}  // namespace tesl::dsp
