#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tesl/source.hpp"

namespace tesl::efficiency {

struct MeterRange {
  double min_w = 1e-10;
  double max_w = 1e-2;
};

struct MeterReading {
  double p_in = 0.0;   // W
  double p_out = 0.0;  // W
};

// Transmittance P_out / P_in per setpoint. Throws NonPositivePower,
// OutOfLinearRange and InvalidParams (length mismatch).
std::vector<source::Attenuation> calibrate_attenuators(std::span<const double> setpoints_db,
                                                       std::span<const MeterReading> readings,
                                                       const MeterRange& range = {});

// Photons delivered past the chain: P * t * live_time * lambda / (h c).
double expected_photons(double power_at_a, double chain_t, double wavelength_nm, double live_time);

struct EfficiencyPoint {
  double power_at_a = 0.0;  // W
  double expected_photons = 0.0;
  double detected_corrected = 0.0;
  double eta = 0.0;
  double sigma_eta = 0.0;
};

// eta = detected / expected. sigma_eta = sigma_detected / expected, where
// sigma_detected defaults to sqrt(max(detected, 1)). Throws InvalidParams.
EfficiencyPoint efficiency_point(double detected_corrected, double expected, double power_at_a = 0.0,
                                 std::optional<double> sigma_detected = std::nullopt);

struct WeightedSummary {
  double mean = 0.0;
  double mean_sigma = 0.0;
  bool fit_valid = false;
  double slope = 0.0;  // per W
  double slope_sigma = 0.0;
  double intercept = 0.0;
  std::vector<std::string> warnings;
};

// Inverse-variance weighted mean and straight-line fit eta(P). A single
// point or identical powers skip the fit with a DegenerateAbscissa warning.
// Throws InvalidParams on an empty list or a nonpositive sigma.
WeightedSummary weighted_fit_and_average(std::span<const EfficiencyPoint> points);

inline constexpr double kBellThreshold = 0.83;

inline bool bell_check(double eta) { return eta > kBellThreshold; }

}  // namespace tesl::efficiency
