#include "tesl/efficiency.hpp"

#include <algorithm>
#include <cmath>

#include "tesl/constants.hpp"
#include "tesl/error.hpp"

namespace tesl::efficiency {

std::vector<source::Attenuation> calibrate_attenuators(std::span<const double> setpoints_db,
                                                       std::span<const MeterReading> readings,
                                                       const MeterRange& range) {
  if (setpoints_db.size() != readings.size())
    raise(Errc::InvalidParams, "one meter reading pair per setpoint");
  std::vector<source::Attenuation> table;
  for (std::size_t i = 0; i < readings.size(); ++i) {
    const auto [p_in, p_out] = readings[i];
    if (!(p_in > 0.0) || !(p_out > 0.0))
      raise(Errc::NonPositivePower, "reading at setpoint " + std::to_string(setpoints_db[i]) + " dB");
    for (double p : {p_in, p_out})
      if (p < range.min_w || p > range.max_w)
        raise(Errc::OutOfLinearRange, "reading " + std::to_string(p) + " W at setpoint " +
                                          std::to_string(setpoints_db[i]) + " dB");
    table.push_back({setpoints_db[i], p_out / p_in});
  }
  return table;
}

double expected_photons(double power_at_a, double chain_t, double wavelength_nm, double live_time) {
  return power_at_a * chain_t * live_time / constants::photon_energy_joule(wavelength_nm);
}

EfficiencyPoint efficiency_point(double detected_corrected, double expected, double power_at_a,
                                 std::optional<double> sigma_detected) {
  if (!(expected > 0.0)) raise(Errc::InvalidParams, "expected photon count must be positive");
  const double sigma = sigma_detected.value_or(std::sqrt(std::max(detected_corrected, 1.0)));
  if (!(sigma > 0.0)) raise(Errc::InvalidParams, "detected-count sigma must be positive");
  return {power_at_a, expected, detected_corrected, detected_corrected / expected, sigma / expected};
}

WeightedSummary weighted_fit_and_average(std::span<const EfficiencyPoint> points) {
  if (points.empty()) raise(Errc::InvalidParams, "no efficiency points");
  for (const auto& p : points)
    if (!(p.sigma_eta > 0.0)) raise(Errc::InvalidParams, "efficiency point with sigma <= 0");

  // Offsets from the first point keep identical inputs exact.
  const double x0 = points[0].power_at_a;
  const double y0 = points[0].eta;
  double sw = 0.0, swx = 0.0, swy = 0.0;
  for (const auto& p : points) {
    const double w = 1.0 / (p.sigma_eta * p.sigma_eta);
    sw += w;
    swx += w * (p.power_at_a - x0);
    swy += w * (p.eta - y0);
  }
  WeightedSummary s;
  s.mean = y0 + swy / sw;
  s.mean_sigma = 1.0 / std::sqrt(sw);

  const double xbar = x0 + swx / sw;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    const double w = 1.0 / (p.sigma_eta * p.sigma_eta);
    const double dx = p.power_at_a - xbar;
    sxx += w * dx * dx;
    sxy += w * dx * (p.eta - s.mean);
  }
  bool all_equal = true;
  for (const auto& p : points) all_equal = all_equal && p.power_at_a == x0;
  if (points.size() < 2 || all_equal || !(sxx > 0.0)) {
    s.warnings.push_back(std::string(errc_name(Errc::DegenerateAbscissa)) +
                         ": fewer than two distinct power levels, slope fit skipped");
    return s;
  }
  s.fit_valid = true;
  s.slope = sxy / sxx;
  s.slope_sigma = 1.0 / std::sqrt(sxx);
  s.intercept = s.mean - s.slope * xbar;
  return s;
}

}  // namespace tesl::efficiency
