#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tesl/event.hpp"

// Photon arrival streams. Every generator is a pure function of its
// arguments and the stream key `seed` (see derive_key); returned lists are
// sorted by time.
namespace tesl::source {

// One pulse every 1/rep_rate starting at t = 0; Poisson(mean_photons) photons
// per pulse, arrival times uniform within the pulse. Throws InvalidRate.
EventList pulsed_train(double rep_rate, double pulse_width, double mean_photons, double duration,
                       double energy_ev, std::uint64_t seed);

// Homogeneous Poisson process at power * lambda / (h c). Throws InvalidRate.
EventList cw_stream(double power_w, double wavelength_nm, double duration, std::uint64_t seed);

// Background photons with energies uniform in [lo, hi]. Throws InvalidRate.
EventList background_stream(double rate_hz, double duration, std::pair<double, double> energy_window,
                            std::uint64_t seed);

// Keeps each event independently with probability `transmittance`.
EventList thin(std::span<const PhotonEvent> events, double transmittance, std::uint64_t seed);

// Time-ordered union; ties keep `a` first.
EventList merge(std::span<const PhotonEvent> a, std::span<const PhotonEvent> b);

struct Attenuation {
  double setpoint_db = 0.0;
  double transmittance = 1.0;
};

struct FixedLoss {
  std::string label;
  double transmittance = 1.0;
};

struct AttenuatorChain {
  std::vector<Attenuation> table;  // calibration, looked up by setpoint
  std::vector<FixedLoss> fixed_losses;

  // Throws InvalidParams unless every fraction is in (0, 1].
  void validate() const;
};

// Product of the calibrated transmittances at `setpoints` (one per
// attenuator) and of every fixed loss. Throws UncalibratedSetpoint.
double chain_transmittance(const AttenuatorChain& chain, std::span<const double> setpoints);

// Same product without the fixed losses.
double attenuator_transmittance(const AttenuatorChain& chain, std::span<const double> setpoints);

// Calibration table file: one "setpoint_dB, measured_transmittance" per line,
// '#' comments. Throws IoError / ConfigError.
std::vector<Attenuation> load_calibration_table(const std::filesystem::path& path);
void save_calibration_table(const std::filesystem::path& path, std::span<const Attenuation> table);

// Optional room-temperature fiber-bend scatter, uniform in [0.97, 1].
double bend_loss_factor(std::uint64_t seed);

}  // namespace tesl::source
