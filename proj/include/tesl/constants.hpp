#pragma once

// Exact SI values (2019 redefinition).
namespace tesl::constants {

inline constexpr double planck = 6.62607015e-34;        // J s
inline constexpr double speed_of_light = 299792458.0;   // m/s
inline constexpr double joule_per_ev = 1.602176634e-19;

// hc/lambda for a vacuum wavelength in nm.
constexpr double photon_energy_joule(double wavelength_nm) {
  return planck * speed_of_light / (wavelength_nm * 1e-9);
}

constexpr double photon_energy_ev(double wavelength_nm) {
  return photon_energy_joule(wavelength_nm) / joule_per_ev;
}

}  // namespace tesl::constants
