#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tesl/event.hpp"

// Voltage-biased transition-edge sensor: electron temperature under Joule
// heating, electron-phonon cooling to the bath and photon deposits.
//
//   c_e dT/dt = V^2 / R(T) - sigma_ep (T^5 - T_bath^5)
//   R(T)      = R_n / (1 + exp(-(T - T_c) / w))
//
// No current dependence of R, constant heat capacity, instantaneous and fully
// thermalized deposits.
namespace tesl::tes {

struct TesParams {
  double t_c = 0.110;               // K
  double transition_width = 3e-3;   // K, logistic scale w
  double r_normal = 10.0;           // ohm
  double v_bias = 5.609e-7;         // V
  double c_e = 1.5e-16;             // J/K
  double sigma_ep = 8.292e-9;       // W/K^5
  double t_bath = 0.070;            // K

  // Throws Errc::InvalidParams. v_bias may be zero (unbiased sensor).
  void validate() const;
};

struct TesState {
  double t_e = 0.0;   // K
  double time = 0.0;  // s
};

double resistance(const TesParams& p, double t_e);
double current(const TesParams& p, double t_e);

// Net heating power divided by c_e, in K/s.
double temperature_rate(const TesParams& p, double t_e);

// Bias point from bisection on the power balance (relative tolerance 1e-12).
// Throws Errc::NoEquilibriumInTransition.
TesState equilibrium(const TesParams& p);

TesState deposit_photon(TesState state, const TesParams& p, double energy_ev);

// c_e / G_eff at the bias point, G_eff including electrothermal feedback.
double linearized_decay_time(const TesParams& p);

struct TemperatureSeries {
  double dt = 0.0;  // spacing of recorded samples, s
  std::vector<double> t_e;
};

// Fixed-step RK4 from equilibrium. Events are snapped to the nearest grid
// step and deposited before that step is recorded; every `stride`-th step is
// kept. Throws StepTooCoarse when dt > tau_eff / 50 and NonFinite on blow-up.
TemperatureSeries simulate(const TesParams& p, std::span<const PhotonEvent> events,
                           double duration, double dt, std::size_t stride = 1);

// Single-exponential fit to the 90%..10% recovery of a 0.01 eV pulse.
double effective_decay_time(const TesParams& p);

}  // namespace tesl::tes
