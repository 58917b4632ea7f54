#include "tesl/tes.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tesl/constants.hpp"
#include "tesl/error.hpp"

namespace tesl::tes {

void TesParams::validate() const {
  const bool positive = t_c > 0 && transition_width > 0 && r_normal > 0 && v_bias >= 0 &&
                        c_e > 0 && sigma_ep > 0 && t_bath > 0;
  if (!positive) raise(Errc::InvalidParams, "TES parameters must be positive");
  if (!(t_bath < t_c - 2.0 * transition_width))
    raise(Errc::InvalidParams, "bath temperature must sit below t_c - 2 w");
}

double resistance(const TesParams& p, double t_e) {
  return p.r_normal / (1.0 + std::exp(-(t_e - p.t_c) / p.transition_width));
}

double current(const TesParams& p, double t_e) {
  return p.v_bias * (1.0 + std::exp(-(t_e - p.t_c) / p.transition_width)) / p.r_normal;
}

namespace {

// Coefficients of the heat balance divided by c_e.
struct Balance {
  double joule;  // V^2 / (R_n c_e)
  double ep;     // sigma_ep / c_e
  double bath5;  // t_bath^5
  double t_c;
  double inv_w;

  explicit Balance(const TesParams& p)
      : joule(p.v_bias * p.v_bias / (p.r_normal * p.c_e)),
        ep(p.sigma_ep / p.c_e),
        bath5(std::pow(p.t_bath, 5)),
        t_c(p.t_c),
        inv_w(1.0 / p.transition_width) {}

  double rate(double t) const {
    const double t2 = t * t;
    return joule * (1.0 + std::exp(-(t - t_c) * inv_w)) - ep * (t2 * t2 * t - bath5);
  }

  double rk4(double t, double h) const {
    const double k1 = rate(t);
    const double k2 = rate(t + 0.5 * h * k1);
    const double k3 = rate(t + 0.5 * h * k2);
    const double k4 = rate(t + h * k3);
    return t + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
};

}  // namespace

double temperature_rate(const TesParams& p, double t_e) { return Balance(p).rate(t_e); }

TesState equilibrium(const TesParams& p) {
  p.validate();
  if (p.v_bias == 0.0) return {p.t_bath, 0.0};

  const Balance balance(p);
  double lo = p.t_bath;
  double hi = p.t_c + 5.0 * p.transition_width;
  // rate() is strictly decreasing in T, positive at the bath temperature.
  if (balance.rate(hi) > 0.0)
    raise(Errc::NoEquilibriumInTransition,
          "Joule heating exceeds cooling up to t_c + 5 w; bias too high");
  while (hi - lo > 1e-12 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (balance.rate(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double t_eq = 0.5 * (lo + hi);
  if (!(resistance(p, t_eq) > 1e-6 * p.r_normal))
    raise(Errc::NoEquilibriumInTransition,
          "bias point is superconducting (R < 1e-6 R_n); bias too low");
  return {t_eq, 0.0};
}

TesState deposit_photon(TesState state, const TesParams& p, double energy_ev) {
  state.t_e += energy_ev * constants::joule_per_ev / p.c_e;
  return state;
}

double linearized_decay_time(const TesParams& p) {
  const double t = equilibrium(p).t_e;
  const double r_frac = resistance(p, t) / p.r_normal;
  const double joule = p.v_bias * p.v_bias / resistance(p, t);
  // dP_joule/dT = -P_joule * (1 - R/R_n) / w for the logistic transition.
  const double g_ep = 5.0 * p.sigma_ep * std::pow(t, 4);
  const double g_etf = joule * (1.0 - r_frac) / p.transition_width;
  return p.c_e / (g_ep + g_etf);
}

TemperatureSeries simulate(const TesParams& p, std::span<const PhotonEvent> events,
                           double duration, double dt, std::size_t stride) {
  if (!(dt > 0.0) || !(duration >= 0.0) || stride == 0)
    raise(Errc::InvalidParams, "simulate needs dt > 0, duration >= 0, stride >= 1");
  const double tau = linearized_decay_time(p);
  if (dt > tau / 50.0)
    raise(Errc::StepTooCoarse, "dt " + std::to_string(dt) + " s exceeds tau_eff/50 = " +
                                   std::to_string(tau / 50.0) + " s");

  const Balance balance(p);
  const double heat_per_ev = constants::joule_per_ev / p.c_e;
  const auto n_steps = static_cast<std::size_t>(std::llround(duration / dt));

  TemperatureSeries out;
  out.dt = dt * static_cast<double>(stride);
  out.t_e.resize((n_steps + stride - 1) / stride);

  double t = equilibrium(p).t_e;
  std::size_t next_event = 0;
  auto event_step = [&](std::size_t k) {
    return static_cast<std::size_t>(std::llround(events[k].time / dt));
  };

  std::size_t step = 0;
  while (step < n_steps) {
    while (next_event < events.size() && event_step(next_event) <= step) {
      t += events[next_event].energy * heat_per_ev;
      ++next_event;
    }
    if (step % stride == 0) out.t_e[step / stride] = t;

    const double t_next = balance.rk4(t, dt);
    if (!std::isfinite(t_next))
      raise(Errc::NonFinite, "integrator diverged at t = " + std::to_string(step * dt) + " s");

    if (t_next == t) {
      // RK4 map has a fixed point here: every step until the next deposit is
      // identical, so fill them without integrating.
      std::size_t until = n_steps;
      if (next_event < events.size()) until = std::min(until, event_step(next_event));
      for (std::size_t s = step + 1; s < until; ++s)
        if (s % stride == 0) out.t_e[s / stride] = t;
      step = std::max(until, step + 1);
      continue;
    }
    t = t_next;
    ++step;
  }
  return out;
}

double effective_decay_time(const TesParams& p) {
  const double tau_lin = linearized_decay_time(p);
  const double dt = tau_lin / 200.0;
  const double t_event = 20.0 * dt;
  const PhotonEvent ev{t_event, 0.01, Origin::Signal};
  const TemperatureSeries s = simulate(p, std::span<const PhotonEvent>(&ev, 1), 20.0 * tau_lin, dt);
  const double t_eq = equilibrium(p).t_e;
  const std::size_t start = static_cast<std::size_t>(std::llround(t_event / dt));
  const double peak = s.t_e[start] - t_eq;

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = start; i < s.t_e.size(); ++i) {
    const double excursion = s.t_e[i] - t_eq;
    if (excursion > 0.9 * peak) continue;
    if (excursion < 0.1 * peak) break;
    const double x = static_cast<double>(i - start) * dt;
    const double y = std::log(excursion);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 3) raise(Errc::NonFinite, "decay tail too short to fit");
  const double nn = static_cast<double>(n);
  const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  return -1.0 / slope;
}

}  // namespace tesl::tes
