#include <doctest.h>

#include <cmath>
#include <vector>

#include "tesl/constants.hpp"
#include "tesl/error.hpp"
#include "tesl/tes.hpp"

using namespace tesl;
using namespace tesl::tes;

namespace {

// Largest |I - I_eq| after one deposit at 1 us.
double peak_excursion(const TesParams& p, double energy_ev, double dt = 20e-9) {
  const PhotonEvent ev{1e-6, energy_ev, Origin::Signal};
  const auto s = simulate(p, std::span<const PhotonEvent>(&ev, 1), 30e-6, dt);
  const double i_eq = current(p, equilibrium(p).t_e);
  double best = 0.0;
  for (double t : s.t_e) best = std::max(best, std::abs(current(p, t) - i_eq));
  return best;
}

}  // namespace

TEST_CASE("resistance: midpoint, deep superconducting limit, monotone") {
  const TesParams p;
  CHECK(resistance(p, p.t_c) == doctest::Approx(p.r_normal / 2).epsilon(1e-15));
  CHECK(resistance(p, p.t_c - 10 * p.transition_width) < 1e-4 * p.r_normal);
  CHECK(resistance(p, p.t_c + 20 * p.transition_width) > 0.999999 * p.r_normal);
  double prev = 0.0;
  for (double t = 0.05; t < 0.2; t += 1e-4) {
    const double r = resistance(p, t);
    CHECK(r >= prev);
    prev = r;
  }
}

TEST_CASE("equilibrium solves the power balance inside the transition") {
  const TesParams p;
  const double t = equilibrium(p).t_e;
  CHECK(t > p.t_c - 2 * p.transition_width);
  CHECK(t < p.t_c + 2 * p.transition_width);
  // Independent check of the balance residual relative to the Joule power.
  const double joule = p.v_bias * p.v_bias / resistance(p, t);
  const double cool = p.sigma_ep * (std::pow(t, 5) - std::pow(p.t_bath, 5));
  CHECK(std::abs(joule - cool) / joule < 1e-9);
}

TEST_CASE("equilibrium: zero bias sits at the bath, heating grows with bias") {
  TesParams p;
  p.v_bias = 0.0;
  CHECK(equilibrium(p).t_e == p.t_bath);

  TesParams q;
  double prev = 0.0;
  for (double v = 4.0e-7; v <= 7.0e-7; v += 0.25e-7) {
    q.v_bias = v;
    const double t = equilibrium(q).t_e;
    CHECK(t > prev);
    prev = t;
  }
}

TEST_CASE("equilibrium errors") {
  TesParams p;
  p.v_bias = 1e-4;
  CHECK_THROWS_AS(equilibrium(p), Error);
  p.v_bias = 1e-12;
  p.t_bath = 0.05;  // R(t_bath) ~ 1e-9 R_n
  try {
    equilibrium(p);
    FAIL("expected NoEquilibriumInTransition");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoEquilibriumInTransition);
  }
  TesParams bad;
  bad.t_bath = 0.106;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("deposit_photon") {
  const TesParams p;
  const TesState s{0.1, 3.0};
  CHECK(deposit_photon(s, p, 0.0).t_e == s.t_e);
  const auto d = deposit_photon(s, p, 0.8);
  CHECK(d.t_e - s.t_e == doctest::Approx(0.8 * 1.602177e-19 / p.c_e).epsilon(1e-6));
  CHECK(d.time == s.time);
  const auto two = deposit_photon(deposit_photon(s, p, 0.3), p, 0.5);
  CHECK(two.t_e == doctest::Approx(d.t_e).epsilon(1e-15));
}

TEST_CASE("simulate: equilibrium is a fixed point") {
  const TesParams p;
  const auto s = simulate(p, {}, 50e-6, 20e-9);
  const double t_eq = equilibrium(p).t_e;
  REQUIRE(s.t_e.size() == 2500);
  for (double t : s.t_e) CHECK(std::abs(t - t_eq) / t_eq < 1e-9);
}

TEST_CASE("simulate: decay time from the pulse tail") {
  const TesParams p;
  const double tau = effective_decay_time(p);
  CHECK(tau == doctest::Approx(5e-6).epsilon(0.05));

  TesParams slow = p;
  slow.c_e *= 2;
  CHECK(effective_decay_time(slow) / tau == doctest::Approx(2.0).epsilon(0.10));
  // Small-signal fit agrees with the linearized c / G_eff.
  CHECK(tau == doctest::Approx(linearized_decay_time(p)).epsilon(0.02));
}

TEST_CASE("simulate: separated identical events give identical pulses") {
  const TesParams p;
  const std::vector<PhotonEvent> ev{{2e-6, 0.8, Origin::Signal}, {102e-6, 0.8, Origin::Signal}};
  const auto s = simulate(p, ev, 200e-6, 20e-9);
  const double t_eq = equilibrium(p).t_e;
  double a = 0, b = 0;
  for (std::size_t i = 0; i < 5000; ++i) a = std::max(a, s.t_e[i] - t_eq);
  for (std::size_t i = 5000; i < s.t_e.size(); ++i) b = std::max(b, s.t_e[i] - t_eq);
  CHECK(b == doctest::Approx(a).epsilon(1e-3));
}

TEST_CASE("simulate: step bound and determinism") {
  const TesParams p;
  CHECK_THROWS_AS(simulate(p, {}, 1e-5, 1e-6), Error);
  try {
    simulate(p, {}, 1e-5, 1e-6);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::StepTooCoarse);
  }
  const std::vector<PhotonEvent> ev{{3e-6, 0.8, Origin::Signal}, {9e-6, 1.6, Origin::Signal}};
  const auto a = simulate(p, ev, 40e-6, 20e-9);
  const auto b = simulate(p, ev, 40e-6, 20e-9);
  CHECK(a.t_e == b.t_e);
}

TEST_CASE("simulate: halving the step changes samples by < 1e-6 relative") {
  const TesParams p;
  const PhotonEvent ev{1e-6, 3.2, Origin::Signal};
  const auto coarse = simulate(p, std::span<const PhotonEvent>(&ev, 1), 30e-6, 20e-9);
  const auto fine = simulate(p, std::span<const PhotonEvent>(&ev, 1), 30e-6, 10e-9, 2);
  REQUIRE(coarse.t_e.size() == fine.t_e.size());
  const double t_eq = equilibrium(p).t_e;
  double worst = 0.0, worst_excursion = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < coarse.t_e.size(); ++i) {
    worst = std::max(worst, std::abs(coarse.t_e[i] - fine.t_e[i]) / fine.t_e[i]);
    worst_excursion = std::max(worst_excursion, std::abs(coarse.t_e[i] - fine.t_e[i]));
    peak = std::max(peak, fine.t_e[i] - t_eq);
  }
  CHECK(worst < 1e-6);
  CHECK(worst_excursion / peak < 1e-6);
}

TEST_CASE("energy linearity with deposits inside the linear region") {
  // Ten times the default heat capacity keeps 0.8 eV at ~3% of the width.
  TesParams p;
  p.c_e *= 10;
  const double h2 = peak_excursion(p, 0.2, 100e-9);
  const double h4 = peak_excursion(p, 0.4, 100e-9);
  const double h8 = peak_excursion(p, 0.8, 100e-9);
  CHECK(h4 / h2 == doctest::Approx(2.0).epsilon(0.02));
  CHECK(h8 / h2 == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("default parameters saturate: increasing, sub-linear excursion") {
  const TesParams p;
  double prev = 0.0;
  const double h1 = peak_excursion(p, 0.8);
  for (int n = 1; n <= 4; ++n) {
    const double h = peak_excursion(p, 0.8 * n);
    CHECK(h > prev);
    CHECK(h < n * h1 * (n == 1 ? 1.0000001 : 1.0));
    prev = h;
  }
  CHECK(peak_excursion(p, 3.2) < 0.9 * 4 * h1);
}
