#include "tesl/source.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <charconv>
#include <sstream>

#include "tesl/constants.hpp"
#include "tesl/error.hpp"
#include "tesl/rng.hpp"

namespace tesl::source {

EventList pulsed_train(double rep_rate, double pulse_width, double mean_photons, double duration,
                       double energy_ev, std::uint64_t seed) {
  if (!(rep_rate > 0.0) || !(duration > 0.0) || rep_rate * duration < 1.0)
    raise(Errc::InvalidRate, "pulsed source needs rate > 0 and at least one period");
  if (!(mean_photons >= 0.0) || !(pulse_width >= 0.0) || pulse_width >= 1.0 / rep_rate)
    raise(Errc::InvalidRate, "pulse width must fit the period and mean photons be >= 0");

  const auto pulses = static_cast<std::uint64_t>(std::floor(rep_rate * duration + 1e-9));
  CounterRng rng(seed);
  EventList events;
  events.reserve(static_cast<std::size_t>(static_cast<double>(pulses) * mean_photons * 1.1) + 16);
  std::vector<double> times;
  for (std::uint64_t k = 0; k < pulses; ++k) {
    const std::uint64_t count = rng.poisson(mean_photons);
    const double start = static_cast<double>(k) / rep_rate;
    times.clear();
    for (std::uint64_t i = 0; i < count; ++i) times.push_back(start + pulse_width * rng.uniform());
    std::sort(times.begin(), times.end());
    for (double t : times) events.push_back({t, energy_ev, Origin::Signal});
  }
  return events;
}

namespace {

EventList poisson_process(double rate, double duration, CounterRng& rng) {
  EventList events;
  if (rate == 0.0) return events;
  events.reserve(static_cast<std::size_t>(rate * duration * 1.05) + 16);
  double t = rng.exponential(rate);
  while (t < duration) {
    events.push_back({t, 0.0, Origin::Signal});
    t += rng.exponential(rate);
  }
  return events;
}

}  // namespace

EventList cw_stream(double power_w, double wavelength_nm, double duration, std::uint64_t seed) {
  if (!(power_w >= 0.0) || !(duration > 0.0) || !(wavelength_nm > 0.0))
    raise(Errc::InvalidRate, "cw source needs power >= 0, duration > 0 and wavelength > 0");
  const double energy_j = constants::photon_energy_joule(wavelength_nm);
  const double energy_ev = energy_j / constants::joule_per_ev;
  CounterRng rng(seed);
  EventList events = poisson_process(power_w / energy_j, duration, rng);
  for (auto& e : events) e.energy = energy_ev;
  return events;
}

EventList background_stream(double rate_hz, double duration, std::pair<double, double> energy_window,
                            std::uint64_t seed) {
  if (!(rate_hz >= 0.0) || !(duration > 0.0))
    raise(Errc::InvalidRate, "background needs rate >= 0 and duration > 0");
  const auto [lo, hi] = energy_window;
  if (!(lo > 0.0) || !(hi > lo)) raise(Errc::InvalidParams, "background energy window is empty");
  CounterRng rng(seed);
  EventList events = poisson_process(rate_hz, duration, rng);
  for (auto& e : events) {
    e.energy = lo + (hi - lo) * rng.uniform();
    e.origin = Origin::Background;
  }
  return events;
}

EventList thin(std::span<const PhotonEvent> events, double transmittance, std::uint64_t seed) {
  if (!(transmittance >= 0.0 && transmittance <= 1.0))
    raise(Errc::InvalidParams, "transmittance must lie in [0, 1]");
  CounterRng rng(seed);
  EventList kept;
  kept.reserve(static_cast<std::size_t>(static_cast<double>(events.size()) * transmittance) + 16);
  for (const auto& e : events)
    if (rng.uniform() < transmittance) kept.push_back(e);
  return kept;
}

EventList merge(std::span<const PhotonEvent> a, std::span<const PhotonEvent> b) {
  EventList out(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), out.begin(),
             [](const PhotonEvent& x, const PhotonEvent& y) { return x.time < y.time; });
  return out;
}

void AttenuatorChain::validate() const {
  for (const auto& a : table)
    if (!(a.transmittance > 0.0 && a.transmittance <= 1.0))
      raise(Errc::InvalidParams, "calibrated transmittance outside (0, 1]");
  for (const auto& l : fixed_losses)
    if (!(l.transmittance > 0.0 && l.transmittance <= 1.0))
      raise(Errc::InvalidParams, "fixed loss '" + l.label + "' outside (0, 1]");
}

double attenuator_transmittance(const AttenuatorChain& chain, std::span<const double> setpoints) {
  double product = 1.0;
  for (double sp : setpoints) {
    auto it = std::find_if(chain.table.begin(), chain.table.end(), [sp](const Attenuation& a) {
      return std::fabs(a.setpoint_db - sp) <= 1e-9;
    });
    if (it == chain.table.end())
      raise(Errc::UncalibratedSetpoint, "no calibration for setpoint " + std::to_string(sp) + " dB");
    product *= it->transmittance;
  }
  return product;
}

double chain_transmittance(const AttenuatorChain& chain, std::span<const double> setpoints) {
  double product = attenuator_transmittance(chain, setpoints);
  for (const auto& l : chain.fixed_losses) product *= l.transmittance;
  return product;
}

std::vector<Attenuation> load_calibration_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::IoError, "cannot open calibration table " + path.string());
  std::vector<Attenuation> table;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    Attenuation a;
    if (!(fields >> a.setpoint_db)) continue;
    if (!(fields >> a.transmittance))
      raise(Errc::ConfigError, "malformed calibration record: " + line);
    table.push_back(a);
  }
  return table;
}

void save_calibration_table(const std::filesystem::path& path, std::span<const Attenuation> table) {
  std::ofstream out(path);
  if (!out) raise(Errc::IoError, "cannot write calibration table " + path.string());
  auto shortest = [](double v) {
    char buf[32];
    return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
  };
  out << "# setpoint_dB, measured_transmittance\n";
  for (const auto& a : table) out << shortest(a.setpoint_db) << ", " << shortest(a.transmittance) << '\n';
  if (!out) raise(Errc::IoError, "write failed for " + path.string());
}

double bend_loss_factor(std::uint64_t seed) {
  CounterRng rng(seed);
  return 0.97 + 0.03 * rng.uniform();
}

}  // namespace tesl::source
