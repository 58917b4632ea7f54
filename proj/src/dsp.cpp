#include "tesl/dsp.hpp"

#include <algorithm>
#include <cmath>

#include "tesl/error.hpp"
#include "tesl/simd/kernels.hpp"

namespace tesl::dsp {

void ShaperConfig::validate() const {
  if (!(peaking_time > 0.0)) raise(Errc::InvalidParams, "shaper peaking time must be positive");
  if (stages < 1) raise(Errc::InvalidParams, "shaper needs at least one integrator");
}

namespace {

struct Cascade {
  double hp_gain;  // K / (1 + K)
  double lp_gain;  // 1 / (1 + K)
  double pole;     // (1 - K) / (1 + K)
  int stages;
  double norm = 1.0;

  Cascade(double sample_rate, const ShaperConfig& cfg) {
    cfg.validate();
    if (sample_rate * cfg.peaking_time < 20.0)
      raise(Errc::SampleRateTooLow, "need at least 20 samples per shaper peaking time");
    const double k = 2.0 * sample_rate * cfg.peaking_time / cfg.stages;
    hp_gain = k / (1.0 + k);
    lp_gain = 1.0 / (1.0 + k);
    pole = (1.0 - k) / (1.0 + k);
    stages = cfg.stages;

    const auto n = static_cast<std::size_t>(std::ceil(6.0 * sample_rate * cfg.peaking_time));
    std::vector<double> step(n, 1.0);
    run(std::span<const double>(step), step);
    norm = 1.0 / *std::max_element(step.begin(), step.end());
  }

  template <class T>
  void run(std::span<const T> x, std::vector<double>& y) const {
    double hp_x = 0.0, hp_y = 0.0;
    std::vector<double> lp_x(stages, 0.0), lp_y(stages, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double in = static_cast<double>(x[i]);
      double v = hp_gain * (in - hp_x) - pole * hp_y;
      hp_x = in;
      hp_y = v;
      for (int s = 0; s < stages; ++s) {
        const double out = lp_gain * (v + lp_x[s]) - pole * lp_y[s];
        lp_x[s] = v;
        lp_y[s] = out;
        v = out;
      }
      y[i] = v * norm;
    }
  }
};

template <class T>
std::vector<double> shape_impl(std::span<const T> x, double sample_rate, const ShaperConfig& cfg) {
  const Cascade c(sample_rate, cfg);
  std::vector<double> y(x.size());
  c.run(x, y);
  return y;
}

}  // namespace

std::vector<double> shape(std::span<const double> x, double sample_rate, const ShaperConfig& cfg) {
  return shape_impl(x, sample_rate, cfg);
}

std::vector<double> shape(std::span<const float> x, double sample_rate, const ShaperConfig& cfg) {
  return shape_impl(x, sample_rate, cfg);
}

double pulse_height(const daq::Window& w, const ShaperConfig& cfg, HeightMode mode) {
  if (w.samples.empty()) return 0.0;
  const double offset = (w.expected_arrival - w.start_time) * w.sample_rate;
  if (mode == HeightMode::AtExpectedArrival) {
    const long long i = std::llround(offset + cfg.peaking_time * w.sample_rate);
    const auto last = static_cast<long long>(w.samples.size()) - 1;
    return w.samples[static_cast<std::size_t>(std::clamp(i, 0LL, last))];
  }
  const auto first = static_cast<std::size_t>(
      std::clamp(std::ceil(offset - 1e-9), 0.0, static_cast<double>(w.samples.size() - 1)));
  const auto tail = w.samples.subspan(first);
  return tail[simd::active().argmax(tail)];
}

LinearizationMap::LinearizationMap(std::vector<std::pair<double, double>> knots)
    : knots_(std::move(knots)) {
  if (knots_.size() < 2) raise(Errc::InvalidParams, "linearization needs at least two knots");
  for (std::size_t i = 1; i < knots_.size(); ++i)
    if (!(knots_[i].first > knots_[i - 1].first) || !(knots_[i].second > knots_[i - 1].second))
      raise(Errc::NonMonotonePeaks, "linearization knots must increase in both coordinates");
}

double LinearizationMap::apply(double raw) const {
  auto hi = std::upper_bound(knots_.begin(), knots_.end(), raw,
                             [](double v, const auto& k) { return v < k.first; });
  if (hi == knots_.begin()) ++hi;
  if (hi == knots_.end()) --hi;
  const auto lo = std::prev(hi);
  if (raw == lo->first) return lo->second;
  const double slope = (hi->second - lo->second) / (hi->first - lo->first);
  return lo->second + slope * (raw - lo->first);
}

double LinearizationMap::invert(double energy) const {
  auto hi = std::upper_bound(knots_.begin(), knots_.end(), energy,
                             [](double v, const auto& k) { return v < k.second; });
  if (hi == knots_.begin()) ++hi;
  if (hi == knots_.end()) --hi;
  const auto lo = std::prev(hi);
  const double slope = (hi->first - lo->first) / (hi->second - lo->second);
  return lo->first + slope * (energy - lo->second);
}

LinearizationMap build_linearization(std::span<const double> peak_means, double photon_energy_ev) {
  if (peak_means.size() < 3) raise(Errc::InvalidParams, "linearization needs peaks n = 0..k, k >= 2");
  if (!(photon_energy_ev > 0.0)) raise(Errc::InvalidParams, "photon energy must be positive");
  if (!(peak_means[1] > 0.0) || !(peak_means[0] < peak_means[1]))
    raise(Errc::NonMonotonePeaks, "one-photon peak must lie above zero and the zero-photon peak");
  std::vector<std::pair<double, double>> knots{{0.0, 0.0}};
  for (std::size_t n = 1; n < peak_means.size(); ++n) {
    if (!(peak_means[n] > knots.back().first))
      raise(Errc::NonMonotonePeaks, "peak means not strictly increasing at n = " + std::to_string(n));
    knots.emplace_back(peak_means[n], static_cast<double>(n) * photon_energy_ev);
  }
  return LinearizationMap(std::move(knots));
}

}  // namespace tesl::dsp
