#include "tesl/spectro.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "tesl/error.hpp"
#include "tesl/lm_gauss.hpp"

namespace tesl::spectro {

std::uint64_t Histogram::total() const {
  std::uint64_t s = 0;
  for (auto c : counts) s += c;
  return s;
}

void Histogram::fill(double value) {
  if (std::isnan(value) || value < lo) {
    ++underflow;
    return;
  }
  const double pos = (value - lo) / bin_width;
  if (pos >= static_cast<double>(counts.size())) {
    ++overflow;
    return;
  }
  ++counts[static_cast<std::size_t>(pos)];
}

void Histogram::merge(const Histogram& other) {
  if (other.lo != lo || other.bin_width != bin_width || other.counts.size() != counts.size())
    raise(Errc::InvalidParams, "cannot merge histograms with different binning");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  underflow += other.underflow;
  overflow += other.overflow;
  live_time += other.live_time;
}

Histogram make_histogram(double lo, double hi, double bin_width) {
  if (!(bin_width > 0.0)) raise(Errc::InvalidParams, "bin width must be positive");
  if (!(hi > lo)) raise(Errc::EmptyRange, "histogram range is empty");
  Histogram h;
  h.lo = lo;
  h.bin_width = bin_width;
  h.counts.assign(static_cast<std::size_t>(std::ceil((hi - lo) / bin_width - 1e-9)), 0);
  return h;
}

Histogram build_histogram(std::span<const double> values, double bin_width, double lo, double hi) {
  Histogram h = make_histogram(lo, hi, bin_width);
  for (double v : values) h.fill(v);
  return h;
}

PeakFit fit_peak(const Histogram& hist, double center, double half_window, int n) {
  PeakFit out;
  out.n = n;
  std::vector<double> x, y;
  std::uint64_t in_window = 0;
  double peak = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < hist.bins(); ++i) {
    const double c = hist.center(i);
    if (c < center - half_window || c > center + half_window) continue;
    const double v = static_cast<double>(hist.counts[i]);
    x.push_back(c);
    y.push_back(v);
    in_window += hist.counts[i];
    peak = std::max(peak, v);
    m1 += v * (c - center);
    m2 += v * (c - center) * (c - center);
  }
  if (in_window < kMinPeakCounts) {
    out.error = "InsufficientCounts: " + std::to_string(in_window) + " counts in window of peak " +
                std::to_string(n);
    return out;
  }
  const double nw = static_cast<double>(in_window);
  const double spread = std::sqrt(std::max(m2 / nw - (m1 / nw) * (m1 / nw), 0.0));
  const fit::GaussParams seed{peak, center, std::max(spread, hist.bin_width)};
  try {
    const fit::GaussFit f = fit::fit_gaussian(x, y, seed);
    if (!(f.params.amp > 0.0) || std::fabs(f.params.mean - center) > half_window)
      raise(Errc::FitDiverged, "peak " + std::to_string(n) + " fit left its window");
    out.amplitude = f.params.amp;
    out.mean = f.params.mean;
    out.sigma = f.params.sigma;
    out.area = f.params.amp * f.params.sigma * std::sqrt(2.0 * std::numbers::pi) / hist.bin_width;
    out.fwhm = kFwhmPerSigma * f.params.sigma;
    out.ok = true;
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

std::vector<PeakFit> fit_peaks(const Histogram& hist, double photon_energy, int n_peaks) {
  if (!(photon_energy > 0.0) || n_peaks < 1)
    raise(Errc::InvalidParams, "need photon energy > 0 and at least one peak");
  std::vector<PeakFit> peaks;
  for (int n = 0; n < n_peaks; ++n)
    peaks.push_back(fit_peak(hist, n * photon_energy, 0.4 * photon_energy, n));
  return peaks;
}

PhotonClassifier::PhotonClassifier(std::span<const PeakFit> peaks, double k_sigma,
                                   std::optional<double> sigma_override) {
  if (peaks.empty()) raise(Errc::InvalidParams, "photon classification needs at least one peak");
  for (const auto& p : peaks) {
    if (!p.ok) raise(Errc::InvalidParams, "peak " + std::to_string(p.n) + " has no valid fit");
    const double s = sigma_override.value_or(p.sigma);
    n_.push_back(p.n);
    lo_.push_back(p.mean - k_sigma * s);
    hi_.push_back(p.mean + k_sigma * s);
  }
  for (std::size_t i = 1; i < n_.size(); ++i)
    if (!(lo_[i] > lo_[i - 1]) || lo_[i] < hi_[i - 1])
      raise(Errc::OverlappingWindows, "counting windows of peaks " + std::to_string(n_[i - 1]) +
                                          " and " + std::to_string(n_[i]) + " overlap");
}

Assignment PhotonClassifier::classify(double energy) const {
  if (energy > hi_.back()) return {Assignment::Kind::Overflow, -1};
  for (std::size_t i = 0; i < n_.size(); ++i)
    if (energy >= lo_[i] && energy <= hi_[i]) return {Assignment::Kind::Photons, n_[i]};
  return {Assignment::Kind::Undetermined, -1};
}

Assignment assign_photon_number(double energy, std::span<const PeakFit> peaks, double k_sigma) {
  return PhotonClassifier(peaks, k_sigma).classify(energy);
}

NetCounts subtract_background(double raw_counts, double background_rate, double live_time) {
  if (!(raw_counts >= 0.0) || !(background_rate >= 0.0) || !(live_time >= 0.0))
    raise(Errc::InvalidParams, "counts, rate and live time must be >= 0");
  const double bkg = background_rate * live_time;
  return {raw_counts - bkg, std::sqrt(raw_counts + bkg)};
}

std::string histogram_csv(const Histogram& hist) {
  std::string out = "bin_low_eV,bin_high_eV,counts\n";
  char line[96];
  for (std::size_t i = 0; i < hist.bins(); ++i) {
    std::snprintf(line, sizeof line, "%.6f,%.6f,%llu\n", hist.low_edge(i), hist.low_edge(i + 1),
                  static_cast<unsigned long long>(hist.counts[i]));
    out += line;
  }
  return out;
}

void write_histogram_csv(const Histogram& hist, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(Errc::IoError, "cannot write " + path.string());
  out << histogram_csv(hist);
  if (!out) raise(Errc::IoError, "write failed for " + path.string());
}

}  // namespace tesl::spectro
