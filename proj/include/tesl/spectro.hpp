#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tesl::spectro {

// Fixed-width bins [lo + i*w, lo + (i+1)*w); values outside [lo, hi) go to
// underflow / overflow.
struct Histogram {
  double lo = 0.0;
  double bin_width = 1.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t underflow = 0;
  std::uint64_t overflow = 0;
  double live_time = 0.0;  // s

  std::size_t bins() const { return counts.size(); }
  double hi() const { return lo + bin_width * static_cast<double>(counts.size()); }
  double low_edge(std::size_t i) const { return lo + bin_width * static_cast<double>(i); }
  double center(std::size_t i) const { return lo + bin_width * (static_cast<double>(i) + 0.5); }
  std::uint64_t total() const;

  void fill(double value);
  // Adds another histogram with identical binning. Throws InvalidParams.
  void merge(const Histogram& other);
};

// Throws EmptyRange when hi <= lo and InvalidParams when bin_width <= 0.
Histogram make_histogram(double lo, double hi, double bin_width);
Histogram build_histogram(std::span<const double> values, double bin_width, double lo, double hi);

struct PeakFit {
  int n = 0;
  double amplitude = 0.0;  // counts per bin at the mean
  double mean = 0.0;
  double sigma = 0.0;
  double area = 0.0;  // counts
  double fwhm = 0.0;
  bool ok = false;
  std::string error;  // "FitDiverged: ...", "InsufficientCounts: ..." when !ok
};

inline constexpr double kFwhmPerSigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)
inline constexpr std::uint64_t kMinPeakCounts = 20;

// Gaussian fit over [center - half_window, center + half_window] seeded at
// center. Failures are recorded in the result, not thrown.
PeakFit fit_peak(const Histogram& hist, double center, double half_window, int n = 0);

// Peaks n = 0 .. n_peaks-1, window n*E +- 0.4 E.
std::vector<PeakFit> fit_peaks(const Histogram& hist, double photon_energy, int n_peaks);

struct Assignment {
  enum class Kind { Photons, Undetermined, Overflow };
  Kind kind = Kind::Undetermined;
  int n = -1;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

// Counting windows mean_n +- k_sigma * sigma_n built from fitted peaks.
class PhotonClassifier {
 public:
  // Throws InvalidParams for an empty or failed peak list and
  // OverlappingWindows when adjacent windows overlap. `sigma_override`
  // replaces every fitted sigma when given.
  PhotonClassifier(std::span<const PeakFit> peaks, double k_sigma = 3.0,
                   std::optional<double> sigma_override = std::nullopt);

  Assignment classify(double energy) const;

  double lower_edge(std::size_t i) const { return lo_[i]; }
  double upper_edge(std::size_t i) const { return hi_[i]; }

 private:
  std::vector<int> n_;
  std::vector<double> lo_, hi_;
};

Assignment assign_photon_number(double energy, std::span<const PeakFit> peaks, double k_sigma = 3.0);

// Events above the one-photon window counted as two photons.
inline double correct_pileup(double n1_counts, double high_counts) {
  return n1_counts + 2.0 * high_counts;
}

struct NetCounts {
  double net = 0.0;
  double sigma = 0.0;
};

// net = raw - rate * live_time, sigma = sqrt(raw + rate * live_time).
NetCounts subtract_background(double raw_counts, double background_rate, double live_time);

// "bin_low_eV,bin_high_eV,counts" CSV.
std::string histogram_csv(const Histogram& hist);
void write_histogram_csv(const Histogram& hist, const std::filesystem::path& path);

}  // namespace tesl::spectro
