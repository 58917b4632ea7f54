#pragma once

#include <complex>
#include <filesystem>
#include <string>
#include <vector>

// Planar thin-film stacks at normal incidence, characteristic-matrix method.
// A stack lists the incident medium first and the exit medium last; both are
// semi-infinite and lossless. Layer indices in this API count the finite
// layers only: index 0 is the first film after the incident medium.
namespace tesl::optics {

struct Layer {
  std::string label;
  std::complex<double> n{1.0, 0.0};  // Im(n) >= 0 absorbs
  double thickness_nm = 0.0;         // ignored for semi-infinite media
  bool semi_infinite = false;

  static Layer medium(std::string label, std::complex<double> n) {
    return {std::move(label), n, 0.0, true};
  }
  static Layer film(std::string label, std::complex<double> n, double thickness_nm) {
    return {std::move(label), n, thickness_nm, false};
  }
};

using Stack = std::vector<Layer>;

struct StackResult {
  double reflectance = 0.0;
  double transmittance = 0.0;
  std::vector<double> absorption;  // one entry per finite layer
};

// Throws Errc::DegenerateStack.
StackResult stack_rta(const Stack& stack, double wavelength_nm);

// Throws Errc::IndexOutOfRange.
double layer_absorption(const Stack& stack, std::size_t layer_index, double wavelength_nm);

struct SpacerOptimum {
  double thickness_nm = 0.0;
  double absorption = 0.0;
};

// Grid search (step <= 1 nm) over [lo_nm, hi_nm] for the spacer thickness
// maximizing absorption in the target layer, refined by golden section to
// 0.01 nm around the best grid point.
SpacerOptimum optimize_spacer(Stack stack, std::size_t spacer_index, std::size_t target_index,
                              double wavelength_nm, double lo_nm, double hi_nm);

// Tabulated complex index, linear interpolation between records.
class Dispersion {
 public:
  struct Record {
    double wavelength_nm;
    double n_real;
    double n_imag;
  };

  explicit Dispersion(std::vector<Record> records);

  // Text file, one "wavelength_nm, n_real, n_imag" record per line; commas or
  // whitespace separate fields, '#' starts a comment. Throws IoError/ConfigError.
  static Dispersion load(const std::filesystem::path& path);

  // Throws Errc::DispersionOutOfRange outside the tabulated span.
  std::complex<double> at(double wavelength_nm) const;

  const std::vector<Record>& records() const { return records_; }

 private:
  std::vector<Record> records_;
};

// Stack description file, one layer per line, first and last lines are the
// semi-infinite media:
//   <label> <thickness_nm | inf> <n_real> <n_imag>
//   <label> <thickness_nm | inf> @<dispersion file, relative to this file>
// Throws IoError, ConfigError, DispersionOutOfRange.
Stack load_stack(const std::filesystem::path& path, double wavelength_nm);

}  // namespace tesl::optics
