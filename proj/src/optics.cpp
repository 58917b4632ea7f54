#include "tesl/optics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "tesl/error.hpp"

namespace tesl::optics {

namespace {

using cplx = std::complex<double>;

struct Mat2 {
  cplx a, b, c, d;

  std::array<cplx, 2> apply(cplx e, cplx h) const { return {a * e + b * h, c * e + d * h}; }
};

Mat2 characteristic(const Layer& layer, double wavelength_nm) {
  const cplx phase = 2.0 * std::numbers::pi * layer.n * layer.thickness_nm / wavelength_nm;
  const cplx cs = std::cos(phase);
  const cplx sn = std::sin(phase);
  const cplx i(0.0, 1.0);
  return {cs, -i * sn / layer.n, -i * layer.n * sn, cs};
}

void check_stack(const Stack& stack, double wavelength_nm) {
  if (stack.size() < 2) raise(Errc::DegenerateStack, "a stack needs at least two media");
  if (!(wavelength_nm > 0.0)) raise(Errc::DegenerateStack, "wavelength must be positive");
  const Layer& front = stack.front();
  const Layer& back = stack.back();
  if (front.n.imag() != 0.0 || back.n.imag() != 0.0 || front.n.real() <= 0.0 ||
      back.n.real() <= 0.0)
    raise(Errc::DegenerateStack, "incident and exit media must be lossless");
  for (std::size_t i = 1; i + 1 < stack.size(); ++i) {
    if (!(stack[i].thickness_nm > 0.0))
      raise(Errc::DegenerateStack, "layer '" + stack[i].label + "' has nonpositive thickness");
    if (stack[i].n.imag() < 0.0)
      raise(Errc::DegenerateStack, "layer '" + stack[i].label + "' has Im(n) < 0 (gain)");
  }
}

}  // namespace

StackResult stack_rta(const Stack& stack, double wavelength_nm) {
  check_stack(stack, wavelength_nm);
  const std::size_t films = stack.size() - 2;
  const double n0 = stack.front().n.real();
  const cplx ns = stack.back().n;

  // Tangential (E, H) at every interface, exit field normalized to E = 1.
  std::vector<std::array<cplx, 2>> field(films + 1);
  field[films] = {cplx(1.0), ns};
  for (std::size_t j = films; j-- > 0;) {
    const Mat2 m = characteristic(stack[j + 1], wavelength_nm);
    field[j] = m.apply(field[j + 1][0], field[j + 1][1]);
  }

  const cplx b = field[0][0];
  const cplx c = field[0][1];
  const cplx r = (n0 * b - c) / (n0 * b + c);
  const cplx e_inc = (n0 * b + c) / (2.0 * n0);
  const double incident_flux = n0 * std::norm(e_inc);

  auto flux = [&](std::size_t j) { return std::real(field[j][0] * std::conj(field[j][1])); };

  StackResult out;
  out.reflectance = std::norm(r);
  out.transmittance = flux(films) / incident_flux;
  out.absorption.resize(films);
  for (std::size_t j = 0; j < films; ++j)
    out.absorption[j] = (flux(j) - flux(j + 1)) / incident_flux;
  return out;
}

double layer_absorption(const Stack& stack, std::size_t layer_index, double wavelength_nm) {
  if (stack.size() < 2 || layer_index >= stack.size() - 2)
    raise(Errc::IndexOutOfRange, "layer index " + std::to_string(layer_index) +
                                     " does not address a finite layer");
  return stack_rta(stack, wavelength_nm).absorption[layer_index];
}

SpacerOptimum optimize_spacer(Stack stack, std::size_t spacer_index, std::size_t target_index,
                              double wavelength_nm, double lo_nm, double hi_nm) {
  const std::size_t films = stack.size() >= 2 ? stack.size() - 2 : 0;
  if (spacer_index >= films || target_index >= films)
    raise(Errc::IndexOutOfRange, "spacer or target index does not address a finite layer");
  Layer& spacer = stack[spacer_index + 1];
  if (spacer.n.imag() != 0.0) raise(Errc::InvalidParams, "spacer layer must be lossless");
  if (!(stack[target_index + 1].n.imag() > 0.0))
    raise(Errc::InvalidParams, "target layer must be absorbing");
  if (!(lo_nm > 0.0) || !(hi_nm - lo_nm >= wavelength_nm / (2.0 * spacer.n.real())))
    raise(Errc::InvalidParams, "spacer bounds must span at least one half-wave optical thickness");

  auto absorption_at = [&](double thickness) {
    spacer.thickness_nm = thickness;
    return stack_rta(stack, wavelength_nm).absorption[target_index];
  };

  const auto intervals = static_cast<std::size_t>(std::ceil(hi_nm - lo_nm));
  const double step = (hi_nm - lo_nm) / static_cast<double>(intervals);
  SpacerOptimum best{lo_nm, absorption_at(lo_nm)};
  for (std::size_t k = 1; k <= intervals; ++k) {
    const double d = lo_nm + step * static_cast<double>(k);
    const double a = absorption_at(d);
    if (a > best.absorption) best = {d, a};
  }

  double a = std::max(lo_nm, best.thickness_nm - step);
  double b = std::min(hi_nm, best.thickness_nm + step);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = absorption_at(x1);
  double f2 = absorption_at(x2);
  while (b - a > 0.01) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = absorption_at(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = absorption_at(x1);
    }
  }
  const double mid = 0.5 * (a + b);
  const double f_mid = absorption_at(mid);
  if (f_mid > best.absorption) best = {mid, f_mid};
  return best;
}

Dispersion::Dispersion(std::vector<Record> records) : records_(std::move(records)) {
  if (records_.empty()) raise(Errc::ConfigError, "dispersion table is empty");
  std::sort(records_.begin(), records_.end(),
            [](const Record& x, const Record& y) { return x.wavelength_nm < y.wavelength_nm; });
}

Dispersion Dispersion::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::IoError, "cannot open dispersion file " + path.string());
  std::vector<Record> records;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    Record r{};
    if (!(fields >> r.wavelength_nm)) continue;
    if (!(fields >> r.n_real >> r.n_imag))
      raise(Errc::ConfigError, "malformed dispersion record in " + path.string() + ": " + line);
    records.push_back(r);
  }
  return Dispersion(std::move(records));
}

std::complex<double> Dispersion::at(double wavelength_nm) const {
  const Record& first = records_.front();
  const Record& last = records_.back();
  if (wavelength_nm < first.wavelength_nm || wavelength_nm > last.wavelength_nm)
    raise(Errc::DispersionOutOfRange, "wavelength " + std::to_string(wavelength_nm) +
                                          " nm outside tabulated range");
  auto hi = std::lower_bound(
      records_.begin(), records_.end(), wavelength_nm,
      [](const Record& r, double w) { return r.wavelength_nm < w; });
  if (hi->wavelength_nm == wavelength_nm) return {hi->n_real, hi->n_imag};
  auto lo = std::prev(hi);
  const double f = (wavelength_nm - lo->wavelength_nm) / (hi->wavelength_nm - lo->wavelength_nm);
  return {lo->n_real + f * (hi->n_real - lo->n_real), lo->n_imag + f * (hi->n_imag - lo->n_imag)};
}

Stack load_stack(const std::filesystem::path& path, double wavelength_nm) {
  std::ifstream in(path);
  if (!in) raise(Errc::IoError, "cannot open stack file " + path.string());
  Stack stack;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string label, thickness, index;
    if (!(fields >> label)) continue;
    if (!(fields >> thickness >> index))
      raise(Errc::ConfigError, "malformed stack line in " + path.string() + ": " + line);

    Layer layer;
    layer.label = label;
    if (index.front() == '@') {
      layer.n = Dispersion::load(path.parent_path() / index.substr(1)).at(wavelength_nm);
    } else {
      double im = 0.0;
      if (!(fields >> im)) raise(Errc::ConfigError, "missing Im(n) on stack line: " + line);
      layer.n = {std::stod(index), im};
    }
    if (thickness == "inf") {
      layer.semi_infinite = true;
    } else {
      layer.thickness_nm = std::stod(thickness);
    }
    stack.push_back(layer);
  }
  if (stack.size() < 2 || !stack.front().semi_infinite || !stack.back().semi_infinite)
    raise(Errc::DegenerateStack, path.string() + ": first and last layers must be 'inf' media");
  for (std::size_t i = 1; i + 1 < stack.size(); ++i)
    if (stack[i].semi_infinite)
      raise(Errc::DegenerateStack, path.string() + ": only the outer media may be 'inf'");
  return stack;
}

}  // namespace tesl::optics
