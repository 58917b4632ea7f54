#include "tesl/lm_gauss.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "tesl/error.hpp"
#include "tesl/simd/kernels.hpp"

namespace tesl::fit {

namespace {

using Vec3 = std::array<double, 3>;

// Gaussian elimination with partial pivoting; false when singular.
bool solve3(std::array<Vec3, 3> a, Vec3 b, Vec3& x) {
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    if (!(std::fabs(a[piv][c]) > 0.0)) return false;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (int r = c + 1; r < 3; ++r) {
      const double f = a[r][c] / a[c][c];
      for (int k = c; k < 3; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  for (int r = 2; r >= 0; --r) {
    double s = b[r];
    for (int k = r + 1; k < 3; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return std::isfinite(x[0]) && std::isfinite(x[1]) && std::isfinite(x[2]);
}

}  // namespace

GaussFit fit_gaussian(std::span<const double> x, std::span<const double> y, GaussParams seed,
                      int max_iter, double rel_tol) {
  if (x.size() != y.size() || x.size() < 3)
    raise(Errc::InsufficientCounts, "Gaussian fit needs at least three points");
  if (!(seed.sigma > 0.0)) raise(Errc::InvalidParams, "seed sigma must be positive");
  const auto& k = simd::active();

  GaussParams p = seed;
  simd::GaussNormalEq eq = k.gauss_normal_eq(x, y, p.amp, p.mean, p.sigma);
  double lambda = 1e-3;
  for (int it = 1; it <= max_iter; ++it) {
    const double* j = eq.jtj;
    std::array<Vec3, 3> a{{{j[0], j[1], j[2]}, {j[1], j[3], j[4]}, {j[2], j[4], j[5]}}};
    for (int d = 0; d < 3; ++d) a[d][d] += lambda * (a[d][d] > 0.0 ? a[d][d] : 1.0);
    Vec3 step{};
    if (!solve3(a, {eq.jtr[0], eq.jtr[1], eq.jtr[2]}, step)) {
      lambda *= 10.0;
      if (lambda > 1e20) break;
      continue;
    }

    const GaussParams trial{p.amp + step[0], p.mean + step[1], p.sigma + step[2]};
    const bool small = std::fabs(step[0]) <= rel_tol * std::fabs(p.amp) &&
                       std::fabs(step[1]) <= rel_tol * std::max(std::fabs(p.mean), p.sigma) &&
                       std::fabs(step[2]) <= rel_tol * p.sigma;

    if (trial.sigma > 0.0) {
      const simd::GaussNormalEq next = k.gauss_normal_eq(x, y, trial.amp, trial.mean, trial.sigma);
      if (std::isfinite(next.chi2) && next.chi2 <= eq.chi2) {
        p = trial;
        eq = next;
        lambda = std::max(lambda / 10.0, 1e-12);
        if (small) return {p, eq.chi2, it};
        continue;
      }
    }
    if (small) return {p, eq.chi2, it};
    lambda *= 10.0;
    if (lambda > 1e20) break;
  }
  raise(Errc::FitDiverged, "Gaussian fit did not converge");
}

}  // namespace tesl::fit
