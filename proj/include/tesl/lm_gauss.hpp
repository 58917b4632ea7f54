#pragma once

#include <span>

namespace tesl::fit {

struct GaussParams {
  double amp = 0.0;
  double mean = 0.0;
  double sigma = 1.0;
};

struct GaussFit {
  GaussParams params;
  double chi2 = 0.0;
  int iterations = 0;
};

// Unweighted Levenberg-Marquardt fit of amp * exp(-(x - mean)^2 / 2 sigma^2)
// with the analytic Jacobian. Converged when every relative parameter step
// is below rel_tol. Throws FitDiverged after max_iter steps or when sigma
// leaves (0, inf).
GaussFit fit_gaussian(std::span<const double> x, std::span<const double> y, GaussParams seed,
                      int max_iter = 200, double rel_tol = 1e-8);

}  // namespace tesl::fit
