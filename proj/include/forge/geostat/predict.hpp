#pragma once

#include <vector>

#include "forge/geostat/covariance.hpp"
#include "forge/geostat/linalg.hpp"
#include "forge/geostat/params.hpp"

namespace forge::geostat {

// Kriging mean: Z1 = Sigma_12 Sigma_22^-1 Z2, via the Cholesky factor of
// Sigma_22 and two triangular solves. The nugget sits on the Sigma_22
// diagonal only, so with nugget = 0 prediction at an observed site returns
// the observation itself.
inline std::vector<double> predict(const PredictionProblem& problem,
                                   const CovarianceParams& params) {
  problem.observed.validate();
  params.validate();
  Matrix sigma22 = build_cov_matrix(problem.observed.locations, params);
  CholeskyFactor f = cholesky(sigma22);
  auto weights = cholesky_solve(f, problem.observed.measurements);
  Matrix sigma12 = build_cross_cov(problem.query, problem.observed.locations, params);
  return sigma12 * weights;
}

}  // namespace forge::geostat
