#pragma once

#include <cmath>
#include <numbers>

#include "forge/geostat/covariance.hpp"
#include "forge/geostat/linalg.hpp"
#include "forge/geostat/params.hpp"

namespace forge::geostat {

struct LikelihoodOptions {
  // When false, drops the -(n/2) log(2 pi) term, which does not affect the
  // optimization.
  bool include_constant = true;
};

// Gaussian log-likelihood
//
//   l(theta) = -(n/2) log(2 pi) - (1/2) log|Sigma| - (1/2) Z^T Sigma^-1 Z
//
// computed in five steps: build Sigma, factor Sigma = L L^T, log-det from the
// factor diagonal, triangular solve w = L^-1 Z, quadratic form w^T w.
inline double log_likelihood(const GeoDataset& dataset, const CovarianceParams& params,
                             const LikelihoodOptions& opts = {}) {
  dataset.validate();
  params.validate();
  const std::size_t n = dataset.size();
  Matrix sigma = build_cov_matrix(dataset.locations, params);
  CholeskyFactor f = cholesky(sigma);
  const double log_det = f.log_det();
  auto w = forward_solve(f.lower, dataset.measurements);
  const double quad = dot(w, w);
  double ll = -0.5 * log_det - 0.5 * quad;
  if (opts.include_constant) ll -= 0.5 * double(n) * std::log(2.0 * std::numbers::pi);
  return ll;
}

}  // namespace forge::geostat
