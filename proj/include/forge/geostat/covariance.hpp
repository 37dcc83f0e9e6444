#pragma once

#include <span>
#include <vector>

#include "forge/geostat/linalg.hpp"
#include "forge/geostat/matern.hpp"
#include "forge/geostat/params.hpp"

namespace forge::geostat {

// Sigma_ij = matern(|s_i - s_j|), nugget added on the diagonal. Each pair is
// computed once and mirrored so the result is symmetric bit for bit.
inline Matrix build_cov_matrix(std::span<const Point> locations, const CovarianceParams& p) {
  p.validate();
  const std::size_t n = locations.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (locations[i] == locations[j])
        throw Error(Errc::duplicate_locations,
                    "locations " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
  Matrix sigma(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    sigma(i, i) = p.sigma_sq + p.nugget;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double c = matern_cov(distance(locations[i], locations[j]), p);
      sigma(i, j) = c;
      sigma(j, i) = c;
    }
  }
  return sigma;
}

// m x n cross-covariance between query and observed locations. No nugget:
// cross terms model the smooth field, never the measurement noise.
inline Matrix build_cross_cov(std::span<const Point> query, std::span<const Point> observed,
                              const CovarianceParams& p) {
  p.validate();
  Matrix c(query.size(), observed.size());
  for (std::size_t i = 0; i < query.size(); ++i)
    for (std::size_t j = 0; j < observed.size(); ++j)
      c(i, j) = matern_cov(distance(query[i], observed[j]), p);
  return c;
}

}  // namespace forge::geostat
