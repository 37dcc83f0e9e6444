#pragma once

#include <cmath>
#include <vector>

#include "forge/errors.hpp"

namespace forge::geostat {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Matern parameter vector: marginal variance, spatial range, smoothness,
// plus an optional diagonal nugget.
struct CovarianceParams {
  double sigma_sq = 1.0;
  double beta = 0.1;
  double nu = 0.5;
  double nugget = 0.0;

  void validate() const {
    if (!(sigma_sq > 0.0) || !std::isfinite(sigma_sq))
      throw Error(Errc::domain_error, "sigma_sq must be positive", "sigma_sq");
    if (!(beta > 0.0) || !std::isfinite(beta))
      throw Error(Errc::domain_error, "beta must be positive", "beta");
    if (!(nu > 0.0) || !std::isfinite(nu))
      throw Error(Errc::domain_error, "nu must be positive", "nu");
    if (!(nugget >= 0.0) || !std::isfinite(nugget))
      throw Error(Errc::domain_error, "nugget must be non-negative", "nugget");
  }
};

// Spatial locations with one measurement per location.
struct GeoDataset {
  std::vector<Point> locations;
  std::vector<double> measurements;

  std::size_t size() const { return locations.size(); }

  void validate() const {
    if (locations.size() != measurements.size())
      throw Error(Errc::domain_error, "locations/measurements length mismatch");
    for (std::size_t i = 0; i < locations.size(); ++i)
      for (std::size_t j = i + 1; j < locations.size(); ++j)
        if (locations[i] == locations[j])
          throw Error(Errc::duplicate_locations, "duplicate location at indices " +
                                                     std::to_string(i) + "," + std::to_string(j));
  }
};

struct PredictionProblem {
  GeoDataset observed;          // Z2: the n known values
  std::vector<Point> query;     // locations of the m values to predict
};

}  // namespace forge::geostat
