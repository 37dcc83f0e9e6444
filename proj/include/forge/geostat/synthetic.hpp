#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "forge/geostat/covariance.hpp"
#include "forge/geostat/linalg.hpp"
#include "forge/geostat/params.hpp"

namespace forge::geostat {

// Seeded draws mapped to doubles by explicit bit arithmetic rather than the
// standard distributions, whose output is implementation-defined. The same
// seed must give bitwise-identical datasets on every build of this library
// (the benchmark harness compares outputs across environments).
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : gen_(seed) {}

  // uniform in [0, 1)
  double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

  // uniform in (0, 1]
  double uniform_open() { return double((gen_() >> 11) + 1) * 0x1.0p-53; }

  // standard normal via Box-Muller
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// n locations uniform in the unit square; re-draws the rare exact collision
// so the pairwise-distinct invariant holds.
inline std::vector<Point> draw_locations(std::size_t n, SeededRng& rng) {
  std::vector<Point> pts;
  pts.reserve(n);
  while (pts.size() < n) {
    Point p{rng.uniform(), rng.uniform()};
    bool dup = false;
    for (const auto& q : pts)
      if (q == p) { dup = true; break; }
    if (!dup) pts.push_back(p);
  }
  return pts;
}

// Z = L * e for a given noise vector e, with Sigma(theta) = L L^T.
// `jitter` is added to the diagonal before factoring; synthesis tolerates the
// tiny perturbation and dense location sets may need it.
inline std::vector<double> synthesize_measurements(std::span<const Point> locations,
                                                   const CovarianceParams& params,
                                                   std::span<const double> noise,
                                                   double jitter) {
  Matrix sigma = build_cov_matrix(locations, params);
  for (std::size_t i = 0; i < sigma.rows(); ++i) sigma(i, i) += jitter;
  CholeskyFactor f;
  try {
    f = cholesky(sigma);
  } catch (const Error& e) {
    throw Error(Errc::cholesky_failed, std::string("synthesis covariance: ") + e.what());
  }
  std::vector<double> z(locations.size(), 0.0);
  for (std::size_t i = 0; i < z.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k <= i; ++k) s += f.lower(i, k) * noise[k];
    z[i] = s;
  }
  return z;
}

inline double default_jitter(const CovarianceParams& p) { return 1e-8 * p.sigma_sq; }

inline GeoDataset generate_synthetic(std::size_t n, const CovarianceParams& params,
                                     std::uint64_t seed) {
  if (n < 1) throw Error(Errc::domain_error, "n must be at least 1");
  params.validate();
  SeededRng rng(seed);
  GeoDataset ds;
  ds.locations = draw_locations(n, rng);
  std::vector<double> e(n);
  for (auto& v : e) v = rng.normal();
  ds.measurements = synthesize_measurements(ds.locations, params, e, default_jitter(params));
  return ds;
}

}  // namespace forge::geostat
