#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "forge/geostat/likelihood.hpp"
#include "forge/geostat/params.hpp"
#include "forge/geostat/tlr.hpp"

namespace forge::geostat {

// Box bounds on the estimated components (sigma_sq, beta, nu). The nugget is
// carried over from the initial guess, not estimated.
struct ParamBounds {
  CovarianceParams lower;
  CovarianceParams upper;

  void validate() const {
    lower.validate();
    upper.validate();
    if (lower.sigma_sq > upper.sigma_sq || lower.beta > upper.beta || lower.nu > upper.nu)
      throw Error(Errc::domain_error, "bounds must satisfy lower <= upper");
  }

  bool contains(const CovarianceParams& p) const {
    return p.sigma_sq >= lower.sigma_sq && p.sigma_sq <= upper.sigma_sq &&
           p.beta >= lower.beta && p.beta <= upper.beta && p.nu >= lower.nu && p.nu <= upper.nu;
  }
};

struct MleOptions {
  std::size_t max_iterations = 200;
  std::size_t max_evaluations = 1000;
  double ftol_abs = 1e-9;         // spread of simplex values at convergence
  bool include_constant = true;   // forwarded to log_likelihood
  std::size_t tlr_tile = 0;       // nonzero: evaluate through the TLR path
  double tlr_tol = 1e-7;
};

struct MleIteration {
  std::size_t iteration;
  CovarianceParams theta;   // best-so-far parameters
  double loglik;            // best-so-far likelihood, non-decreasing
  std::size_t evaluations;  // cumulative objective evaluations
};

struct MleResult {
  CovarianceParams theta;
  double loglik = -std::numeric_limits<double>::infinity();
  std::vector<MleIteration> trace;
  std::size_t evaluations = 0;
  bool converged = false;
  bool warning = false;
  std::string message;
};

namespace detail {

using Vec3 = std::array<double, 3>;

inline Vec3 to_vec(const CovarianceParams& p) { return {p.sigma_sq, p.beta, p.nu}; }

inline CovarianceParams from_vec(const Vec3& v, double nugget) {
  return {v[0], v[1], v[2], nugget};
}

inline Vec3 clamp_to(const Vec3& v, const ParamBounds& b) {
  return {std::clamp(v[0], b.lower.sigma_sq, b.upper.sigma_sq),
          std::clamp(v[1], b.lower.beta, b.upper.beta),
          std::clamp(v[2], b.lower.nu, b.upper.nu)};
}

}  // namespace detail

// Derivative-free bounded maximization of the Gaussian log-likelihood with a
// Nelder-Mead simplex; candidate points are clamped into the bounds before
// evaluation. Parameter vectors where the covariance is numerically not
// positive definite score -inf and the search moves on, so the returned theta
// is always valid and its likelihood never falls below the starting point's.
inline MleResult mle_fit(const GeoDataset& dataset, const CovarianceParams& init,
                         const ParamBounds& bounds, const MleOptions& opts = {}) {
  using detail::Vec3;
  dataset.validate();
  init.validate();
  bounds.validate();
  if (!bounds.contains(init))
    throw Error(Errc::domain_error, "initial parameters must lie within bounds");

  MleResult result;
  result.theta = init;

  const double neg_inf = -std::numeric_limits<double>::infinity();
  auto objective = [&](const Vec3& v) -> double {
    ++result.evaluations;
    try {
      const CovarianceParams p = detail::from_vec(v, init.nugget);
      const LikelihoodOptions lopts{.include_constant = opts.include_constant};
      const double ll = opts.tlr_tile > 0
                            ? tlr_log_likelihood(dataset, p, opts.tlr_tile, opts.tlr_tol, lopts)
                            : log_likelihood(dataset, p, lopts);
      if (!std::isfinite(ll)) return neg_inf;
      return ll;
    } catch (const Error& e) {
      // a covariance that fails to factor at this theta scores -inf and the
      // search moves on; structural errors (bad tile size, bad data) propagate
      if (e.code() == Errc::not_positive_definite || e.code() == Errc::cholesky_failed)
        return neg_inf;
      throw;
    }
  };
  auto note_best = [&](const Vec3& v, double ll) {
    if (ll > result.loglik) {
      result.loglik = ll;
      result.theta = detail::from_vec(v, init.nugget);
    }
  };

  // initial simplex: the start point plus one step per coordinate
  std::vector<Vec3> xs;
  std::vector<double> fs;
  Vec3 x0 = detail::to_vec(init);
  xs.push_back(x0);
  const Vec3 lo = detail::to_vec(bounds.lower);
  const Vec3 hi = detail::to_vec(bounds.upper);
  for (int d = 0; d < 3; ++d) {
    Vec3 v = x0;
    double step = 0.15 * (hi[d] - lo[d]);
    if (step <= 0.0) step = 0.05 * std::max(std::abs(x0[d]), 1e-3);
    v[d] = (v[d] + step <= hi[d]) ? v[d] + step : v[d] - step;
    xs.push_back(detail::clamp_to(v, bounds));
  }
  for (const auto& v : xs) {
    double f = objective(v);
    note_best(v, f);
    fs.push_back(f);
  }

  const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
  std::size_t iter = 0;
  for (; iter < opts.max_iterations && result.evaluations < opts.max_evaluations; ++iter) {
    // order descending: xs[0] best, xs[3] worst (maximization)
    std::array<std::size_t, 4> idx{0, 1, 2, 3};
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return fs[a] > fs[b]; });
    std::vector<Vec3> sx(4);
    std::vector<double> sf(4);
    for (int i = 0; i < 4; ++i) { sx[i] = xs[idx[i]]; sf[i] = fs[idx[i]]; }
    xs = sx;
    fs = sf;

    if (std::isfinite(fs[0]) && std::isfinite(fs[3]) &&
        std::abs(fs[0] - fs[3]) <= opts.ftol_abs) {
      result.converged = true;
      result.trace.push_back({iter + 1, result.theta, result.loglik, result.evaluations});
      break;
    }

    Vec3 centroid{0, 0, 0};
    for (int i = 0; i < 3; ++i)
      for (int d = 0; d < 3; ++d) centroid[d] += xs[i][d] / 3.0;

    auto blend = [&](double coef) {
      Vec3 v;
      for (int d = 0; d < 3; ++d) v[d] = centroid[d] + coef * (centroid[d] - xs[3][d]);
      return detail::clamp_to(v, bounds);
    };

    Vec3 xr = blend(alpha);
    double fr = objective(xr);
    note_best(xr, fr);
    if (fr > fs[0]) {
      Vec3 xe = blend(gamma);
      double fe = objective(xe);
      note_best(xe, fe);
      if (fe > fr) { xs[3] = xe; fs[3] = fe; }
      else { xs[3] = xr; fs[3] = fr; }
    } else if (fr > fs[2]) {
      xs[3] = xr;
      fs[3] = fr;
    } else {
      Vec3 xc = blend(-rho);
      double fc = objective(xc);
      note_best(xc, fc);
      if (fc > fs[3]) {
        xs[3] = xc;
        fs[3] = fc;
      } else {
        for (int i = 1; i < 4; ++i) {
          for (int d = 0; d < 3; ++d) xs[i][d] = xs[0][d] + sigma * (xs[i][d] - xs[0][d]);
          xs[i] = detail::clamp_to(xs[i], bounds);
          fs[i] = objective(xs[i]);
          note_best(xs[i], fs[i]);
          if (result.evaluations >= opts.max_evaluations) break;
        }
      }
    }
    result.trace.push_back({iter + 1, result.theta, result.loglik, result.evaluations});
  }

  if (!std::isfinite(result.loglik)) {
    result.warning = true;
    result.message = "no finite likelihood found; returning the initial parameters";
    result.theta = init;
  } else if (!result.converged && iter >= opts.max_iterations) {
    result.warning = true;
    result.message = "iteration cap reached before convergence";
  } else if (!result.converged) {
    result.warning = true;
    result.message = "evaluation cap reached before convergence";
  }
  return result;
}

}  // namespace forge::geostat
