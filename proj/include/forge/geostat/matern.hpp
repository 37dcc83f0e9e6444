#pragma once

#include <cmath>

#include "forge/errors.hpp"
#include "forge/geostat/params.hpp"

namespace forge::geostat {

// Matern covariance at separation d:
//
//   C(d) = sigma^2 * 2^(1-nu) / Gamma(nu) * (d/beta)^nu * K_nu(d/beta)
//
// with K_nu the modified Bessel function of the second kind. C(0) = sigma^2.
// The nugget is not applied here; it belongs on the covariance diagonal only.
inline double matern_cov(double d, const CovarianceParams& p) {
  if (!std::isfinite(d) || d < 0.0)
    throw Error(Errc::domain_error, "distance must be finite and non-negative");
  p.validate();
  if (d == 0.0) return p.sigma_sq;
  const double x = d / p.beta;
  // K_nu decays like exp(-x); past this point the result underflows anyway
  // and cyl_bessel_k would raise spurious range errors.
  if (x > 700.0) return 0.0;
  const double bessel = std::cyl_bessel_k(p.nu, x);
  const double scale = p.sigma_sq * std::exp2(1.0 - p.nu) / std::tgamma(p.nu);
  return scale * std::pow(x, p.nu) * bessel;
}

}  // namespace forge::geostat
