#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "forge/geostat/matern.hpp"
#include "oracles.hpp"

using forge::Errc;
using forge::Error;
using forge::geostat::CovarianceParams;
using forge::geostat::matern_cov;

TEST_CASE("matern at zero distance is sigma^2") {
  CHECK(matern_cov(0.0, {1.0, 0.1, 0.5}) == 1.0);
  CHECK(matern_cov(0.0, {3.7, 0.01, 2.5}) == 3.7);
  // nugget never enters the kernel itself
  CHECK(matern_cov(0.0, {2.0, 0.1, 0.5, 0.5}) == 2.0);
}

TEST_CASE("nu = 1/2 reduces to the exponential kernel") {
  for (double beta : {0.05, 0.1, 0.5, 1.0})
    for (double d = 0.01; d < 2.0; d += 0.07) {
      const double expected = 2.5 * std::exp(-d / beta);
      CHECK_THAT(matern_cov(d, {2.5, beta, 0.5}),
                 Catch::Matchers::WithinRel(expected, 1e-12));
    }
}

TEST_CASE("nu = 3/2 closed form") {
  for (double d : {0.02, 0.15, 0.6, 1.4}) {
    const double x = d / 0.2;
    const double expected = 1.3 * (1.0 + x) * std::exp(-x);
    CHECK_THAT(matern_cov(d, {1.3, 0.2, 1.5}), Catch::Matchers::WithinRel(expected, 1e-12));
  }
}

TEST_CASE("general order matches high-precision references") {
  // frozen from an arbitrary-precision evaluation of the kernel
  CHECK_THAT(matern_cov(0.15, {2.0, 0.2, 1.3}),
             Catch::Matchers::WithinRel(1.580922366195739091344, 1e-12));
  CHECK_THAT(matern_cov(0.05, {1.0, 0.1, 0.5}),
             Catch::Matchers::WithinRel(0.6065306597126334236038, 1e-12));
  CHECK_THAT(matern_cov(0.3, {1.5, 0.25, 1.5}),
             Catch::Matchers::WithinRel(0.9939408993102669189284, 1e-12));
  CHECK_THAT(matern_cov(1.0, {0.8, 0.3, 0.9}),
             Catch::Matchers::WithinRel(0.06252102025374284094532, 1e-12));
  CHECK_THAT(matern_cov(0.02, {2.5, 0.01, 0.7}),
             Catch::Matchers::WithinRel(0.4853925257931404450842, 1e-12));
}

TEST_CASE("general order matches the quadrature oracle") {
  for (double nu : {0.4, 0.8, 1.3, 2.1})
    for (double d : {0.03, 0.1, 0.4, 1.0})
      for (double beta : {0.1, 0.3}) {
        const double x = d / beta;
        const double expected =
            1.7 * std::exp2(1.0 - nu) / std::tgamma(nu) * std::pow(x, nu) *
            oracles::bessel_k_quadrature(nu, x);
        CHECK_THAT(matern_cov(d, {1.7, beta, nu}),
                   Catch::Matchers::WithinRel(expected, 1e-10));
      }
}

TEST_CASE("matern rejects bad inputs") {
  CHECK_THROWS_MATCHES(matern_cov(std::nan(""), {1, 0.1, 0.5}), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.code() == Errc::domain_error; }));
  CHECK_THROWS_AS(matern_cov(-0.1, {1, 0.1, 0.5}), Error);
  CHECK_THROWS_AS(matern_cov(0.1, {-1.0, 0.1, 0.5}), Error);
  CHECK_THROWS_AS(matern_cov(0.1, {1.0, 0.0, 0.5}), Error);
  CHECK_THROWS_AS(matern_cov(0.1, {1.0, 0.1, 0.5, -0.2}), Error);
}

TEST_CASE("far-field values decay to zero without raising") {
  CHECK(matern_cov(2.0, {1.0, 0.001, 0.5}) == 0.0);
  CHECK(matern_cov(1.4, {1.0, 0.01, 1.3}) >= 0.0);
}
