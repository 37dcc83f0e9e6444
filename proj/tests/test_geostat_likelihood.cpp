#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "forge/geostat/likelihood.hpp"
#include "forge/geostat/synthetic.hpp"
#include "oracles.hpp"

using namespace forge::geostat;

TEST_CASE("n=1 with unit variance and zero measurement") {
  GeoDataset ds{{{0.5, 0.5}}, {0.0}};
  // |Sigma| = 1 and the quadratic form vanishes, leaving only the constant
  const double expected = -0.5 * std::log(2.0 * M_PI);
  CHECK_THAT(log_likelihood(ds, {1.0, 0.1, 0.5}), Catch::Matchers::WithinAbs(expected, 1e-12));
  CHECK_THAT(expected, Catch::Matchers::WithinAbs(-0.918938533204672742, 1e-12));
  CHECK(log_likelihood(ds, {1.0, 0.1, 0.5}, {.include_constant = false}) == 0.0);
}

TEST_CASE("n=2 matches the closed-form 2x2 computation") {
  GeoDataset ds{{{0.1, 0.1}, {0.4, 0.7}}, {0.8, -0.3}};
  CovarianceParams p{1.5, 0.2, 0.5, 0.01};
  const double a = p.sigma_sq + p.nugget;
  const double c = matern_cov(distance(ds.locations[0], ds.locations[1]), p);
  const double det = a * a - c * c;
  const double z0 = ds.measurements[0], z1 = ds.measurements[1];
  const double quad = (a * z0 * z0 - 2.0 * c * z0 * z1 + a * z1 * z1) / det;
  const double expected = -std::log(2.0 * M_PI) - 0.5 * std::log(det) - 0.5 * quad;
  CHECK_THAT(log_likelihood(ds, p), Catch::Matchers::WithinAbs(expected, 1e-12));
}

TEST_CASE("five-step path equals the explicit-inverse oracle") {
  for (auto [n, seed] : {std::pair{20u, 1u}, {50u, 2u}, {100u, 3u}}) {
    auto ds = generate_synthetic(n, {1.0, 0.1, 0.5}, seed);
    for (CovarianceParams p : {CovarianceParams{1.0, 0.1, 0.5, 1e-4},
                               CovarianceParams{2.0, 0.2, 1.2, 1e-3},
                               CovarianceParams{0.7, 0.05, 0.8, 1e-2}}) {
      const double ours = log_likelihood(ds, p);
      const double ref = oracles::log_likelihood(ds, p);
      CHECK_THAT(ours, Catch::Matchers::WithinRel(ref, 1e-8));
    }
  }
}

TEST_CASE("constant-free option shifts by n/2 log 2pi") {
  auto ds = generate_synthetic(30, {1.0, 0.1, 0.5}, 9);
  CovarianceParams p{1.0, 0.1, 0.5, 1e-6};
  const double full = log_likelihood(ds, p);
  const double bare = log_likelihood(ds, p, {.include_constant = false});
  CHECK_THAT(full - bare, Catch::Matchers::WithinAbs(-15.0 * std::log(2.0 * M_PI), 1e-10));
}

TEST_CASE("likelihood propagates NotPositiveDefinite") {
  // two nearly coincident points with a smooth kernel and no nugget
  GeoDataset ds{{{0.5, 0.5}, {0.5, 0.5 + 1e-13}, {0.2, 0.2}}, {0.1, 0.1, -0.2}};
  CHECK_THROWS_MATCHES(log_likelihood(ds, {1.0, 0.3, 2.5}), forge::Error,
                       Catch::Matchers::Predicate<forge::Error>([](const forge::Error& e) {
                         return e.code() == forge::Errc::not_positive_definite;
                       }));
}
