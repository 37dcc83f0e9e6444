#include <catch2/catch_amalgamated.hpp>

#include "forge/geostat/predict.hpp"
#include "forge/geostat/synthetic.hpp"
#include "oracles.hpp"

using namespace forge::geostat;

TEST_CASE("kriging with zero nugget is exact at observed sites") {
  auto ds = generate_synthetic(40, {1.0, 0.1, 0.5}, 17);
  PredictionProblem prob{ds, {ds.locations[3], ds.locations[20], ds.locations[39]}};
  auto z1 = predict(prob, {1.0, 0.1, 0.5, 0.0});
  CHECK_THAT(z1[0], Catch::Matchers::WithinAbs(ds.measurements[3], 1e-8));
  CHECK_THAT(z1[1], Catch::Matchers::WithinAbs(ds.measurements[20], 1e-8));
  CHECK_THAT(z1[2], Catch::Matchers::WithinAbs(ds.measurements[39], 1e-8));
}

TEST_CASE("scalar case reduces to the ratio formula") {
  GeoDataset obs{{{0.2, 0.3}}, {1.4}};
  PredictionProblem prob{obs, {{0.6, 0.6}}};
  CovarianceParams p{1.2, 0.25, 0.8, 0.05};
  auto z1 = predict(prob, p);
  const double s12 = matern_cov(distance(prob.query[0], obs.locations[0]), p);
  const double s22 = p.sigma_sq + p.nugget;
  CHECK_THAT(z1[0], Catch::Matchers::WithinRel(s12 / s22 * 1.4, 1e-14));
}

TEST_CASE("predictions match the joint-conditioning oracle") {
  auto ds = generate_synthetic(50, {1.0, 0.1, 0.5}, 23);
  SeededRng rng(77);
  auto query = draw_locations(5, rng);
  PredictionProblem prob{ds, query};
  CovarianceParams p{1.0, 0.1, 0.5, 1e-4};
  auto ours = predict(prob, p);
  auto ref = oracles::conditional_mean(query, ds, p);
  REQUIRE(ours.size() == 5);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK_THAT(ours[i], Catch::Matchers::WithinRel(ref[i], 1e-8));
}

TEST_CASE("prediction with a fitted-looking nugget still conditions correctly") {
  auto ds = generate_synthetic(30, {2.0, 0.2, 1.0}, 5);
  SeededRng rng(6);
  auto query = draw_locations(3, rng);
  CovarianceParams p{2.0, 0.2, 1.0, 0.1};
  auto ours = predict({ds, query}, p);
  auto ref = oracles::conditional_mean(query, ds, p);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK_THAT(ours[i], Catch::Matchers::WithinRel(ref[i], 1e-8));
}
