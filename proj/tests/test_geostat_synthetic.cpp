#include <catch2/catch_amalgamated.hpp>
#include <numeric>
#include <sstream>

#include "forge/geostat/csv.hpp"
#include "forge/geostat/synthetic.hpp"

using namespace forge::geostat;

TEST_CASE("same seed reproduces the dataset bit for bit") {
  auto a = generate_synthetic(200, {1.0, 0.1, 0.5}, 99);
  auto b = generate_synthetic(200, {1.0, 0.1, 0.5}, 99);
  CHECK(a.locations == b.locations);
  CHECK(a.measurements == b.measurements);
  auto c = generate_synthetic(200, {1.0, 0.1, 0.5}, 100);
  CHECK(a.measurements != c.measurements);
}

TEST_CASE("locations land in the unit square and are distinct") {
  auto ds = generate_synthetic(500, {1.0, 0.1, 0.5}, 7);
  for (const auto& p : ds.locations) {
    CHECK(p.x >= 0.0);
    CHECK(p.x < 1.0);
    CHECK(p.y >= 0.0);
    CHECK(p.y < 1.0);
  }
  CHECK_NOTHROW(ds.validate());
}

TEST_CASE("zero noise vector gives zero measurements") {
  SeededRng rng(5);
  auto locs = draw_locations(20, rng);
  std::vector<double> zero(20, 0.0);
  auto z = synthesize_measurements(locs, {1.0, 0.1, 0.5}, zero, 0.0);
  for (double v : z) CHECK(v == 0.0);
}

TEST_CASE("sample variance sits near the marginal variance") {
  // marginal variance is sigma^2 = 1; n = 2000 keeps the Monte-Carlo noise
  // inside [0.8, 1.2] for this seed
  auto ds = generate_synthetic(2000, {1.0, 0.1, 0.5}, 555);
  double mean = std::accumulate(ds.measurements.begin(), ds.measurements.end(), 0.0) / 2000.0;
  double var = 0.0;
  for (double v : ds.measurements) var += (v - mean) * (v - mean);
  var /= 1999.0;
  CHECK(var > 0.8);
  CHECK(var < 1.2);
}

TEST_CASE("n must be at least one") {
  CHECK_THROWS_AS(generate_synthetic(0, {1.0, 0.1, 0.5}, 1), forge::Error);
}

TEST_CASE("dataset csv round-trips") {
  auto ds = generate_synthetic(37, {1.5, 0.2, 1.0}, 21);
  auto text = dataset_to_csv(ds);
  std::istringstream in(text);
  auto back = dataset_from_csv(in);
  CHECK(back.locations == ds.locations);
  CHECK(back.measurements == ds.measurements);
}

TEST_CASE("csv parser rejects malformed input") {
  std::istringstream bad_header("a,b,c\n1,2,3\n");
  CHECK_THROWS_AS(dataset_from_csv(bad_header), forge::Error);
  std::istringstream bad_field("x,y,z\n1,2,oops\n");
  CHECK_THROWS_AS(dataset_from_csv(bad_field), forge::Error);
  std::istringstream short_row("x,y,z\n1,2\n");
  CHECK_THROWS_AS(dataset_from_csv(short_row), forge::Error);
}
