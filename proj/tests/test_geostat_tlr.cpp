#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "forge/geostat/synthetic.hpp"
#include "forge/geostat/tlr.hpp"
#include "oracles.hpp"

using namespace forge::geostat;

namespace {

Matrix fixture_covariance(std::size_t n, std::uint64_t seed, CovarianceParams p) {
  SeededRng rng(seed);
  auto locs = draw_locations(n, rng);
  return build_cov_matrix(locs, p);
}

double tile_error(const Matrix& sigma, const TLRMatrix& tlr, std::size_t bi, std::size_t bj) {
  Matrix dense = tile_of(sigma, bi, bj, tlr.nb);
  Matrix approx = tlr.lower[bi][bj].dense(tlr.nb);
  double err = 0.0;
  for (std::size_t i = 0; i < tlr.nb; ++i)
    for (std::size_t j = 0; j < tlr.nb; ++j) {
      double d = dense(i, j) - approx(i, j);
      err += d * d;
    }
  return std::sqrt(err);
}

}  // namespace

TEST_CASE("jacobi svd agrees with the eigen oracle") {
  SeededRng rng(19);
  Matrix a(16, 16);
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j) a(i, j) = rng.normal();
  auto svd = jacobi_svd(a);
  Eigen::MatrixXd ea(16, 16);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) ea(i, j) = a(std::size_t(i), std::size_t(j));
  auto ref = oracles::singular_values(ea);
  for (std::size_t i = 0; i < 16; ++i)
    CHECK_THAT(svd.values[i], Catch::Matchers::WithinRel(ref[i], 1e-10));
}

TEST_CASE("rank-1 tile compresses to rank 1 exactly") {
  const std::size_t n = 32, nb = 16;
  // sigma assembled from an outer product on the off-diagonal tile
  Matrix sigma = Matrix::identity(n);
  SeededRng rng(4);
  std::vector<double> u(nb), v(nb);
  for (auto& x : u) x = rng.normal();
  for (auto& x : v) x = rng.normal();
  for (std::size_t i = 0; i < nb; ++i)
    for (std::size_t j = 0; j < nb; ++j) {
      sigma(nb + i, j) = u[i] * v[j];
      sigma(j, nb + i) = u[i] * v[j];
    }
  auto tlr = tlr_compress(sigma, nb, 1e-7);
  REQUIRE(tlr.lower[1].size() == 1);
  CHECK(tlr.lower[1][0].rank == 1);
  CHECK(tile_error(sigma, tlr, 1, 0) <= 1e-12);
}

TEST_CASE("every off-diagonal tile honors the tolerance bound") {
  Matrix sigma = fixture_covariance(128, 3, {1.0, 0.1, 0.5, 1e-6});
  for (double tol : {1e-3, 1e-5, 1e-7}) {
    auto tlr = tlr_compress(sigma, 32, tol);
    for (std::size_t bi = 0; bi < 4; ++bi)
      for (std::size_t bj = 0; bj < bi; ++bj) {
        Matrix dense = tile_of(sigma, bi, bj, 32);
        CHECK(tile_error(sigma, tlr, bi, bj) <= tol * dense.frobenius_norm() + 1e-15);
      }
  }
}

TEST_CASE("chosen rank matches the energy rule on the eigen oracle values") {
  Matrix sigma = fixture_covariance(96, 11, {1.0, 0.1, 0.5, 1e-6});
  const double tol = 1e-6;
  auto tlr = tlr_compress(sigma, 32, tol);
  for (std::size_t bi = 0; bi < 3; ++bi)
    for (std::size_t bj = 0; bj < bi; ++bj) {
      Matrix t = tile_of(sigma, bi, bj, 32);
      Eigen::MatrixXd et(32, 32);
      for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 32; ++j) et(i, j) = t(std::size_t(i), std::size_t(j));
      auto sv = oracles::singular_values(et);
      double total = 0.0;
      for (double s : sv) total += s * s;
      // smallest k whose discarded tail fits in the budget
      double tail = 0.0;
      std::size_t k = 32;
      for (std::size_t r = 32; r-- > 0;) {
        if (tail + sv[r] * sv[r] > tol * tol * total) break;
        tail += sv[r] * sv[r];
        k = r;
      }
      if (k == 0) k = 1;
      CHECK(tlr.lower[bi][bj].rank == k);
    }
}

TEST_CASE("tol=0 compression round-trips to machine precision") {
  Matrix sigma = fixture_covariance(64, 7, {2.0, 0.15, 1.0, 1e-4});
  auto tlr = tlr_compress(sigma, 16, 0.0);
  Matrix back = tlr_reconstruct(tlr);
  double err = 0.0;
  for (std::size_t i = 0; i < 64; ++i)
    for (std::size_t j = 0; j < 64; ++j) {
      double d = back(i, j) - sigma(i, j);
      err += d * d;
    }
  CHECK(std::sqrt(err) <= 1e-12 * sigma.frobenius_norm());
}

TEST_CASE("diagonal tiles are stored dense and bit-exact") {
  Matrix sigma = fixture_covariance(64, 13, {1.0, 0.1, 0.5, 1e-6});
  auto tlr = tlr_compress(sigma, 16, 1e-2);
  Matrix back = tlr_reconstruct(tlr);
  for (std::size_t b = 0; b < 4; ++b)
    for (std::size_t i = 0; i < 16; ++i)
      for (std::size_t j = 0; j < 16; ++j)
        CHECK(back(16 * b + i, 16 * b + j) == sigma(16 * b + i, 16 * b + j));
}

TEST_CASE("reconstruction error obeys the discarded-singular-value bound") {
  Matrix sigma = fixture_covariance(96, 29, {1.0, 0.08, 0.5, 1e-6});
  const double tol = 1e-4;
  auto tlr = tlr_compress(sigma, 32, tol);
  Matrix back = tlr_reconstruct(tlr);

  // per tile, the Frobenius error equals the energy of the discarded tail
  double expected_sq = 0.0;
  for (std::size_t bi = 0; bi < 3; ++bi)
    for (std::size_t bj = 0; bj < bi; ++bj) {
      Matrix t = tile_of(sigma, bi, bj, 32);
      Eigen::MatrixXd et(32, 32);
      for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 32; ++j) et(i, j) = t(std::size_t(i), std::size_t(j));
      auto sv = oracles::singular_values(et);
      std::size_t k = tlr.lower[bi][bj].rank;
      for (std::size_t r = k; r < sv.size(); ++r) expected_sq += sv[r] * sv[r];
    }
  double err_sq = 0.0;
  for (std::size_t i = 0; i < 96; ++i)
    for (std::size_t j = 0; j < 96; ++j) {
      double d = back(i, j) - sigma(i, j);
      err_sq += d * d;
    }
  // both triangles contribute
  CHECK_THAT(err_sq, Catch::Matchers::WithinRel(2.0 * expected_sq, 1e-6));

  // and the total obeys the sqrt(#tiles) * tol * max-tile-norm bound
  double max_tile = 0.0;
  for (std::size_t bi = 0; bi < 3; ++bi)
    for (std::size_t bj = 0; bj < bi; ++bj)
      max_tile = std::max(max_tile, tile_of(sigma, bi, bj, 32).frobenius_norm());
  CHECK(std::sqrt(err_sq) <= std::sqrt(6.0) * tol * max_tile);
}

TEST_CASE("tile size must divide the matrix order") {
  Matrix sigma = fixture_covariance(60, 1, {1.0, 0.1, 0.5, 1e-6});
  CHECK_THROWS_MATCHES(tlr_compress(sigma, 32, 1e-6), forge::Error,
                       Catch::Matchers::Predicate<forge::Error>([](const forge::Error& e) {
                         return e.code() == forge::Errc::tile_size_mismatch;
                       }));
  CHECK_THROWS_AS(tlr_compress(sigma, 0, 1e-6), forge::Error);
}

TEST_CASE("lossless TLR likelihood equals the dense path") {
  SeededRng rng(41);
  auto locs = draw_locations(64, rng);
  std::vector<double> e(64);
  for (auto& v : e) v = rng.normal();
  CovarianceParams p{1.0, 0.1, 0.5, 1e-4};
  GeoDataset ds{locs, synthesize_measurements(locs, p, e, 0.0)};
  const double dense = log_likelihood(ds, p);
  const double tlr = tlr_log_likelihood(ds, p, 16, 0.0);
  CHECK_THAT(tlr, Catch::Matchers::WithinRel(dense, 1e-10));
}

TEST_CASE("tlr likelihood error grows with the tolerance") {
  SeededRng rng(43);
  auto locs = draw_locations(128, rng);
  std::vector<double> e(128);
  for (auto& v : e) v = rng.normal();
  CovarianceParams p{1.0, 0.1, 0.5, 1e-2};
  GeoDataset ds{locs, synthesize_measurements(locs, p, e, 0.0)};
  const double dense = log_likelihood(ds, p);
  double prev = 0.0;
  for (double tol : {1e-9, 1e-6, 1e-3, 1e-2}) {
    const double err = std::abs(tlr_log_likelihood(ds, p, 32, tol) - dense);
    CHECK(err >= prev - 1e-12);
    prev = err;
  }
}
