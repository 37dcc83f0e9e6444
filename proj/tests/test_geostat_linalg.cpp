#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "forge/geostat/covariance.hpp"
#include "forge/geostat/linalg.hpp"
#include "forge/geostat/synthetic.hpp"
#include "oracles.hpp"

using namespace forge::geostat;
using forge::Errc;
using forge::Error;

TEST_CASE("cholesky of the identity is the identity") {
  auto f = cholesky(Matrix::identity(5));
  CHECK(f.lower == Matrix::identity(5));
  CHECK(f.log_det() == 0.0);
}

TEST_CASE("cholesky of a hand-checkable 2x2") {
  Matrix a(2, 2);
  a(0, 0) = 4; a(0, 1) = 2; a(1, 0) = 2; a(1, 1) = 3;
  auto f = cholesky(a);
  CHECK(f.lower(0, 0) == 2.0);
  CHECK(f.lower(1, 0) == 1.0);
  CHECK(f.lower(0, 1) == 0.0);
  CHECK_THAT(f.lower(1, 1), Catch::Matchers::WithinRel(std::sqrt(2.0), 1e-15));
}

TEST_CASE("indefinite matrix reports the failing pivot") {
  Matrix a(2, 2);
  a(0, 0) = 1; a(0, 1) = 2; a(1, 0) = 2; a(1, 1) = 1;  // eigenvalues 3 and -1
  try {
    cholesky(a);
    FAIL("expected NotPositiveDefinite");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::not_positive_definite);
    CHECK(e.detail() == "1");
  }
}

TEST_CASE("cholesky residual stays tiny on covariance fixtures") {
  SeededRng rng(11);
  for (std::size_t n : {10u, 40u, 90u}) {
    auto locs = draw_locations(n, rng);
    Matrix sigma = build_cov_matrix(locs, {1.0, 0.1, 0.5, 1e-6});
    auto f = cholesky(sigma);
    Matrix rebuilt = f.lower * f.lower.transposed();
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double d = rebuilt(i, j) - sigma(i, j);
        err += d * d;
      }
    CHECK(std::sqrt(err) <= 1e-10 * sigma.frobenius_norm());
  }
}

TEST_CASE("triangular solves invert the factorization") {
  SeededRng rng(7);
  auto locs = draw_locations(30, rng);
  Matrix sigma = build_cov_matrix(locs, {2.0, 0.15, 1.0, 1e-4});
  std::vector<double> b(30);
  for (auto& v : b) v = rng.normal();
  auto f = cholesky(sigma);
  auto x = cholesky_solve(f, b);
  auto back = sigma * x;
  for (std::size_t i = 0; i < b.size(); ++i)
    CHECK_THAT(back[i], Catch::Matchers::WithinAbs(b[i], 1e-9));
}

TEST_CASE("covariance matrix is exactly symmetric with the diagonal pinned") {
  SeededRng rng(3);
  auto locs = draw_locations(25, rng);
  CovarianceParams p{1.7, 0.2, 0.8, 1e-3};
  Matrix sigma = build_cov_matrix(locs, p);
  for (std::size_t i = 0; i < 25; ++i) {
    CHECK(sigma(i, i) == p.sigma_sq + p.nugget);
    for (std::size_t j = 0; j < 25; ++j) CHECK(sigma(i, j) == sigma(j, i));
  }
}

TEST_CASE("single location gives the 1x1 matrix sigma^2 + nugget") {
  std::vector<Point> one{{0.3, 0.4}};
  Matrix sigma = build_cov_matrix(one, {2.0, 0.1, 0.5, 0.25});
  CHECK(sigma.rows() == 1);
  CHECK(sigma(0, 0) == 2.25);
}

TEST_CASE("duplicate locations are rejected") {
  std::vector<Point> pts{{0.1, 0.2}, {0.5, 0.5}, {0.1, 0.2}};
  CHECK_THROWS_MATCHES(build_cov_matrix(pts, {1, 0.1, 0.5}), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Errc::duplicate_locations;
                       }));
}

TEST_CASE("covariance fixture is positive definite by the eigen oracle") {
  SeededRng rng(42);
  auto locs = draw_locations(50, rng);
  Matrix sigma = build_cov_matrix(locs, {1.0, 0.1, 0.5, 1e-6});
  Eigen::MatrixXd es(50, 50);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) es(i, j) = sigma(std::size_t(i), std::size_t(j));
  CHECK(oracles::min_eigenvalue(es) > 0.0);
}
