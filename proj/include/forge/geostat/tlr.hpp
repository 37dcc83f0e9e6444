#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "forge/geostat/likelihood.hpp"
#include "forge/geostat/linalg.hpp"

namespace forge::geostat {

struct SvdResult {
  Matrix u;                     // columns are left singular vectors
  std::vector<double> values;   // descending
  Matrix v;                     // columns are right singular vectors
};

// One-sided Jacobi SVD. Plenty for the tile sizes used here, and keeps the
// compression path free of external solvers; the test suite cross-checks it
// against an independent dense SVD.
inline SvdResult jacobi_svd(const Matrix& a) {
  const std::size_t m = a.rows(), n = a.cols();
  Matrix w = a;                       // columns get rotated into U * S
  Matrix v = Matrix::identity(n);
  const double eps = 1e-15;
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          app += w(i, p) * w(i, p);
          aqq += w(i, q) * w(i, q);
          apq += w(i, p) * w(i, q);
        }
        if (std::abs(apq) <= eps * std::sqrt(app * aqq) || apq == 0.0) continue;
        rotated = true;
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double wp = w(i, p), wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += w(i, j) * w(i, j);
    norms[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  SvdResult r{Matrix(m, n), std::vector<double>(n), Matrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    r.values[j] = norms[src];
    const double inv = norms[src] > 0.0 ? 1.0 / norms[src] : 0.0;
    for (std::size_t i = 0; i < m; ++i) r.u(i, j) = w(i, src) * inv;
    for (std::size_t i = 0; i < n; ++i) r.v(i, j) = v(i, src);
  }
  return r;
}

// Off-diagonal tile stored as the rank-k product U * V^T, with the singular
// values folded into U.
struct LowRankTile {
  Matrix u;  // nb x k
  Matrix v;  // nb x k
  std::size_t rank = 0;

  Matrix dense(std::size_t nb) const {
    Matrix d(nb, nb);
    for (std::size_t i = 0; i < nb; ++i)
      for (std::size_t j = 0; j < nb; ++j) {
        double s = 0.0;
        for (std::size_t r = 0; r < rank; ++r) s += u(i, r) * v(j, r);
        d(i, j) = s;
      }
    return d;
  }
};

// Tiled covariance matrix: dense diagonal tiles, compressed off-diagonal
// tiles. Only the lower triangle of tiles is stored; the matrix is symmetric.
struct TLRMatrix {
  std::size_t n = 0;
  std::size_t nb = 0;
  std::vector<Matrix> diagonal;                 // nt dense nb x nb tiles
  std::vector<std::vector<LowRankTile>> lower;  // lower[i][j] for j < i

  std::size_t tiles_per_side() const { return nb == 0 ? 0 : n / nb; }
};

inline Matrix tile_of(const Matrix& a, std::size_t bi, std::size_t bj, std::size_t nb) {
  Matrix t(nb, nb);
  for (std::size_t i = 0; i < nb; ++i)
    for (std::size_t j = 0; j < nb; ++j) t(i, j) = a(bi * nb + i, bj * nb + j);
  return t;
}

// Truncated-SVD compression of each off-diagonal tile: keep the smallest k
// whose discarded singular values carry at most tol * ||tile||_F of energy,
// so ||tile - U V^T||_F <= tol * ||tile||_F holds tile by tile.
inline TLRMatrix tlr_compress(const Matrix& sigma, std::size_t nb, double tol) {
  const std::size_t n = sigma.rows();
  if (nb == 0 || n % nb != 0)
    throw Error(Errc::tile_size_mismatch,
                "tile size " + std::to_string(nb) + " does not divide n = " + std::to_string(n));
  if (tol < 0.0) throw Error(Errc::domain_error, "tolerance must be non-negative");
  const std::size_t nt = n / nb;

  TLRMatrix out;
  out.n = n;
  out.nb = nb;
  out.diagonal.reserve(nt);
  out.lower.resize(nt);
  for (std::size_t bi = 0; bi < nt; ++bi) {
    out.diagonal.push_back(tile_of(sigma, bi, bi, nb));
    out.lower[bi].reserve(bi);
    for (std::size_t bj = 0; bj < bi; ++bj) {
      Matrix t = tile_of(sigma, bi, bj, nb);
      SvdResult svd = jacobi_svd(t);

      double total_energy = 0.0;
      for (double s : svd.values) total_energy += s * s;
      const double budget = tol * tol * total_energy;
      std::size_t k = nb;
      double tail = 0.0;
      // grow the discarded tail from the smallest singular value upwards
      for (std::size_t r = nb; r-- > 0;) {
        const double next = tail + svd.values[r] * svd.values[r];
        if (next > budget) break;
        tail = next;
        k = r;
      }
      if (k == 0) k = 1;  // an all-zero tile still keeps one (zero) column

      LowRankTile lr;
      lr.rank = k;
      lr.u = Matrix(nb, k);
      lr.v = Matrix(nb, k);
      for (std::size_t r = 0; r < k; ++r)
        for (std::size_t i = 0; i < nb; ++i) {
          lr.u(i, r) = svd.u(i, r) * svd.values[r];
          lr.v(i, r) = svd.v(i, r);
        }
      out.lower[bi].push_back(std::move(lr));
    }
  }
  return out;
}

// Dense assembly; the verification inverse of tlr_compress.
inline Matrix tlr_reconstruct(const TLRMatrix& tlr) {
  const std::size_t n = tlr.n, nb = tlr.nb, nt = tlr.tiles_per_side();
  Matrix a(n, n);
  for (std::size_t bi = 0; bi < nt; ++bi) {
    for (std::size_t i = 0; i < nb; ++i)
      for (std::size_t j = 0; j < nb; ++j)
        a(bi * nb + i, bi * nb + j) = tlr.diagonal[bi](i, j);
    for (std::size_t bj = 0; bj < bi; ++bj) {
      Matrix d = tlr.lower[bi][bj].dense(nb);
      for (std::size_t i = 0; i < nb; ++i)
        for (std::size_t j = 0; j < nb; ++j) {
          a(bi * nb + i, bj * nb + j) = d(i, j);
          a(bj * nb + j, bi * nb + i) = d(i, j);
        }
    }
  }
  return a;
}

// Likelihood on the compressed covariance: compress, reconstruct, then the
// dense five-step path. This models the accuracy of TLR approximation, not
// its speed; a compressed-arithmetic factorization is out of scope here.
inline double tlr_log_likelihood(const GeoDataset& dataset, const CovarianceParams& params,
                                 std::size_t nb, double tol,
                                 const LikelihoodOptions& opts = {}) {
  dataset.validate();
  params.validate();
  Matrix sigma = build_cov_matrix(dataset.locations, params);
  Matrix approx = tlr_reconstruct(tlr_compress(sigma, nb, tol));
  CholeskyFactor f = cholesky(approx);
  auto w = forward_solve(f.lower, dataset.measurements);
  double ll = -0.5 * f.log_det() - 0.5 * dot(w, w);
  if (opts.include_constant)
    ll -= 0.5 * double(dataset.size()) * std::log(2.0 * std::numbers::pi);
  return ll;
}

}  // namespace forge::geostat
