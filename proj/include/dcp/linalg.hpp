#pragma once

// Log-determinants and inverses of symmetric positive-definite matrices, with
// O(n^2) updates of a cached inverse when one row/column is appended or
// deleted.

#include <cmath>
#include <cstddef>
#include <utility>

#include <Eigen/Dense>

#include "dcp/error.hpp"

namespace dcp {

// Schur complements at or below this value are treated as degenerate.
inline constexpr double kSchurFloor = 1e-12;

// Relative diagonal jitter applied once when a from-scratch rebuild fails.
inline constexpr double kRebuildJitter = 1e-8;

// Inverse and log-determinant of a PD matrix. The empty cache (n = 0) has
// log_det = 0.
struct PDMatrixCache {
  Eigen::MatrixXd inverse{0, 0};
  double log_det = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(inverse.rows()); }
  bool empty() const { return inverse.rows() == 0; }
};

struct CholeskyResult {
  double log_det = 0.0;
  Eigen::MatrixXd inverse;
};

// Lower Cholesky factor of the symmetric matrix `m` (only the lower triangle
// is read). Throws NotPositiveDefinite naming the first failing pivot.
inline Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  if (m.cols() != n) throw InputError("cholesky: matrix is not square");
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = m(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d)) throw NotPositiveDefinite(static_cast<std::size_t>(j));
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i)
      l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
  }
  return l;
}

inline double cholesky_logdet_only(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd l = cholesky_factor(m);
  return 2.0 * l.diagonal().array().log().sum();
}

// log det(M) and M^-1 through a Cholesky factorization.
inline CholeskyResult cholesky_logdet(const Eigen::MatrixXd& m) {
  CholeskyResult r;
  const Eigen::Index n = m.rows();
  if (n == 0) {
    r.inverse.resize(0, 0);
    return r;
  }
  const Eigen::MatrixXd l = cholesky_factor(m);
  r.log_det = 2.0 * l.diagonal().array().log().sum();
  const Eigen::MatrixXd linv =
      l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  r.inverse = linv.transpose() * linv;
  // Exact symmetry for downstream rank-one updates.
  r.inverse = 0.5 * (r.inverse + r.inverse.transpose()).eval();
  return r;
}

// Builds a cache from scratch. On failure retries once with jitter
// kRebuildJitter * mean(diag) on the diagonal before giving up.
inline PDMatrixCache rebuild_cache(const Eigen::MatrixXd& m, bool* jittered = nullptr) {
  if (jittered) *jittered = false;
  try {
    auto r = cholesky_logdet(m);
    return {std::move(r.inverse), r.log_det};
  } catch (const NotPositiveDefinite&) {
    const double mean_diag = m.diagonal().mean();
    Eigen::MatrixXd jm = m;
    jm.diagonal().array() += kRebuildJitter * mean_diag;
    auto r = cholesky_logdet(jm);
    if (jittered) *jittered = true;
    return {std::move(r.inverse), r.log_det};
  }
}

// det([[A, C^T], [C, B]]) = det(A) det(B - C A^-1 C^T), returned on the linear
// scale. A must be positive definite; B - C A^-1 C^T only needs to be square.
inline double block_det(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                        const Eigen::MatrixXd& c) {
  if (b.rows() != b.cols() || c.rows() != b.rows() || c.cols() != a.rows())
    throw InputError("block_det: incompatible block shapes");
  const auto ra = cholesky_logdet(a);
  const Eigen::MatrixXd schur = b - c * ra.inverse * c.transpose();
  const double det_schur = schur.rows() == 0 ? 1.0 : schur.determinant();
  return std::exp(ra.log_det) * det_schur;
}

// Schur complement of appending a point with cross-covariances `cross` and
// self-covariance `self_k` to the set cached in `cache`.
template <class V>
double schur_complement(const PDMatrixCache& cache, const Eigen::MatrixBase<V>& cross,
                        double self_k) {
  if (cache.empty()) return self_k;
  return self_k - cross.dot(cache.inverse * cross);
}

// Cache for A u {x}, with x appended last. Throws NumericalDegeneracy when the
// Schur complement w is at or below kSchurFloor.
template <class V>
PDMatrixCache inverse_add_point(const PDMatrixCache& cache, const Eigen::MatrixBase<V>& cross,
                                double self_k) {
  const Eigen::Index n = static_cast<Eigen::Index>(cache.size());
  if (cross.size() != n) throw InputError("inverse_add_point: cross vector has wrong length");
  PDMatrixCache out;
  out.inverse.resize(n + 1, n + 1);
  if (n == 0) {
    if (!(self_k > kSchurFloor)) throw NumericalDegeneracy(self_k);
    out.inverse(0, 0) = 1.0 / self_k;
    out.log_det = std::log(self_k);
    return out;
  }
  const Eigen::VectorXd b = cache.inverse * cross;
  const double w = self_k - cross.dot(b);
  if (!(w > kSchurFloor)) throw NumericalDegeneracy(w);
  out.inverse.topLeftCorner(n, n) = cache.inverse + (b * b.transpose()) / w;
  out.inverse.topRightCorner(n, 1) = -b / w;
  out.inverse.bottomLeftCorner(1, n) = (-b / w).transpose();
  out.inverse(n, n) = 1.0 / w;
  out.log_det = cache.log_det + std::log(w);
  return out;
}

// Cache for A \ {a_index}; remaining points keep their relative order.
// With the removed point's inverse column split into the off-diagonal part v
// and diagonal entry s, the reduced inverse is U - v v^T / s and the removed
// point's Schur complement is 1 / s.
inline PDMatrixCache inverse_remove_point(const PDMatrixCache& cache, std::size_t index) {
  const std::size_t n = cache.size();
  if (index >= n) throw InputError("inverse_remove_point: index out of range");
  PDMatrixCache out;
  if (n == 1) return out;
  const auto m = static_cast<Eigen::Index>(n - 1);
  const auto k = static_cast<Eigen::Index>(index);
  auto keep = [k](Eigen::Index i) { return i < k ? i : i + 1; };
  const double s = cache.inverse(k, k);
  Eigen::VectorXd v(m);
  for (Eigen::Index i = 0; i < m; ++i) v(i) = cache.inverse(keep(i), k);
  out.inverse.resize(m, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < m; ++i)
      out.inverse(i, j) = cache.inverse(keep(i), keep(j)) - v(i) * v(j) / s;
  out.log_det = cache.log_det + std::log(s);
  return out;
}

}  // namespace dcp
