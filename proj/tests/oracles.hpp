// Independent reference computations the tests check the library against.
// Everything here is deliberately written the slow, direct way (dense normal
// equations, grid scans, pair counting) so it shares no code path with the
// estimators under test.
#pragma once

#include <algorithm>
#include <random>
#include <utility>

#include "latshift/kernels.hpp"
#include "latshift/linalg.hpp"
#include "latshift/types.hpp"

namespace oracles {

using latshift::Index;
using latshift::Matrix;
using latshift::Vector;

// Dense two-stage solve. Stage 1 transports conditioning kernels (a, b) into
// per-point W-embedding weights gamma; stage 2 solves the full normal
// equations over all anchor-pair coefficients:
//   (D D^T + l2 n2 E) vec(alpha) = D y2,
// with D the columnwise Kronecker of K_b22 and K_w11 gamma (b-index major)
// and E = kron(K_b22, K_w11). The normal-equations matrix squares the
// conditioning of the grams, so everything is assembled and solved in long
// double to keep the reference solution accurate past the comparison
// tolerance. Returns alpha as n1 x n2.
inline Matrix dense_bridge_alpha(const Matrix& k_a11, const Matrix& k_a12, const Matrix& k_b11,
                                 const Matrix& k_b12, const Matrix& k_b22, const Matrix& k_w11,
                                 const Vector& y2, double l1, double l2) {
  using MatrixL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const Index n1 = k_a11.rows();
  const Index n2 = y2.size();
  const MatrixL kb22 = k_b22.cast<long double>();
  const MatrixL kw11 = k_w11.cast<long double>();

  const MatrixL lhs1 =
      (k_a11.cwiseProduct(k_b11)).cast<long double>() +
      static_cast<long double>(l1) * static_cast<long double>(n1) * MatrixL::Identity(n1, n1);
  const MatrixL gamma = lhs1.fullPivLu().solve((k_a12.cwiseProduct(k_b12)).cast<long double>());

  const MatrixL wg = kw11 * gamma;  // n1 x n2
  MatrixL d(n1 * n2, n2);
  MatrixL e(n1 * n2, n1 * n2);
  for (Index i = 0; i < n2; ++i) {
    for (Index j = 0; j < n2; ++j) {
      d.block(i * n1, j, n1, 1) = kb22(i, j) * wg.col(j);
      e.block(i * n1, j * n1, n1, n1) = kb22(i, j) * kw11;
    }
  }
  const MatrixL lhs2 =
      d * d.transpose() + static_cast<long double>(l2) * static_cast<long double>(n2) * e;
  const VectorL v = lhs2.fullPivLu().solve(d * y2.cast<long double>());
  return Eigen::Map<const MatrixL>(v.data(), n1, n2).cast<double>();
}

// Quadratic-form RKHS norm of a coefficient matrix: sqrt(vec(alpha)^T
// kron(K_b22, K_w11) vec(alpha)), assembled densely.
inline double dense_rkhs_norm(const Matrix& alpha, const Matrix& k_w11, const Matrix& k_b22) {
  const Eigen::Map<const Vector> v(alpha.data(), alpha.size());
  const Matrix e = latshift::kronecker(k_b22, k_w11);
  const double q = v.dot(e * v);
  return std::sqrt(std::max(0.0, q));
}

// Min/max of the Frechet-constrained response expectation found by brute
// scan of the admissible joint cell q11.
inline std::pair<double, double> frechet_scan(const Matrix& h, double pi_c, double pi_w,
                                              int grid_n) {
  const double lo = std::max(0.0, pi_c + pi_w - 1.0);
  const double hi = std::min(pi_c, pi_w);
  double vmin = std::numeric_limits<double>::infinity();
  double vmax = -vmin;
  for (int g = 0; g <= grid_n; ++g) {
    const double q11 = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid_n);
    const double q10 = pi_c - q11;
    const double q01 = pi_w - q11;
    const double q00 = 1.0 - pi_c - pi_w + q11;
    const double v = h(0, 0) * q00 + h(0, 1) * q01 + h(1, 0) * q10 + h(1, 1) * q11;
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  return {vmin, vmax};
}

// AUROC by direct pair counting: P(score_pos > score_neg) + 0.5 P(tie).
inline double pairwise_auroc(const Vector& scores, const Vector& labels) {
  double wins = 0.0;
  Index n_pos = 0, n_neg = 0;
  for (Index i = 0; i < scores.size(); ++i) {
    if (labels(i) != 1.0) continue;
    ++n_pos;
    for (Index j = 0; j < scores.size(); ++j) {
      if (labels(j) != 0.0) continue;
      if (scores(i) > scores(j)) wins += 1.0;
      else if (scores(i) == scores(j)) wins += 0.5;
    }
  }
  for (Index j = 0; j < scores.size(); ++j)
    if (labels(j) == 0.0) ++n_neg;
  return wins / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// Deterministic std::mt19937-based matrix/vector fills for test fixtures
// (distinct from the library's own counter RNG).
inline Matrix random_matrix(std::mt19937& gen, Index rows, Index cols, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = dist(gen);
  return m;
}

inline Vector random_vector(std::mt19937& gen, Index n, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = dist(gen);
  return v;
}

// Random symmetric positive definite matrix A A^T + d I.
inline Matrix random_spd(std::mt19937& gen, Index n, double ridge = 0.5) {
  const Matrix a = random_matrix(gen, n, n);
  return a * a.transpose() + ridge * Matrix::Identity(n, n);
}

}  // namespace oracles
