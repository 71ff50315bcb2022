#include "latshift/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace latshift {

Matrix hadamard(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("hadamard: shapes must match");
  return a.cwiseProduct(b);
}

Matrix khatri_rao(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw std::invalid_argument("khatri_rao: column counts must match");
  Matrix out(a.rows() * b.rows(), a.cols());
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      out.col(j).segment(i * b.rows(), b.rows()) = a(i, j) * b.col(j);
  return out;
}

Matrix kronecker(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

RidgeSolver::RidgeSolver(const Matrix& m, double reg) {
  if (m.rows() != m.cols()) throw std::invalid_argument("RidgeSolver: matrix must be square");
  if (reg < 0.0) throw std::invalid_argument("RidgeSolver: regularizer must be nonnegative");

  const Index n = m.rows();
  double base = n > 0 ? 1e-10 * m.trace() / static_cast<double>(n) : 0.0;
  if (!(base > 0.0)) base = 1e-10;  // trace-free input: absolute floor

  double jitter = 0.0;
  for (int attempt = 0; attempt <= 3; ++attempt) {
    Matrix shifted = m;
    shifted.diagonal().array() += reg + jitter;
    llt_.compute(shifted);
    if (llt_.info() == Eigen::Success) {
      jitter_ = jitter;
      return;
    }
    jitter = (attempt == 0) ? base : jitter * 10.0;
  }
  throw std::runtime_error("RidgeSolver: Cholesky failed after jitter ladder");
}

Matrix RidgeSolver::solve(const Matrix& rhs) const {
  if (rhs.rows() != llt_.rows())
    throw std::invalid_argument("RidgeSolver::solve: rhs row count mismatch");
  return llt_.solve(rhs);
}

Vector RidgeSolver::solve(const Vector& rhs) const {
  if (rhs.size() != llt_.rows())
    throw std::invalid_argument("RidgeSolver::solve: rhs length mismatch");
  return llt_.solve(rhs);
}

Matrix psd_solve(const Matrix& m, double reg, const Matrix& rhs) {
  return RidgeSolver(m, reg).solve(rhs);
}

Matrix pinv(const Matrix& m, double cutoff_ratio) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  if (s.size() == 0) return Matrix::Zero(m.cols(), m.rows());
  const double cutoff = cutoff_ratio * s(0);
  Vector inv = Vector::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

OneHot one_hot(const Vector& values) {
  OneHot out;
  std::vector<Index> col(static_cast<size_t>(values.size()));
  for (Index i = 0; i < values.size(); ++i) {
    const auto it = std::find(out.categories.begin(), out.categories.end(), values(i));
    if (it == out.categories.end()) {
      col[static_cast<size_t>(i)] = static_cast<Index>(out.categories.size());
      out.categories.push_back(values(i));
    } else {
      col[static_cast<size_t>(i)] = static_cast<Index>(it - out.categories.begin());
    }
  }
  out.encoded = Matrix::Zero(values.size(), static_cast<Index>(out.categories.size()));
  for (Index i = 0; i < values.size(); ++i) out.encoded(i, col[static_cast<size_t>(i)]) = 1.0;
  return out;
}

}  // namespace latshift
