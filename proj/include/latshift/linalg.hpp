#pragma once

#include <vector>

#include "latshift/types.hpp"

namespace latshift {

// ===== Dense products =====

// Elementwise product; shapes must match.
Matrix hadamard(const Matrix& a, const Matrix& b);

// Columnwise Khatri-Rao product: column j is kron(a.col(j), b.col(j)), so the
// result is (a.rows()*b.rows()) x cols with a-index major, b-index minor.
Matrix khatri_rao(const Matrix& a, const Matrix& b);

// Dense Kronecker product with the same index convention as khatri_rao.
Matrix kronecker(const Matrix& a, const Matrix& b);

// ===== Regularized PSD solves =====
//
// Cholesky factorization of (m + reg*I) with a bounded jitter ladder for
// borderline PSD inputs: the first attempt adds no jitter; each of up to
// three retries adds 1e-10 * trace(m)/n escalated tenfold. The jitter that
// was actually applied is reported; exhausting the ladder throws
// std::runtime_error.
class RidgeSolver {
 public:
  RidgeSolver(const Matrix& m, double reg);

  Matrix solve(const Matrix& rhs) const;
  Vector solve(const Vector& rhs) const;
  double applied_jitter() const { return jitter_; }
  Index size() const { return llt_.rows(); }

 private:
  Eigen::LLT<Matrix> llt_;
  double jitter_ = 0.0;
};

// One-shot (m + reg*I)^{-1} rhs through RidgeSolver.
Matrix psd_solve(const Matrix& m, double reg, const Matrix& rhs);

// Moore-Penrose pseudo-inverse via SVD; singular values at or below
// cutoff_ratio * sigma_max are treated as zero.
Matrix pinv(const Matrix& m, double cutoff_ratio = 1e-10);

// ===== Discrete column encoding =====

// One-hot encoding of a discrete (exactly repeated) value column. Category
// order is first appearance in the batch.
struct OneHot {
  Matrix encoded;                  // n x k indicator columns
  std::vector<double> categories;  // category values in column order
};
OneHot one_hot(const Vector& values);

}  // namespace latshift
