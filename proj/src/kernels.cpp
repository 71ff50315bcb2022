#include "latshift/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "latshift/rng.hpp"

namespace latshift {

void KernelSpec::validate(Index cols) const {
  switch (kind) {
    case Kind::Gaussian:
      if (!(length_scale > 0.0))
        throw std::invalid_argument("KernelSpec::validate: Gaussian length scale must be positive");
      break;
    case Kind::Binary:
      break;
    case Kind::ColumnwiseProduct:
      if (static_cast<Index>(factors.size()) != cols)
        throw std::invalid_argument("KernelSpec::validate: ColumnwiseProduct needs one factor per column");
      for (const KernelSpec& f : factors) {
        if (f.kind == Kind::ColumnwiseProduct)
          throw std::invalid_argument("KernelSpec::validate: ColumnwiseProduct factors must be scalar kernels");
        f.validate(1);
      }
      break;
  }
}

bool operator==(const KernelSpec& a, const KernelSpec& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case KernelSpec::Kind::Gaussian:
      return a.length_scale == b.length_scale;
    case KernelSpec::Kind::Binary:
      return true;
    case KernelSpec::Kind::ColumnwiseProduct:
      if (a.factors.size() != b.factors.size()) return false;
      for (size_t i = 0; i < a.factors.size(); ++i)
        if (!(a.factors[i] == b.factors[i])) return false;
      return true;
  }
  return false;
}

namespace {

Matrix gram_gaussian(double length_scale, const Matrix& a, const Matrix& b) {
  // |a_i - b_j|^2 = |a_i|^2 + |b_j|^2 - 2 a_i . b_j, clamped at 0 against
  // cancellation, so the diagonal of gram(k, a, a) is exactly 1.
  const Vector a2 = a.rowwise().squaredNorm();
  const Vector b2 = b.rowwise().squaredNorm();
  Matrix d2 = (-2.0 * a * b.transpose());
  d2.colwise() += a2;
  d2.rowwise() += b2.transpose();
  const double inv = -0.5 / (length_scale * length_scale);
  return (d2.cwiseMax(0.0) * inv).array().exp().matrix();
}

Matrix gram_binary(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.rows(); ++j)
      k(i, j) = (a.row(i).array() == b.row(j).array()).all() ? 1.0 : 0.0;
  return k;
}

}  // namespace

Matrix gram(const KernelSpec& kernel, const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw std::invalid_argument("gram: inputs must have the same number of columns");
  kernel.validate(a.cols());
  switch (kernel.kind) {
    case KernelSpec::Kind::Gaussian:
      return gram_gaussian(kernel.length_scale, a, b);
    case KernelSpec::Kind::Binary:
      return gram_binary(a, b);
    case KernelSpec::Kind::ColumnwiseProduct: {
      Matrix k = Matrix::Ones(a.rows(), b.rows());
      for (Index j = 0; j < a.cols(); ++j)
        k = k.cwiseProduct(gram(kernel.factors[static_cast<size_t>(j)], a.col(j), b.col(j)));
      return k;
    }
  }
  throw std::logic_error("gram: unreachable kernel kind");
}

double median_heuristic(const Matrix& a, std::uint64_t seed, Index max_rows) {
  if (a.rows() < 2) return 1.0;

  // Deterministic subsample above the cap: partial Fisher-Yates on indices.
  Matrix sub;
  const Matrix* rows = &a;
  if (a.rows() > max_rows) {
    std::vector<Index> idx(static_cast<size_t>(a.rows()));
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Index>(i);
    CounterRng rng(seed, /*stream=*/0x6D656469616EULL);  // "median"
    for (Index i = 0; i < max_rows; ++i) {
      const Index j = i + static_cast<Index>(rng.next_bits() % static_cast<std::uint64_t>(a.rows() - i));
      std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
    }
    sub.resize(max_rows, a.cols());
    for (Index i = 0; i < max_rows; ++i) sub.row(i) = a.row(idx[static_cast<size_t>(i)]);
    rows = &sub;
  }

  std::vector<double> dist;
  dist.reserve(static_cast<size_t>(rows->rows()) * static_cast<size_t>(rows->rows() - 1) / 2);
  for (Index i = 0; i < rows->rows(); ++i)
    for (Index j = i + 1; j < rows->rows(); ++j)
      dist.push_back((rows->row(i) - rows->row(j)).norm());

  std::sort(dist.begin(), dist.end());
  const size_t n = dist.size();
  const double med = (n % 2 == 1) ? dist[n / 2] : 0.5 * (dist[n / 2 - 1] + dist[n / 2]);
  return med > 0.0 ? med : 1.0;
}

}  // namespace latshift
