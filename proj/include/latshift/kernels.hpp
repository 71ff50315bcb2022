#pragma once

#include <cstdint>
#include <vector>

#include "latshift/types.hpp"

namespace latshift {

// ===== Kernel specifications =====
//
// A kernel acts on one column block (rows of a matrix):
//   Gaussian           k(a, b) = exp(-|a - b|^2 / (2 l^2)) over the whole row
//   Binary             k(a, b) = 1 if the rows are identical, else 0
//   ColumnwiseProduct  prod_j factors[j](a_j, b_j), one factor per column
struct KernelSpec {
  enum class Kind { Gaussian, Binary, ColumnwiseProduct };

  Kind kind = Kind::Gaussian;
  double length_scale = 1.0;        // Gaussian only, must be > 0
  std::vector<KernelSpec> factors;  // ColumnwiseProduct only, one per column

  static KernelSpec gaussian(double length_scale) {
    KernelSpec k;
    k.kind = Kind::Gaussian;
    k.length_scale = length_scale;
    return k;
  }
  static KernelSpec binary() {
    KernelSpec k;
    k.kind = Kind::Binary;
    return k;
  }
  static KernelSpec columnwise(std::vector<KernelSpec> factors) {
    KernelSpec k;
    k.kind = Kind::ColumnwiseProduct;
    k.factors = std::move(factors);
    return k;
  }
  // Product of per-column Gaussians, all with the same length scale.
  static KernelSpec columnwise_gaussian(Index cols, double length_scale) {
    return columnwise(std::vector<KernelSpec>(static_cast<size_t>(cols), gaussian(length_scale)));
  }
  // Product of per-column Binary factors (equality on every column).
  static KernelSpec columnwise_binary(Index cols) {
    return columnwise(std::vector<KernelSpec>(static_cast<size_t>(cols), binary()));
  }

  // Throws std::invalid_argument when the spec cannot act on `cols` columns
  // (nonpositive scale, or factor count != cols for ColumnwiseProduct).
  void validate(Index cols) const;
};

// Structural equality (kind, scale, factors). Used to verify that estimators
// composed together share a feature space.
bool operator==(const KernelSpec& a, const KernelSpec& b);
inline bool operator!=(const KernelSpec& a, const KernelSpec& b) { return !(a == b); }

// Gram matrix K[i, j] = k(a.row(i), b.row(j)). Column counts of a and b must
// match and satisfy kernel.validate.
Matrix gram(const KernelSpec& kernel, const Matrix& a, const Matrix& b);

// Median of pairwise Euclidean row distances, the usual Gaussian length-scale
// heuristic. Batches above `max_rows` rows are first subsampled to `max_rows`
// deterministically from `seed`. Returns 1.0 when the median is zero (for
// example an all-identical batch).
double median_heuristic(const Matrix& a, std::uint64_t seed = 0, Index max_rows = 1000);

}  // namespace latshift
