#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace latshift {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// ===== Sample batches =====
//
// A batch of observations stored as named column blocks. Blocks a dataset
// does not carry are left empty: zero columns for x/w/c, zero length for
// y/z. All non-empty blocks must agree on the row count.
struct SampleBatch {
  Matrix x;  // covariates, n x d_x
  Matrix w;  // proxies, n x d_w
  Matrix c;  // concepts, n x d_c
  Vector y;  // response, length n (empty if unlabeled)
  Vector z;  // domain index per row (empty if single-domain)

  // Row count shared by the non-empty blocks; 0 for an all-empty batch.
  Index rows() const {
    Index n = 0;
    for (Index m : {x.rows(), w.rows(), c.rows(), y.size(), z.size()})
      if (m > 0) n = std::max(n, m);
    return n;
  }

  // Throws std::invalid_argument when non-empty blocks disagree on rows.
  void check_consistent() const {
    const Index n = rows();
    auto bad = [n](Index m) { return m != 0 && m != n; };
    if (bad(x.rows()) || bad(w.rows()) || bad(c.rows()) || bad(y.size()) || bad(z.size()))
      throw std::invalid_argument("SampleBatch::check_consistent: blocks disagree on row count");
  }

  // Row subset in the given order; empty blocks stay empty.
  SampleBatch select(const std::vector<Index>& idx) const {
    SampleBatch out;
    auto pick_m = [&idx](const Matrix& m) {
      if (m.size() == 0) return Matrix(0, m.cols());
      Matrix r(static_cast<Index>(idx.size()), m.cols());
      for (Index i = 0; i < r.rows(); ++i) r.row(i) = m.row(idx[static_cast<size_t>(i)]);
      return r;
    };
    auto pick_v = [&idx](const Vector& v) {
      if (v.size() == 0) return Vector();
      Vector r(static_cast<Index>(idx.size()));
      for (Index i = 0; i < r.size(); ++i) r(i) = v(idx[static_cast<size_t>(i)]);
      return r;
    };
    out.x = pick_m(x);
    out.w = pick_m(w);
    out.c = pick_m(c);
    out.y = pick_v(y);
    out.z = pick_v(z);
    return out;
  }

  // First half / second half split by row order (first half gets the extra
  // row on odd counts).
  std::pair<SampleBatch, SampleBatch> split_half() const {
    const Index n = rows();
    std::vector<Index> a, b;
    for (Index i = 0; i < n; ++i) ((i < (n + 1) / 2) ? a : b).push_back(i);
    return {select(a), select(b)};
  }

  // Same split applied within each domain (by row order within the domain),
  // so both halves keep every domain represented. Falls back to split_half
  // when there is no z column.
  std::pair<SampleBatch, SampleBatch> split_half_per_domain() const {
    if (z.size() == 0) return split_half();
    std::vector<double> domains;
    for (Index i = 0; i < z.size(); ++i)
      if (std::find(domains.begin(), domains.end(), z(i)) == domains.end())
        domains.push_back(z(i));
    std::vector<Index> a, b;
    for (double d : domains) {
      std::vector<Index> rows_d;
      for (Index i = 0; i < z.size(); ++i)
        if (z(i) == d) rows_d.push_back(i);
      for (size_t k = 0; k < rows_d.size(); ++k)
        ((k < (rows_d.size() + 1) / 2) ? a : b).push_back(rows_d[k]);
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return {select(a), select(b)};
  }
};

// Rows of `batch` whose z equals `domain`, in order.
inline std::vector<Index> domain_rows(const SampleBatch& batch, double domain) {
  std::vector<Index> idx;
  for (Index i = 0; i < batch.z.size(); ++i)
    if (batch.z(i) == domain) idx.push_back(i);
  return idx;
}

}  // namespace latshift
