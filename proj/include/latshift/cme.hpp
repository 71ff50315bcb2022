#pragma once

#include <vector>

#include "latshift/kernels.hpp"
#include "latshift/linalg.hpp"
#include "latshift/types.hpp"

namespace latshift {

// Which conditional mean is embedded: W given (C, X), W given X, or the
// joint (W, C) given X.
enum class CmePattern { WGivenCX, WGivenX, WCGivenX };

// ===== Kernel ridge conditional mean embedding =====
//
// Fitted on anchor rows; for a query q the ridge weight vector is
//   b(q) = (K_cond + lambda * n * I)^{-1} k_cond(q),
// where K_cond is the Gram matrix of the conditioning blocks (the Hadamard
// product of per-block Grams when conditioning on two blocks) and k_cond(q)
// the matching cross-kernel column. The embedded mean is then
// sum_i b_i(q) phi(anchor_i) over the embedded block(s).
class CmeEstimator {
 public:
  static CmeEstimator fit_w_given_cx(const SampleBatch& anchors, const KernelSpec& kx,
                                     const KernelSpec& kc, const KernelSpec& kw, double lambda);
  static CmeEstimator fit_w_given_x(const SampleBatch& anchors, const KernelSpec& kx,
                                    const KernelSpec& kw, double lambda);
  static CmeEstimator fit_wc_given_x(const SampleBatch& anchors, const KernelSpec& kx,
                                     const KernelSpec& kw, const KernelSpec& kc, double lambda);

  CmePattern pattern() const { return pattern_; }
  Index n_anchors() const { return anchors_w_.rows(); }
  const Matrix& anchors_w() const { return anchors_w_; }
  const Matrix& anchors_c() const { return anchors_c_; }
  const KernelSpec& kernel_w() const { return kw_; }
  const KernelSpec& kernel_c() const { return kc_; }
  double lambda() const { return lambda_; }
  double applied_jitter() const { return solver_.applied_jitter(); }

  // Ridge weights for each query row; n_anchors x n_queries. Queries must
  // carry the conditioning blocks of the pattern (x, and c for WGivenCX).
  Matrix weights(const SampleBatch& queries) const;

  // Embedded conditional mean evaluated at probe points: entry (t, q) is the
  // estimate of E[k(probe_t, embedded block) | query q]. Probes carry w (and
  // c for the joint pattern).
  Matrix embedding_values(const SampleBatch& probes, const SampleBatch& queries) const;

 private:
  CmeEstimator(CmePattern pattern, const SampleBatch& anchors, KernelSpec kx, KernelSpec kc,
               KernelSpec kw, double lambda);

  Matrix conditioning_cross(const SampleBatch& queries) const;

  CmePattern pattern_;
  Matrix anchors_x_, anchors_c_, anchors_w_;
  KernelSpec kx_, kc_, kw_;
  double lambda_;
  RidgeSolver solver_;
};

// One W-given-X embedding per domain (split on z, domains in first-appearance
// order). Each fit uses the given lambda against its own row count, so the
// per-domain total ridge is lambda * n_r; matching a pooled Binary-kernel fit
// on the domain index requires scaling lambda by n_pooled / n_r.
struct PerDomainCme {
  std::vector<double> domains;
  std::vector<CmeEstimator> fits;
};
PerDomainCme fit_cme_per_domain(const SampleBatch& data, const KernelSpec& kx,
                                const KernelSpec& kw, double lambda);

}  // namespace latshift
