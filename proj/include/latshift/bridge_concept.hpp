#pragma once

#include <vector>

#include "latshift/cme.hpp"
#include "latshift/kernels.hpp"
#include "latshift/types.hpp"

namespace latshift {

// ===== Concept bridge =====
//
// Two-stage kernel ridge estimator of the bridge function h(w, c) linking
// proxies and concepts to the response. Stage 1 fits the conditional mean
// embedding of W given (C, X) on one half of the source data; stage 2
// ridge-regresses y on the embedded features on the other half. The fitted
// bridge is sum_ij alpha(i, j) k_w(w1_i, .) k_c(c2_j, .), with one row per
// stage-1 W anchor and one column per stage-2 C anchor.
class BridgeH0 {
 public:
  // stage1 needs blocks (w, c, x); stage2 needs (c, x, y).
  static BridgeH0 fit(const SampleBatch& stage1, const SampleBatch& stage2, const KernelSpec& kx,
                      const KernelSpec& kc, const KernelSpec& kw, double lambda1, double lambda2);

  // Rebuild a bridge from serialized parts; fit-time diagnostics
  // (gamma, fitted_values) are unavailable on the result.
  static BridgeH0 from_parts(Matrix alpha, Matrix anchors_w, Matrix anchors_c, KernelSpec kw,
                             KernelSpec kc, double lambda1, double lambda2);

  const Matrix& alpha() const { return alpha_; }
  const Matrix& gamma() const { return gamma_; }
  const Matrix& anchors_w() const { return anchors_w_; }
  const Matrix& anchors_c() const { return anchors_c_; }
  const KernelSpec& kernel_w() const { return kw_; }
  const KernelSpec& kernel_c() const { return kc_; }
  double lambda1() const { return lambda1_; }
  double lambda2() const { return lambda2_; }

  // RKHS norm of the bridge in trace form: sqrt(tr(alpha^T K_w1 alpha K_c2)).
  double rkhs_norm() const;

  // Stage-2 training-point values sigma * u (only on a freshly fit bridge).
  const Vector& fitted_values() const;

  // <bridge, phi(c_q) (x) mu_W|c_q,x_q> for each query row against a fitted
  // W-given-(C,X) embedding sharing the same W kernel.
  Vector inner_with_cme(const CmeEstimator& cme, const SampleBatch& queries) const;

  // Full adaptation: pair the bridge with a target-domain joint (W, C)-given-X
  // embedding and evaluate at new covariates. Never materializes the tensor
  // features; cost is O(n_q n1 n2) per batch.
  Vector predict(const CmeEstimator& target_joint_cme, const Matrix& x_new) const;

 private:
  friend class BridgeH0Multilabel;
  BridgeH0() = default;

  Matrix alpha_, gamma_;
  Matrix anchors_w_, anchors_c_;
  KernelSpec kw_, kc_;
  double lambda1_ = 0.0, lambda2_ = 0.0;
  Vector fitted_;  // empty when rebuilt from parts
};

// One bridge per class fitted on one-hot labels. The stage-1 transport and
// the stage-2 factorization are shared across classes; only the y solve
// differs. Classes are sorted ascending by label value.
class BridgeH0Multilabel {
 public:
  static BridgeH0Multilabel fit(const SampleBatch& stage1, const SampleBatch& stage2,
                                const KernelSpec& kx, const KernelSpec& kc, const KernelSpec& kw,
                                double lambda1, double lambda2);
  static BridgeH0Multilabel from_parts(std::vector<Matrix> alphas, std::vector<double> classes,
                                       Matrix anchors_w, Matrix anchors_c, KernelSpec kw,
                                       KernelSpec kc, double lambda1, double lambda2);

  const std::vector<double>& classes() const { return classes_; }
  const std::vector<Matrix>& alphas() const;
  const BridgeH0& bridge(Index k) const { return bridges_[static_cast<size_t>(k)]; }

  // Per-class scores (n_q x k) under a target joint (W, C)-given-X embedding.
  Matrix scores(const CmeEstimator& target_joint_cme, const Matrix& x_new) const;

  // Argmax of scores as label values; ties go to the lowest class index.
  Vector classify(const CmeEstimator& target_joint_cme, const Matrix& x_new) const;

 private:
  std::vector<double> classes_;
  std::vector<BridgeH0> bridges_;
  mutable std::vector<Matrix> alpha_view_;
};

// Argmax with ties to the lowest column index, mapped through label values.
Vector classify_scores(const Matrix& scores, const std::vector<double>& classes);

}  // namespace latshift
