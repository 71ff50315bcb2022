#pragma once

#include <vector>

#include "latshift/bridge_concept.hpp"
#include "latshift/cme.hpp"
#include "latshift/kernels.hpp"
#include "latshift/types.hpp"

namespace latshift {

// ===== Multi-domain bridge =====
//
// Two-stage kernel ridge estimator of the bridge function m(w, x) when the
// shift is carried by a domain variable Z instead of concepts. The algebra is
// the concept bridge's with roles relabeled: Z takes the stage-1 conditioning
// slot that X held, and X takes the output-side slot that C held. Z may be a
// domain index under a Binary kernel or a continuous domain proxy under a
// Gaussian kernel.
class BridgeM0 {
 public:
  // stage1 needs blocks (w, x, z); stage2 needs (x, y, z).
  static BridgeM0 fit(const SampleBatch& stage1, const SampleBatch& stage2, const KernelSpec& kx,
                      const KernelSpec& kz, const KernelSpec& kw, double lambda3, double lambda4);

  static BridgeM0 from_parts(Matrix alpha, Matrix anchors_w, Matrix anchors_x, KernelSpec kw,
                             KernelSpec kx, double lambda3, double lambda4);

  const Matrix& alpha() const { return alpha_; }
  const Matrix& gamma() const { return gamma_; }
  const Matrix& anchors_w() const { return anchors_w_; }
  const Matrix& anchors_x() const { return anchors_x_; }
  const KernelSpec& kernel_w() const { return kw_; }
  const KernelSpec& kernel_x() const { return kx_; }
  double lambda3() const { return lambda3_; }
  double lambda4() const { return lambda4_; }

  double rkhs_norm() const;
  const Vector& fitted_values() const;

  // Target-domain prediction: pair the bridge with a W-given-X embedding
  // fitted on target rows and evaluate <m, mu_W|x (x) phi(x)> at new x.
  Vector predict(const CmeEstimator& target_w_cme, const Matrix& x_new) const;

 private:
  friend class BridgeM0Multilabel;
  BridgeM0() = default;

  Matrix alpha_, gamma_;
  Matrix anchors_w_, anchors_x_;
  KernelSpec kw_, kx_;
  double lambda3_ = 0.0, lambda4_ = 0.0;
  Vector fitted_;
};

// One multi-domain bridge per class on one-hot labels, sharing the stage-1
// transport and stage-2 factorization. Classes sorted ascending.
class BridgeM0Multilabel {
 public:
  static BridgeM0Multilabel fit(const SampleBatch& stage1, const SampleBatch& stage2,
                                const KernelSpec& kx, const KernelSpec& kz, const KernelSpec& kw,
                                double lambda3, double lambda4);
  static BridgeM0Multilabel from_parts(std::vector<Matrix> alphas, std::vector<double> classes,
                                       Matrix anchors_w, Matrix anchors_x, KernelSpec kw,
                                       KernelSpec kx, double lambda3, double lambda4);

  const std::vector<double>& classes() const { return classes_; }
  const BridgeM0& bridge(Index k) const { return bridges_[static_cast<size_t>(k)]; }
  Matrix scores(const CmeEstimator& target_w_cme, const Matrix& x_new) const;
  Vector classify(const CmeEstimator& target_w_cme, const Matrix& x_new) const;

 private:
  std::vector<double> classes_;
  std::vector<BridgeM0> bridges_;
};

// ===== Double-embedding operator =====
//
// Ridge regression of the concept feature phi(C) on the composed feature
// mu_W|x (x) phi(x), fitted on source data in two stages. Applying it to a
// target-domain W-given-X embedding at a new covariate yields a weight
// vector over the stage-2 C anchors representing the adapted concept
// embedding — the ingredient for partial adaptation when target concepts are
// unobserved.
class DoubleCmeOperator {
 public:
  // stage1 needs blocks (w, x); stage2 needs (c, x).
  static DoubleCmeOperator fit(const SampleBatch& stage1, const SampleBatch& stage2,
                               const KernelSpec& kx, const KernelSpec& kw, const KernelSpec& kc,
                               double lambda3, double lambda4);

  const Matrix& anchors_c() const { return anchors_c_; }
  const KernelSpec& kernel_c() const { return kc_; }
  const KernelSpec& kernel_w() const { return kw_; }
  double applied_jitter() const { return solver4_.applied_jitter(); }

  // Weight vectors over the stage-2 C anchors (n4 x n_queries) for the
  // adapted concept embedding at each new covariate.
  Matrix embed_weights(const CmeEstimator& target_w_cme, const Matrix& x_new) const;

 private:
  DoubleCmeOperator(Matrix anchors_w1, Matrix b34, Matrix anchors_x4, Matrix anchors_c4,
                    KernelSpec kx, KernelSpec kw, KernelSpec kc, const Matrix& ktilde,
                    double reg4);

  Matrix anchors_w1_;  // stage-1 W rows
  Matrix b34_;         // (K_x3 + l3 n3 I)^{-1} K_x34
  Matrix anchors_x4_;  // stage-2 X rows
  Matrix anchors_c_;   // stage-2 C rows
  KernelSpec kx_, kw_, kc_;
  RidgeSolver solver4_;
};

// Partial adaptation: evaluate the concept bridge against the operator's
// adapted concept embedding and the target W-given-X embedding at new x.
Vector predict_partial_adaptation(const BridgeH0& bridge, const DoubleCmeOperator& op,
                                  const CmeEstimator& target_w_cme, const Matrix& x_new);

}  // namespace latshift
