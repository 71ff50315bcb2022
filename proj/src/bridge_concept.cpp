#include "latshift/bridge_concept.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "two_stage.hpp"

namespace latshift {

namespace detail {

TwoStage two_stage_fit(const Matrix& a1, const Matrix& b1, const Matrix& a2, const Matrix& b2,
                       const Matrix& w1, const KernelSpec& ka, const KernelSpec& kb,
                       const KernelSpec& kw, double lambda1, double lambda2) {
  if (!(lambda1 > 0.0) || !(lambda2 > 0.0))
    throw std::invalid_argument("two_stage_fit: regularizers must be positive");
  const double n1 = static_cast<double>(a1.rows());
  const double n2 = static_cast<double>(a2.rows());

  const Matrix cond = hadamard(gram(ka, a1, a1), gram(kb, b1, b1));
  RidgeSolver stage1(cond, lambda1 * n1);
  const Matrix cross = hadamard(gram(ka, a1, a2), gram(kb, b1, b2));

  TwoStage out{
      /*gamma=*/stage1.solve(cross),
      /*k_w1=*/gram(kw, w1, w1),
      /*k_b2=*/gram(kb, b2, b2),
      /*sigma=*/Matrix(),
      /*stage2=*/RidgeSolver(Matrix::Zero(1, 1), 1.0),  // replaced below
      /*jitter1=*/stage1.applied_jitter(),
  };
  out.sigma = hadamard(out.gamma.transpose() * out.k_w1 * out.gamma, out.k_b2);
  out.stage2 = RidgeSolver(out.sigma, lambda2 * n2);
  return out;
}

}  // namespace detail

namespace {

void require_block(const Matrix& block, Index rows, const char* what) {
  if (block.rows() != rows || block.cols() == 0)
    throw std::invalid_argument(std::string("BridgeH0: missing or ragged ") + what + " block");
}

void require_y(const Vector& y, Index rows) {
  if (y.size() != rows) throw std::invalid_argument("BridgeH0: stage-2 batch needs a y column");
}

}  // namespace

BridgeH0 BridgeH0::fit(const SampleBatch& stage1, const SampleBatch& stage2, const KernelSpec& kx,
                       const KernelSpec& kc, const KernelSpec& kw, double lambda1,
                       double lambda2) {
  stage1.check_consistent();
  stage2.check_consistent();
  require_block(stage1.w, stage1.rows(), "stage-1 w");
  require_block(stage1.c, stage1.rows(), "stage-1 c");
  require_block(stage1.x, stage1.rows(), "stage-1 x");
  require_block(stage2.c, stage2.rows(), "stage-2 c");
  require_block(stage2.x, stage2.rows(), "stage-2 x");
  require_y(stage2.y, stage2.rows());

  detail::TwoStage core = detail::two_stage_fit(stage1.x, stage1.c, stage2.x, stage2.c, stage1.w,
                                                kx, kc, kw, lambda1, lambda2);
  const Vector u = core.stage2.solve(stage2.y);

  BridgeH0 b;
  b.alpha_ = core.gamma * u.asDiagonal();
  b.gamma_ = std::move(core.gamma);
  b.anchors_w_ = stage1.w;
  b.anchors_c_ = stage2.c;
  b.kw_ = kw;
  b.kc_ = kc;
  b.lambda1_ = lambda1;
  b.lambda2_ = lambda2;
  b.fitted_ = core.sigma * u;
  return b;
}

BridgeH0 BridgeH0::from_parts(Matrix alpha, Matrix anchors_w, Matrix anchors_c, KernelSpec kw,
                              KernelSpec kc, double lambda1, double lambda2) {
  if (alpha.rows() != anchors_w.rows() || alpha.cols() != anchors_c.rows())
    throw std::invalid_argument("BridgeH0::from_parts: alpha shape does not match anchors");
  BridgeH0 b;
  b.alpha_ = std::move(alpha);
  b.anchors_w_ = std::move(anchors_w);
  b.anchors_c_ = std::move(anchors_c);
  b.kw_ = std::move(kw);
  b.kc_ = std::move(kc);
  b.lambda1_ = lambda1;
  b.lambda2_ = lambda2;
  return b;
}

double BridgeH0::rkhs_norm() const {
  const Matrix m = gram(kw_, anchors_w_, anchors_w_) * alpha_ * gram(kc_, anchors_c_, anchors_c_);
  return std::sqrt(std::max(0.0, m.cwiseProduct(alpha_).sum()));
}

const Vector& BridgeH0::fitted_values() const {
  if (fitted_.size() == 0)
    throw std::logic_error("BridgeH0::fitted_values: unavailable on a bridge rebuilt from parts");
  return fitted_;
}

Vector BridgeH0::inner_with_cme(const CmeEstimator& cme, const SampleBatch& queries) const {
  if (cme.pattern() != CmePattern::WGivenCX)
    throw std::invalid_argument("BridgeH0::inner_with_cme: embedding must condition W on (C, X)");
  if (!(cme.kernel_w() == kw_))
    throw std::invalid_argument("BridgeH0::inner_with_cme: W kernels differ");

  const Matrix b = cme.weights(queries);                          // n_cme x m
  const Matrix v = alpha_.transpose() * gram(kw_, anchors_w_, cme.anchors_w()) * b;  // n2 x m
  const Matrix gc = gram(kc_, anchors_c_, queries.c);             // n2 x m
  return gc.cwiseProduct(v).colwise().sum().transpose();
}

Vector BridgeH0::predict(const CmeEstimator& target_joint_cme, const Matrix& x_new) const {
  if (target_joint_cme.pattern() != CmePattern::WCGivenX)
    throw std::invalid_argument("BridgeH0::predict: embedding must be the joint (W, C) given X");
  if (!(target_joint_cme.kernel_w() == kw_) || !(target_joint_cme.kernel_c() == kc_))
    throw std::invalid_argument("BridgeH0::predict: kernels differ from the embedding's");

  SampleBatch q;
  q.x = x_new;
  const Matrix omega = target_joint_cme.weights(q);                            // n_t x m
  const Matrix kw_cross = gram(kw_, target_joint_cme.anchors_w(), anchors_w_);  // n_t x n1
  const Matrix kc_cross = gram(kc_, anchors_c_, target_joint_cme.anchors_c()); // n2 x n_t
  // y_q = sum_t omega(t, q) * [K_wq alpha K_c2,cq]_{tt}
  const Vector d = (kw_cross * alpha_).cwiseProduct(kc_cross.transpose()).rowwise().sum();
  return omega.transpose() * d;
}

BridgeH0Multilabel BridgeH0Multilabel::fit(const SampleBatch& stage1, const SampleBatch& stage2,
                                           const KernelSpec& kx, const KernelSpec& kc,
                                           const KernelSpec& kw, double lambda1, double lambda2) {
  stage1.check_consistent();
  stage2.check_consistent();
  require_block(stage1.w, stage1.rows(), "stage-1 w");
  require_block(stage1.c, stage1.rows(), "stage-1 c");
  require_block(stage1.x, stage1.rows(), "stage-1 x");
  require_block(stage2.c, stage2.rows(), "stage-2 c");
  require_block(stage2.x, stage2.rows(), "stage-2 x");
  require_y(stage2.y, stage2.rows());

  BridgeH0Multilabel ml;
  for (Index i = 0; i < stage2.y.size(); ++i)
    if (std::find(ml.classes_.begin(), ml.classes_.end(), stage2.y(i)) == ml.classes_.end())
      ml.classes_.push_back(stage2.y(i));
  std::sort(ml.classes_.begin(), ml.classes_.end());
  if (ml.classes_.size() < 2)
    throw std::invalid_argument("BridgeH0Multilabel::fit: need at least two classes");

  // One stage-1 transport and one stage-2 factorization, k_Y solves.
  detail::TwoStage core = detail::two_stage_fit(stage1.x, stage1.c, stage2.x, stage2.c, stage1.w,
                                                kx, kc, kw, lambda1, lambda2);
  for (double cls : ml.classes_) {
    const Vector indicator = (stage2.y.array() == cls).cast<double>();
    const Vector u = core.stage2.solve(indicator);
    BridgeH0 b;
    b.alpha_ = core.gamma * u.asDiagonal();
    b.gamma_ = core.gamma;
    b.anchors_w_ = stage1.w;
    b.anchors_c_ = stage2.c;
    b.kw_ = kw;
    b.kc_ = kc;
    b.lambda1_ = lambda1;
    b.lambda2_ = lambda2;
    b.fitted_ = core.sigma * u;
    ml.bridges_.push_back(std::move(b));
  }
  return ml;
}

BridgeH0Multilabel BridgeH0Multilabel::from_parts(std::vector<Matrix> alphas,
                                                  std::vector<double> classes, Matrix anchors_w,
                                                  Matrix anchors_c, KernelSpec kw, KernelSpec kc,
                                                  double lambda1, double lambda2) {
  if (alphas.size() != classes.size() || alphas.empty())
    throw std::invalid_argument("BridgeH0Multilabel::from_parts: one alpha per class required");
  BridgeH0Multilabel ml;
  ml.classes_ = std::move(classes);
  for (Matrix& a : alphas)
    ml.bridges_.push_back(
        BridgeH0::from_parts(std::move(a), anchors_w, anchors_c, kw, kc, lambda1, lambda2));
  return ml;
}

const std::vector<Matrix>& BridgeH0Multilabel::alphas() const {
  alpha_view_.clear();
  for (const BridgeH0& b : bridges_) alpha_view_.push_back(b.alpha());
  return alpha_view_;
}

Matrix BridgeH0Multilabel::scores(const CmeEstimator& target_joint_cme, const Matrix& x_new) const {
  Matrix s(x_new.rows(), static_cast<Index>(bridges_.size()));
  for (size_t k = 0; k < bridges_.size(); ++k)
    s.col(static_cast<Index>(k)) = bridges_[k].predict(target_joint_cme, x_new);
  return s;
}

Vector BridgeH0Multilabel::classify(const CmeEstimator& target_joint_cme,
                                    const Matrix& x_new) const {
  return classify_scores(scores(target_joint_cme, x_new), classes_);
}

Vector classify_scores(const Matrix& scores, const std::vector<double>& classes) {
  if (scores.cols() != static_cast<Index>(classes.size()))
    throw std::invalid_argument("classify_scores: one class label per score column required");
  Vector labels(scores.rows());
  for (Index i = 0; i < scores.rows(); ++i) {
    Index best = 0;
    for (Index k = 1; k < scores.cols(); ++k)
      if (scores(i, k) > scores(i, best)) best = k;  // strict: ties keep the lowest index
    labels(i) = classes[static_cast<size_t>(best)];
  }
  return labels;
}

}  // namespace latshift
