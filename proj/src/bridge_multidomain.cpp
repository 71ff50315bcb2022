#include "latshift/bridge_multidomain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "two_stage.hpp"

namespace latshift {

namespace {

void require_block(const Matrix& block, Index rows, const char* who, const char* what) {
  if (block.rows() != rows || block.cols() == 0)
    throw std::invalid_argument(std::string(who) + ": missing or ragged " + what + " block");
}

Matrix z_block(const SampleBatch& batch, const char* who) {
  if (batch.z.size() != batch.rows())
    throw std::invalid_argument(std::string(who) + ": missing z column");
  return batch.z;
}

}  // namespace

BridgeM0 BridgeM0::fit(const SampleBatch& stage1, const SampleBatch& stage2, const KernelSpec& kx,
                       const KernelSpec& kz, const KernelSpec& kw, double lambda3,
                       double lambda4) {
  stage1.check_consistent();
  stage2.check_consistent();
  require_block(stage1.w, stage1.rows(), "BridgeM0", "stage-1 w");
  require_block(stage1.x, stage1.rows(), "BridgeM0", "stage-1 x");
  require_block(stage2.x, stage2.rows(), "BridgeM0", "stage-2 x");
  if (stage2.y.size() != stage2.rows())
    throw std::invalid_argument("BridgeM0: stage-2 batch needs a y column");
  const Matrix z1 = z_block(stage1, "BridgeM0");
  const Matrix z2 = z_block(stage2, "BridgeM0");

  // Same core as the concept bridge with roles (a, b) = (Z, X).
  detail::TwoStage core =
      detail::two_stage_fit(z1, stage1.x, z2, stage2.x, stage1.w, kz, kx, kw, lambda3, lambda4);
  const Vector u = core.stage2.solve(stage2.y);

  BridgeM0 b;
  b.alpha_ = core.gamma * u.asDiagonal();
  b.gamma_ = std::move(core.gamma);
  b.anchors_w_ = stage1.w;
  b.anchors_x_ = stage2.x;
  b.kw_ = kw;
  b.kx_ = kx;
  b.lambda3_ = lambda3;
  b.lambda4_ = lambda4;
  b.fitted_ = core.sigma * u;
  return b;
}

BridgeM0 BridgeM0::from_parts(Matrix alpha, Matrix anchors_w, Matrix anchors_x, KernelSpec kw,
                              KernelSpec kx, double lambda3, double lambda4) {
  if (alpha.rows() != anchors_w.rows() || alpha.cols() != anchors_x.rows())
    throw std::invalid_argument("BridgeM0::from_parts: alpha shape does not match anchors");
  BridgeM0 b;
  b.alpha_ = std::move(alpha);
  b.anchors_w_ = std::move(anchors_w);
  b.anchors_x_ = std::move(anchors_x);
  b.kw_ = std::move(kw);
  b.kx_ = std::move(kx);
  b.lambda3_ = lambda3;
  b.lambda4_ = lambda4;
  return b;
}

double BridgeM0::rkhs_norm() const {
  const Matrix m = gram(kw_, anchors_w_, anchors_w_) * alpha_ * gram(kx_, anchors_x_, anchors_x_);
  return std::sqrt(std::max(0.0, m.cwiseProduct(alpha_).sum()));
}

const Vector& BridgeM0::fitted_values() const {
  if (fitted_.size() == 0)
    throw std::logic_error("BridgeM0::fitted_values: unavailable on a bridge rebuilt from parts");
  return fitted_;
}

Vector BridgeM0::predict(const CmeEstimator& target_w_cme, const Matrix& x_new) const {
  if (target_w_cme.pattern() != CmePattern::WGivenX)
    throw std::invalid_argument("BridgeM0::predict: embedding must condition W on X");
  if (!(target_w_cme.kernel_w() == kw_))
    throw std::invalid_argument("BridgeM0::predict: W kernels differ from the embedding's");

  SampleBatch q;
  q.x = x_new;
  const Matrix omega = target_w_cme.weights(q);                              // n_t x m
  const Matrix m = gram(kw_, target_w_cme.anchors_w(), anchors_w_) * alpha_; // n_t x n4
  const Matrix g = gram(kx_, anchors_x_, x_new);                             // n4 x m
  // y_q = omega(., q)^T m g(., q)
  return (omega.cwiseProduct(m * g)).colwise().sum().transpose();
}

BridgeM0Multilabel BridgeM0Multilabel::fit(const SampleBatch& stage1, const SampleBatch& stage2,
                                           const KernelSpec& kx, const KernelSpec& kz,
                                           const KernelSpec& kw, double lambda3, double lambda4) {
  stage1.check_consistent();
  stage2.check_consistent();
  require_block(stage1.w, stage1.rows(), "BridgeM0Multilabel", "stage-1 w");
  require_block(stage1.x, stage1.rows(), "BridgeM0Multilabel", "stage-1 x");
  require_block(stage2.x, stage2.rows(), "BridgeM0Multilabel", "stage-2 x");
  if (stage2.y.size() != stage2.rows())
    throw std::invalid_argument("BridgeM0Multilabel: stage-2 batch needs a y column");
  const Matrix z1 = z_block(stage1, "BridgeM0Multilabel");
  const Matrix z2 = z_block(stage2, "BridgeM0Multilabel");

  BridgeM0Multilabel ml;
  for (Index i = 0; i < stage2.y.size(); ++i)
    if (std::find(ml.classes_.begin(), ml.classes_.end(), stage2.y(i)) == ml.classes_.end())
      ml.classes_.push_back(stage2.y(i));
  std::sort(ml.classes_.begin(), ml.classes_.end());
  if (ml.classes_.size() < 2)
    throw std::invalid_argument("BridgeM0Multilabel::fit: need at least two classes");

  detail::TwoStage core =
      detail::two_stage_fit(z1, stage1.x, z2, stage2.x, stage1.w, kz, kx, kw, lambda3, lambda4);
  for (double cls : ml.classes_) {
    const Vector indicator = (stage2.y.array() == cls).cast<double>();
    const Vector u = core.stage2.solve(indicator);
    BridgeM0 b;
    b.alpha_ = core.gamma * u.asDiagonal();
    b.gamma_ = core.gamma;
    b.anchors_w_ = stage1.w;
    b.anchors_x_ = stage2.x;
    b.kw_ = kw;
    b.kx_ = kx;
    b.lambda3_ = lambda3;
    b.lambda4_ = lambda4;
    b.fitted_ = core.sigma * u;
    ml.bridges_.push_back(std::move(b));
  }
  return ml;
}

BridgeM0Multilabel BridgeM0Multilabel::from_parts(std::vector<Matrix> alphas,
                                                  std::vector<double> classes, Matrix anchors_w,
                                                  Matrix anchors_x, KernelSpec kw, KernelSpec kx,
                                                  double lambda3, double lambda4) {
  if (alphas.size() != classes.size() || alphas.empty())
    throw std::invalid_argument("BridgeM0Multilabel::from_parts: one alpha per class required");
  BridgeM0Multilabel ml;
  ml.classes_ = std::move(classes);
  for (Matrix& a : alphas)
    ml.bridges_.push_back(
        BridgeM0::from_parts(std::move(a), anchors_w, anchors_x, kw, kx, lambda3, lambda4));
  return ml;
}

Matrix BridgeM0Multilabel::scores(const CmeEstimator& target_w_cme, const Matrix& x_new) const {
  Matrix s(x_new.rows(), static_cast<Index>(bridges_.size()));
  for (size_t k = 0; k < bridges_.size(); ++k)
    s.col(static_cast<Index>(k)) = bridges_[k].predict(target_w_cme, x_new);
  return s;
}

Vector BridgeM0Multilabel::classify(const CmeEstimator& target_w_cme, const Matrix& x_new) const {
  return classify_scores(scores(target_w_cme, x_new), classes_);
}

DoubleCmeOperator::DoubleCmeOperator(Matrix anchors_w1, Matrix b34, Matrix anchors_x4,
                                     Matrix anchors_c4, KernelSpec kx, KernelSpec kw,
                                     KernelSpec kc, const Matrix& ktilde, double reg4)
    : anchors_w1_(std::move(anchors_w1)),
      b34_(std::move(b34)),
      anchors_x4_(std::move(anchors_x4)),
      anchors_c_(std::move(anchors_c4)),
      kx_(std::move(kx)),
      kw_(std::move(kw)),
      kc_(std::move(kc)),
      solver4_(ktilde, reg4) {}

DoubleCmeOperator DoubleCmeOperator::fit(const SampleBatch& stage1, const SampleBatch& stage2,
                                         const KernelSpec& kx, const KernelSpec& kw,
                                         const KernelSpec& kc, double lambda3, double lambda4) {
  stage1.check_consistent();
  stage2.check_consistent();
  require_block(stage1.w, stage1.rows(), "DoubleCmeOperator", "stage-1 w");
  require_block(stage1.x, stage1.rows(), "DoubleCmeOperator", "stage-1 x");
  require_block(stage2.c, stage2.rows(), "DoubleCmeOperator", "stage-2 c");
  require_block(stage2.x, stage2.rows(), "DoubleCmeOperator", "stage-2 x");
  if (!(lambda3 > 0.0) || !(lambda4 > 0.0))
    throw std::invalid_argument("DoubleCmeOperator::fit: regularizers must be positive");

  const double n3 = static_cast<double>(stage1.rows());
  const double n4 = static_cast<double>(stage2.rows());

  // b34 transports the stage-1 W embedding to each stage-2 covariate; the
  // stage-2 Gram of the composed feature mu_W|x (x) phi(x) is then
  // K_x4 (.) (b34^T K_w3 b34).
  RidgeSolver stage1_solver(gram(kx, stage1.x, stage1.x), lambda3 * n3);
  Matrix b34 = stage1_solver.solve(gram(kx, stage1.x, stage2.x));
  const Matrix ktilde = hadamard(gram(kx, stage2.x, stage2.x),
                                 b34.transpose() * gram(kw, stage1.w, stage1.w) * b34);

  return DoubleCmeOperator(stage1.w, std::move(b34), stage2.x, stage2.c, kx, kw, kc, ktilde,
                           lambda4 * n4);
}

Matrix DoubleCmeOperator::embed_weights(const CmeEstimator& target_w_cme,
                                        const Matrix& x_new) const {
  if (target_w_cme.pattern() != CmePattern::WGivenX)
    throw std::invalid_argument("DoubleCmeOperator::embed_weights: embedding must condition W on X");
  if (!(target_w_cme.kernel_w() == kw_))
    throw std::invalid_argument("DoubleCmeOperator::embed_weights: W kernels differ");

  SampleBatch q;
  q.x = x_new;
  const Matrix omega = target_w_cme.weights(q);                                // n_t x m
  const Matrix t = gram(kw_, anchors_w1_, target_w_cme.anchors_w()) * omega;   // n3 x m
  const Matrix v = (b34_.transpose() * t).cwiseProduct(gram(kx_, anchors_x4_, x_new));
  return solver4_.solve(v);
}

Vector predict_partial_adaptation(const BridgeH0& bridge, const DoubleCmeOperator& op,
                                  const CmeEstimator& target_w_cme, const Matrix& x_new) {
  if (!(bridge.kernel_w() == op.kernel_w()) || !(bridge.kernel_w() == target_w_cme.kernel_w()))
    throw std::invalid_argument("predict_partial_adaptation: W kernels differ across components");
  if (!(bridge.kernel_c() == op.kernel_c()))
    throw std::invalid_argument("predict_partial_adaptation: C kernels differ across components");

  SampleBatch q;
  q.x = x_new;
  const Matrix omega = target_w_cme.weights(q);                                         // n_t x m
  const Matrix a = op.embed_weights(target_w_cme, x_new);                               // n4 x m
  const Matrix p = gram(bridge.kernel_w(), target_w_cme.anchors_w(), bridge.anchors_w())
                   * bridge.alpha();                                                    // n_t x n2
  const Matrix qc = gram(bridge.kernel_c(), bridge.anchors_c(), op.anchors_c()) * a;    // n2 x m
  return (omega.cwiseProduct(p * qc)).colwise().sum().transpose();
}

}  // namespace latshift
