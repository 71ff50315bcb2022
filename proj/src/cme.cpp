#include "latshift/cme.hpp"

#include <algorithm>
#include <string>

namespace latshift {

namespace {

// Gram matrix of the conditioning blocks at the anchors.
Matrix conditioning_gram(CmePattern pattern, const SampleBatch& anchors, const KernelSpec& kx,
                         const KernelSpec& kc) {
  switch (pattern) {
    case CmePattern::WGivenCX:
      return hadamard(gram(kx, anchors.x, anchors.x), gram(kc, anchors.c, anchors.c));
    case CmePattern::WGivenX:
    case CmePattern::WCGivenX:
      return gram(kx, anchors.x, anchors.x);
  }
  throw std::logic_error("conditioning_gram: unreachable pattern");
}

void require_block(const Matrix& block, Index rows, const char* what) {
  if (block.rows() != rows || block.cols() == 0)
    throw std::invalid_argument(std::string("CmeEstimator: missing or ragged ") + what + " block");
}

}  // namespace

CmeEstimator::CmeEstimator(CmePattern pattern, const SampleBatch& anchors, KernelSpec kx,
                           KernelSpec kc, KernelSpec kw, double lambda)
    : pattern_(pattern),
      anchors_x_(anchors.x),
      anchors_c_(anchors.c),
      anchors_w_(anchors.w),
      kx_(std::move(kx)),
      kc_(std::move(kc)),
      kw_(std::move(kw)),
      lambda_(lambda),
      solver_(conditioning_gram(pattern, anchors, kx_, kc_),
              lambda * static_cast<double>(anchors.rows())) {
  if (!(lambda > 0.0)) throw std::invalid_argument("CmeEstimator: lambda must be positive");
}

CmeEstimator CmeEstimator::fit_w_given_cx(const SampleBatch& anchors, const KernelSpec& kx,
                                          const KernelSpec& kc, const KernelSpec& kw,
                                          double lambda) {
  anchors.check_consistent();
  require_block(anchors.x, anchors.rows(), "x");
  require_block(anchors.c, anchors.rows(), "c");
  require_block(anchors.w, anchors.rows(), "w");
  return CmeEstimator(CmePattern::WGivenCX, anchors, kx, kc, kw, lambda);
}

CmeEstimator CmeEstimator::fit_w_given_x(const SampleBatch& anchors, const KernelSpec& kx,
                                         const KernelSpec& kw, double lambda) {
  anchors.check_consistent();
  require_block(anchors.x, anchors.rows(), "x");
  require_block(anchors.w, anchors.rows(), "w");
  return CmeEstimator(CmePattern::WGivenX, anchors, kx, KernelSpec::binary(), kw, lambda);
}

CmeEstimator CmeEstimator::fit_wc_given_x(const SampleBatch& anchors, const KernelSpec& kx,
                                          const KernelSpec& kw, const KernelSpec& kc,
                                          double lambda) {
  anchors.check_consistent();
  require_block(anchors.x, anchors.rows(), "x");
  require_block(anchors.w, anchors.rows(), "w");
  require_block(anchors.c, anchors.rows(), "c");
  return CmeEstimator(CmePattern::WCGivenX, anchors, kx, kc, kw, lambda);
}

Matrix CmeEstimator::conditioning_cross(const SampleBatch& queries) const {
  queries.check_consistent();
  require_block(queries.x, queries.rows(), "query x");
  if (pattern_ == CmePattern::WGivenCX) {
    require_block(queries.c, queries.rows(), "query c");
    return hadamard(gram(kx_, anchors_x_, queries.x), gram(kc_, anchors_c_, queries.c));
  }
  return gram(kx_, anchors_x_, queries.x);
}

Matrix CmeEstimator::weights(const SampleBatch& queries) const {
  return solver_.solve(conditioning_cross(queries));
}

Matrix CmeEstimator::embedding_values(const SampleBatch& probes, const SampleBatch& queries) const {
  probes.check_consistent();
  require_block(probes.w, probes.rows(), "probe w");
  Matrix probe_gram = gram(kw_, probes.w, anchors_w_);
  if (pattern_ == CmePattern::WCGivenX) {
    require_block(probes.c, probes.rows(), "probe c");
    probe_gram = hadamard(probe_gram, gram(kc_, probes.c, anchors_c_));
  }
  return probe_gram * weights(queries);
}

PerDomainCme fit_cme_per_domain(const SampleBatch& data, const KernelSpec& kx,
                                const KernelSpec& kw, double lambda) {
  data.check_consistent();
  if (data.z.size() == 0)
    throw std::invalid_argument("fit_cme_per_domain: batch has no domain column");

  PerDomainCme out;
  for (Index i = 0; i < data.z.size(); ++i) {
    const double d = data.z(i);
    if (std::find(out.domains.begin(), out.domains.end(), d) == out.domains.end())
      out.domains.push_back(d);
  }
  for (double d : out.domains)
    out.fits.push_back(CmeEstimator::fit_w_given_x(data.select(domain_rows(data, d)), kx, kw, lambda));
  return out;
}

}  // namespace latshift
