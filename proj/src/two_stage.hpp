#pragma once

#include "latshift/kernels.hpp"
#include "latshift/linalg.hpp"

namespace latshift::detail {

// ===== Shared two-stage ridge core =====
//
// Both bridges solve the same algebra on different variable roles. Stage 1
// ridge-regresses the W features on a conditioning pair (a, b); stage 2
// ridge-regresses y on the transported features. With n1 stage-1 and n2
// stage-2 rows:
//   gamma = (K_a1 (.) K_b1 + l1 n1 I)^{-1} (K_a12 (.) K_b12)      n1 x n2
//   sigma = (gamma^T K_w1 gamma) (.) K_b2                          n2 x n2
//   u     = (sigma + l2 n2 I)^{-1} y2
//   alpha = gamma diag(u)                                          n1 x n2
// where (.) is the Hadamard product. The dense normal-equations form of the
// same minimizer over vec(alpha) is recovered in the tests; this closed form
// never materializes the (n1 n2)-dimensional system.
struct TwoStage {
  Matrix gamma;   // n1 x n2
  Matrix k_w1;    // n1 x n1 Gram of stage-1 W anchors
  Matrix k_b2;    // n2 x n2 Gram of the stage-2 output-side block
  Matrix sigma;   // n2 x n2
  RidgeSolver stage2;
  double jitter1;  // jitter applied by the stage-1 solve, for diagnostics
};

TwoStage two_stage_fit(const Matrix& a1, const Matrix& b1, const Matrix& a2, const Matrix& b2,
                       const Matrix& w1, const KernelSpec& ka, const KernelSpec& kb,
                       const KernelSpec& kw, double lambda1, double lambda2);

}  // namespace latshift::detail
