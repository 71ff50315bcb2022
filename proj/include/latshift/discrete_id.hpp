#pragma once

#include <vector>

#include "latshift/types.hpp"

namespace latshift {

// ===== Discrete-variable identification =====
//
// All probability tables are column-stochastic: column j holds a
// distribution (entries nonnegative, summing to 1).

// Synthetic discrete model over a latent U: emission of the proxy W, the
// response table given U, and the latent mixture for each observed context
// (a domain index, or a point on an X grid — whichever varies).
struct DiscreteModel {
  Matrix p_w_given_u;    // k_W x k_U
  Matrix p_y_given_u;    // k_Y x k_U (response table at the evaluation point)
  Matrix p_u_given_ctx;  // k_U x n_ctx, one latent mixture per context

  void validate(double tol = 1e-12) const;  // throws std::invalid_argument

  // Observable tables induced by the factorizations P(W|ctx) = P(W|U) P(U|ctx)
  // and P(Y|ctx) = P(Y|U) P(U|ctx).
  Matrix p_w_given_ctx() const { return p_w_given_u * p_u_given_ctx; }
  Matrix p_y_given_ctx() const { return p_y_given_u * p_u_given_ctx; }
};

// Linear bridge recovered from observable tables: values = A pinv(B) with an
// SVD pseudo-inverse (cutoff 1e-10 * sigma_max). residual is |A - values*B|_F
// and rank the numerical rank of B at that cutoff.
struct BridgeMatrix {
  Matrix values;
  double residual = 0.0;
  Index rank = 0;
};

// Concept route: contexts are points of an X grid at a fixed concept value;
// recovers the table mapping P(W|x, c) to P(Y|x, c).
BridgeMatrix bridge_matrix_concept(const Matrix& p_y_given_xc, const Matrix& p_w_given_xc);

// Multi-domain route: contexts are source domains at a fixed x; recovers the
// table mapping P_r(W|x) to P_r(Y|x), transferable to unseen domains when
// the latent mixtures span.
BridgeMatrix bridge_matrix_multidomain(const Matrix& p_y_per_domain,
                                       const Matrix& p_w_per_domain);

// ===== Partial identification =====

// Interval for E_q[Y|x] when only the Bernoulli marginals pi_c = q(C=1|x) and
// pi_w = q(W=1|x) of the target joint are known. h0_table(c, w) is the bridge
// value at (C=c, W=w). The response expectation is linear in the joint cell
// q11 = q(C=1, W=1|x), whose admissible range is the Frechet interval
// [max(0, pi_c + pi_w - 1), min(pi_c, pi_w)].
struct FrechetBound {
  double lower = 0.0, upper = 0.0;          // range of E_q[Y|x]
  double q11_lower = 0.0, q11_upper = 0.0;  // admissible joint-cell range
};
FrechetBound frechet_bound(const Matrix& h0_table, double pi_c, double pi_w);

// Value of E_q[Y|x] at a specific admissible joint cell q11.
double frechet_value(const Matrix& h0_table, double pi_c, double pi_w, double q11);

// Interval for E_q[Y|x] in the linear-Gaussian model with bilinear bridge
// w^T h c, when the conditional marginals of W and C given x are known but
// their conditional correlation R is only bounded in operator norm by rho:
//   center mu_w^T h mu_c, half-width rho * (nuclear norm of
//   sigma_w^{1/2} h sigma_c^{1/2}).
struct GaussianLinearBound {
  double center = 0.0, half_width = 0.0;
  double lower = 0.0, upper = 0.0;
};
GaussianLinearBound gaussian_linear_bound(const Matrix& h, const Vector& mu_w, const Vector& mu_c,
                                          const Matrix& sigma_w, const Matrix& sigma_c,
                                          double rho);

}  // namespace latshift
