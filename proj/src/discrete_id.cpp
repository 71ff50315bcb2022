#include "latshift/discrete_id.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "latshift/linalg.hpp"

namespace latshift {

namespace {

void check_stochastic(const Matrix& table, const char* name, double tol) {
  for (Index j = 0; j < table.cols(); ++j) {
    if ((table.col(j).array() < -tol).any())
      throw std::invalid_argument(std::string("DiscreteModel::validate: ") + name +
                                  " has negative entries");
    if (std::abs(table.col(j).sum() - 1.0) > tol)
      throw std::invalid_argument(std::string("DiscreteModel::validate: ") + name +
                                  " columns must sum to 1");
  }
}

BridgeMatrix solve_bridge(const Matrix& a, const Matrix& b, const char* who) {
  if (a.cols() != b.cols())
    throw std::invalid_argument(std::string(who) + ": tables must share context columns");
  if (a.cols() == 0) throw std::invalid_argument(std::string(who) + ": no context columns");

  constexpr double kCutoffRatio = 1e-10;
  BridgeMatrix out;
  out.values = a * pinv(b, kCutoffRatio);
  out.residual = (a - out.values * b).norm();

  Eigen::JacobiSVD<Matrix> svd(b);
  const Vector& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? kCutoffRatio * s(0) : 0.0;
  out.rank = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff) ++out.rank;
  return out;
}

}  // namespace

void DiscreteModel::validate(double tol) const {
  if (p_w_given_u.cols() != p_u_given_ctx.rows() || p_y_given_u.cols() != p_u_given_ctx.rows())
    throw std::invalid_argument("DiscreteModel::validate: latent dimension mismatch");
  check_stochastic(p_w_given_u, "p_w_given_u", tol);
  check_stochastic(p_y_given_u, "p_y_given_u", tol);
  check_stochastic(p_u_given_ctx, "p_u_given_ctx", tol);
}

BridgeMatrix bridge_matrix_concept(const Matrix& p_y_given_xc, const Matrix& p_w_given_xc) {
  return solve_bridge(p_y_given_xc, p_w_given_xc, "bridge_matrix_concept");
}

BridgeMatrix bridge_matrix_multidomain(const Matrix& p_y_per_domain,
                                       const Matrix& p_w_per_domain) {
  return solve_bridge(p_y_per_domain, p_w_per_domain, "bridge_matrix_multidomain");
}

double frechet_value(const Matrix& h0_table, double pi_c, double pi_w, double q11) {
  if (h0_table.rows() != 2 || h0_table.cols() != 2)
    throw std::invalid_argument("frechet_value: h0_table must be 2x2");
  return h0_table(0, 0) * (1.0 - pi_c - pi_w) + h0_table(0, 1) * pi_w + h0_table(1, 0) * pi_c +
         q11 * (h0_table(0, 0) - h0_table(0, 1) - h0_table(1, 0) + h0_table(1, 1));
}

FrechetBound frechet_bound(const Matrix& h0_table, double pi_c, double pi_w) {
  if (h0_table.rows() != 2 || h0_table.cols() != 2)
    throw std::invalid_argument("frechet_bound: h0_table must be 2x2");
  if (!(pi_c >= 0.0 && pi_c <= 1.0) || !(pi_w >= 0.0 && pi_w <= 1.0))
    throw std::invalid_argument("frechet_bound: marginals must lie in [0, 1]");

  FrechetBound out;
  out.q11_lower = std::max(0.0, pi_c + pi_w - 1.0);
  out.q11_upper = std::min(pi_c, pi_w);
  // Linear in q11, so the extremes sit at the interval endpoints.
  const double at_lo = frechet_value(h0_table, pi_c, pi_w, out.q11_lower);
  const double at_hi = frechet_value(h0_table, pi_c, pi_w, out.q11_upper);
  out.lower = std::min(at_lo, at_hi);
  out.upper = std::max(at_lo, at_hi);
  return out;
}

namespace {

// Symmetric PSD square root; tiny negative eigenvalues are clamped, larger
// ones rejected.
Matrix psd_sqrt(const Matrix& m, const char* name) {
  if (m.rows() != m.cols())
    throw std::invalid_argument(std::string("gaussian_linear_bound: ") + name + " must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("gaussian_linear_bound: eigendecomposition failed");
  const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  if ((eig.eigenvalues().array() < -1e-10 * scale).any())
    throw std::invalid_argument(std::string("gaussian_linear_bound: ") + name +
                                " is not positive semidefinite");
  return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace

GaussianLinearBound gaussian_linear_bound(const Matrix& h, const Vector& mu_w, const Vector& mu_c,
                                          const Matrix& sigma_w, const Matrix& sigma_c,
                                          double rho) {
  if (h.rows() != mu_w.size() || h.cols() != mu_c.size())
    throw std::invalid_argument("gaussian_linear_bound: h shape must match the marginal means");
  if (sigma_w.rows() != mu_w.size() || sigma_c.rows() != mu_c.size())
    throw std::invalid_argument("gaussian_linear_bound: covariance shapes must match the means");
  if (!(rho >= 0.0 && rho <= 1.0))
    throw std::invalid_argument("gaussian_linear_bound: rho must lie in [0, 1]");

  const Matrix h_tilde = psd_sqrt(sigma_w, "sigma_w") * h * psd_sqrt(sigma_c, "sigma_c");
  Eigen::JacobiSVD<Matrix> svd(h_tilde);

  GaussianLinearBound out;
  out.center = mu_w.dot(h * mu_c);
  out.half_width = rho * svd.singularValues().sum();
  out.lower = out.center - out.half_width;
  out.upper = out.center + out.half_width;
  return out;
}

}  // namespace latshift
