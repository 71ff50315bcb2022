#include "latshift/datagen.hpp"

#include <cmath>
#include <string>

#include "latshift/linalg.hpp"
#include "latshift/rng.hpp"

namespace latshift {

namespace {

// ===== Stream map =====
//
// Stream id = variable tag * 2^32 + domain tag. One stream per generated
// variable per domain; rows consume draws in order (and column-major within
// a row for multi-column variables).
enum VarTag : std::uint64_t {
  kTagU = 1,
  kTagX = 2,
  kTagW = 3,
  kTagC = 4,
  kTagY = 5,
};

std::uint64_t stream_id(std::uint64_t var_tag, std::uint64_t domain_tag) {
  return (var_tag << 32) + domain_tag;
}

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Shared structural equations of the two classification scenarios.
// Means and logistic coefficient tables indexed by the latent class.
struct ClassificationTables {
  Eigen::Vector2d mean_w{-1.0, 1.0};                 // E[W | U=u]
  Matrix mean_x;                                     // 2 x 2, row u
  Matrix coef_cu;                                    // 2 x 3, row u: concept offsets
  Matrix coef_cx[2];                                 // per u: 2 x 3, x-to-concept slopes
  Eigen::Vector2d offset_y{2.0, 2.0};                // o(u) M_{Y|U}
  Eigen::Vector3d coef_yc[2];                        // per u: concept-to-response slopes

  explicit ClassificationTables(double a_w) {
    mean_x.resize(2, 2);
    mean_x << -a_w, a_w, a_w, -a_w;
    coef_cu.resize(2, 3);
    coef_cu << -2, 2, 2, -1, 1, 2;
    coef_cx[0].resize(2, 3);
    coef_cx[0] << -6, 6, -3, 3, -6, -9;
    coef_cx[1].resize(2, 3);
    coef_cx[1] << 6, -6, 3, -3, 6, 9;
    coef_yc[0] << 3, -2, -1;
    coef_yc[1] << 3, -1, -2;
  }
};

// One classification domain: U ~ Bernoulli(p_u1), X | U bivariate Gaussian,
// W | U scalar Gaussian, concepts and response logistic.
SampleBatch gen_classification_domain(double p_u1, const ClassificationTables& t, Index n,
                                      std::uint64_t seed, std::uint64_t domain_tag) {
  if (n < 0) throw std::invalid_argument("datagen: sample count must be >= 0");
  if (!(p_u1 >= 0.0 && p_u1 <= 1.0))
    throw std::invalid_argument("datagen: class prior must lie in [0, 1]");

  CounterRng rng_u(seed, stream_id(kTagU, domain_tag));
  CounterRng rng_x(seed, stream_id(kTagX, domain_tag));
  CounterRng rng_w(seed, stream_id(kTagW, domain_tag));
  CounterRng rng_c(seed, stream_id(kTagC, domain_tag));
  CounterRng rng_y(seed, stream_id(kTagY, domain_tag));

  SampleBatch b;
  b.x.resize(n, 2);
  b.w.resize(n, 1);
  b.c.resize(n, 3);
  b.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    const int u = rng_u.bernoulli(p_u1);
    b.x(i, 0) = t.mean_x(u, 0) + rng_x.normal();
    b.x(i, 1) = t.mean_x(u, 1) + rng_x.normal();
    b.w(i, 0) = t.mean_w(u) + rng_w.normal();
    for (Index j = 0; j < 3; ++j) {
      const double logit = b.x.row(i).dot(t.coef_cx[u].col(j)) + t.coef_cu(u, j);
      b.c(i, j) = rng_c.bernoulli(sigmoid(logit));
    }
    const double logit_y = b.c.row(i).dot(t.coef_yc[u]) + t.offset_y(u);
    b.y(i) = rng_y.bernoulli(sigmoid(logit_y));
  }
  return b;
}

void append_domain(SampleBatch& all, const SampleBatch& part, double domain) {
  const Index n0 = all.rows();
  const Index n1 = part.rows();
  auto grow = [n0, n1](Matrix& dst, const Matrix& src) {
    if (src.cols() == 0) return;
    if (dst.rows() == 0) dst.resize(0, src.cols());
    dst.conservativeResize(n0 + n1, src.cols());
    dst.bottomRows(n1) = src;
  };
  grow(all.x, part.x);
  grow(all.w, part.w);
  grow(all.c, part.c);
  if (part.y.size() > 0) {
    all.y.conservativeResize(n0 + n1);
    all.y.tail(n1) = part.y;
  }
  all.z.conservativeResize(n0 + n1);
  all.z.tail(n1).setConstant(domain);
}

}  // namespace

SampleBatch gen_concept_classification(const ConceptClassificationSpec& spec, Index n,
                                       std::uint64_t seed, std::uint64_t domain_tag) {
  return gen_classification_domain(spec.p_u1, ClassificationTables(spec.a_w), n, seed, domain_tag);
}

SampleBatch gen_multidomain_classification(const MultiDomainClassificationSpec& spec,
                                           Index n_per_domain, std::uint64_t seed) {
  if (spec.p_u0.empty())
    throw std::invalid_argument("gen_multidomain_classification: need at least one domain");
  const ClassificationTables t(spec.a_w);
  SampleBatch all;
  for (size_t r = 0; r < spec.p_u0.size(); ++r) {
    SampleBatch d = gen_classification_domain(1.0 - spec.p_u0[r], t, n_per_domain, seed,
                                              static_cast<std::uint64_t>(r));
    d.c.resize(0, 0);  // concepts exist in the model but are withheld
    append_domain(all, d, static_cast<double>(r));
  }
  return all;
}

SampleBatch gen_regression_bernoulli(const RegressionBernoulliSpec& spec, Index n_per_domain,
                                     std::uint64_t seed) {
  if (spec.a.empty())
    throw std::invalid_argument("gen_regression_bernoulli: need at least one domain");
  if (n_per_domain < 0) throw std::invalid_argument("datagen: sample count must be >= 0");

  SampleBatch all;
  for (size_t r = 0; r < spec.a.size(); ++r) {
    const double a = spec.a[r];
    if (!(a >= 0.0 && a <= 1.0))
      throw std::invalid_argument("gen_regression_bernoulli: a must lie in [0, 1]");
    CounterRng rng_u(seed, stream_id(kTagU, r));
    CounterRng rng_x(seed, stream_id(kTagX, r));
    CounterRng rng_w(seed, stream_id(kTagW, r));
    SampleBatch d;
    d.x.resize(n_per_domain, 1);
    d.w.resize(n_per_domain, 1);
    d.y.resize(n_per_domain);
    for (Index i = 0; i < n_per_domain; ++i) {
      const int u = rng_u.bernoulli(a);
      d.x(i, 0) = rng_x.normal();
      d.w(i, 0) = (2.0 * u - 1.0) + 0.1 * rng_w.normal();
      d.y(i) = (u == 1 ? d.x(i, 0) : -d.x(i, 0));
    }
    append_domain(all, d, static_cast<double>(r));
  }
  return all;
}

SampleBatch gen_regression_beta(const RegressionBetaSpec& spec, Index n_per_domain,
                                std::uint64_t seed) {
  if (spec.ab.empty()) throw std::invalid_argument("gen_regression_beta: need at least one domain");
  if (n_per_domain < 0) throw std::invalid_argument("datagen: sample count must be >= 0");

  SampleBatch all;
  for (size_t r = 0; r < spec.ab.size(); ++r) {
    const auto [a, bb] = spec.ab[r];
    CounterRng rng_u(seed, stream_id(kTagU, r));
    CounterRng rng_x(seed, stream_id(kTagX, r));
    CounterRng rng_w(seed, stream_id(kTagW, r));
    SampleBatch d;
    d.x.resize(n_per_domain, 1);
    d.w.resize(n_per_domain, 1);
    d.y.resize(n_per_domain);
    for (Index i = 0; i < n_per_domain; ++i) {
      const double u = rng_u.beta(a, bb);
      d.x(i, 0) = rng_x.normal();
      const double xi0 = -1.0 + 0.1 * rng_w.normal();
      const double xi1 = 1.0 + 0.1 * rng_w.normal();
      d.w(i, 0) = (1.0 - u) * xi0 + u * xi1;
      d.y(i) = (2.0 * u - 1.0) * d.x(i, 0);
    }
    append_domain(all, d, static_cast<double>(r));
  }
  return all;
}

void GaussianSemSpec::validate() const {
  const Index du = cov_u.rows();
  const Index dx = coeff_x.rows();
  const Index dw = coeff_w.rows();
  const Index dc = coeff_cx.rows();
  if (coeff_x.cols() != du || coeff_w.cols() != du || coeff_cu.cols() != du)
    throw std::invalid_argument("GaussianSemSpec::validate: latent dimension mismatch");
  if (coeff_cx.cols() != dx || coeff_cu.rows() != dc)
    throw std::invalid_argument("GaussianSemSpec::validate: concept equation shape mismatch");
  if (coeff_y.rows() != du || coeff_y.cols() != dc)
    throw std::invalid_argument("GaussianSemSpec::validate: response coefficient shape mismatch");
  if (coeff_w.rows() != coeff_w.cols())
    throw std::invalid_argument("GaussianSemSpec::validate: proxy loading must be square");
  auto check_cov = [](const Matrix& m, Index d, const char* name) {
    if (m.rows() != d || m.cols() != d)
      throw std::invalid_argument(std::string("GaussianSemSpec::validate: bad shape for ") + name);
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument(std::string("GaussianSemSpec::validate: ") + name +
                                  " must be positive definite");
  };
  check_cov(cov_u, du, "cov_u");
  check_cov(cov_x, dx, "cov_x");
  check_cov(cov_w, dw, "cov_w");
  check_cov(cov_c, dc, "cov_c");
  if (!(var_y >= 0.0))
    throw std::invalid_argument("GaussianSemSpec::validate: var_y must be nonnegative");
}

SampleBatch gen_gaussian_linear_sem(const GaussianSemSpec& spec, Index n, std::uint64_t seed) {
  spec.validate();
  if (n < 0) throw std::invalid_argument("datagen: sample count must be >= 0");

  const Matrix lu = Eigen::LLT<Matrix>(spec.cov_u).matrixL();
  const Matrix lx = Eigen::LLT<Matrix>(spec.cov_x).matrixL();
  const Matrix lw = Eigen::LLT<Matrix>(spec.cov_w).matrixL();
  const Matrix lc = Eigen::LLT<Matrix>(spec.cov_c).matrixL();
  const double sy = std::sqrt(spec.var_y);

  CounterRng rng_u(seed, stream_id(kTagU, 0));
  CounterRng rng_x(seed, stream_id(kTagX, 0));
  CounterRng rng_w(seed, stream_id(kTagW, 0));
  CounterRng rng_c(seed, stream_id(kTagC, 0));
  CounterRng rng_y(seed, stream_id(kTagY, 0));

  const Index du = spec.cov_u.rows(), dx = spec.cov_x.rows(), dw = spec.cov_w.rows(),
              dc = spec.cov_c.rows();
  auto draw = [](CounterRng& rng, Index d) {
    Vector g(d);
    for (Index j = 0; j < d; ++j) g(j) = rng.normal();
    return g;
  };

  SampleBatch b;
  b.x.resize(n, dx);
  b.w.resize(n, dw);
  b.c.resize(n, dc);
  b.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    const Vector u = lu * draw(rng_u, du);
    const Vector x = spec.coeff_x * u + lx * draw(rng_x, dx);
    const Vector w = spec.coeff_w * u + lw * draw(rng_w, dw);
    const Vector c = spec.coeff_cx * x + spec.coeff_cu * u + lc * draw(rng_c, dc);
    b.x.row(i) = x.transpose();
    b.w.row(i) = w.transpose();
    b.c.row(i) = c.transpose();
    b.y(i) = u.dot(spec.coeff_y * c) + sy * rng_y.normal();
  }
  return b;
}

GaussianSemMoments sem_conditional_moments(const GaussianSemSpec& spec, const Vector& x) {
  spec.validate();
  if (x.size() != spec.coeff_x.rows())
    throw std::invalid_argument("sem_conditional_moments: x dimension mismatch");

  const Matrix& su = spec.cov_u;
  const Matrix j = spec.coeff_cx * spec.coeff_x + spec.coeff_cu;  // C loading on U

  const Matrix sigma_xx = spec.coeff_x * su * spec.coeff_x.transpose() + spec.cov_x;
  const Matrix sigma_ux = su * spec.coeff_x.transpose();
  const Matrix sigma_wx = spec.coeff_w * su * spec.coeff_x.transpose();
  const Matrix sigma_cx = j * su * spec.coeff_x.transpose() + spec.coeff_cx * spec.cov_x;

  const Eigen::LLT<Matrix> llt(sigma_xx);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("sem_conditional_moments: covariate covariance not invertible");
  const Matrix gain_u = llt.solve(sigma_ux.transpose()).transpose();  // Sigma_UX Sigma_XX^{-1}
  const Matrix gain_w = llt.solve(sigma_wx.transpose()).transpose();
  const Matrix gain_c = llt.solve(sigma_cx.transpose()).transpose();

  GaussianSemMoments m;
  m.mu_u = gain_u * x;
  m.mu_w = gain_w * x;
  m.mu_c = gain_c * x;
  m.sigma_w = spec.coeff_w * su * spec.coeff_w.transpose() + spec.cov_w
              - gain_w * sigma_wx.transpose();
  m.sigma_c = j * su * j.transpose() + spec.coeff_cx * spec.cov_x * spec.coeff_cx.transpose()
              + spec.cov_c - gain_c * sigma_cx.transpose();
  m.sigma_cw = j * su * spec.coeff_w.transpose() - gain_c * sigma_wx.transpose();
  const Matrix sigma_cu = j * su - gain_c * sigma_ux.transpose();  // Cov(C, U | x)
  m.ey = m.mu_u.dot(spec.coeff_y * m.mu_c) + (spec.coeff_y * sigma_cu).trace();
  return m;
}

Matrix sem_bridge_matrix(const GaussianSemSpec& spec) {
  spec.validate();
  Eigen::PartialPivLU<Matrix> lu(spec.coeff_w.transpose());
  if (std::abs(lu.determinant()) < 1e-12)
    throw std::invalid_argument("sem_bridge_matrix: proxy loading must be invertible");
  return lu.solve(spec.coeff_y);
}

CosineTables gen_cosine_counterexample(int k_z, Index grid_n) {
  if (k_z < 1) throw std::invalid_argument("gen_cosine_counterexample: k_z must be >= 1");
  if (grid_n < 2) throw std::invalid_argument("gen_cosine_counterexample: grid too small");

  constexpr double kPi = 3.141592653589793238462643383279;
  CosineTables t;
  t.cell = 2.0 * kPi / static_cast<double>(grid_n);
  t.u_grid.resize(grid_n);
  for (Index i = 0; i < grid_n; ++i)
    t.u_grid(i) = -kPi + (static_cast<double>(i) + 0.5) * t.cell;

  t.densities.resize(grid_n, k_z + 1);
  for (int r = 1; r <= k_z + 1; ++r)
    t.densities.col(r - 1) =
        (1.0 + (static_cast<double>(r) * t.u_grid.array()).cos()) / (2.0 * kPi);
  t.residual = (static_cast<double>(k_z + 1) * t.u_grid.array()).cos();
  return t;
}

// ===== Benchmark scenarios =====

namespace {

// Independent seed per (replicate, shift slot, role); slot 0 is reserved for
// the shift-independent source draw, roles are 0=source, 1=target, 2=test.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t replicate, std::uint64_t shift_slot,
                          std::uint64_t role) {
  return CounterRng(base, (shift_slot << 24) ^ (replicate << 4) ^ role).next_bits();
}

void check_prob(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument(std::string("DgpSpec::validate: ") + what +
                                " must lie strictly inside (0, 1)");
}

}  // namespace

void DgpSpec::validate() const {
  const bool known = scenario == "concept" || scenario == "multidomain" ||
                     scenario == "regression-bernoulli" || scenario == "regression-beta";
  if (!known)
    throw std::invalid_argument("DgpSpec::validate: unknown scenario '" + scenario + "'");
  if (shift_values.empty())
    throw std::invalid_argument("DgpSpec::validate: shift_values must be non-empty");
  if (replicates < 1)
    throw std::invalid_argument("DgpSpec::validate: replicates must be >= 1");
  if (n_train < 0 || n_target_train < 0 || n_test < 0)
    throw std::invalid_argument("DgpSpec::validate: sample sizes must be >= 0");

  if (scenario == "concept") {
    check_prob(p_u1_source, "p_u1_source");
    for (double s : shift_values) check_prob(s, "target P(U=1)");
  } else if (scenario == "multidomain") {
    if (p_u0_source.empty())
      throw std::invalid_argument("DgpSpec::validate: p_u0_source must be non-empty");
    for (double p : p_u0_source) check_prob(p, "p_u0_source entry");
    for (double s : shift_values) check_prob(s, "target P(U=1)");
  } else if (scenario == "regression-bernoulli") {
    if (a_source.empty())
      throw std::invalid_argument("DgpSpec::validate: a_source must be non-empty");
    for (double a : a_source) check_prob(a, "a_source entry");
    for (double s : shift_values) check_prob(s, "target Bernoulli parameter");
  } else {  // regression-beta
    if (ab_source.empty())
      throw std::invalid_argument("DgpSpec::validate: ab_source must be non-empty");
    for (const auto& [a, b] : ab_source)
      if (!(a > 0.0 && b > 0.0))
        throw std::invalid_argument("DgpSpec::validate: Beta parameters must be positive");
    for (double s : shift_values)
      if (!(s > 0.0 && beta_sum - s > 0.0))
        throw std::invalid_argument(
            "DgpSpec::validate: target Beta(shift, beta_sum - shift) needs both parameters "
            "positive");
  }
}

bool dgp_is_classification(const DgpSpec& spec) {
  return spec.scenario == "concept" || spec.scenario == "multidomain";
}

namespace {

// Single-domain batch for a target-side draw of the given scenario.
SampleBatch dgp_single(const DgpSpec& spec, double shift, Index n, std::uint64_t seed,
                       std::uint64_t tag) {
  if (spec.scenario == "concept")
    return gen_concept_classification({shift, spec.a_w}, n, seed, tag);
  if (spec.scenario == "multidomain") {
    SampleBatch b = gen_concept_classification({shift, spec.a_w}, n, seed, tag);
    b.c.resize(0, 0);  // concepts are withheld in the multi-domain scenario
    return b;
  }
  if (spec.scenario == "regression-bernoulli")
    return gen_regression_bernoulli({{shift}}, n, seed);
  return gen_regression_beta({{{shift, spec.beta_sum - shift}}}, n, seed);
}

void check_shift_index(const DgpSpec& spec, int shift_index) {
  if (shift_index < 0 || static_cast<size_t>(shift_index) >= spec.shift_values.size())
    throw std::invalid_argument("DgpSpec: shift index out of range");
}

}  // namespace

SampleBatch dgp_source(const DgpSpec& spec, int replicate) {
  spec.validate();
  if (replicate < 0) throw std::invalid_argument("dgp_source: replicate must be >= 0");
  const std::uint64_t seed =
      derive_seed(spec.seed, static_cast<std::uint64_t>(replicate), 0, 0);
  if (spec.scenario == "concept")
    return gen_concept_classification({spec.p_u1_source, spec.a_w}, spec.n_train, seed, 0);
  if (spec.scenario == "multidomain")
    return gen_multidomain_classification({spec.p_u0_source, spec.a_w}, spec.n_train, seed);
  if (spec.scenario == "regression-bernoulli")
    return gen_regression_bernoulli({spec.a_source}, spec.n_train, seed);
  return gen_regression_beta({spec.ab_source}, spec.n_train, seed);
}

SampleBatch dgp_target_train(const DgpSpec& spec, int replicate, int shift_index) {
  spec.validate();
  check_shift_index(spec, shift_index);
  const std::uint64_t seed = derive_seed(spec.seed, static_cast<std::uint64_t>(replicate),
                                         static_cast<std::uint64_t>(shift_index) + 1, 1);
  return dgp_single(spec, spec.shift_values[static_cast<size_t>(shift_index)],
                    spec.n_target_train, seed, 1);
}

SampleBatch dgp_test(const DgpSpec& spec, int replicate, int shift_index) {
  spec.validate();
  check_shift_index(spec, shift_index);
  const std::uint64_t seed = derive_seed(spec.seed, static_cast<std::uint64_t>(replicate),
                                         static_cast<std::uint64_t>(shift_index) + 1, 2);
  return dgp_single(spec, spec.shift_values[static_cast<size_t>(shift_index)],
                    spec.n_test, seed, 2);
}

}  // namespace latshift
