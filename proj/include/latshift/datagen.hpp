#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "latshift/types.hpp"

namespace latshift {

// ===== Synthetic data generators =====
//
// Every generator is bit-reproducible for a fixed (spec, seed): each variable
// of each domain draws from its own counter-based stream (see datagen.cpp for
// the stream map), so adding a variable or drawing more rows of one variable
// never perturbs the others.

// --- Concept scenario (binary classification) ---
//
// Latent U in {0, 1} with P(U=1) = p_u1; X in R^2 and scalar W are Gaussian
// with U-dependent means (X separation scaled by a_w); three binary concepts
// C follow per-coordinate logistic models in (X, U); binary Y follows a
// logistic model in (C, U). Returns blocks (x, w, c, y).
struct ConceptClassificationSpec {
  double p_u1 = 0.1;
  double a_w = 1.0;
};
SampleBatch gen_concept_classification(const ConceptClassificationSpec& spec, Index n,
                                       std::uint64_t seed, std::uint64_t domain_tag = 0);

// --- Multi-domain scenario (binary classification) ---
//
// Same structural equations as the concept scenario, one domain per entry of
// p_u0 (note the convention flip: entries are P(U=0|domain)). Concepts are
// generated but withheld; returns blocks (x, w, y, z) with z = domain index.
struct MultiDomainClassificationSpec {
  std::vector<double> p_u0;
  double a_w = 1.0;
};
SampleBatch gen_multidomain_classification(const MultiDomainClassificationSpec& spec,
                                           Index n_per_domain, std::uint64_t seed);

// --- Multi-domain regression, Bernoulli latent ---
//
// Per domain r with parameter a_r: U ~ Bernoulli(a_r), X ~ N(0,1),
// Y = -X when U=0 and +X when U=1, W ~ N(2U-1, 0.01). Returns (x, w, y, z).
struct RegressionBernoulliSpec {
  std::vector<double> a;
};
SampleBatch gen_regression_bernoulli(const RegressionBernoulliSpec& spec, Index n_per_domain,
                                     std::uint64_t seed);

// --- Multi-domain regression, Beta latent ---
//
// Per domain r with parameters (a_r, b_r): U ~ Beta(a_r, b_r), X ~ N(0,1),
// Y = (2U-1) X, W = (1-U) xi0 + U xi1 with xi0 ~ N(-1, 0.01), xi1 ~ N(1, 0.01)
// independent. Returns (x, w, y, z).
struct RegressionBetaSpec {
  std::vector<std::pair<double, double>> ab;
};
SampleBatch gen_regression_beta(const RegressionBetaSpec& spec, Index n_per_domain,
                                std::uint64_t seed);

// --- Linear-Gaussian structural model ---
//
//   U ~ N(0, cov_u)
//   X = coeff_x U + eps_x,            eps_x ~ N(0, cov_x)
//   W = coeff_w U + eps_w,            eps_w ~ N(0, cov_w)
//   C = coeff_cx X + coeff_cu U + eps_c,  eps_c ~ N(0, cov_c)
//   Y = U^T coeff_y C + eps_y,        eps_y ~ N(0, var_y)
struct GaussianSemSpec {
  Matrix coeff_x;   // d_x x d_u
  Matrix coeff_w;   // d_w x d_u, square and invertible for the bridge matrix
  Matrix coeff_cx;  // d_c x d_x
  Matrix coeff_cu;  // d_c x d_u
  Matrix coeff_y;   // d_u x d_c
  Matrix cov_u, cov_x, cov_w, cov_c;
  double var_y = 0.0;

  void validate() const;  // shape and PSD checks; throws std::invalid_argument
};
SampleBatch gen_gaussian_linear_sem(const GaussianSemSpec& spec, Index n, std::uint64_t seed);

// Conditional moments given X = x by Gaussian conditioning of (U, W, C) on X,
// plus the exact E[Y|x] of the bilinear response.
struct GaussianSemMoments {
  Vector mu_u, mu_w, mu_c;
  Matrix sigma_w;   // Cov(W | x)
  Matrix sigma_c;   // Cov(C | x)
  Matrix sigma_cw;  // Cov(C, W | x), d_c x d_w
  double ey = 0.0;  // E[Y | x]
};
GaussianSemMoments sem_conditional_moments(const GaussianSemSpec& spec, const Vector& x);

// Bilinear bridge matrix h with E[W|u]^T h c = E[Y|u,c]: solves
// coeff_w^T h = coeff_y, i.e. h = coeff_w^{-T} coeff_y.
Matrix sem_bridge_matrix(const GaussianSemSpec& spec);

// --- Completeness counterexample tables ---
//
// Latent densities p(u | domain r) = (1 + cos(r u)) / (2 pi) on [-pi, pi]
// for r = 1..k_z+1 (the last column is the held-out domain) tabulated on a
// midpoint grid, together with the residual g(u) = cos((k_z + 1) u) that
// integrates to zero against every source-domain density but not against the
// held-out one.
struct CosineTables {
  Vector u_grid;     // cell midpoints on [-pi, pi]
  Matrix densities;  // grid_n x (k_z + 1)
  Vector residual;   // g(u) on the grid
  double cell = 0.0; // quadrature cell width 2 pi / grid_n
};
CosineTables gen_cosine_counterexample(int k_z, Index grid_n);

// ===== Benchmark scenario description =====
//
// One sweepable adaptation benchmark: a source configuration, a grid of
// target shift parameters, replicate count, and sample sizes. The scenario
// string selects the generator family and fixes how `shift_values` is read:
//
//   "concept"               target P(U=1) = shift          (source p_u1_source)
//   "multidomain"           target P(U=1) = shift          (source priors p_u0_source)
//   "regression-bernoulli"  target Bernoulli parameter a = shift
//   "regression-beta"       target Beta(shift, beta_sum - shift)
struct DgpSpec {
  std::string scenario;

  // concept / multidomain classification
  double p_u1_source = 0.1;
  std::vector<double> p_u0_source;  // P(U=0) per source domain
  double a_w = 1.0;

  // multi-domain regression sources
  std::vector<double> a_source;                        // Bernoulli parameters
  std::vector<std::pair<double, double>> ab_source;    // Beta parameters
  double beta_sum = 6.0;                               // target Beta(a, beta_sum - a)

  // sweep layout
  std::vector<double> shift_values;
  int replicates = 1;

  // sample sizes
  Index n_train = 0;         // source rows (per domain for multi-domain scenarios)
  Index n_target_train = 0;  // unlabeled/labeled target rows used for adaptation
  Index n_test = 0;

  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument on bad combinations
};

// Deterministic per-role batches for one (replicate, shift) cell of a sweep.
// The source batch depends only on the replicate, so a replicate shares its
// source draw across the whole shift grid.
SampleBatch dgp_source(const DgpSpec& spec, int replicate);
SampleBatch dgp_target_train(const DgpSpec& spec, int replicate, int shift_index);
SampleBatch dgp_test(const DgpSpec& spec, int replicate, int shift_index);

// True whether the scenario's response is binary (metric AUROC) rather than
// continuous (metric MSE).
bool dgp_is_classification(const DgpSpec& spec);

}  // namespace latshift
