#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "latshift/bridge_concept.hpp"
#include "latshift/bridge_multidomain.hpp"
#include "latshift/datagen.hpp"
#include "latshift/evalharness.hpp"
#include "latshift/kernels.hpp"
#include "latshift/types.hpp"

namespace latshift {

// ===== Errors =====

// Malformed or contradictory configuration (unknown keys, bad values).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed data files or schema mismatches between data and models.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ===== Dataset CSV =====
//
// Column layout: x0..x{dx-1}, w0..w{dw-1}, c0..c{dc-1}, y, z — each block
// present exactly when the batch carries it. Values are written with 17
// significant digits, so write -> read -> write is byte-identical and doubles
// round-trip exactly. z holds the domain index (integral doubles print as
// plain integers).
void write_dataset_csv(const std::string& path, const SampleBatch& batch);
SampleBatch read_dataset_csv(const std::string& path);  // throws DataError

// ===== Model container =====
//
// Versioned, self-describing JSON holding one fitted bridge: the kind tag,
// every kernel (including the covariate kernel needed to rebuild target
// embeddings), the ridge parameters, the coefficient matrix (or one per
// class), and the anchor rows.
struct BridgeModel {
  std::string kind;  // "concept-bridge" | "concept-classifier" |
                     // "multidomain-bridge" | "multidomain-classifier"
  KernelSpec kernel_x;
  std::optional<BridgeH0> h0;
  std::optional<BridgeH0Multilabel> h0_classifier;
  std::optional<BridgeM0> m0;
  std::optional<BridgeM0Multilabel> m0_classifier;
};

void save_bridge_model(const std::string& path, const BridgeModel& model);
BridgeModel load_bridge_model(const std::string& path);  // throws DataError

// ===== Adapted predictor =====
//
// A bridge plus the target-domain anchor rows it will be paired with. The
// target conditional embedding is refit deterministically from the stored
// kernels and lambda at prediction time, so save -> load -> predict
// reproduces in-memory predictions exactly.
struct AdaptedModel {
  BridgeModel bridge;
  SampleBatch target;  // blocks (w, c, x) for concept bridges, (w, x) otherwise

  // Raw scores (regression bridges) at new covariates.
  Vector predict(const Matrix& x_new) const;
  // Per-class scores / argmax labels (classifier bridges).
  Matrix predict_scores(const Matrix& x_new) const;
  Vector predict_labels(const Matrix& x_new) const;
  bool is_classifier() const;
};

// Pair a loaded bridge with target anchors, checking the schema (required
// blocks present) and kernel arity against the stored specs. Throws DataError.
AdaptedModel make_adapted(BridgeModel bridge, const SampleBatch& target);

void save_adapted_model(const std::string& path, const AdaptedModel& model);
AdaptedModel load_adapted_model(const std::string& path);  // throws DataError

// ===== Experiment configuration =====
//
// One human-readable JSON tree driving every CLI subcommand; unknown keys are
// rejected and parse(serialize(config)) is the identity. See the README for
// the full schema.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  int workers = 1;

  DgpSpec scenario;                  // [scenario] block
  std::vector<std::string> methods;  // [methods] for sweep
  CvPlan plan;                       // [plan] folds / metric / grid / seed

  // [fit]
  std::string bridge = "concept";  // "concept" | "multidomain"
  bool classifier = false;
  double lambda1 = 1e-3;
  double lambda2 = 1e-3;
  double lengthscale_x = 0.0;  // 0 -> median heuristic on the fit data
  double lengthscale_w = 0.0;  // 0 -> median heuristic on the fit data

  // [gen]
  int gen_replicate = 0;
  int gen_shift_index = 0;

  // [eval]
  std::string eval_metric = "auto";  // "auto" | "mse" | "auroc" | "accuracy"

  // [bounds]
  bool bounds_frechet = false;
  Matrix frechet_table;  // 2x2 bridge values h(c, w)
  double frechet_pi_c = 0.5;
  double frechet_pi_w = 0.5;
  bool bounds_gaussian = false;
  Matrix gaussian_table;  // d_w x d_c bridge matrix
  Vector gaussian_mu_w, gaussian_mu_c;
  Matrix gaussian_sigma_w, gaussian_sigma_c;
  double gaussian_rho = 1.0;
};

ExperimentConfig parse_config_text(const std::string& text);  // throws ConfigError
ExperimentConfig load_config(const std::string& path);        // throws ConfigError
std::string config_to_text(const ExperimentConfig& config);

}  // namespace latshift
