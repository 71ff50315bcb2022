#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "latshift/datagen.hpp"
#include "latshift/kernels.hpp"
#include "latshift/types.hpp"

namespace latshift {

// ===== Metrics =====

// Mean squared error between predictions and targets of equal length.
double mse(const Vector& predictions, const Vector& targets);

// Fraction of exact matches between predicted and true labels.
double accuracy(const Vector& predicted_labels, const Vector& true_labels);

// Area under the ROC curve by the rank statistic
//   AUROC = (sum of positive ranks - n_pos (n_pos + 1) / 2) / (n_pos n_neg)
// with average ranks on tied scores. Labels must be 0/1 with both classes
// present; throws std::invalid_argument otherwise.
double auroc(const Vector& scores, const Vector& labels);

// ===== Cross-validation =====

enum class Metric { MSE, AUROC, Accuracy };

// Higher-is-better orientation of a metric (false only for MSE).
bool metric_is_maximized(Metric metric);

// Round-trippable names "mse" / "auroc" / "accuracy".
Metric metric_from_string(const std::string& name);
std::string metric_to_string(Metric metric);

// Fold layout, scoring metric, hyperparameter grid, and shuffle seed. The
// grid is an ordered list of (name, candidate values); candidates combine as
// a full Cartesian product enumerated with the last-listed parameter varying
// fastest, and score ties resolve to the earliest enumerated cell.
struct CvPlan {
  int folds = 5;
  Metric metric = Metric::MSE;
  std::vector<std::pair<std::string, std::vector<double>>> grid;
  std::uint64_t seed = 0;
};

using ParamMap = std::map<std::string, double>;

// Disjoint, exhaustive fold assignment: a pure function of (n, folds, seed).
// Rows are shuffled once and dealt into near-equal contiguous chunks.
std::vector<std::vector<Index>> cv_folds(Index n, int folds, std::uint64_t seed);

// Cartesian expansion of a CvPlan grid in tie-break order. An empty grid
// yields one empty parameter map.
std::vector<ParamMap> expand_grid(const CvPlan& plan);

struct CvCell {
  ParamMap params;
  std::vector<double> fold_scores;  // empty when the cell failed
  double mean_score = 0.0;
  bool failed = false;
};

struct CvResult {
  ParamMap best;
  double best_score = 0.0;
  std::vector<CvCell> cells;  // one per grid point, enumeration order
};

// Exhaustive grid search over `plan.grid` with k-fold validation on rows
// 0..n_rows-1. `fit_fn(params, train_rows)` builds a model; `score_fn(model,
// heldout_rows)` evaluates it with `plan.metric`'s orientation. A cell whose
// fit or score throws is recorded as failed with the worst possible score
// instead of aborting the search.
template <typename Model>
CvResult cross_validate(
    Index n_rows, const CvPlan& plan,
    const std::function<Model(const ParamMap&, const std::vector<Index>&)>& fit_fn,
    const std::function<double(const Model&, const std::vector<Index>&)>& score_fn) {
  if (n_rows < plan.folds)
    throw std::invalid_argument("cross_validate: need at least one row per fold");
  const auto folds = cv_folds(n_rows, plan.folds, plan.seed);
  const bool maximize = metric_is_maximized(plan.metric);
  const double worst = maximize ? -std::numeric_limits<double>::infinity()
                                : std::numeric_limits<double>::infinity();

  CvResult result;
  result.best_score = worst;
  for (const ParamMap& params : expand_grid(plan)) {
    CvCell cell;
    cell.params = params;
    try {
      for (size_t k = 0; k < folds.size(); ++k) {
        std::vector<Index> train_rows;
        for (size_t j = 0; j < folds.size(); ++j)
          if (j != k) train_rows.insert(train_rows.end(), folds[j].begin(), folds[j].end());
        const Model model = fit_fn(params, train_rows);
        const double s = score_fn(model, folds[k]);
        if (!std::isfinite(s)) throw std::runtime_error("cross_validate: non-finite fold score");
        cell.fold_scores.push_back(s);
      }
      cell.mean_score = 0.0;
      for (double s : cell.fold_scores) cell.mean_score += s;
      cell.mean_score /= static_cast<double>(cell.fold_scores.size());
    } catch (const std::exception&) {
      cell.failed = true;
      cell.fold_scores.clear();
      cell.mean_score = worst;
    }
    const bool better = maximize ? cell.mean_score > result.best_score
                                 : cell.mean_score < result.best_score;
    if (result.cells.empty() || better) {
      result.best = cell.params;
      result.best_score = cell.mean_score;
    }
    result.cells.push_back(std::move(cell));
  }
  return result;
}

// ===== Kernel ridge regression baseline =====

// Optionally importance-weighted kernel ridge regression. With row weights s
// (default all ones) the coefficients solve the weighted normal equations
//   (diag(s) K + lambda n I) a = diag(s) y
// computed in the symmetrized form a = S (S K S + lambda n I)^{-1} S y with
// S = diag(sqrt(s)), which reduces exactly to plain KRR when all s = 1.
class KrrModel {
 public:
  static KrrModel fit(const Matrix& x, const Vector& y, double lambda, const KernelSpec& kernel,
                      const Vector& weights = Vector());

  Vector predict(const Matrix& x_new) const;

  const KernelSpec& kernel() const { return kernel_; }
  double lambda() const { return lambda_; }
  const Matrix& train_x() const { return train_x_; }
  const Vector& coefficients() const { return coef_; }

 private:
  KrrModel(Matrix train_x, Vector coef, KernelSpec kernel, double lambda)
      : train_x_(std::move(train_x)), coef_(std::move(coef)), kernel_(std::move(kernel)),
        lambda_(lambda) {}

  Matrix train_x_;
  Vector coef_;
  KernelSpec kernel_;
  double lambda_ = 0.0;
};

// ===== Importance weights =====

// Per-row importance weights plus optimizer diagnostics.
struct ImportanceWeights {
  Vector weights;        // one per source row, clipped to [1e-3, 1e3]
  bool converged = true; // false when the logistic solver hit its cap
  int iterations = 0;
};

// Covariate-shift weights q(x)/p(x) from a regularized logistic source-vs-
// target classifier on raw features plus bias (Newton/IRLS, L2 1e-4, at most
// 100 iterations), converted through the prior-odds correction n_src/n_tgt.
ImportanceWeights covariate_shift_weights(const Matrix& source_x, const Matrix& target_x);

// Label-shift weights q(y)/p(y) for source rows. Discrete labels use class
// frequency ratios and require every target class to occur in the source;
// continuous labels use the ratio of Gaussian kernel density estimates with a
// shared median-heuristic bandwidth. Weights are clipped to [1e-3, 1e3].
Vector label_shift_weights(const Vector& source_y, const Vector& target_y, bool discrete_labels);

// Default covariate kernel: whole-row Gaussian at the median-heuristic scale,
// or (per_column, multi-column x) a product of per-column Gaussians each at
// its own column's median-heuristic scale.
KernelSpec auto_x_kernel(bool per_column, const Matrix& x);

// ===== Scenario runner =====

// One long-form result record.
struct ResultRow {
  std::string method;
  std::string scenario;
  double shift = 0.0;
  int replicate = 0;
  std::string metric;
  double value = 0.0;
  std::uint64_t seed = 0;
};

// Runs every requested method on every (shift, replicate) cell of the
// scenario and returns the long-form table sorted by (shift index, replicate,
// method order as given). Cells are independent jobs distributed over
// `workers` threads; the assembled table does not depend on scheduling.
//
// Methods: "proposed-concept", "proposed-multidomain", "erm", "cat-erm",
// "avg-erm", "covars", "labels", "oracle". Regularization defaults to 1e-3
// everywhere; when plan.grid provides "lambda", the ridge baselines pick
// theirs per cell by plan-driven cross-validation on their own training
// rows, and when it provides "lambda1" and "lambda2" the bridge methods pick
// both stages jointly by cross-validation on held-out stage-2 loss.
std::vector<ResultRow> run_scenario(const DgpSpec& dgp, const std::vector<std::string>& methods,
                                    const CvPlan& plan, int workers = 1);

}  // namespace latshift
