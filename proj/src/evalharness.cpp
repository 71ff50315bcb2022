#include "latshift/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <numeric>
#include <thread>
#include <tuple>

#include "latshift/bridge_concept.hpp"
#include "latshift/bridge_multidomain.hpp"
#include "latshift/cme.hpp"
#include "latshift/linalg.hpp"
#include "latshift/rng.hpp"

namespace latshift {

// ===== Metrics =====

double mse(const Vector& predictions, const Vector& targets) {
  if (predictions.size() != targets.size() || predictions.size() == 0)
    throw std::invalid_argument("mse: need equal-length non-empty inputs");
  return (predictions - targets).squaredNorm() / static_cast<double>(predictions.size());
}

double accuracy(const Vector& predicted_labels, const Vector& true_labels) {
  if (predicted_labels.size() != true_labels.size() || predicted_labels.size() == 0)
    throw std::invalid_argument("accuracy: need equal-length non-empty inputs");
  Index hits = 0;
  for (Index i = 0; i < predicted_labels.size(); ++i)
    if (predicted_labels(i) == true_labels(i)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predicted_labels.size());
}

double auroc(const Vector& scores, const Vector& labels) {
  const Index n = scores.size();
  if (labels.size() != n || n == 0)
    throw std::invalid_argument("auroc: need equal-length non-empty inputs");
  Index n_pos = 0;
  for (Index i = 0; i < n; ++i) {
    if (labels(i) != 0.0 && labels(i) != 1.0)
      throw std::invalid_argument("auroc: labels must be 0 or 1");
    if (labels(i) == 1.0) ++n_pos;
  }
  const Index n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("auroc: both classes must be present");

  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(),
            [&scores](Index a, Index b) { return scores(a) < scores(b); });

  // 1-based ranks with ties sharing the average rank of their run.
  double rank_sum_pos = 0.0;
  Index i = 0;
  while (i < n) {
    Index j = i;
    while (j + 1 < n && scores(order[static_cast<size_t>(j + 1)]) ==
                            scores(order[static_cast<size_t>(i)]))
      ++j;
    const double avg_rank = static_cast<double>(i + j) / 2.0 + 1.0;
    for (Index k = i; k <= j; ++k)
      if (labels(order[static_cast<size_t>(k)]) == 1.0) rank_sum_pos += avg_rank;
    i = j + 1;
  }
  const double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// ===== Cross-validation =====

bool metric_is_maximized(Metric metric) { return metric != Metric::MSE; }

Metric metric_from_string(const std::string& name) {
  if (name == "mse") return Metric::MSE;
  if (name == "auroc") return Metric::AUROC;
  if (name == "accuracy") return Metric::Accuracy;
  throw std::invalid_argument("metric_from_string: unknown metric '" + name + "'");
}

std::string metric_to_string(Metric metric) {
  switch (metric) {
    case Metric::MSE: return "mse";
    case Metric::AUROC: return "auroc";
    case Metric::Accuracy: return "accuracy";
  }
  throw std::invalid_argument("metric_to_string: unknown metric");
}

std::vector<std::vector<Index>> cv_folds(Index n, int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("cv_folds: need at least 2 folds");
  if (n < folds) throw std::invalid_argument("cv_folds: need at least one row per fold");

  std::vector<Index> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  CounterRng rng(seed, 0x666f6c6473ULL);  // dedicated fold-shuffle stream
  for (Index i = n - 1; i > 0; --i) {
    const Index j = static_cast<Index>(rng.next_bits() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]);
  }

  std::vector<std::vector<Index>> out(static_cast<size_t>(folds));
  const Index base = n / folds;
  const Index extra = n % folds;
  size_t pos = 0;
  for (int k = 0; k < folds; ++k) {
    const Index len = base + (k < extra ? 1 : 0);
    out[static_cast<size_t>(k)].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                                       perm.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += static_cast<size_t>(len);
  }
  return out;
}

std::vector<ParamMap> expand_grid(const CvPlan& plan) {
  for (const auto& [name, values] : plan.grid) {
    if (values.empty())
      throw std::invalid_argument("expand_grid: empty candidate list for '" + name + "'");
    size_t seen = 0;
    for (const auto& other : plan.grid)
      if (other.first == name) ++seen;
    if (seen != 1)
      throw std::invalid_argument("expand_grid: duplicate parameter '" + name + "'");
  }
  std::vector<ParamMap> out;
  std::vector<size_t> odo(plan.grid.size(), 0);
  while (true) {
    ParamMap p;
    for (size_t i = 0; i < plan.grid.size(); ++i)
      p[plan.grid[i].first] = plan.grid[i].second[odo[i]];
    out.push_back(std::move(p));
    // advance the odometer, last parameter fastest
    size_t i = plan.grid.size();
    while (i > 0) {
      --i;
      if (++odo[i] < plan.grid[i].second.size()) break;
      odo[i] = 0;
      if (i == 0) return out;
    }
    if (plan.grid.empty()) return out;
  }
}

// ===== Kernel ridge regression baseline =====

KrrModel KrrModel::fit(const Matrix& x, const Vector& y, double lambda, const KernelSpec& kernel,
                       const Vector& weights) {
  const Index n = x.rows();
  if (n == 0) throw std::invalid_argument("KrrModel::fit: empty training set");
  if (y.size() != n) throw std::invalid_argument("KrrModel::fit: x/y row mismatch");
  if (!(lambda >= 0.0)) throw std::invalid_argument("KrrModel::fit: lambda must be >= 0");
  kernel.validate(x.cols());

  const Matrix k = gram(kernel, x, x);
  Vector coef;
  if (weights.size() == 0) {
    coef = RidgeSolver(k, lambda * static_cast<double>(n)).solve(y);
  } else {
    if (weights.size() != n) throw std::invalid_argument("KrrModel::fit: weight length mismatch");
    if (weights.minCoeff() < 0.0 || !weights.allFinite())
      throw std::invalid_argument("KrrModel::fit: weights must be finite and non-negative");
    if (weights.maxCoeff() == 0.0)
      throw std::invalid_argument("KrrModel::fit: weights must not be all zero");
    const Vector s = weights.cwiseSqrt();
    const Matrix m = s.asDiagonal() * k * s.asDiagonal();
    const Vector sy = s.cwiseProduct(y);
    const Vector t = RidgeSolver(m, lambda * static_cast<double>(n)).solve(sy);
    coef = s.cwiseProduct(t);
  }
  return KrrModel(x, std::move(coef), kernel, lambda);
}

Vector KrrModel::predict(const Matrix& x_new) const {
  if (x_new.cols() != train_x_.cols())
    throw std::invalid_argument("KrrModel::predict: column count mismatch");
  return gram(kernel_, x_new, train_x_) * coef_;
}

// ===== Importance weights =====

ImportanceWeights covariate_shift_weights(const Matrix& source_x, const Matrix& target_x) {
  const Index ns = source_x.rows();
  const Index nt = target_x.rows();
  if (ns == 0 || nt == 0)
    throw std::invalid_argument("covariate_shift_weights: empty sample");
  if (source_x.cols() != target_x.cols())
    throw std::invalid_argument("covariate_shift_weights: column count mismatch");

  const Index d = source_x.cols();
  Matrix f(ns + nt, d + 1);  // raw features plus bias
  f.block(0, 0, ns, d) = source_x;
  f.block(ns, 0, nt, d) = target_x;
  f.col(d).setOnes();
  Vector label(ns + nt);
  label.head(ns).setZero();
  label.tail(nt).setOnes();

  constexpr double kL2 = 1e-4;
  constexpr int kMaxIter = 100;
  constexpr double kTol = 1e-10;

  Vector beta = Vector::Zero(d + 1);
  ImportanceWeights out;
  out.converged = false;
  for (int iter = 1; iter <= kMaxIter; ++iter) {
    const Vector eta = f * beta;
    const Vector p = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
    const Vector grad = f.transpose() * (p - label) + 2.0 * kL2 * beta;
    const Vector curv = (p.array() * (1.0 - p.array())).matrix();
    Matrix hess = f.transpose() * curv.asDiagonal() * f;
    hess.diagonal().array() += 2.0 * kL2;
    const Vector delta = hess.ldlt().solve(grad);
    beta -= delta;
    out.iterations = iter;
    if (delta.lpNorm<Eigen::Infinity>() < kTol) {
      out.converged = true;
      break;
    }
  }

  // odds(target | x) times the prior-odds correction n_src / n_tgt
  const double prior = static_cast<double>(ns) / static_cast<double>(nt);
  out.weights.resize(ns);
  for (Index i = 0; i < ns; ++i) {
    const double eta = f.row(i).dot(beta);
    out.weights(i) = std::clamp(std::exp(eta) * prior, 1e-3, 1e3);
  }
  return out;
}

Vector label_shift_weights(const Vector& source_y, const Vector& target_y, bool discrete_labels) {
  if (source_y.size() == 0 || target_y.size() == 0)
    throw std::invalid_argument("label_shift_weights: empty sample");
  const double ns = static_cast<double>(source_y.size());
  const double nt = static_cast<double>(target_y.size());
  Vector w(source_y.size());

  if (discrete_labels) {
    std::map<double, double> p_count, q_count;
    for (Index i = 0; i < source_y.size(); ++i) p_count[source_y(i)] += 1.0;
    for (Index i = 0; i < target_y.size(); ++i) q_count[target_y(i)] += 1.0;
    for (const auto& [label, cnt] : q_count)
      if (p_count.find(label) == p_count.end())
        throw std::invalid_argument("label_shift_weights: target class absent from source");
    for (Index i = 0; i < source_y.size(); ++i) {
      const double p = p_count.at(source_y(i)) / ns;
      const auto qi = q_count.find(source_y(i));
      const double q = qi == q_count.end() ? 0.0 : qi->second / nt;
      w(i) = std::clamp(q / p, 1e-3, 1e3);
    }
    return w;
  }

  // Continuous labels: density ratio of Gaussian KDEs with one shared
  // bandwidth (the median heuristic on the pooled labels), so the
  // normalization constants cancel up to the sample-size factors.
  Matrix pooled(source_y.size() + target_y.size(), 1);
  pooled.col(0).head(source_y.size()) = source_y;
  pooled.col(0).tail(target_y.size()) = target_y;
  const double h = median_heuristic(pooled);
  auto kde = [h](const Vector& sample, double at) {
    const double scale = -0.5 / (h * h);
    return ((sample.array() - at).square() * scale).exp().sum() /
           static_cast<double>(sample.size());
  };
  for (Index i = 0; i < source_y.size(); ++i) {
    const double p = kde(source_y, source_y(i));  // includes the i-th point itself, so p > 0
    const double q = kde(target_y, source_y(i));
    w(i) = std::clamp(q / p, 1e-3, 1e3);
  }
  return w;
}

KernelSpec auto_x_kernel(bool per_column, const Matrix& x) {
  if (!per_column || x.cols() == 1) return KernelSpec::gaussian(median_heuristic(x));
  std::vector<KernelSpec> factors;
  for (Index j = 0; j < x.cols(); ++j)
    factors.push_back(KernelSpec::gaussian(median_heuristic(Matrix(x.col(j)))));
  return KernelSpec::columnwise(factors);
}

// ===== Scenario runner =====

namespace {

Matrix take_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (Index i = 0; i < out.rows(); ++i) out.row(i) = m.row(rows[static_cast<size_t>(i)]);
  return out;
}

Vector take(const Vector& v, const std::vector<Index>& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (Index i = 0; i < out.size(); ++i) out(i) = v(rows[static_cast<size_t>(i)]);
  return out;
}

double score_with(Metric metric, const Vector& pred, const Vector& truth) {
  switch (metric) {
    case Metric::MSE: return mse(pred, truth);
    case Metric::AUROC: return auroc(pred, truth);
    case Metric::Accuracy: {
      Vector labels(pred.size());
      for (Index i = 0; i < pred.size(); ++i) labels(i) = pred(i) >= 0.5 ? 1.0 : 0.0;
      return accuracy(labels, truth);
    }
  }
  throw std::invalid_argument("score_with: unknown metric");
}

// Whole-row Gaussian for the concept scenario, per-column product for the
// multi-domain ones (pooled heterogeneous domains suit per-column scales).
KernelSpec make_x_kernel(const std::string& scenario, const Matrix& x) {
  return auto_x_kernel(scenario != "concept", x);
}

// Grid values for a named hyperparameter, empty when absent.
std::vector<double> grid_values(const CvPlan& plan, const std::string& name) {
  for (const auto& [key, values] : plan.grid)
    if (key == name) return values;
  return {};
}

double pick_krr_lambda(const Matrix& x, const Vector& y, const Vector& weights,
                       const KernelSpec& kernel, const CvPlan& plan,
                       const std::vector<double>& lambda_grid) {
  CvPlan local = plan;
  local.grid = {{"lambda", lambda_grid}};
  std::function<KrrModel(const ParamMap&, const std::vector<Index>&)> fit_fn =
      [&](const ParamMap& p, const std::vector<Index>& rows) {
        const Vector wsub = weights.size() == 0 ? Vector() : take(weights, rows);
        return KrrModel::fit(take_rows(x, rows), take(y, rows), p.at("lambda"), kernel, wsub);
      };
  std::function<double(const KrrModel&, const std::vector<Index>&)> score_fn =
      [&](const KrrModel& m, const std::vector<Index>& rows) {
        return score_with(plan.metric, m.predict(take_rows(x, rows)), take(y, rows));
      };
  return cross_validate<KrrModel>(x.rows(), local, fit_fn, score_fn).best.at("lambda");
}

// Joint (lambda1, lambda2) selection for a two-stage bridge by k-fold
// validation over stage-2 rows, scored with held-out stage-2 squared loss.
// Multi-domain callers pass role-relabeled batches (x := domain column,
// c := covariates), which reduces their bridge to this one exactly.
std::pair<double, double> pick_bridge_lambdas(const SampleBatch& stage1,
                                              const SampleBatch& stage2, const KernelSpec& kx,
                                              const KernelSpec& kc, const KernelSpec& kw,
                                              const CvPlan& plan,
                                              const std::vector<double>& grid1,
                                              const std::vector<double>& grid2) {
  CvPlan local = plan;
  local.metric = Metric::MSE;  // stage-2 loss is always squared error
  local.grid = {{"lambda1", grid1}, {"lambda2", grid2}};

  std::map<double, CmeEstimator> cme_by_lambda1;
  auto stage1_cme = [&](double l1) -> const CmeEstimator& {
    auto it = cme_by_lambda1.find(l1);
    if (it == cme_by_lambda1.end())
      it = cme_by_lambda1.emplace(l1, CmeEstimator::fit_w_given_cx(stage1, kx, kc, kw, l1)).first;
    return it->second;
  };

  std::function<BridgeH0(const ParamMap&, const std::vector<Index>&)> fit_fn =
      [&](const ParamMap& p, const std::vector<Index>& rows) {
        return BridgeH0::fit(stage1, stage2.select(rows), kx, kc, kw, p.at("lambda1"),
                             p.at("lambda2"));
      };
  std::function<double(const BridgeH0&, const std::vector<Index>&)> score_fn =
      [&](const BridgeH0& bridge, const std::vector<Index>& rows) {
        const SampleBatch held = stage2.select(rows);
        return mse(bridge.inner_with_cme(stage1_cme(bridge.lambda1()), held), held.y);
      };
  const CvResult res = cross_validate<BridgeH0>(stage2.rows(), local, fit_fn, score_fn);
  return {res.best.at("lambda1"), res.best.at("lambda2")};
}

// Everything one (shift, replicate) cell needs, generated deterministically.
struct CellContext {
  const DgpSpec& dgp;
  const CvPlan& plan;
  SampleBatch source, target_train, test;
  KernelSpec kx, kw;
  bool classification = false;
  std::vector<double> lambda_grid;               // KRR baselines
  std::vector<double> lambda1_grid, lambda2_grid;  // bridges
};

constexpr double kDefaultLambda = 1e-3;

Vector run_krr(const CellContext& ctx, const Matrix& train_x, const Vector& train_y,
               const Vector& weights) {
  const KernelSpec k = make_x_kernel(ctx.dgp.scenario, train_x);
  double lambda = kDefaultLambda;
  if (!ctx.lambda_grid.empty())
    lambda = pick_krr_lambda(train_x, train_y, weights, k, ctx.plan, ctx.lambda_grid);
  return KrrModel::fit(train_x, train_y, lambda, k, weights).predict(ctx.test.x);
}

Vector run_avg_erm(const CellContext& ctx) {
  const SampleBatch& src = ctx.source;
  if (src.z.size() == 0) return run_krr(ctx, src.x, src.y, Vector());
  std::vector<double> domains;
  for (Index i = 0; i < src.z.size(); ++i)
    if (std::find(domains.begin(), domains.end(), src.z(i)) == domains.end())
      domains.push_back(src.z(i));
  Vector avg = Vector::Zero(ctx.test.x.rows());
  for (double d : domains) {
    const SampleBatch part = src.select(domain_rows(src, d));
    avg += run_krr(ctx, part.x, part.y, Vector());
  }
  return avg / static_cast<double>(domains.size());
}

Vector run_proposed_concept(const CellContext& ctx) {
  const auto [stage1, stage2] = ctx.source.split_half_per_domain();
  const KernelSpec kc = KernelSpec::columnwise_binary(ctx.source.c.cols());
  double l1 = kDefaultLambda, l2 = kDefaultLambda;
  if (!ctx.lambda1_grid.empty() && !ctx.lambda2_grid.empty())
    std::tie(l1, l2) = pick_bridge_lambdas(stage1, stage2, ctx.kx, kc, ctx.kw, ctx.plan,
                                           ctx.lambda1_grid, ctx.lambda2_grid);
  const BridgeH0 bridge = BridgeH0::fit(stage1, stage2, ctx.kx, kc, ctx.kw, l1, l2);
  const CmeEstimator target_cme =
      CmeEstimator::fit_wc_given_x(ctx.target_train, ctx.kx, ctx.kw, kc, l1);
  return bridge.predict(target_cme, ctx.test.x);
}

Vector run_proposed_multidomain(const CellContext& ctx) {
  const auto [stage1, stage2] = ctx.source.split_half_per_domain();
  const KernelSpec kz = KernelSpec::binary();
  double l3 = kDefaultLambda, l4 = kDefaultLambda;
  if (!ctx.lambda1_grid.empty() && !ctx.lambda2_grid.empty()) {
    // Relabel roles (x := domain column, c := covariates); the two-stage
    // solve is identical, so the selected pair transfers directly.
    auto as_column = [](const Vector& v) {
      Matrix m(v.size(), 1);
      m.col(0) = v;
      return m;
    };
    SampleBatch r1, r2;
    r1.x = as_column(stage1.z);
    r1.c = stage1.x;
    r1.w = stage1.w;
    r2.x = as_column(stage2.z);
    r2.c = stage2.x;
    r2.y = stage2.y;
    std::tie(l3, l4) = pick_bridge_lambdas(r1, r2, kz, ctx.kx, ctx.kw, ctx.plan,
                                           ctx.lambda1_grid, ctx.lambda2_grid);
  }
  const BridgeM0 bridge = BridgeM0::fit(stage1, stage2, ctx.kx, kz, ctx.kw, l3, l4);
  const CmeEstimator target_cme =
      CmeEstimator::fit_w_given_x(ctx.target_train, ctx.kx, ctx.kw, l3);
  return bridge.predict(target_cme, ctx.test.x);
}

Vector method_scores(const std::string& method, const CellContext& ctx) {
  if (method == "proposed-concept") return run_proposed_concept(ctx);
  if (method == "proposed-multidomain") return run_proposed_multidomain(ctx);
  if (method == "erm" || method == "cat-erm")
    return run_krr(ctx, ctx.source.x, ctx.source.y, Vector());
  if (method == "avg-erm") return run_avg_erm(ctx);
  if (method == "covars") {
    const Vector w = covariate_shift_weights(ctx.source.x, ctx.target_train.x).weights;
    return run_krr(ctx, ctx.source.x, ctx.source.y, w);
  }
  if (method == "labels") {
    const Vector w =
        label_shift_weights(ctx.source.y, ctx.target_train.y, ctx.classification);
    return run_krr(ctx, ctx.source.x, ctx.source.y, w);
  }
  if (method == "oracle") return run_krr(ctx, ctx.target_train.x, ctx.target_train.y, Vector());
  throw std::invalid_argument("run_scenario: unknown method '" + method + "'");
}

std::vector<ResultRow> eval_cell(const DgpSpec& dgp, const std::vector<std::string>& methods,
                                 const CvPlan& plan, int shift_index, int replicate) {
  CellContext ctx{dgp, plan};
  ctx.source = dgp_source(dgp, replicate);
  ctx.target_train = dgp_target_train(dgp, replicate, shift_index);
  ctx.test = dgp_test(dgp, replicate, shift_index);
  ctx.classification = dgp_is_classification(dgp);
  ctx.kx = make_x_kernel(dgp.scenario, ctx.source.x);
  ctx.kw = KernelSpec::gaussian(median_heuristic(ctx.source.w));
  ctx.lambda_grid = grid_values(plan, "lambda");
  ctx.lambda1_grid = grid_values(plan, "lambda1");
  ctx.lambda2_grid = grid_values(plan, "lambda2");

  const double shift = dgp.shift_values[static_cast<size_t>(shift_index)];
  const std::string metric_name = ctx.classification ? "auroc" : "mse";
  std::vector<ResultRow> rows;
  for (const std::string& method : methods) {
    const Vector scores = method_scores(method, ctx);
    const double value = ctx.classification ? auroc(scores, ctx.test.y) : mse(scores, ctx.test.y);
    rows.push_back({method, dgp.scenario, shift, replicate, metric_name, value, dgp.seed});
  }
  return rows;
}

}  // namespace

std::vector<ResultRow> run_scenario(const DgpSpec& dgp, const std::vector<std::string>& methods,
                                    const CvPlan& plan, int workers) {
  dgp.validate();
  if (dgp.n_train < 2 || dgp.n_target_train < 2 || dgp.n_test < 2)
    throw std::invalid_argument("run_scenario: sample sizes must be >= 2");
  if (methods.empty()) return {};
  for (const std::string& m : methods) {
    const bool known = m == "proposed-concept" || m == "proposed-multidomain" || m == "erm" ||
                       m == "cat-erm" || m == "avg-erm" || m == "covars" || m == "labels" ||
                       m == "oracle";
    if (!known) throw std::invalid_argument("run_scenario: unknown method '" + m + "'");
    if (m == "proposed-concept" && dgp.scenario != "concept")
      throw std::invalid_argument("run_scenario: proposed-concept needs a concept scenario");
    if (m == "proposed-multidomain" && dgp.scenario == "concept")
      throw std::invalid_argument("run_scenario: proposed-multidomain needs a multi-domain scenario");
  }

  const int n_shifts = static_cast<int>(dgp.shift_values.size());
  const int n_jobs = n_shifts * dgp.replicates;
  std::vector<std::vector<ResultRow>> cell_rows(static_cast<size_t>(n_jobs));
  std::vector<std::exception_ptr> cell_errors(static_cast<size_t>(n_jobs));

  auto run_job = [&](int j) {
    const int shift_index = j / dgp.replicates;
    const int replicate = j % dgp.replicates;
    try {
      cell_rows[static_cast<size_t>(j)] = eval_cell(dgp, methods, plan, shift_index, replicate);
    } catch (...) {
      cell_errors[static_cast<size_t>(j)] = std::current_exception();
    }
  };

  const int n_workers = std::max(1, std::min(workers, n_jobs));
  if (n_workers == 1) {
    for (int j = 0; j < n_jobs; ++j) run_job(j);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(n_workers));
    for (int t = 0; t < n_workers; ++t)
      pool.emplace_back([&]() {
        for (int j = next.fetch_add(1); j < n_jobs; j = next.fetch_add(1)) run_job(j);
      });
    for (std::thread& t : pool) t.join();
  }

  for (const std::exception_ptr& err : cell_errors)
    if (err) std::rethrow_exception(err);

  std::vector<ResultRow> table;
  for (const auto& rows : cell_rows) table.insert(table.end(), rows.begin(), rows.end());
  return table;
}

}  // namespace latshift
