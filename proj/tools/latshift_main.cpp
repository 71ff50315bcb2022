// Command-line driver: data generation, bridge fitting, target adaptation,
// evaluation, benchmark sweeps, and partial-identification bounds. Every
// command is a pure function of (config, inputs): reruns produce
// byte-identical outputs.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "latshift/bridge_concept.hpp"
#include "latshift/bridge_multidomain.hpp"
#include "latshift/datagen.hpp"
#include "latshift/discrete_id.hpp"
#include "latshift/evalharness.hpp"
#include "latshift/io.hpp"
#include "latshift/kernels.hpp"

namespace {

using namespace latshift;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open output file " + path);
  out << text;
  if (!out) throw DataError("write failed for " + path);
}

// Row-wise concatenation; all files must carry the same column blocks.
SampleBatch concat_batches(const std::vector<SampleBatch>& parts) {
  SampleBatch all;
  Index n = 0;
  for (const SampleBatch& p : parts) n += p.rows();
  if (parts.empty() || n == 0) throw DataError("fit: no training rows");
  const SampleBatch& first = parts.front();
  for (const SampleBatch& p : parts) {
    const bool same = p.x.cols() == first.x.cols() && p.w.cols() == first.w.cols() &&
                      p.c.cols() == first.c.cols() && (p.y.size() > 0) == (first.y.size() > 0) &&
                      (p.z.size() > 0) == (first.z.size() > 0);
    if (!same) throw DataError("fit: input files disagree on columns");
  }
  all.x.resize(n, first.x.cols());
  all.w.resize(n, first.w.cols());
  all.c.resize(n, first.c.cols());
  if (first.y.size() > 0) all.y.resize(n);
  if (first.z.size() > 0) all.z.resize(n);
  Index at = 0;
  for (const SampleBatch& p : parts) {
    const Index m = p.rows();
    if (p.x.cols() > 0) all.x.middleRows(at, m) = p.x;
    if (p.w.cols() > 0) all.w.middleRows(at, m) = p.w;
    if (p.c.cols() > 0) all.c.middleRows(at, m) = p.c;
    if (p.y.size() > 0) all.y.segment(at, m) = p.y;
    if (p.z.size() > 0) all.z.segment(at, m) = p.z;
    at += m;
  }
  return all;
}

// --- gen ---

int cmd_gen(const ExperimentConfig& cfg, const std::string& out_dir) {
  DgpSpec dgp = cfg.scenario;
  dgp.seed = cfg.seed;
  dgp.validate();
  std::filesystem::create_directories(out_dir);

  const SampleBatch source = dgp_source(dgp, cfg.gen_replicate);
  const SampleBatch target_train = dgp_target_train(dgp, cfg.gen_replicate, cfg.gen_shift_index);
  const SampleBatch test = dgp_test(dgp, cfg.gen_replicate, cfg.gen_shift_index);

  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const SampleBatch& b) {
    const std::string path = (std::filesystem::path(out_dir) / name).string();
    write_dataset_csv(path, b);
    written.push_back(path);
  };

  if (source.z.size() > 0) {
    std::vector<double> domains;
    for (Index i = 0; i < source.z.size(); ++i)
      if (std::find(domains.begin(), domains.end(), source.z(i)) == domains.end())
        domains.push_back(source.z(i));
    for (double d : domains)
      emit("source_domain" + std::to_string(static_cast<long long>(d)) + ".csv",
           source.select(domain_rows(source, d)));
  } else {
    emit("source.csv", source);
  }
  emit("target_train.csv", target_train);
  emit("test.csv", test);

  for (const std::string& p : written) std::cout << p << "\n";
  return 0;
}

// --- fit ---

int cmd_fit(const ExperimentConfig& cfg, const std::vector<std::string>& data_paths,
            const std::string& out_path) {
  if (data_paths.empty()) throw ConfigError("fit: at least one --data file is required");
  std::vector<SampleBatch> parts;
  for (const std::string& p : data_paths) parts.push_back(read_dataset_csv(p));
  const SampleBatch data = concat_batches(parts);
  if (data.y.size() == 0) throw DataError("fit: training data must carry a y column");
  if (data.x.cols() == 0 || data.w.cols() == 0)
    throw DataError("fit: training data must carry x and w columns");

  const KernelSpec kx = cfg.lengthscale_x > 0.0
                            ? (cfg.bridge == "multidomain" && data.x.cols() > 1
                                   ? KernelSpec::columnwise_gaussian(data.x.cols(),
                                                                     cfg.lengthscale_x)
                                   : KernelSpec::gaussian(cfg.lengthscale_x))
                            : auto_x_kernel(cfg.bridge == "multidomain", data.x);
  const KernelSpec kw = KernelSpec::gaussian(
      cfg.lengthscale_w > 0.0 ? cfg.lengthscale_w : median_heuristic(data.w));

  const auto [stage1, stage2] = data.split_half_per_domain();
  BridgeModel model;
  model.kernel_x = kx;
  if (cfg.bridge == "concept") {
    if (data.c.cols() == 0) throw DataError("fit: concept bridge needs c columns");
    const KernelSpec kc = KernelSpec::columnwise_binary(data.c.cols());
    if (cfg.classifier) {
      model.kind = "concept-classifier";
      model.h0_classifier =
          BridgeH0Multilabel::fit(stage1, stage2, kx, kc, kw, cfg.lambda1, cfg.lambda2);
    } else {
      model.kind = "concept-bridge";
      model.h0 = BridgeH0::fit(stage1, stage2, kx, kc, kw, cfg.lambda1, cfg.lambda2);
    }
  } else {
    if (data.z.size() == 0) throw DataError("fit: multi-domain bridge needs a z column");
    const KernelSpec kz = KernelSpec::binary();
    if (cfg.classifier) {
      model.kind = "multidomain-classifier";
      model.m0_classifier =
          BridgeM0Multilabel::fit(stage1, stage2, kx, kz, kw, cfg.lambda1, cfg.lambda2);
    } else {
      model.kind = "multidomain-bridge";
      model.m0 = BridgeM0::fit(stage1, stage2, kx, kz, kw, cfg.lambda1, cfg.lambda2);
    }
  }
  save_bridge_model(out_path, model);
  std::cout << out_path << "\n";
  return 0;
}

// --- adapt ---

int cmd_adapt(const std::string& model_path, const std::string& data_path,
              const std::string& out_path) {
  BridgeModel model = load_bridge_model(model_path);
  const SampleBatch target = read_dataset_csv(data_path);
  const AdaptedModel adapted = make_adapted(std::move(model), target);
  save_adapted_model(out_path, adapted);
  std::cout << out_path << "\n";
  return 0;
}

// --- eval ---

int cmd_eval(const ExperimentConfig& cfg, const std::string& model_path,
             const std::string& data_path, const std::string& out_path) {
  const AdaptedModel adapted = load_adapted_model(model_path);
  const SampleBatch data = read_dataset_csv(data_path);
  if (data.y.size() == 0) throw DataError("eval: data must carry a y column");

  std::string metric = cfg.eval_metric;
  if (metric == "auto") metric = adapted.is_classifier() ? "accuracy" : "mse";

  double value = 0.0;
  if (adapted.is_classifier()) {
    if (metric == "accuracy") {
      value = accuracy(adapted.predict_labels(data.x), data.y);
    } else if (metric == "auroc") {
      const Matrix scores = adapted.predict_scores(data.x);
      if (scores.cols() != 2)
        throw DataError("eval: auroc on a classifier needs exactly two classes");
      value = auroc(scores.col(1), data.y);
    } else {
      throw ConfigError("eval: metric '" + metric + "' not available for classifiers");
    }
  } else {
    const Vector pred = adapted.predict(data.x);
    if (metric == "mse") {
      value = mse(pred, data.y);
    } else if (metric == "auroc") {
      value = auroc(pred, data.y);
    } else if (metric == "accuracy") {
      Vector labels(pred.size());
      for (Index i = 0; i < pred.size(); ++i) labels(i) = pred(i) >= 0.5 ? 1.0 : 0.0;
      value = accuracy(labels, data.y);
    } else {
      throw ConfigError("eval: unknown metric '" + metric + "'");
    }
  }

  const std::string text = "metric,value\n" + metric + "," + num(value) + "\n";
  std::cout << text;
  if (!out_path.empty()) write_text(out_path, text);
  return 0;
}

// --- sweep ---

int cmd_sweep(const ExperimentConfig& cfg, const std::string& out_path, int workers) {
  DgpSpec dgp = cfg.scenario;
  dgp.seed = cfg.seed;
  const std::vector<ResultRow> rows = run_scenario(dgp, cfg.methods, cfg.plan, workers);

  std::string text = "method,scenario,shift_param,replicate,metric_name,value,seed\n";
  for (const ResultRow& r : rows) {
    text += r.method + "," + r.scenario + "," + num(r.shift) + "," +
            std::to_string(r.replicate) + "," + r.metric + "," + num(r.value) + "," +
            std::to_string(r.seed) + "\n";
  }
  std::cout << rows.size() << " result rows\n";
  if (!out_path.empty()) write_text(out_path, text);
  return 0;
}

// --- bounds ---

int cmd_bounds(const ExperimentConfig& cfg, const std::string& out_path) {
  if (!cfg.bounds_frechet && !cfg.bounds_gaussian)
    throw ConfigError("bounds: config has no [bounds] block");

  std::string text = "family,quantity,value\n";
  if (cfg.bounds_frechet) {
    const FrechetBound fb =
        frechet_bound(cfg.frechet_table, cfg.frechet_pi_c, cfg.frechet_pi_w);
    text += "frechet,lower," + num(fb.lower) + "\n";
    text += "frechet,upper," + num(fb.upper) + "\n";
    text += "frechet,q11_lower," + num(fb.q11_lower) + "\n";
    text += "frechet,q11_upper," + num(fb.q11_upper) + "\n";
  }
  if (cfg.bounds_gaussian) {
    const GaussianLinearBound gb =
        gaussian_linear_bound(cfg.gaussian_table, cfg.gaussian_mu_w, cfg.gaussian_mu_c,
                              cfg.gaussian_sigma_w, cfg.gaussian_sigma_c, cfg.gaussian_rho);
    text += "gaussian,center," + num(gb.center) + "\n";
    text += "gaussian,half_width," + num(gb.half_width) + "\n";
    text += "gaussian,lower," + num(gb.lower) + "\n";
    text += "gaussian,upper," + num(gb.upper) + "\n";
  }
  std::cout << text;
  if (!out_path.empty()) write_text(out_path, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel bridge estimators for domain adaptation under latent shift"};
  app.require_subcommand(1);

  std::string config_path, out_path, model_path, scenario_override;
  std::string gen_out = ".";  // separate from out_path: default_val assigns at
                              // registration, which must not leak into the
                              // optional --out of eval/bounds
  std::vector<std::string> data_paths;
  std::uint64_t seed_override = 0;
  bool seed_set = false;
  int workers_override = 0;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "experiment config (JSON)");
    if (needs_config) opt->required();
    sub->add_option_function<std::uint64_t>(
           "--seed",
           [&](std::uint64_t s) {
             seed_override = s;
             seed_set = true;
           },
           "override the config seed");
  };

  CLI::App* gen = app.add_subcommand("gen", "write scenario CSVs (one per domain and split)");
  add_common(gen, true);
  gen->add_option("--out", gen_out, "output directory")->default_val(".");
  gen->add_option("--scenario", scenario_override, "override scenario name");

  CLI::App* fit = app.add_subcommand("fit", "fit a bridge on source CSVs");
  add_common(fit, true);
  fit->add_option("--data", data_paths, "source CSV(s)")->required();
  fit->add_option("--out", out_path, "model file")->required();

  CLI::App* adapt = app.add_subcommand("adapt", "pair a bridge with target-domain data");
  adapt->add_option("--model", model_path, "fitted bridge model")->required();
  adapt->add_option("--data", data_paths, "target CSV with (w, c, x) or (w, x)")->required();
  adapt->add_option("--out", out_path, "adapted model file")->required();

  CLI::App* eval = app.add_subcommand("eval", "score an adapted model on labeled data");
  add_common(eval, false);
  eval->add_option("--model", model_path, "adapted model")->required();
  eval->add_option("--data", data_paths, "labeled CSV")->required();
  eval->add_option("--out", out_path, "results CSV");

  CLI::App* sweep = app.add_subcommand("sweep", "run the benchmark grid");
  add_common(sweep, true);
  sweep->add_option("--out", out_path, "long-form results CSV")->required();
  sweep->add_option("--workers", workers_override, "worker threads");
  sweep->add_option("--scenario", scenario_override, "override scenario name");

  CLI::App* bounds = app.add_subcommand("bounds", "print partial-identification intervals");
  add_common(bounds, true);
  bounds->add_option("--out", out_path, "bounds CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (seed_set) cfg.seed = seed_override;
    if (!scenario_override.empty()) cfg.scenario.scenario = scenario_override;

    if (gen->parsed()) return cmd_gen(cfg, gen_out);
    if (fit->parsed()) return cmd_fit(cfg, data_paths, out_path);
    if (adapt->parsed()) return cmd_adapt(model_path, data_paths.front(), out_path);
    if (eval->parsed()) return cmd_eval(cfg, model_path, data_paths.front(), out_path);
    if (sweep->parsed())
      return cmd_sweep(cfg, out_path, workers_override > 0 ? workers_override : cfg.workers);
    return cmd_bounds(cfg, out_path);
  } catch (const latshift::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const latshift::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
