#include "latshift/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "latshift/cme.hpp"
#include "json.hpp"

namespace latshift {

using json = nlohmann::ordered_json;

// ===== Dataset CSV =====

namespace {

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_value(const std::string& token, const std::string& path) {
  const char* begin = token.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw DataError("read_dataset_csv: bad numeric value '" + token + "' in " + path);
  return v;
}

}  // namespace

void write_dataset_csv(const std::string& path, const SampleBatch& batch) {
  batch.check_consistent();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("write_dataset_csv: cannot open " + path);

  std::vector<std::string> header;
  for (Index j = 0; j < batch.x.cols(); ++j) header.push_back("x" + std::to_string(j));
  for (Index j = 0; j < batch.w.cols(); ++j) header.push_back("w" + std::to_string(j));
  for (Index j = 0; j < batch.c.cols(); ++j) header.push_back("c" + std::to_string(j));
  if (batch.y.size() > 0) header.push_back("y");
  if (batch.z.size() > 0) header.push_back("z");
  for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";

  const Index n = batch.rows();
  for (Index i = 0; i < n; ++i) {
    std::string line;
    auto push = [&line](double v) {
      if (!line.empty()) line.push_back(',');
      line += format_value(v);
    };
    for (Index j = 0; j < batch.x.cols(); ++j) push(batch.x(i, j));
    for (Index j = 0; j < batch.w.cols(); ++j) push(batch.w(i, j));
    for (Index j = 0; j < batch.c.cols(); ++j) push(batch.c(i, j));
    if (batch.y.size() > 0) push(batch.y(i));
    if (batch.z.size() > 0) push(batch.z(i));
    out << line << "\n";
  }
  if (!out) throw DataError("write_dataset_csv: write failed for " + path);
}

SampleBatch read_dataset_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("read_dataset_csv: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError("read_dataset_csv: empty file " + path);
  const std::vector<std::string> header = split_csv_line(line);

  // Header must read x0..x{dx-1}, w0.., c0.., then optional y, optional z.
  size_t pos = 0;
  auto count_block = [&header, &pos](const std::string& prefix) {
    Index count = 0;
    while (pos < header.size() && header[pos] == prefix + std::to_string(count)) {
      ++pos;
      ++count;
    }
    return count;
  };
  const Index dx = count_block("x");
  const Index dw = count_block("w");
  const Index dc = count_block("c");
  bool has_y = false, has_z = false;
  if (pos < header.size() && header[pos] == "y") {
    has_y = true;
    ++pos;
  }
  if (pos < header.size() && header[pos] == "z") {
    has_z = true;
    ++pos;
  }
  if (pos != header.size() || (header.size() == 1 && header[0].empty()))
    throw DataError("read_dataset_csv: unrecognized header in " + path);

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> tokens = split_csv_line(line);
    if (tokens.size() != header.size())
      throw DataError("read_dataset_csv: row width mismatch in " + path);
    std::vector<double> row;
    row.reserve(tokens.size());
    for (const std::string& t : tokens) row.push_back(parse_value(t, path));
    rows.push_back(std::move(row));
  }

  const Index n = static_cast<Index>(rows.size());
  SampleBatch b;
  b.x.resize(n, dx);
  b.w.resize(n, dw);
  b.c.resize(n, dc);
  if (has_y) b.y.resize(n);
  if (has_z) b.z.resize(n);
  for (Index i = 0; i < n; ++i) {
    const std::vector<double>& row = rows[static_cast<size_t>(i)];
    size_t k = 0;
    for (Index j = 0; j < dx; ++j) b.x(i, j) = row[k++];
    for (Index j = 0; j < dw; ++j) b.w(i, j) = row[k++];
    for (Index j = 0; j < dc; ++j) b.c(i, j) = row[k++];
    if (has_y) b.y(i) = row[k++];
    if (has_z) b.z(i) = row[k++];
  }
  return b;
}

// ===== JSON helpers =====

namespace {

void reject_unknown_keys(const json& obj, const std::string& where,
                         std::initializer_list<const char*> allowed, bool config) {
  if (!obj.is_object()) {
    const std::string msg = where + " must be an object";
    if (config) throw ConfigError("parse_config_text: " + msg);
    throw DataError("load: " + msg);
  }
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) {
      const std::string msg = "unknown key '" + key + "' in " + where;
      if (config) throw ConfigError("parse_config_text: " + msg);
      throw DataError("load: " + msg);
    }
  }
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw DataError(where + ": expected an array of rows");
  const Index n = static_cast<Index>(j.size());
  Index cols = -1;
  Matrix m(0, 0);
  for (Index i = 0; i < n; ++i) {
    const json& row = j[static_cast<size_t>(i)];
    if (!row.is_array()) throw DataError(where + ": expected an array of rows");
    if (cols < 0) {
      cols = static_cast<Index>(row.size());
      m.resize(n, cols);
    }
    if (static_cast<Index>(row.size()) != cols) throw DataError(where + ": ragged rows");
    for (Index k = 0; k < cols; ++k) {
      const json& v = row[static_cast<size_t>(k)];
      if (!v.is_number()) throw DataError(where + ": non-numeric entry");
      m(i, k) = v.get<double>();
    }
  }
  return m;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw DataError(where + ": expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) {
    const json& e = j[static_cast<size_t>(i)];
    if (!e.is_number()) throw DataError(where + ": non-numeric entry");
    v(i) = e.get<double>();
  }
  return v;
}

json kernel_to_json(const KernelSpec& k) {
  json j;
  switch (k.kind) {
    case KernelSpec::Kind::Gaussian:
      j["kind"] = "gaussian";
      j["length_scale"] = k.length_scale;
      break;
    case KernelSpec::Kind::Binary:
      j["kind"] = "binary";
      break;
    case KernelSpec::Kind::ColumnwiseProduct: {
      j["kind"] = "columnwise";
      json fs = json::array();
      for (const KernelSpec& f : k.factors) fs.push_back(kernel_to_json(f));
      j["factors"] = std::move(fs);
      break;
    }
  }
  return j;
}

KernelSpec kernel_from_json(const json& j, const std::string& where) {
  reject_unknown_keys(j, where, {"kind", "length_scale", "factors"}, false);
  if (!j.contains("kind") || !j["kind"].is_string())
    throw DataError(where + ": kernel needs a string 'kind'");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "gaussian") {
    if (!j.contains("length_scale") || !j["length_scale"].is_number())
      throw DataError(where + ": gaussian kernel needs a numeric length_scale");
    return KernelSpec::gaussian(j["length_scale"].get<double>());
  }
  if (kind == "binary") return KernelSpec::binary();
  if (kind == "columnwise") {
    if (!j.contains("factors") || !j["factors"].is_array())
      throw DataError(where + ": columnwise kernel needs a factors array");
    std::vector<KernelSpec> fs;
    for (const json& f : j["factors"]) fs.push_back(kernel_from_json(f, where + ".factors"));
    return KernelSpec::columnwise(std::move(fs));
  }
  throw DataError(where + ": unknown kernel kind '" + kind + "'");
}

constexpr const char* kModelFormat = "latshift-model";
constexpr const char* kAdaptedFormat = "latshift-adapted";
constexpr int kFormatVersion = 1;

// Serialize a BridgeModel to its self-describing JSON object.
json bridge_to_json(const BridgeModel& model) {
  json j;
  j["format"] = kModelFormat;
  j["version"] = kFormatVersion;
  j["kind"] = model.kind;
  j["kernel_x"] = kernel_to_json(model.kernel_x);

  if (model.kind == "concept-bridge" && model.h0) {
    const BridgeH0& b = *model.h0;
    j["kernel_w"] = kernel_to_json(b.kernel_w());
    j["kernel_c"] = kernel_to_json(b.kernel_c());
    j["lambda1"] = b.lambda1();
    j["lambda2"] = b.lambda2();
    j["anchors_w"] = matrix_to_json(b.anchors_w());
    j["anchors_c"] = matrix_to_json(b.anchors_c());
    j["alpha"] = matrix_to_json(b.alpha());
  } else if (model.kind == "concept-classifier" && model.h0_classifier) {
    const BridgeH0Multilabel& b = *model.h0_classifier;
    const BridgeH0& first = b.bridge(0);
    j["kernel_w"] = kernel_to_json(first.kernel_w());
    j["kernel_c"] = kernel_to_json(first.kernel_c());
    j["lambda1"] = first.lambda1();
    j["lambda2"] = first.lambda2();
    j["anchors_w"] = matrix_to_json(first.anchors_w());
    j["anchors_c"] = matrix_to_json(first.anchors_c());
    j["classes"] = b.classes();
    json alphas = json::array();
    for (const Matrix& a : b.alphas()) alphas.push_back(matrix_to_json(a));
    j["alphas"] = std::move(alphas);
  } else if (model.kind == "multidomain-bridge" && model.m0) {
    const BridgeM0& b = *model.m0;
    j["kernel_w"] = kernel_to_json(b.kernel_w());
    j["lambda1"] = b.lambda3();
    j["lambda2"] = b.lambda4();
    j["anchors_w"] = matrix_to_json(b.anchors_w());
    j["anchors_x"] = matrix_to_json(b.anchors_x());
    j["alpha"] = matrix_to_json(b.alpha());
  } else if (model.kind == "multidomain-classifier" && model.m0_classifier) {
    const BridgeM0Multilabel& b = *model.m0_classifier;
    const BridgeM0& first = b.bridge(0);
    j["kernel_w"] = kernel_to_json(first.kernel_w());
    j["lambda1"] = first.lambda3();
    j["lambda2"] = first.lambda4();
    j["anchors_w"] = matrix_to_json(first.anchors_w());
    j["anchors_x"] = matrix_to_json(first.anchors_x());
    j["classes"] = b.classes();
    json alphas = json::array();
    for (size_t k = 0; k < b.classes().size(); ++k)
      alphas.push_back(matrix_to_json(b.bridge(static_cast<Index>(k)).alpha()));
    j["alphas"] = std::move(alphas);
  } else {
    throw DataError("save: kind '" + model.kind + "' does not match the stored bridge");
  }
  return j;
}

// Parse and validate a BridgeModel from its JSON object.
BridgeModel bridge_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("format") || j["format"] != kModelFormat)
    throw DataError(where + ": not a " + kModelFormat + " object");
  if (!j.contains("version") || !j["version"].is_number_integer() ||
      j["version"].get<int>() != kFormatVersion)
    throw DataError(where + ": unsupported container version");
  if (!j.contains("kind") || !j["kind"].is_string())
    throw DataError(where + ": missing kind");

  BridgeModel model;
  model.kind = j["kind"].get<std::string>();
  const bool is_concept = model.kind == "concept-bridge" || model.kind == "concept-classifier";
  const bool classifier =
      model.kind == "concept-classifier" || model.kind == "multidomain-classifier";
  if (!is_concept && model.kind != "multidomain-bridge" && model.kind != "multidomain-classifier")
    throw DataError(where + ": unknown kind '" + model.kind + "'");

  std::vector<const char*> allowed = {"format",   "version", "kind",    "kernel_x",
                                      "kernel_w", "lambda1", "lambda2", "anchors_w"};
  if (is_concept) {
    allowed.push_back("kernel_c");
    allowed.push_back("anchors_c");
  } else {
    allowed.push_back("anchors_x");
  }
  if (classifier) {
    allowed.push_back("classes");
    allowed.push_back("alphas");
  } else {
    allowed.push_back("alpha");
  }
  for (const char* key : allowed)
    if (!j.contains(key)) throw DataError(where + ": missing key '" + std::string(key) + "'");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw DataError(where + ": unknown key '" + key + "'");
  }

  model.kernel_x = kernel_from_json(j["kernel_x"], where + ".kernel_x");
  const KernelSpec kw = kernel_from_json(j["kernel_w"], where + ".kernel_w");
  if (!j["lambda1"].is_number() || !j["lambda2"].is_number())
    throw DataError(where + ": lambdas must be numbers");
  const double lambda1 = j["lambda1"].get<double>();
  const double lambda2 = j["lambda2"].get<double>();
  const Matrix anchors_w = matrix_from_json(j["anchors_w"], where + ".anchors_w");

  auto load_classes = [&j, &where]() {
    if (!j["classes"].is_array()) throw DataError(where + ": classes must be an array");
    std::vector<double> classes;
    for (const json& c : j["classes"]) {
      if (!c.is_number()) throw DataError(where + ": non-numeric class label");
      classes.push_back(c.get<double>());
    }
    return classes;
  };
  auto load_alphas = [&j, &where]() {
    if (!j["alphas"].is_array()) throw DataError(where + ": alphas must be an array");
    std::vector<Matrix> alphas;
    for (const json& a : j["alphas"]) alphas.push_back(matrix_from_json(a, where + ".alphas"));
    return alphas;
  };

  try {
    if (model.kind == "concept-bridge") {
      model.h0 = BridgeH0::from_parts(matrix_from_json(j["alpha"], where + ".alpha"), anchors_w,
                                      matrix_from_json(j["anchors_c"], where + ".anchors_c"), kw,
                                      kernel_from_json(j["kernel_c"], where + ".kernel_c"),
                                      lambda1, lambda2);
    } else if (model.kind == "concept-classifier") {
      model.h0_classifier = BridgeH0Multilabel::from_parts(
          load_alphas(), load_classes(), anchors_w,
          matrix_from_json(j["anchors_c"], where + ".anchors_c"), kw,
          kernel_from_json(j["kernel_c"], where + ".kernel_c"), lambda1, lambda2);
    } else if (model.kind == "multidomain-bridge") {
      model.m0 = BridgeM0::from_parts(matrix_from_json(j["alpha"], where + ".alpha"), anchors_w,
                                      matrix_from_json(j["anchors_x"], where + ".anchors_x"), kw,
                                      model.kernel_x, lambda1, lambda2);
    } else {
      model.m0_classifier = BridgeM0Multilabel::from_parts(
          load_alphas(), load_classes(), anchors_w,
          matrix_from_json(j["anchors_x"], where + ".anchors_x"), kw, model.kernel_x, lambda1,
          lambda2);
    }
  } catch (const std::invalid_argument& e) {
    throw DataError(where + ": inconsistent model parts: " + e.what());
  }
  return model;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("load: cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("load: " + path + " is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("save: cannot open " + path);
  out << j.dump(2) << "\n";
  if (!out) throw DataError("save: write failed for " + path);
}

}  // namespace

// ===== Model container =====

void save_bridge_model(const std::string& path, const BridgeModel& model) {
  write_json_file(path, bridge_to_json(model));
}

BridgeModel load_bridge_model(const std::string& path) {
  return bridge_from_json(read_json_file(path), path);
}

// ===== Adapted predictor =====

bool AdaptedModel::is_classifier() const {
  return bridge.kind == "concept-classifier" || bridge.kind == "multidomain-classifier";
}

namespace {

// Target conditional embedding rebuilt from the stored kernels; the stage-1
// ridge parameter carries over to the target fit.
CmeEstimator target_cme_for(const BridgeModel& model, const SampleBatch& target) {
  if (model.kind == "concept-bridge" || model.kind == "concept-classifier") {
    const BridgeH0& b =
        model.h0 ? *model.h0 : model.h0_classifier->bridge(0);
    return CmeEstimator::fit_wc_given_x(target, model.kernel_x, b.kernel_w(), b.kernel_c(),
                                        b.lambda1());
  }
  const BridgeM0& b = model.m0 ? *model.m0 : model.m0_classifier->bridge(0);
  return CmeEstimator::fit_w_given_x(target, model.kernel_x, b.kernel_w(), b.lambda3());
}

}  // namespace

Vector AdaptedModel::predict(const Matrix& x_new) const {
  if (is_classifier())
    throw DataError("AdaptedModel::predict: classifier model, use predict_labels/scores");
  const CmeEstimator cme = target_cme_for(bridge, target);
  if (bridge.kind == "concept-bridge") return bridge.h0->predict(cme, x_new);
  return bridge.m0->predict(cme, x_new);
}

Matrix AdaptedModel::predict_scores(const Matrix& x_new) const {
  if (!is_classifier())
    throw DataError("AdaptedModel::predict_scores: regression model, use predict");
  const CmeEstimator cme = target_cme_for(bridge, target);
  if (bridge.kind == "concept-classifier") return bridge.h0_classifier->scores(cme, x_new);
  return bridge.m0_classifier->scores(cme, x_new);
}

Vector AdaptedModel::predict_labels(const Matrix& x_new) const {
  if (!is_classifier())
    throw DataError("AdaptedModel::predict_labels: regression model, use predict");
  const CmeEstimator cme = target_cme_for(bridge, target);
  if (bridge.kind == "concept-classifier") return bridge.h0_classifier->classify(cme, x_new);
  return bridge.m0_classifier->classify(cme, x_new);
}

AdaptedModel make_adapted(BridgeModel bridge, const SampleBatch& target) {
  target.check_consistent();
  if (target.rows() == 0) throw DataError("make_adapted: target data is empty");
  const bool is_concept = bridge.kind == "concept-bridge" || bridge.kind == "concept-classifier";
  if (target.w.cols() == 0)
    throw DataError("make_adapted: target data must carry proxy columns (w)");
  if (target.x.cols() == 0)
    throw DataError("make_adapted: target data must carry covariate columns (x)");
  if (is_concept && target.c.cols() == 0)
    throw DataError("make_adapted: concept bridge needs concept columns (c) in target data");

  const KernelSpec kw = is_concept
                            ? (bridge.h0 ? bridge.h0->kernel_w()
                                         : bridge.h0_classifier->bridge(0).kernel_w())
                            : (bridge.m0 ? bridge.m0->kernel_w()
                                         : bridge.m0_classifier->bridge(0).kernel_w());
  try {
    bridge.kernel_x.validate(target.x.cols());
    kw.validate(target.w.cols());
    if (is_concept) {
      const KernelSpec kc =
          bridge.h0 ? bridge.h0->kernel_c() : bridge.h0_classifier->bridge(0).kernel_c();
      kc.validate(target.c.cols());
    }
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("make_adapted: kernel incompatible with target data: ") +
                    e.what());
  }

  AdaptedModel out;
  out.bridge = std::move(bridge);
  out.target = target;
  if (!is_concept) out.target.c.resize(0, 0);  // unused block
  out.target.y.resize(0);                   // labels are never stored
  out.target.z.resize(0);
  return out;
}

void save_adapted_model(const std::string& path, const AdaptedModel& model) {
  json j;
  j["format"] = kAdaptedFormat;
  j["version"] = kFormatVersion;
  j["model"] = bridge_to_json(model.bridge);
  json t;
  t["x"] = matrix_to_json(model.target.x);
  t["w"] = matrix_to_json(model.target.w);
  if (model.target.c.cols() > 0) t["c"] = matrix_to_json(model.target.c);
  j["target"] = std::move(t);
  write_json_file(path, j);
}

AdaptedModel load_adapted_model(const std::string& path) {
  const json j = read_json_file(path);
  if (!j.is_object() || !j.contains("format") || j["format"] != kAdaptedFormat)
    throw DataError("load_adapted_model: " + path + " is not a " + kAdaptedFormat + " file");
  if (!j.contains("version") || !j["version"].is_number_integer() ||
      j["version"].get<int>() != kFormatVersion)
    throw DataError("load_adapted_model: unsupported container version in " + path);
  reject_unknown_keys(j, "adapted model", {"format", "version", "model", "target"}, false);
  if (!j.contains("model") || !j.contains("target"))
    throw DataError("load_adapted_model: missing model/target in " + path);

  BridgeModel bridge = bridge_from_json(j["model"], path + ":model");

  const json& t = j["target"];
  reject_unknown_keys(t, "adapted model target", {"x", "w", "c"}, false);
  if (!t.contains("x") || !t.contains("w"))
    throw DataError("load_adapted_model: target must carry x and w");
  SampleBatch target;
  target.x = matrix_from_json(t["x"], "target.x");
  target.w = matrix_from_json(t["w"], "target.w");
  if (t.contains("c")) target.c = matrix_from_json(t["c"], "target.c");
  return make_adapted(std::move(bridge), target);
}

// ===== Experiment configuration =====

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError("parse_config_text: " + message);
}

double get_number(const json& j, const std::string& where) {
  require(j.is_number(), where + " must be a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& where) {
  require(j.is_number_integer(), where + " must be an integer");
  return j.get<int>();
}

std::string get_string(const json& j, const std::string& where) {
  require(j.is_string(), where + " must be a string");
  return j.get<std::string>();
}

std::vector<double> get_number_list(const json& j, const std::string& where) {
  require(j.is_array(), where + " must be an array of numbers");
  std::vector<double> out;
  for (const json& v : j) {
    require(v.is_number(), where + " must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

Matrix config_matrix(const json& j, const std::string& where) {
  try {
    return matrix_from_json(j, where);
  } catch (const DataError& e) {
    throw ConfigError(std::string("parse_config_text: ") + e.what());
  }
}

Vector config_vector(const json& j, const std::string& where) {
  try {
    return vector_from_json(j, where);
  } catch (const DataError& e) {
    throw ConfigError(std::string("parse_config_text: ") + e.what());
  }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("parse_config_text: invalid JSON: ") + e.what());
  }
  reject_unknown_keys(
      j, "config", {"seed", "workers", "scenario", "methods", "plan", "fit", "gen", "eval",
                    "bounds"},
      true);

  ExperimentConfig cfg;
  if (j.contains("seed")) {
    require(j["seed"].is_number_integer() || j["seed"].is_number_unsigned(),
            "seed must be an integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("workers")) cfg.workers = get_int(j["workers"], "workers");

  if (j.contains("scenario")) {
    const json& s = j["scenario"];
    reject_unknown_keys(s, "scenario",
                        {"name", "p_u1_source", "p_u0_source", "a_w", "a_source", "ab_source",
                         "beta_sum", "shift_values", "replicates", "n_train", "n_target_train",
                         "n_test"},
                        true);
    if (s.contains("name")) cfg.scenario.scenario = get_string(s["name"], "scenario.name");
    if (s.contains("p_u1_source"))
      cfg.scenario.p_u1_source = get_number(s["p_u1_source"], "scenario.p_u1_source");
    if (s.contains("p_u0_source"))
      cfg.scenario.p_u0_source = get_number_list(s["p_u0_source"], "scenario.p_u0_source");
    if (s.contains("a_w")) cfg.scenario.a_w = get_number(s["a_w"], "scenario.a_w");
    if (s.contains("a_source"))
      cfg.scenario.a_source = get_number_list(s["a_source"], "scenario.a_source");
    if (s.contains("ab_source")) {
      require(s["ab_source"].is_array(), "scenario.ab_source must be an array of [a, b] pairs");
      for (const json& p : s["ab_source"]) {
        require(p.is_array() && p.size() == 2 && p[0].is_number() && p[1].is_number(),
                "scenario.ab_source must be an array of [a, b] pairs");
        cfg.scenario.ab_source.emplace_back(p[0].get<double>(), p[1].get<double>());
      }
    }
    if (s.contains("beta_sum"))
      cfg.scenario.beta_sum = get_number(s["beta_sum"], "scenario.beta_sum");
    if (s.contains("shift_values"))
      cfg.scenario.shift_values = get_number_list(s["shift_values"], "scenario.shift_values");
    if (s.contains("replicates"))
      cfg.scenario.replicates = get_int(s["replicates"], "scenario.replicates");
    if (s.contains("n_train")) cfg.scenario.n_train = get_int(s["n_train"], "scenario.n_train");
    if (s.contains("n_target_train"))
      cfg.scenario.n_target_train = get_int(s["n_target_train"], "scenario.n_target_train");
    if (s.contains("n_test")) cfg.scenario.n_test = get_int(s["n_test"], "scenario.n_test");
  }

  if (j.contains("methods")) {
    require(j["methods"].is_array(), "methods must be an array of strings");
    for (const json& m : j["methods"]) cfg.methods.push_back(get_string(m, "methods entry"));
  }

  if (j.contains("plan")) {
    const json& p = j["plan"];
    reject_unknown_keys(p, "plan", {"folds", "metric", "seed", "grid"}, true);
    if (p.contains("folds")) cfg.plan.folds = get_int(p["folds"], "plan.folds");
    if (p.contains("metric")) {
      try {
        cfg.plan.metric = metric_from_string(get_string(p["metric"], "plan.metric"));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("parse_config_text: ") + e.what());
      }
    }
    if (p.contains("seed")) {
      require(p["seed"].is_number_integer() || p["seed"].is_number_unsigned(),
              "plan.seed must be an integer");
      cfg.plan.seed = p["seed"].get<std::uint64_t>();
    }
    if (p.contains("grid")) {
      require(p["grid"].is_object(), "plan.grid must map names to value arrays");
      for (const auto& [name, values] : p["grid"].items())
        cfg.plan.grid.emplace_back(name, get_number_list(values, "plan.grid." + name));
    }
  }

  if (j.contains("fit")) {
    const json& f = j["fit"];
    reject_unknown_keys(
        f, "fit", {"bridge", "classifier", "lambda1", "lambda2", "lengthscale_x", "lengthscale_w"},
        true);
    if (f.contains("bridge")) {
      cfg.bridge = get_string(f["bridge"], "fit.bridge");
      require(cfg.bridge == "concept" || cfg.bridge == "multidomain",
              "fit.bridge must be 'concept' or 'multidomain'");
    }
    if (f.contains("classifier")) {
      require(f["classifier"].is_boolean(), "fit.classifier must be a boolean");
      cfg.classifier = f["classifier"].get<bool>();
    }
    if (f.contains("lambda1")) cfg.lambda1 = get_number(f["lambda1"], "fit.lambda1");
    if (f.contains("lambda2")) cfg.lambda2 = get_number(f["lambda2"], "fit.lambda2");
    if (f.contains("lengthscale_x"))
      cfg.lengthscale_x = get_number(f["lengthscale_x"], "fit.lengthscale_x");
    if (f.contains("lengthscale_w"))
      cfg.lengthscale_w = get_number(f["lengthscale_w"], "fit.lengthscale_w");
  }

  if (j.contains("gen")) {
    const json& g = j["gen"];
    reject_unknown_keys(g, "gen", {"replicate", "shift_index"}, true);
    if (g.contains("replicate")) cfg.gen_replicate = get_int(g["replicate"], "gen.replicate");
    if (g.contains("shift_index"))
      cfg.gen_shift_index = get_int(g["shift_index"], "gen.shift_index");
  }

  if (j.contains("eval")) {
    const json& e = j["eval"];
    reject_unknown_keys(e, "eval", {"metric"}, true);
    if (e.contains("metric")) {
      cfg.eval_metric = get_string(e["metric"], "eval.metric");
      require(cfg.eval_metric == "auto" || cfg.eval_metric == "mse" ||
                  cfg.eval_metric == "auroc" || cfg.eval_metric == "accuracy",
              "eval.metric must be auto/mse/auroc/accuracy");
    }
  }

  if (j.contains("bounds")) {
    const json& b = j["bounds"];
    reject_unknown_keys(b, "bounds", {"frechet", "gaussian"}, true);
    if (b.contains("frechet")) {
      const json& f = b["frechet"];
      reject_unknown_keys(f, "bounds.frechet", {"table", "pi_c", "pi_w"}, true);
      require(f.contains("table") && f.contains("pi_c") && f.contains("pi_w"),
              "bounds.frechet needs table, pi_c, pi_w");
      cfg.bounds_frechet = true;
      cfg.frechet_table = config_matrix(f["table"], "bounds.frechet.table");
      cfg.frechet_pi_c = get_number(f["pi_c"], "bounds.frechet.pi_c");
      cfg.frechet_pi_w = get_number(f["pi_w"], "bounds.frechet.pi_w");
    }
    if (b.contains("gaussian")) {
      const json& g = b["gaussian"];
      reject_unknown_keys(g, "bounds.gaussian",
                          {"table", "mu_w", "mu_c", "sigma_w", "sigma_c", "rho"}, true);
      require(g.contains("table") && g.contains("mu_w") && g.contains("mu_c") &&
                  g.contains("sigma_w") && g.contains("sigma_c") && g.contains("rho"),
              "bounds.gaussian needs table, mu_w, mu_c, sigma_w, sigma_c, rho");
      cfg.bounds_gaussian = true;
      cfg.gaussian_table = config_matrix(g["table"], "bounds.gaussian.table");
      cfg.gaussian_mu_w = config_vector(g["mu_w"], "bounds.gaussian.mu_w");
      cfg.gaussian_mu_c = config_vector(g["mu_c"], "bounds.gaussian.mu_c");
      cfg.gaussian_sigma_w = config_matrix(g["sigma_w"], "bounds.gaussian.sigma_w");
      cfg.gaussian_sigma_c = config_matrix(g["sigma_c"], "bounds.gaussian.sigma_c");
      cfg.gaussian_rho = get_number(g["rho"], "bounds.gaussian.rho");
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("load_config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string config_to_text(const ExperimentConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;

  json s;
  s["name"] = cfg.scenario.scenario;
  s["p_u1_source"] = cfg.scenario.p_u1_source;
  s["p_u0_source"] = cfg.scenario.p_u0_source;
  s["a_w"] = cfg.scenario.a_w;
  s["a_source"] = cfg.scenario.a_source;
  json ab = json::array();
  for (const auto& [a, b] : cfg.scenario.ab_source) ab.push_back(json::array({a, b}));
  s["ab_source"] = std::move(ab);
  s["beta_sum"] = cfg.scenario.beta_sum;
  s["shift_values"] = cfg.scenario.shift_values;
  s["replicates"] = cfg.scenario.replicates;
  s["n_train"] = static_cast<long long>(cfg.scenario.n_train);
  s["n_target_train"] = static_cast<long long>(cfg.scenario.n_target_train);
  s["n_test"] = static_cast<long long>(cfg.scenario.n_test);
  j["scenario"] = std::move(s);

  j["methods"] = cfg.methods;

  json p;
  p["folds"] = cfg.plan.folds;
  p["metric"] = metric_to_string(cfg.plan.metric);
  p["seed"] = cfg.plan.seed;
  json grid = json::object();
  for (const auto& [name, values] : cfg.plan.grid) grid[name] = values;
  p["grid"] = std::move(grid);
  j["plan"] = std::move(p);

  json f;
  f["bridge"] = cfg.bridge;
  f["classifier"] = cfg.classifier;
  f["lambda1"] = cfg.lambda1;
  f["lambda2"] = cfg.lambda2;
  f["lengthscale_x"] = cfg.lengthscale_x;
  f["lengthscale_w"] = cfg.lengthscale_w;
  j["fit"] = std::move(f);

  json g;
  g["replicate"] = cfg.gen_replicate;
  g["shift_index"] = cfg.gen_shift_index;
  j["gen"] = std::move(g);

  json e;
  e["metric"] = cfg.eval_metric;
  j["eval"] = std::move(e);

  json b = json::object();
  if (cfg.bounds_frechet) {
    json fr;
    fr["table"] = matrix_to_json(cfg.frechet_table);
    fr["pi_c"] = cfg.frechet_pi_c;
    fr["pi_w"] = cfg.frechet_pi_w;
    b["frechet"] = std::move(fr);
  }
  if (cfg.bounds_gaussian) {
    json ga;
    ga["table"] = matrix_to_json(cfg.gaussian_table);
    ga["mu_w"] = vector_to_json(cfg.gaussian_mu_w);
    ga["mu_c"] = vector_to_json(cfg.gaussian_mu_c);
    ga["sigma_w"] = matrix_to_json(cfg.gaussian_sigma_w);
    ga["sigma_c"] = matrix_to_json(cfg.gaussian_sigma_c);
    ga["rho"] = cfg.gaussian_rho;
    b["gaussian"] = std::move(ga);
  }
  j["bounds"] = std::move(b);

  return j.dump(2) + "\n";
}

}  // namespace latshift
