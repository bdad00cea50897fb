#include "mgof/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace mgof::cli {

const char* to_string(Procedure p) {
  switch (p) {
    case Procedure::kRank: return "rank";
    case Procedure::kTest: return "test";
    case Procedure::kSelect: return "select";
    case Procedure::kSimulate: return "simulate";
    case Procedure::kSigma2: return "sigma2";
  }
  return "?";
}

std::optional<Procedure> parse_procedure(std::string_view s) {
  for (Procedure p : {Procedure::kRank, Procedure::kTest, Procedure::kSelect, Procedure::kSimulate,
                      Procedure::kSigma2}) {
    if (s == to_string(p)) return p;
  }
  return std::nullopt;
}

ConfigError::ConfigError(const std::string& what, int line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
      line_(line) {}

int ExperimentConfig::line_of(const std::string& key) const {
  const auto it = key_lines.find(key);
  return it == key_lines.end() ? 0 : it->second;
}

namespace {

int line(const YAML::Node& n) { return n.Mark().line + 1; }

class Reader {
 public:
  explicit Reader(ExperimentConfig& cfg) : cfg_(cfg) {}

  /// Checks that `node` is a map whose keys all belong to `allowed`.
  void expect_map(const YAML::Node& node, const std::string& path,
                  const std::set<std::string>& allowed) {
    if (!node.IsMap()) throw ConfigError("'" + path + "' must be a mapping", line(node));
    for (const auto& kv : node) {
      const std::string key = kv.first.as<std::string>();
      if (!allowed.contains(key)) {
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        throw ConfigError("unknown key '" + join(path, key) + "' (expected one of: " + list + ")",
                          line(kv.first));
      }
      cfg_.key_lines[join(path, key)] = line(kv.first);
    }
  }

  template <typename T>
  void get(const YAML::Node& parent, const std::string& path, const std::string& key, T& out) {
    const YAML::Node n = parent[key];
    if (!n) return;
    if (!n.IsScalar()) throw ConfigError("'" + join(path, key) + "' must be a scalar", line(n));
    try {
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError("'" + join(path, key) + "': cannot read '" + n.Scalar() + "' as " +
                            type_name<T>(),
                        line(n));
    }
  }

  template <typename T>
  void get(const YAML::Node& parent, const std::string& path, const std::string& key,
           std::optional<T>& out) {
    if (!parent[key]) return;
    T v{};
    get(parent, path, key, v);
    out = v;
  }

  template <typename E, typename Parse>
  void get_enum(const YAML::Node& parent, const std::string& path, const std::string& key, E& out,
                Parse parse) {
    std::string s;
    if (!parent[key]) return;
    get(parent, path, key, s);
    try {
      out = parse(s);
    } catch (const std::exception& e) {
      throw ConfigError("'" + join(path, key) + "': " + e.what(), line(parent[key]));
    }
  }

 private:
  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  template <typename T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, bool>) return "a boolean";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else if constexpr (std::is_floating_point_v<T>) return "a number";
    else return "a string";
  }

  ExperimentConfig& cfg_;
};

void read_document(const YAML::Node& root, ExperimentConfig& cfg) {
  Reader rd(cfg);
  if (!root || root.IsNull()) throw ConfigError("empty config; 'model.family' is required", 1);
  rd.expect_map(root, "",
                {"schema_version", "procedure", "model", "data", "truth", "noise", "selection",
                 "alpha", "replications", "seed", "jobs", "output", "fit"});

  rd.get(root, "", "schema_version", cfg.schema_version);
  if (cfg.schema_version != kSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(cfg.schema_version) +
                          " (this build reads " + std::to_string(kSchemaVersion) + ")",
                      line(root["schema_version"]));
  }
  if (root["procedure"]) {
    std::string p;
    rd.get(root, "", "procedure", p);
    cfg.procedure = parse_procedure(p);
    if (!cfg.procedure) {
      throw ConfigError("'procedure': unknown value '" + p +
                            "' (expected rank, test, select, simulate or sigma2)",
                        line(root["procedure"]));
    }
  }

  const YAML::Node model = root["model"];
  if (!model) throw ConfigError("'model.family' is required", 1);
  rd.expect_map(model, "model",
                {"family", "n1", "n2", "n3", "num_observed", "input_dim", "num_inputs",
                 "activation", "sensors", "grid", "order", "rank_samples"});
  if (!model["family"]) throw ConfigError("'model.family' is required", line(model));
  rd.get_enum(model, "model", "family", cfg.family, parse_family_kind);
  rd.get(model, "model", "n1", cfg.n1);
  rd.get(model, "model", "n2", cfg.n2);
  rd.get(model, "model", "n3", cfg.n3);
  rd.get(model, "model", "num_observed", cfg.num_observed);
  rd.get(model, "model", "input_dim", cfg.input_dim);
  rd.get(model, "model", "num_inputs", cfg.num_inputs);
  rd.get_enum(model, "model", "activation", cfg.activation, parse_activation);
  rd.get(model, "model", "sensors", cfg.sensors);
  rd.get(model, "model", "grid", cfg.grid);
  rd.get(model, "model", "order", cfg.order);
  rd.get(model, "model", "rank_samples", cfg.rank_samples);

  if (const YAML::Node data = root["data"]) {
    rd.expect_map(data, "data", {"path"});
    rd.get(data, "data", "path", cfg.data_path);
  }
  if (const YAML::Node truth = root["truth"]) {
    rd.expect_map(truth, "truth", {"order", "sigma", "signal_scale"});
    rd.get(truth, "truth", "order", cfg.true_order);
    rd.get(truth, "truth", "sigma", cfg.sigma);
    rd.get(truth, "truth", "signal_scale", cfg.signal_scale);
  }
  if (const YAML::Node noise = root["noise"]) {
    rd.expect_map(noise, "noise", {"sigma2", "estimate", "N", "drift", "noncentrality"});
    rd.get(noise, "noise", "sigma2", cfg.sigma2);
    rd.get(noise, "noise", "N", cfg.N);
    rd.get(noise, "noise", "drift", cfg.drift);
    rd.get(noise, "noise", "noncentrality", cfg.noncentrality);
    if (const YAML::Node est = noise["estimate"]) {
      rd.expect_map(est, "noise.estimate", {"order", "kept_units"});
      LeaveOutSpec spec;
      spec.order = 0;  // 0: model.order
      rd.get(est, "noise.estimate", "order", spec.order);
      rd.get(est, "noise.estimate", "kept_units", spec.kept_units);
      cfg.estimate = spec;
    }
  }
  if (const YAML::Node sel = root["selection"]) {
    rd.expect_map(sel, "selection", {"r_max"});
    rd.get(sel, "selection", "r_max", cfg.r_max);
  }
  rd.get(root, "", "alpha", cfg.alpha);
  rd.get(root, "", "replications", cfg.replications);
  rd.get(root, "", "seed", cfg.seed);
  rd.get(root, "", "jobs", cfg.jobs);
  rd.get(root, "", "output", cfg.output);
  if (const YAML::Node fit = root["fit"]) {
    rd.expect_map(fit, "fit",
                  {"max_iters", "num_restarts", "step", "polish", "grad_tol", "certificate_tol",
                   "als_tol"});
    rd.get(fit, "fit", "max_iters", cfg.fit.max_iters);
    rd.get(fit, "fit", "num_restarts", cfg.fit.num_restarts);
    rd.get_enum(fit, "fit", "step", cfg.fit.step, parse_step_policy);
    rd.get(fit, "fit", "polish", cfg.fit.polish);
    rd.get(fit, "fit", "grad_tol", cfg.fit.grad_tol);
    rd.get(fit, "fit", "certificate_tol", cfg.fit.certificate_tol);
    rd.get(fit, "fit", "als_tol", cfg.fit.als_tol);
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  auto fail = [&](const std::string& key, const std::string& msg) {
    throw ConfigError("'" + key + "': " + msg, line_of(key));
  };
  const bool synthetic = !data_path.has_value();
  switch (family) {
    case FamilyKind::kRealMatrix:
    case FamilyKind::kComplexMatrix:
      if (n1 < 1) fail("model.n1", "must be >= 1");
      if (n2 < 1) fail("model.n2", "must be >= 1");
      if (order > std::min(n1, n2)) fail("model.order", "exceeds min(n1, n2)");
      if (synthetic && num_observed > n1 * n2) fail("model.num_observed", "exceeds n1 * n2");
      break;
    case FamilyKind::kTensor:
      if (n1 < 1) fail("model.n1", "must be >= 1");
      if (n2 < 1) fail("model.n2", "must be >= 1");
      if (n3 < 1) fail("model.n3", "must be >= 1");
      if (synthetic && num_observed > n1 * n2 * n3) fail("model.num_observed", "exceeds n1 * n2 * n3");
      break;
    case FamilyKind::kNeuralNet:
      if (input_dim < 1) fail("model.input_dim", "must be >= 1");
      if (num_inputs < 1) fail("model.num_inputs", "must be >= 1");
      break;
    case FamilyKind::kDemixing:
      if (sensors < 1) fail("model.sensors", "must be >= 1");
      if (grid < 2) fail("model.grid", "must be >= 2");
      if (synthetic && num_observed > sensors * (sensors + 1) / 2 * grid) {
        fail("model.num_observed", "exceeds the number of (n <= m, f) triples");
      }
      break;
  }
  if (num_observed < 0) fail("model.num_observed", "must be >= 0");
  if (order < 1) fail("model.order", "must be >= 1");
  if (rank_samples < 1) fail("model.rank_samples", "must be >= 1");
  if (true_order < 1) fail("truth.order", "must be >= 1");
  if (!(sigma > 0) || !std::isfinite(sigma)) fail("truth.sigma", "must be positive");
  if (!(signal_scale > 0) || !std::isfinite(signal_scale)) fail("truth.signal_scale", "must be positive");
  if (sigma2 && (!(*sigma2 > 0) || !std::isfinite(*sigma2))) fail("noise.sigma2", "must be positive");
  if (!(N > 0) || !std::isfinite(N)) fail("noise.N", "must be positive");
  if (!std::isfinite(drift)) fail("noise.drift", "must be finite");
  if (noncentrality && (!(*noncentrality >= 0) || !std::isfinite(*noncentrality))) {
    fail("noise.noncentrality", "must be >= 0");
  }
  if (estimate) {
    if (estimate->order < 0) fail("noise.estimate.order", "must be >= 1");
    if (estimate->kept_units < 0) fail("noise.estimate.kept_units", "must be >= 0");
  }
  if (sigma2 && estimate) fail("noise.estimate", "give either noise.sigma2 or noise.estimate, not both");
  if (r_max < 1) fail("selection.r_max", "must be >= 1");
  if (!(alpha > 0 && alpha < 1)) fail("alpha", "must be in (0, 1)");
  if (jobs < 1) fail("jobs", "must be >= 1");
  if (output.empty()) fail("output", "must not be empty");
  try {
    fit.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what(), line_of("fit"));
  }

  const Procedure proc = procedure.value_or(Procedure::kTest);
  if (data_path) {
    if (proc == Procedure::kSimulate) fail("data.path", "simulate synthesizes its data; remove data.path");
    if ((proc == Procedure::kTest || proc == Procedure::kSelect) && !sigma2 && !estimate) {
      fail("data.path", "observed data needs noise.sigma2 or noise.estimate");
    }
  }
  if (proc == Procedure::kSimulate && replications < 1) fail("replications", "must be >= 1");
}

Index ExperimentConfig::synthetic_units() const {
  switch (family) {
    case FamilyKind::kRealMatrix:
    case FamilyKind::kComplexMatrix:
      return num_observed > 0 ? num_observed : n1 * n2;
    case FamilyKind::kTensor:
      return num_observed > 0 ? num_observed : n1 * n2 * n3;
    case FamilyKind::kNeuralNet:
      return num_inputs;
    case FamilyKind::kDemixing:
      return num_observed > 0 ? num_observed : sensors * (sensors + 1) / 2 * grid;
  }
  return 0;
}

LeaveOutSpec ExperimentConfig::resolve_estimate(Index num_units) const {
  LeaveOutSpec spec = estimate.value_or(LeaveOutSpec{0, 0});
  if (spec.order == 0) spec.order = order;
  if (spec.kept_units == 0) spec.kept_units = (3 * num_units) / 4;
  return spec;
}

Scenario ExperimentConfig::scenario() const {
  Scenario sc;
  sc.family = family;
  sc.n1 = n1;
  sc.n2 = n2;
  sc.n3 = n3;
  sc.num_observed = num_observed;
  sc.input_dim = input_dim;
  sc.num_inputs = num_inputs;
  sc.activation = activation;
  sc.sensors = sensors;
  sc.grid = grid;
  sc.true_order = true_order;
  sc.sigma = sigma;
  sc.N = N;
  sc.drift = drift;
  sc.signal_scale = signal_scale;
  sc.r_max = r_max;
  sc.alpha = alpha;
  sc.fit = fit;
  if (estimate) sc.leave_out = resolve_estimate(synthetic_units());
  return sc;
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  ExperimentConfig cfg;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ": " + e.msg, e.mark.line + 1);
  }
  read_document(root, cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace mgof::cli
