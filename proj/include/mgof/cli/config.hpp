#pragma once

// Experiment configuration (YAML, schema_version 1).
//
//   schema_version: 1
//   model:                      # family is the only required field
//     family: complex_matrix    # real_matrix | complex_matrix | tensor | nn | demixing
//     n1: 30
//     n2: 30
//     n3: 1
//     num_observed: 600         # |Omega| for synthetic data; 0 = every entry
//     input_dim: 50             # nn
//     num_inputs: 1000          # nn
//     activation: relu          # quadratic | sigmoid | relu
//     sensors: 8                # demixing
//     grid: 16                  # demixing
//     order: 2                  # order probed by rank / test / sigma2
//     rank_samples: 20
//   data:
//     path: obs.csv             # omit to synthesize from `truth`
//   truth:
//     order: 2
//     sigma: 5.0
//     signal_scale: 1.0
//   noise:
//     sigma2: 25.0              # known value; otherwise estimate or truth.sigma^2
//     estimate: {order: 2, kept_units: 400}  # 0: model.order / 3/4 of the units
//     N: 1.0
//     drift: 0.0                # synthetic gamma, same value on every coordinate
//     noncentrality: 0.0        # optional delta for the test procedure
//   selection:
//     r_max: 4
//   alpha: 0.05
//   replications: 100
//   seed: 1
//   jobs: 1
//   output: results
//   fit: {max_iters: 500, num_restarts: 5, step: lm, polish: true,
//         grad_tol: 1e-9, certificate_tol: 1e-5, als_tol: 1e-10}

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "mgof/selection.hpp"

namespace mgof::cli {

inline constexpr int kSchemaVersion = 1;

enum class Procedure { kRank, kTest, kSelect, kSimulate, kSigma2 };
const char* to_string(Procedure p);
std::optional<Procedure> parse_procedure(std::string_view s);

/// Invalid configuration. `line` is 1-based, 0 when no position is known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0);
  int line() const { return line_; }

 private:
  int line_;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::optional<Procedure> procedure;

  FamilyKind family = FamilyKind::kRealMatrix;
  Index n1 = 30, n2 = 30, n3 = 1;
  Index num_observed = 0;
  Index input_dim = 50;
  Index num_inputs = 1000;
  Activation activation = Activation::kRelu;
  Index sensors = 8;
  Index grid = 16;
  Index order = 1;
  int rank_samples = kDefaultRankSamples;

  std::optional<std::string> data_path;

  Index true_order = 1;
  double sigma = 1.0;
  double signal_scale = 1.0;

  std::optional<double> sigma2;
  std::optional<LeaveOutSpec> estimate;
  double N = 1.0;
  double drift = 0.0;
  std::optional<double> noncentrality;

  Index r_max = 4;
  double alpha = 0.05;
  std::size_t replications = 100;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::string output = "results";
  FitOptions fit;

  /// Line of each key seen in the document ("model.n1" -> 4); used to anchor
  /// cross-field errors. Not serialized.
  std::map<std::string, int> key_lines;
  int line_of(const std::string& key) const;

  /// Cross-field checks; throws ConfigError.
  void validate() const;

  /// Units of the synthetic geometry (entries, inputs or triples).
  Index synthetic_units() const;
  /// The leave-out spec with defaults filled in: order 0 means model.order,
  /// kept_units 0 means 3/4 of `num_units`.
  LeaveOutSpec resolve_estimate(Index num_units) const;

  /// Synthetic scenario described by the model and truth sections.
  Scenario scenario() const;
};

/// Parses and validates a config document. Unknown keys and type errors are
/// reported with their line. `source` names the document in messages.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "config");
ExperimentConfig load_config(const std::string& path);

}  // namespace mgof::cli
