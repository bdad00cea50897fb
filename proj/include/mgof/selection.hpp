#pragma once

// Sequential order selection and the replication harness.
//
// A ModelFamily bundles one catalog family on fixed data geometry (index set
// or design) across orders r = 1, 2, ... so that the selection loop, the
// leave-out variance estimate and the simulation scenarios can treat all
// families alike.

#include <map>
#include <memory>
#include <mutex>
#include <variant>
#include <vector>

#include "mgof/char_rank.hpp"
#include "mgof/gof.hpp"

namespace mgof {

enum class FamilyKind { kRealMatrix, kComplexMatrix, kTensor, kNeuralNet, kDemixing };

const char* to_string(FamilyKind k);
FamilyKind parse_family_kind(std::string_view s);

class ModelFamily {
 public:
  virtual ~ModelFamily() = default;

  virtual FamilyKind kind() const = 0;
  virtual std::string name() const;
  virtual Index obs_dim() const = 0;
  /// Characteristic rank of the order-r model on this geometry.
  virtual Index char_rank(Index order) const = 0;
  virtual bool heuristic_dof() const { return false; }
  virtual FitResult fit(Index order, const Vector& y, const FitOptions& opts, RngSeed seed) const = 0;
  /// Family-specific adjustments of the base options at a given order.
  virtual FitOptions fit_options(Index /*order*/, const FitOptions& base) const { return base; }

  /// Observation units that can be left out together (a matrix entry, a
  /// network input, a (n, m, f) triple); each unit owns one or two
  /// coordinates of y.
  virtual Index num_units() const = 0;
  virtual std::shared_ptr<const ModelFamily> restrict(const std::vector<Index>& kept_units) const = 0;
  virtual Vector restrict_obs(const Vector& y, const std::vector<Index>& kept_units) const = 0;

  /// The order-r model itself, for rank probes and Jacobian checks.
  virtual ModelPtr model(Index order) const = 0;
};

using FamilyPtr = std::shared_ptr<const ModelFamily>;

FamilyPtr make_matrix_family(Index n1, Index n2, MatrixIndexSet omega, Field field);
/// Characteristic ranks are measured (20 samples) and cached per order,
/// since r (n1 + n2 + n3 - 2) is only an upper bound.
FamilyPtr make_tensor_family(Index n1, Index n2, Index n3, TensorIndexSet omega, RngSeed rank_seed);
FamilyPtr make_nn_family(RealMatrix inputs, Activation activation);
FamilyPtr make_demixing_family(Index sensors, Index grid, DemixIndexSet omega);

// ---------------------------------------------------------------------------
// Noise variance

struct LeaveOutSpec {
  Index order = 1;       // model order used for both fits
  Index kept_units = 0;  // size of the inner index set
};

/// Fits the family at `order` on all units and on a seeded random subset of
/// `kept_units` units, and returns the leave-out variance estimate.
VarianceEstimate estimate_sigma2(const ModelFamily& family, const Vector& y, double N,
                                 const LeaveOutSpec& spec, const FitOptions& opts, RngSeed seed);

/// Where sigma^2 comes from during selection: a known value, or a single
/// leave-out estimate computed before the scan.
using Sigma2Policy = std::variant<Sigma2, LeaveOutSpec>;

// ---------------------------------------------------------------------------
// Selection

enum class Decision { kReject, kAccept, kSkipped };
const char* to_string(Decision d);

struct SelectionEntry {
  Index order = 0;
  Decision decision = Decision::kReject;
  std::optional<TestReport> report;  // absent when skipped
  std::string note;
  int restarts_used = 0;
};

struct SelectionTrace {
  double alpha = 0.05;
  Index r_max = 0;
  std::vector<SelectionEntry> entries;
  Index chosen_order = 0;  // 0: every order rejected or skipped
  Sigma2 sigma2;
  std::optional<VarianceEstimate> sigma2_estimate;
};

/// Scans r = 1..r_max and stops at the first p-value above alpha. Orders
/// without positive degrees of freedom are recorded as skipped and count as
/// rejections. Restarts at an order stop early once a fit already passes the
/// test; the decision is unaffected because the global minimum can only
/// have a smaller statistic.
SelectionTrace select_order(const ModelFamily& family, const ObservationSet& obs, Index r_max,
                            double alpha, const Sigma2Policy& sigma2, const FitOptions& opts,
                            RngSeed seed);

// ---------------------------------------------------------------------------
// Simulation scenarios

struct Scenario {
  FamilyKind family = FamilyKind::kComplexMatrix;
  // matrix / tensor geometry
  Index n1 = 30, n2 = 30, n3 = 1;
  Index num_observed = 600;  // |Omega|; 0 means every entry
  // network geometry
  Index input_dim = 50;
  Index num_inputs = 1000;
  Activation activation = Activation::kRelu;
  // demixing geometry
  Index sensors = 8;
  Index grid = 16;

  Index true_order = 2;
  double sigma = 5.0;
  double N = 1.0;      // sample size; the noise variance is sigma^2 / N
  double drift = 0.0;  // every coordinate of gamma
  /// Standard deviation of factor / weight entries of the true model
  /// (matrix, tensor and network families; demixing uses its own generator).
  double signal_scale = 1.0;
  Index r_max = 4;
  double alpha = 0.05;
  /// Estimate sigma^2 by leave-out when set; otherwise the true sigma is used.
  std::optional<LeaveOutSpec> leave_out;
  FitOptions fit;

  void validate() const;  // throws kInvalidParameter
};

/// One synthesized data set: the family on the drawn geometry, the
/// observation and the true parameter.
struct ScenarioInstance {
  FamilyPtr family;
  ObservationSet obs;
  Vector theta_true;
};

ScenarioInstance synthesize_scenario(const Scenario& sc, RngSeed seed);

struct ReplicationOutcome {
  std::size_t rep = 0;
  bool ok = false;
  std::string error;
  SelectionTrace trace;
};

struct ReplicationSummary {
  std::size_t num_reps = 0;
  std::size_t completed = 0;
  std::size_t failed = 0;               // completed + failed == num_reps
  std::map<Index, std::size_t> counts;  // chosen order -> completed replications
  std::optional<double> fdr;            // undefined without completed runs
  Index true_order = 0;
  std::vector<ReplicationOutcome> outcomes;  // ordered by rep
};

/// Replication i uses seed.split(i) and is independent of scheduling; at
/// most `jobs` run concurrently. Failures are recorded, never rethrown.
ReplicationSummary run_replications(const Scenario& sc, std::size_t num_reps, RngSeed seed,
                                    unsigned jobs = 1);

/// Runs `task(i)` for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& task);

}  // namespace mgof
