#include "mgof/selection.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace mgof {

const char* to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::kRealMatrix: return "real_matrix";
    case FamilyKind::kComplexMatrix: return "complex_matrix";
    case FamilyKind::kTensor: return "tensor";
    case FamilyKind::kNeuralNet: return "nn";
    case FamilyKind::kDemixing: return "demixing";
  }
  return "unknown";
}

FamilyKind parse_family_kind(std::string_view s) {
  if (s == "real_matrix") return FamilyKind::kRealMatrix;
  if (s == "complex_matrix") return FamilyKind::kComplexMatrix;
  if (s == "tensor") return FamilyKind::kTensor;
  if (s == "nn") return FamilyKind::kNeuralNet;
  if (s == "demixing") return FamilyKind::kDemixing;
  throw Error(ErrorKind::kInvalidParameter, "unknown model family '" + std::string(s) + "'");
}

const char* to_string(Decision d) {
  switch (d) {
    case Decision::kReject: return "reject";
    case Decision::kAccept: return "accept";
    case Decision::kSkipped: return "skipped";
  }
  return "unknown";
}

std::string ModelFamily::name() const { return to_string(kind()); }

namespace {

template <class Entry>
std::vector<Entry> pick(const std::vector<Entry>& all, const std::vector<Index>& kept) {
  std::vector<Entry> out;
  out.reserve(kept.size());
  for (Index u : kept) {
    if (u < 0 || u >= static_cast<Index>(all.size())) {
      throw Error(ErrorKind::kInvalidParameter, "restrict: unit index out of range");
    }
    out.push_back(all[static_cast<std::size_t>(u)]);
  }
  return out;
}

// Units owning coordinates t and (paired) units + t.
Vector pick_coords(const Vector& y, const std::vector<Index>& kept, Index units, bool paired) {
  const auto k = static_cast<Index>(kept.size());
  Vector out(paired ? 2 * k : k);
  for (Index q = 0; q < k; ++q) {
    out(q) = y(kept[static_cast<std::size_t>(q)]);
    if (paired) out(k + q) = y(units + kept[static_cast<std::size_t>(q)]);
  }
  return out;
}

class MatrixFamily final : public ModelFamily {
 public:
  MatrixFamily(Index n1, Index n2, MatrixIndexSet omega, Field field)
      : n1_(n1), n2_(n2), omega_(std::move(omega)), field_(field) {
    if (omega_.empty()) throw Error(ErrorKind::kInvalidParameter, "matrix family: empty Omega");
  }

  FamilyKind kind() const override {
    return field_ == Field::kReal ? FamilyKind::kRealMatrix : FamilyKind::kComplexMatrix;
  }
  Index obs_dim() const override { return copies() * num_units(); }
  Index char_rank(Index order) const override {
    const Index r = std::min(order, std::min(n1_, n2_));
    return copies() * r * (n1_ + n2_ - r);
  }
  FitResult fit(Index order, const Vector& y, const FitOptions& opts, RngSeed seed) const override {
    return field_ == Field::kReal ? fit_lowrank_matrix(omega_, y, n1_, n2_, order, opts, seed)
                                  : fit_lowrank_complex(omega_, y, n1_, n2_, order, opts, seed);
  }
  Index num_units() const override { return static_cast<Index>(omega_.size()); }
  FamilyPtr restrict(const std::vector<Index>& kept) const override {
    return std::make_shared<MatrixFamily>(n1_, n2_, pick(omega_, kept), field_);
  }
  Vector restrict_obs(const Vector& y, const std::vector<Index>& kept) const override {
    return pick_coords(y, kept, num_units(), field_ == Field::kComplex);
  }
  ModelPtr model(Index order) const override {
    return std::make_shared<MatrixCompletionModel>(n1_, n2_, order, omega_, field_);
  }

 private:
  Index copies() const { return field_ == Field::kReal ? 1 : 2; }
  Index n1_, n2_;
  MatrixIndexSet omega_;
  Field field_;
};

class TensorFamily final : public ModelFamily {
 public:
  TensorFamily(Index n1, Index n2, Index n3, TensorIndexSet omega, RngSeed rank_seed)
      : n1_(n1), n2_(n2), n3_(n3), omega_(std::move(omega)), rank_seed_(rank_seed) {
    if (omega_.empty()) omega_ = full_tensor_index(n1, n2, n3);
  }

  FamilyKind kind() const override { return FamilyKind::kTensor; }
  Index obs_dim() const override { return static_cast<Index>(omega_.size()); }
  Index char_rank(Index order) const override {
    std::lock_guard lock(mu_);
    auto it = cache_.find(order);
    if (it != cache_.end()) return it->second;
    const TensorCPModel m(n1_, n2_, n3_, order, omega_);
    const Index r = estimate_char_rank(m, kDefaultRankSamples,
                                       rank_seed_.split(static_cast<std::uint64_t>(order)))
                        .estimate;
    cache_.emplace(order, r);
    return r;
  }
  FitResult fit(Index order, const Vector& y, const FitOptions& opts, RngSeed seed) const override {
    return fit_tensor_cp(omega_, y, n1_, n2_, n3_, order, opts, seed);
  }
  Index num_units() const override { return static_cast<Index>(omega_.size()); }
  FamilyPtr restrict(const std::vector<Index>& kept) const override {
    return std::make_shared<TensorFamily>(n1_, n2_, n3_, pick(omega_, kept), rank_seed_);
  }
  Vector restrict_obs(const Vector& y, const std::vector<Index>& kept) const override {
    return pick_coords(y, kept, num_units(), false);
  }
  ModelPtr model(Index order) const override {
    return std::make_shared<TensorCPModel>(n1_, n2_, n3_, order, omega_);
  }

 private:
  Index n1_, n2_, n3_;
  TensorIndexSet omega_;
  RngSeed rank_seed_;
  mutable std::mutex mu_;
  mutable std::map<Index, Index> cache_;
};

class NNFamily final : public ModelFamily {
 public:
  NNFamily(RealMatrix inputs, Activation activation)
      : inputs_(std::move(inputs)), activation_(activation) {}

  FamilyKind kind() const override { return FamilyKind::kNeuralNet; }
  std::string name() const override { return std::string("nn-") + to_string(activation_); }
  Index obs_dim() const override { return inputs_.rows(); }
  Index char_rank(Index order) const override {
    const OneLayerNNModel m(inputs_, order, activation_);
    return m.claimed_char_rank().value_or(m.heuristic_char_rank());
  }
  bool heuristic_dof() const override { return activation_ == Activation::kRelu; }
  FitResult fit(Index order, const Vector& y, const FitOptions& opts, RngSeed seed) const override {
    return fit_nn(inputs_, y, order, activation_, opts, seed);
  }
  Index num_units() const override { return inputs_.rows(); }
  FamilyPtr restrict(const std::vector<Index>& kept) const override {
    RealMatrix sub(static_cast<Index>(kept.size()), inputs_.cols());
    for (std::size_t q = 0; q < kept.size(); ++q) sub.row(static_cast<Index>(q)) = inputs_.row(kept[q]);
    return std::make_shared<NNFamily>(std::move(sub), activation_);
  }
  Vector restrict_obs(const Vector& y, const std::vector<Index>& kept) const override {
    return pick_coords(y, kept, num_units(), false);
  }
  ModelPtr model(Index order) const override {
    return std::make_shared<OneLayerNNModel>(inputs_, order, activation_);
  }

 private:
  RealMatrix inputs_;
  Activation activation_;
};

class DemixingFamily final : public ModelFamily {
 public:
  DemixingFamily(Index sensors, Index grid, DemixIndexSet omega)
      : N_(sensors), T_(grid), omega_(std::move(omega)) {
    if (omega_.empty()) omega_ = upper_demix_index(N_, T_);
  }

  FamilyKind kind() const override { return FamilyKind::kDemixing; }
  Index obs_dim() const override { return 2 * num_units(); }
  Index char_rank(Index order) const override { return 2 * order + N_ * order - 1; }
  FitResult fit(Index order, const Vector& y, const FitOptions& opts, RngSeed seed) const override {
    return fit_demixing(N_, order, T_, omega_, y, opts, seed);
  }
  FitOptions fit_options(Index order, const FitOptions& base) const override {
    FitOptions o = base;
    o.num_restarts = std::max(base.num_restarts, default_demixing_restarts(order));
    return o;
  }
  Index num_units() const override { return static_cast<Index>(omega_.size()); }
  FamilyPtr restrict(const std::vector<Index>& kept) const override {
    return std::make_shared<DemixingFamily>(N_, T_, pick(omega_, kept));
  }
  Vector restrict_obs(const Vector& y, const std::vector<Index>& kept) const override {
    return pick_coords(y, kept, num_units(), true);
  }
  ModelPtr model(Index order) const override {
    return std::make_shared<DemixingModel>(N_, order, T_, omega_);
  }

 private:
  Index N_, T_;
  DemixIndexSet omega_;
};

}  // namespace

FamilyPtr make_matrix_family(Index n1, Index n2, MatrixIndexSet omega, Field field) {
  return std::make_shared<MatrixFamily>(n1, n2, std::move(omega), field);
}
FamilyPtr make_tensor_family(Index n1, Index n2, Index n3, TensorIndexSet omega, RngSeed rank_seed) {
  return std::make_shared<TensorFamily>(n1, n2, n3, std::move(omega), rank_seed);
}
FamilyPtr make_nn_family(RealMatrix inputs, Activation activation) {
  return std::make_shared<NNFamily>(std::move(inputs), activation);
}
FamilyPtr make_demixing_family(Index sensors, Index grid, DemixIndexSet omega) {
  return std::make_shared<DemixingFamily>(sensors, grid, std::move(omega));
}

// ---------------------------------------------------------------------------

VarianceEstimate estimate_sigma2(const ModelFamily& family, const Vector& y, double N,
                                 const LeaveOutSpec& spec, const FitOptions& opts, RngSeed seed) {
  if (y.size() != family.obs_dim()) {
    throw Error(ErrorKind::kInvalidInput, "sigma^2 estimate: observation length mismatch");
  }
  if (spec.kept_units < 1 || spec.kept_units >= family.num_units()) {
    throw Error(ErrorKind::kInvalidParameter,
                "sigma^2 estimate: the inner set must keep between 1 and " +
                    std::to_string(family.num_units() - 1) + " units");
  }
  Rng rng = make_rng(seed.split(0));
  const std::vector<Index> kept = sample_without_replacement(rng, family.num_units(), spec.kept_units);
  const FitOptions o = family.fit_options(spec.order, opts);
  const FitResult outer = family.fit(spec.order, y, o, seed.split(1));
  const FamilyPtr inner_family = family.restrict(kept);
  const FitResult inner = inner_family->fit(spec.order, family.restrict_obs(y, kept), o, seed.split(2));
  return variance_from_leave_out(outer.rss, inner.rss, family.obs_dim() - inner_family->obs_dim(), N);
}

SelectionTrace select_order(const ModelFamily& family, const ObservationSet& obs, Index r_max,
                            double alpha, const Sigma2Policy& sigma2, const FitOptions& opts,
                            RngSeed seed) {
  if (r_max < 1) throw Error(ErrorKind::kInvalidParameter, "select: r_max must be >= 1");
  if (!(alpha > 0 && alpha < 1)) throw Error(ErrorKind::kInvalidParameter, "select: alpha must be in (0, 1)");
  obs.validate();
  if (obs.y_hat.size() != family.obs_dim()) {
    throw Error(ErrorKind::kInvalidInput, "select: observation length does not match the family");
  }

  SelectionTrace trace;
  trace.alpha = alpha;
  trace.r_max = r_max;
  if (const auto* known = std::get_if<Sigma2>(&sigma2)) {
    trace.sigma2 = *known;
  } else {
    const auto& spec = std::get<LeaveOutSpec>(sigma2);
    trace.sigma2_estimate = estimate_sigma2(family, obs.y_hat, obs.N, spec, opts, seed.split(0));
    trace.sigma2 = {trace.sigma2_estimate->sigma2, Sigma2Source::kEstimated};
  }

  for (Index r = 1; r <= r_max; ++r) {
    SelectionEntry entry;
    entry.order = r;
    try {
      const Index cr = family.char_rank(r);
      if (family.obs_dim() <= cr) {
        throw Error(ErrorKind::kUnderdetermined, "characteristic rank " + std::to_string(cr) +
                                                     " >= m = " + std::to_string(family.obs_dim()));
      }
      FitOptions o = family.fit_options(r, opts);
      if (!o.accept_rss) {
        const double q = chi2_quantile(1.0 - alpha, static_cast<double>(family.obs_dim() - cr));
        o.accept_rss = trace.sigma2.value * q / obs.N;
      }
      const FitResult fit = family.fit(r, obs.y_hat, o, seed.split(static_cast<std::uint64_t>(r)));
      entry.restarts_used = fit.restarts_used;
      entry.report = gof_test(obs, fit, cr, trace.sigma2, std::nullopt, family.heuristic_dof());
      entry.decision = entry.report->p_value > alpha ? Decision::kAccept : Decision::kReject;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kUnderdetermined) throw;
      entry.decision = Decision::kSkipped;
      entry.note = e.what();
    }
    trace.entries.push_back(std::move(entry));
    if (trace.entries.back().decision == Decision::kAccept) {
      trace.chosen_order = r;
      break;
    }
  }
  return trace;
}

// ---------------------------------------------------------------------------

void Scenario::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::kInvalidParameter, "scenario: " + m); };
  if (true_order < 1) fail("true_order must be >= 1");
  if (r_max < 1) fail("r_max must be >= 1");
  if (!(alpha > 0 && alpha < 1)) fail("alpha must be in (0, 1)");
  if (!(sigma > 0)) fail("sigma must be positive");
  if (!(signal_scale > 0)) fail("signal_scale must be positive");
  if (!(N > 0)) fail("N must be positive");
  if (!std::isfinite(drift)) fail("drift must be finite");
  if (num_observed < 0) fail("num_observed must be >= 0");
  switch (family) {
    case FamilyKind::kRealMatrix:
    case FamilyKind::kComplexMatrix:
      if (n1 < 1 || n2 < 1) fail("matrix dimensions must be >= 1");
      if (num_observed > n1 * n2) fail("num_observed exceeds n1 * n2");
      break;
    case FamilyKind::kTensor:
      if (n1 < 1 || n2 < 1 || n3 < 1) fail("tensor dimensions must be >= 1");
      if (num_observed > n1 * n2 * n3) fail("num_observed exceeds n1 * n2 * n3");
      break;
    case FamilyKind::kNeuralNet:
      if (input_dim < 1 || num_inputs < 1) fail("network dimensions must be >= 1");
      break;
    case FamilyKind::kDemixing:
      if (sensors < 1 || grid < 2) fail("need sensors >= 1 and grid >= 2");
      if (num_observed > sensors * (sensors + 1) / 2 * grid) fail("num_observed exceeds |Omega| upper bound");
      break;
  }
  fit.validate();
}

ScenarioInstance synthesize_scenario(const Scenario& sc, RngSeed seed) {
  sc.validate();
  Rng rng = make_rng(seed.split(0));
  ScenarioInstance inst;
  ModelPtr truth;
  switch (sc.family) {
    case FamilyKind::kRealMatrix:
    case FamilyKind::kComplexMatrix: {
      const Field field = sc.family == FamilyKind::kRealMatrix ? Field::kReal : Field::kComplex;
      MatrixIndexSet omega = sc.num_observed == 0
                                 ? full_matrix_index(sc.n1, sc.n2)
                                 : sample_matrix_index(sc.n1, sc.n2, sc.num_observed, rng);
      truth = std::make_shared<MatrixCompletionModel>(sc.n1, sc.n2, sc.true_order, omega, field);
      inst.family = make_matrix_family(sc.n1, sc.n2, std::move(omega), field);
      inst.theta_true = sc.signal_scale * standard_normal(rng, truth->param_dim());
      break;
    }
    case FamilyKind::kTensor: {
      TensorIndexSet omega = sc.num_observed == 0
                                 ? full_tensor_index(sc.n1, sc.n2, sc.n3)
                                 : sample_tensor_index(sc.n1, sc.n2, sc.n3, sc.num_observed, rng);
      truth = std::make_shared<TensorCPModel>(sc.n1, sc.n2, sc.n3, sc.true_order, omega);
      inst.family = make_tensor_family(sc.n1, sc.n2, sc.n3, std::move(omega), seed.split(3));
      inst.theta_true = sc.signal_scale * standard_normal(rng, truth->param_dim());
      break;
    }
    case FamilyKind::kNeuralNet: {
      RealMatrix inputs = gaussian_design(sc.num_inputs, sc.input_dim, rng);
      truth = std::make_shared<OneLayerNNModel>(inputs, sc.true_order, sc.activation);
      inst.family = make_nn_family(std::move(inputs), sc.activation);
      inst.theta_true = sc.signal_scale * standard_normal(rng, truth->param_dim());
      break;
    }
    case FamilyKind::kDemixing: {
      DemixIndexSet omega = upper_demix_index(sc.sensors, sc.grid);
      if (sc.num_observed > 0) omega = pick(omega, sample_without_replacement(
                                                       rng, static_cast<Index>(omega.size()), sc.num_observed));
      truth = std::make_shared<DemixingModel>(sc.sensors, sc.true_order, sc.grid, omega);
      inst.family = make_demixing_family(sc.sensors, sc.grid, std::move(omega));
      inst.theta_true = truth->sample_param(seed.split(2));
      break;
    }
  }
  const Vector gamma = sc.drift != 0.0 ? Vector::Constant(truth->obs_dim(), sc.drift) : Vector();
  inst.obs = synthesize_observation(*truth, inst.theta_true, sc.sigma, gamma, sc.N, seed.split(1));
  return inst;
}

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& task) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (unsigned t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) task(i);
    });
  }
  for (auto& th : pool) th.join();
}

ReplicationSummary run_replications(const Scenario& sc, std::size_t num_reps, RngSeed seed,
                                    unsigned jobs) {
  sc.validate();
  ReplicationSummary summary;
  summary.num_reps = num_reps;
  summary.true_order = sc.true_order;
  summary.outcomes.resize(num_reps);
  const Sigma2Policy policy = sc.leave_out ? Sigma2Policy(*sc.leave_out)
                                           : Sigma2Policy(Sigma2{sc.sigma * sc.sigma, Sigma2Source::kKnown});
  parallel_for(num_reps, jobs, [&](std::size_t i) {
    ReplicationOutcome& out = summary.outcomes[i];
    out.rep = i;
    const RngSeed s = seed.split(i);
    try {
      const ScenarioInstance inst = synthesize_scenario(sc, s.split(0));
      out.trace = select_order(*inst.family, inst.obs, sc.r_max, sc.alpha, policy, sc.fit, s.split(1));
      out.ok = true;
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  });
  std::size_t wrong = 0;
  for (const auto& o : summary.outcomes) {
    if (!o.ok) {
      ++summary.failed;
      continue;
    }
    ++summary.completed;
    ++summary.counts[o.trace.chosen_order];
    if (o.trace.chosen_order != sc.true_order) ++wrong;
  }
  if (summary.completed > 0) {
    summary.fdr = static_cast<double>(wrong) / static_cast<double>(summary.completed);
  }
  return summary;
}

}  // namespace mgof
