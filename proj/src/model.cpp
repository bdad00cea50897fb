#include "mgof/model.hpp"

#include <cmath>

namespace mgof {

RealMatrix ManifoldModel::jacobian(const Vector& theta) const {
  return fd_jacobian([this](const Vector& t) { return evaluate(t); }, theta);
}

Vector ManifoldModel::sample_param(RngSeed seed) const {
  Rng rng = make_rng(seed);
  return standard_normal(rng, param_dim());
}

// ---------------------------------------------------------------------------

DecomposableModel::DecomposableModel(ModelPtr nonlinear, RealMatrix linear)
    : nonlinear_(std::move(nonlinear)), linear_(std::move(linear)) {
  if (!nonlinear_) throw Error(ErrorKind::kInvalidModel, "decomposable model: null map");
  if (linear_.rows() != nonlinear_->obs_dim()) {
    throw Error(ErrorKind::kInvalidModel,
                "decomposable model: linear part has " + std::to_string(linear_.rows()) +
                    " rows, expected " + std::to_string(nonlinear_->obs_dim()));
  }
  if (linear_.cols() > 0 && numerical_rank(linear_) != linear_.cols()) {
    throw Error(ErrorKind::kInvalidModel,
                "decomposable model: linear part does not have full column rank");
  }
}

std::string DecomposableModel::name() const {
  return nonlinear_->name() + "+linear(" + std::to_string(linear_.cols()) + ")";
}

Vector DecomposableModel::evaluate(const Vector& theta) const {
  const Index d = nonlinear_->param_dim();
  Vector out = nonlinear_->evaluate(theta.head(d));
  if (linear_.cols() > 0) out += linear_ * theta.tail(linear_.cols());
  return out;
}

RealMatrix DecomposableModel::jacobian(const Vector& theta) const {
  const Index d = nonlinear_->param_dim();
  RealMatrix jac(obs_dim(), param_dim());
  jac.leftCols(d) = nonlinear_->jacobian(theta.head(d));
  jac.rightCols(linear_.cols()) = linear_;
  return jac;
}

Vector DecomposableModel::sample_param(RngSeed seed) const {
  Vector theta(param_dim());
  theta.head(nonlinear_->param_dim()) = nonlinear_->sample_param(seed.split(0));
  Rng rng = make_rng(seed.split(1));
  theta.tail(linear_.cols()) = standard_normal(rng, linear_.cols());
  return theta;
}

// ---------------------------------------------------------------------------

double ObservationSet::sigma() const {
  if (!sigma_known()) throw Error(ErrorKind::kInvalidInput, "noise level is unknown");
  return std::get<double>(noise_sd);
}

void ObservationSet::validate() const {
  if (!y_hat.allFinite()) throw Error(ErrorKind::kInvalidInput, "observation has non-finite entries");
  if (sigma_known() && !(sigma() > 0.0)) {
    throw Error(ErrorKind::kInvalidInput, "noise sd must be positive");
  }
  if (drift.size() != 0 && drift.size() != y_hat.size()) {
    throw Error(ErrorKind::kInvalidInput, "drift length does not match the observation");
  }
  if (!(N > 0.0)) throw Error(ErrorKind::kInvalidInput, "N must be positive");
}

ObservationSet synthesize_observation(const ManifoldModel& model, const Vector& theta_true,
                                      double sigma, const Vector& gamma, double N,
                                      RngSeed seed) {
  if (!(sigma >= 0.0) || !(N > 0.0)) {
    throw Error(ErrorKind::kInvalidParameter, "synthesize_observation: need sigma >= 0, N > 0");
  }
  Vector x0 = model.evaluate(theta_true);
  if (!x0.allFinite()) {
    throw Error(ErrorKind::kNumericalFailure, "synthesize_observation: G(theta) not finite");
  }
  if (gamma.size() != 0 && gamma.size() != x0.size()) {
    throw Error(ErrorKind::kInvalidParameter, "synthesize_observation: drift has wrong length");
  }
  Rng rng = make_rng(seed);
  const double scale = std::sqrt(N);
  ObservationSet obs;
  obs.y_hat = x0 + standard_normal(rng, x0.size()) * (sigma / scale);
  if (gamma.size() != 0) obs.y_hat += gamma / scale;
  obs.noise_sd = sigma;
  obs.drift = gamma;
  obs.N = N;
  return obs;
}

// ---------------------------------------------------------------------------

WellPosednessReport check_well_posedness(const DecomposableModel& dm, int num_samples,
                                         RngSeed seed, const RankPolicy& policy) {
  if (num_samples < 1) {
    throw Error(ErrorKind::kInvalidParameter, "check_well_posedness: num_samples must be >= 1");
  }
  WellPosednessReport report;
  report.k = dm.linear_dim();
  for (int s = 0; s < num_samples; ++s) {
    Vector theta = dm.sample_param(seed.split(static_cast<std::uint64_t>(s)));
    RealMatrix full = dm.jacobian(theta);
    const Index d = dm.nonlinear().param_dim();
    report.rho_hat = std::max(report.rho_hat, numerical_rank(full.leftCols(d), policy));
    report.r_hat = std::max(report.r_hat, numerical_rank(full, policy));
  }
  report.well_posed = report.r_hat == report.rho_hat + report.k;
  return report;
}

}  // namespace mgof
