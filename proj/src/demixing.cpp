#include "mgof/demixing.hpp"

#include <cmath>
#include <numbers>

namespace mgof {

namespace {
constexpr double kPi = std::numbers::pi;

// pi / sqrt(a_k a_l) * exp(-pi^2 f^2 (1/a_k + 1/a_l)), assembled in log space
// so that large f^2 / alpha underflows to zero instead of producing inf * 0.
double envelope(double ak, double al, double f) {
  const double log_w = std::log(kPi) - 0.5 * (std::log(ak) + std::log(al)) -
                       kPi * kPi * f * f * (1.0 / ak + 1.0 / al);
  return std::exp(log_w);
}
}  // namespace

DemixIndexSet upper_demix_index(Index sensors, Index grid) {
  DemixIndexSet out;
  for (Index n = 0; n < sensors; ++n)
    for (Index m = n; m < sensors; ++m)
      for (Index f = 0; f < grid; ++f) out.push_back({n, m, f});
  return out;
}

DemixIndexSet full_demix_index(Index sensors, Index grid) {
  DemixIndexSet out;
  for (Index n = 0; n < sensors; ++n)
    for (Index m = 0; m < sensors; ++m)
      for (Index f = 0; f < grid; ++f) out.push_back({n, m, f});
  return out;
}

DemixingModel::DemixingModel(Index sensors, Index sources, Index grid, DemixIndexSet omega)
    : N_(sensors), K_(sources), T_(grid), omega_(std::move(omega)) {
  if (N_ < 1) throw Error(ErrorKind::kInvalidParameter, "demixing: need at least one sensor");
  if (K_ < 1) throw Error(ErrorKind::kInvalidParameter, "demixing: need K >= 1");
  if (T_ < 2) throw Error(ErrorKind::kInvalidParameter, "demixing: need T >= 2");
  if (omega_.empty()) omega_ = upper_demix_index(N_, T_);
  for (const auto& e : omega_) {
    if (e.n < 0 || e.n >= N_ || e.m < 0 || e.m >= N_ || e.f < 0 || e.f >= T_) {
      throw Error(ErrorKind::kInvalidParameter, "demixing: index out of range");
    }
  }
}

DemixParams DemixingModel::unpack(const Vector& theta) const {
  DemixParams p;
  p.rho = theta.head(K_);
  p.alpha = theta.segment(K_, K_);
  p.tau.resize(N_, K_);
  for (Index n = 0; n < N_; ++n)
    for (Index k = 0; k < K_; ++k) p.tau(n, k) = theta(2 * K_ + n * K_ + k);
  return p;
}

Vector DemixingModel::pack(const DemixParams& p) const {
  Vector theta(param_dim());
  theta.head(K_) = p.rho;
  theta.segment(K_, K_) = p.alpha;
  for (Index n = 0; n < N_; ++n)
    for (Index k = 0; k < K_; ++k) theta(2 * K_ + n * K_ + k) = p.tau(n, k);
  return theta;
}

Vector DemixingModel::sample_param(RngSeed seed) const {
  Rng rng = make_rng(seed);
  DemixParams p;
  p.rho = uniform(rng, K_, 10.0, 11.0);
  p.alpha = uniform(rng, K_, 10.0, 11.0);
  Vector tau = uniform(rng, N_ * K_, -2.5, 2.5);
  p.tau = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      tau.data(), N_, K_);
  return pack(p);
}

std::complex<double> DemixingModel::cross_spectrum(const DemixParams& p, Index n, Index m,
                                                   Index f) const {
  const double fd = static_cast<double>(f);
  std::complex<double> sum = 0.0;
  for (Index k = 0; k < K_; ++k) {
    for (Index l = 0; l < K_; ++l) {
      const double phase = 2.0 * kPi * fd * (p.tau(n, l) - p.tau(m, k));
      const double w = p.rho(k) * p.rho(l) * envelope(p.alpha(k), p.alpha(l), fd);
      sum += w * std::complex<double>(std::cos(phase), std::sin(phase));
    }
  }
  return sum;
}

Vector DemixingModel::evaluate(const Vector& theta) const {
  const DemixParams p = unpack(theta);
  for (Index k = 0; k < K_; ++k) {
    if (!(p.alpha(k) > 0.0)) throw Error(ErrorKind::kInvalidInput, "demixing: alpha must be > 0");
  }
  const auto M = static_cast<Index>(omega_.size());
  Vector out(2 * M);
  for (Index t = 0; t < M; ++t) {
    const auto& e = omega_[static_cast<std::size_t>(t)];
    const auto r = cross_spectrum(p, e.n, e.m, e.f);
    out(t) = r.real();
    out(M + t) = r.imag();
  }
  return out;
}

RealMatrix DemixingModel::jacobian(const Vector& theta) const {
  const DemixParams p = unpack(theta);
  const auto M = static_cast<Index>(omega_.size());
  RealMatrix jac = RealMatrix::Zero(2 * M, param_dim());
  auto tau_col = [&](Index n, Index k) { return 2 * K_ + n * K_ + k; };

  for (Index t = 0; t < M; ++t) {
    const auto& e = omega_[static_cast<std::size_t>(t)];
    const Index n = e.n, m = e.m;
    const double f = static_cast<double>(e.f);
    const double two_pi_f = 2.0 * kPi * f;
    for (Index k0 = 0; k0 < K_; ++k0) {
      double dre_drho = 0.0, dim_drho = 0.0;
      double dre_dtau_n = 0.0, dim_dtau_n = 0.0;  // the 1(n = n0) terms
      double dre_dtau_m = 0.0, dim_dtau_m = 0.0;  // the 1(m = n0) terms
      for (Index l = 0; l < K_; ++l) {
        const double env = envelope(p.alpha(k0), p.alpha(l), f);
        const double a = two_pi_f * (p.tau(n, l) - p.tau(m, k0));
        const double b = two_pi_f * (p.tau(n, k0) - p.tau(m, l));
        dre_drho += p.rho(l) * (std::cos(a) + std::cos(b)) * env;
        dim_drho += p.rho(l) * (std::sin(a) + std::sin(b)) * env;

        const double w = p.rho(l) * p.rho(k0) * env;
        const double c = two_pi_f * (p.tau(n, k0) - p.tau(m, l));
        const double d = two_pi_f * (p.tau(n, l) - p.tau(m, k0));
        dre_dtau_n += w * (-two_pi_f * std::sin(c));
        dim_dtau_n += w * (two_pi_f * std::cos(c));
        dre_dtau_m += w * (two_pi_f * std::sin(d));
        dim_dtau_m += w * (-two_pi_f * std::cos(d));
      }
      const double ak = p.alpha(k0);
      const double alpha_factor = -0.5 * p.rho(k0) / ak + kPi * kPi * f * f * p.rho(k0) / (ak * ak);
      jac(t, k0) = dre_drho;
      jac(M + t, k0) = dim_drho;
      jac(t, K_ + k0) = dre_drho * alpha_factor;
      jac(M + t, K_ + k0) = dim_drho * alpha_factor;
      jac(t, tau_col(n, k0)) += dre_dtau_n;
      jac(M + t, tau_col(n, k0)) += dim_dtau_n;
      jac(t, tau_col(m, k0)) += dre_dtau_m;
      jac(M + t, tau_col(m, k0)) += dim_dtau_m;
    }
  }
  return jac;
}

// ---------------------------------------------------------------------------

Vector LogWidthDemixingModel::to_natural(const Vector& theta) const {
  Vector out = theta;
  const Index K = base_->sources();
  out.segment(K, K) = theta.segment(K, K).array().exp();
  return out;
}

Vector LogWidthDemixingModel::from_natural(const Vector& theta) const {
  Vector out = theta;
  const Index K = base_->sources();
  out.segment(K, K) = theta.segment(K, K).array().log();
  return out;
}

RealMatrix LogWidthDemixingModel::jacobian(const Vector& theta) const {
  const Vector natural = to_natural(theta);
  RealMatrix jac = base_->jacobian(natural);
  const Index K = base_->sources();
  for (Index k = 0; k < K; ++k) jac.col(K + k) *= natural(K + k);
  return jac;
}

}  // namespace mgof
