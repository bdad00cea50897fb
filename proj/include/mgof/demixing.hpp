#pragma once

// Blind demixing of Gaussian sources s_k(t) = rho_k exp(-alpha_k t^2) seen
// through per-sensor delays tau_{n,k}. The observations are real and
// imaginary parts of the frequency-domain sensor cross-correlations
//
//   R_{n,m}(f) = sum_k sum_l rho_k rho_l exp(2 pi i f (tau_{n,l} - tau_{m,k}))
//                * pi / sqrt(alpha_k alpha_l) * exp(-pi^2 f^2 (1/alpha_k + 1/alpha_l))
//
// at integer frequencies f = 0 .. T-1.
//
// theta = (rho_1..rho_K, alpha_1..alpha_K, tau_{1,1}, tau_{1,2}, .., tau_{N,K}),
// i.e. tau_{n,k} sits at 2K + n K + k (zero-based n, k).
// Observation layout: Re R over Omega, then Im R over Omega.

#include <complex>
#include <vector>

#include "mgof/model.hpp"

namespace mgof {

struct DemixEntry {
  Index n = 0, m = 0, f = 0;
  friend bool operator==(const DemixEntry&, const DemixEntry&) = default;
};

using DemixIndexSet = std::vector<DemixEntry>;

/// All (n, m, f) with n <= m; the Hermitian duplicates are dropped.
DemixIndexSet upper_demix_index(Index sensors, Index grid);
DemixIndexSet full_demix_index(Index sensors, Index grid);

struct DemixParams {
  Vector rho;    // K
  Vector alpha;  // K, > 0
  RealMatrix tau;  // N x K
};

class DemixingModel final : public ManifoldModel {
 public:
  /// Omega defaults to upper_demix_index(sensors, grid).
  DemixingModel(Index sensors, Index sources, Index grid, DemixIndexSet omega = {});

  std::string name() const override { return "demixing"; }
  Index param_dim() const override { return 2 * K_ + N_ * K_; }
  Index obs_dim() const override { return 2 * static_cast<Index>(omega_.size()); }
  Vector evaluate(const Vector& theta) const override;
  RealMatrix jacobian(const Vector& theta) const override;
  bool has_analytic_jacobian() const override { return true; }

  /// rho_k, alpha_k ~ U[10, 11], tau_{n,k} ~ U[-2.5, 2.5].
  Vector sample_param(RngSeed seed) const override;
  /// 2K + NK - 1.
  std::optional<Index> claimed_char_rank() const override { return 2 * K_ + N_ * K_ - 1; }

  /// Complex cross-correlation R_{n,m}(f) by the closed-form double sum.
  std::complex<double> cross_spectrum(const DemixParams& p, Index n, Index m, Index f) const;

  DemixParams unpack(const Vector& theta) const;
  Vector pack(const DemixParams& p) const;

  Index sensors() const { return N_; }
  Index sources() const { return K_; }
  Index grid() const { return T_; }
  const DemixIndexSet& omega() const { return omega_; }

 private:
  Index N_, K_, T_;
  DemixIndexSet omega_;
};

/// The same map with alpha_k = exp(beta_k), so that unconstrained steps keep
/// every width positive. Used by the fitter; rank diagnostics use the
/// natural coordinates of DemixingModel.
class LogWidthDemixingModel final : public ManifoldModel {
 public:
  explicit LogWidthDemixingModel(std::shared_ptr<const DemixingModel> base)
      : base_(std::move(base)) {}

  std::string name() const override { return "demixing-logwidth"; }
  Index param_dim() const override { return base_->param_dim(); }
  Index obs_dim() const override { return base_->obs_dim(); }
  Vector evaluate(const Vector& theta) const override { return base_->evaluate(to_natural(theta)); }
  RealMatrix jacobian(const Vector& theta) const override;
  bool has_analytic_jacobian() const override { return true; }
  Vector sample_param(RngSeed seed) const override {
    return from_natural(base_->sample_param(seed));
  }

  Vector to_natural(const Vector& theta) const;
  Vector from_natural(const Vector& theta) const;
  const DemixingModel& base() const { return *base_; }

 private:
  std::shared_ptr<const DemixingModel> base_;
};

}  // namespace mgof
