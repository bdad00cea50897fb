#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "mgof/numerics.hpp"

namespace mgof {

/// A smooth map theta -> G(theta) from R^d to R^m.
///
/// Implementations are immutable after construction; every method is const
/// and may be called concurrently.
class ManifoldModel {
 public:
  virtual ~ManifoldModel() = default;

  virtual std::string name() const = 0;
  virtual Index param_dim() const = 0;
  virtual Index obs_dim() const = 0;

  virtual Vector evaluate(const Vector& theta) const = 0;

  /// m x d Jacobian. The base implementation falls back to central
  /// differences; catalog models override it with analytic formulas.
  virtual RealMatrix jacobian(const Vector& theta) const;
  virtual bool has_analytic_jacobian() const { return false; }

  /// A draw from the model's generic parameter distribution (iid standard
  /// normal unless overridden).
  virtual Vector sample_param(RngSeed seed) const;

  /// Characteristic rank from a closed-form formula, when one is known.
  virtual std::optional<Index> claimed_char_rank() const { return std::nullopt; }

  /// False for maps that are only piecewise smooth (ReLU); genericity of the
  /// Jacobian rank is then not guaranteed.
  virtual bool is_analytic() const { return true; }
};

using ModelPtr = std::shared_ptr<const ManifoldModel>;

/// Thin adapter for ad-hoc maps, mostly used in tests.
class LambdaModel final : public ManifoldModel {
 public:
  LambdaModel(std::string name, Index d, Index m, MapFn f)
      : name_(std::move(name)), d_(d), m_(m), f_(std::move(f)) {}

  std::string name() const override { return name_; }
  Index param_dim() const override { return d_; }
  Index obs_dim() const override { return m_; }
  Vector evaluate(const Vector& theta) const override { return f_(theta); }

 private:
  std::string name_;
  Index d_, m_;
  MapFn f_;
};

/// G(xi, zeta) = g(xi) + A zeta, with A an m x k matrix of full column rank.
class DecomposableModel final : public ManifoldModel {
 public:
  /// Throws kInvalidModel when A is rank deficient or its row count does not
  /// match the nonlinear part.
  DecomposableModel(ModelPtr nonlinear, RealMatrix linear);

  std::string name() const override;
  Index param_dim() const override { return nonlinear_->param_dim() + linear_.cols(); }
  Index obs_dim() const override { return nonlinear_->obs_dim(); }
  Vector evaluate(const Vector& theta) const override;
  RealMatrix jacobian(const Vector& theta) const override;
  bool has_analytic_jacobian() const override { return nonlinear_->has_analytic_jacobian(); }
  Vector sample_param(RngSeed seed) const override;
  bool is_analytic() const override { return nonlinear_->is_analytic(); }

  const ManifoldModel& nonlinear() const { return *nonlinear_; }
  const RealMatrix& linear() const { return linear_; }
  Index linear_dim() const { return linear_.cols(); }

 private:
  ModelPtr nonlinear_;
  RealMatrix linear_;
};

struct UnknownSigma {};

/// y_hat = x0 + N^{-1/2} gamma + eps.
struct ObservationSet {
  Vector y_hat;
  std::variant<double, UnknownSigma> noise_sd = UnknownSigma{};
  Vector drift;        // gamma; empty means zero
  double N = 1.0;

  bool sigma_known() const { return std::holds_alternative<double>(noise_sd); }
  double sigma() const;  // throws kInvalidInput when unknown
  void validate() const;
};

/// y_hat = G(theta_true) + N^{-1/2} gamma + eps with eps iid N(0, sigma^2 / N).
/// An empty gamma means no drift. Deterministic in the seed.
ObservationSet synthesize_observation(const ManifoldModel& model, const Vector& theta_true,
                                      double sigma, const Vector& gamma, double N,
                                      RngSeed seed);

struct WellPosednessReport {
  Index rho_hat = 0;  // characteristic rank of the nonlinear part
  Index k = 0;        // dimension of the linear part
  Index r_hat = 0;    // characteristic rank of the full map
  bool well_posed = false;
};

/// Estimates rho and r by maximizing Jacobian ranks over `num_samples`
/// generic points; well-posed iff r_hat == rho_hat + k.
WellPosednessReport check_well_posedness(const DecomposableModel& dm, int num_samples,
                                         RngSeed seed, const RankPolicy& policy = {});

}  // namespace mgof
