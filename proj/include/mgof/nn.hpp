#pragma once

#include <string_view>

#include "mgof/model.hpp"

namespace mgof {

enum class Activation { kQuadratic, kSigmoid, kRelu };

const char* to_string(Activation a);
Activation parse_activation(std::string_view s);

/// One-hidden-layer network with the output layer fixed at all-ones:
/// g_i(U) = sum_k q(u_k' x_i), U in R^{d x r}.
///
/// theta stores U row-major, so column index j * r + k holds U_jk. The
/// design (rows of `inputs`) is fixed at construction.
class OneLayerNNModel final : public ManifoldModel {
 public:
  OneLayerNNModel(RealMatrix inputs, Index hidden, Activation activation);

  std::string name() const override;
  Index param_dim() const override { return inputs_.cols() * r_; }
  Index obs_dim() const override { return inputs_.rows(); }
  Vector evaluate(const Vector& theta) const override;
  RealMatrix jacobian(const Vector& theta) const override;
  bool has_analytic_jacobian() const override { return true; }
  bool is_analytic() const override { return activation_ != Activation::kRelu; }

  /// d r - r (r - 1) / 2 for quadratic, d r for sigmoid; ReLU has no claim.
  std::optional<Index> claimed_char_rank() const override;
  /// d r, the dof convention used for ReLU tests (marked heuristic).
  Index heuristic_char_rank() const { return param_dim(); }

  /// Gradient of ||y - G(U)||^2 without forming the Jacobian.
  Vector rss_gradient(const Vector& theta, const Vector& y) const;

  const RealMatrix& inputs() const { return inputs_; }
  Index hidden() const { return r_; }
  Activation activation() const { return activation_; }

 private:
  RealMatrix pre_activation(const Vector& theta) const;  // m x r, Z = X U

  RealMatrix inputs_;  // m x d
  Index r_;
  Activation activation_;
};

/// Design with iid standard normal rows.
RealMatrix gaussian_design(Index m, Index d, Rng& rng);

/// Matrix-sensing form sum_i (y_i - <A_i, U U'>)^2 with A_i = x_i x_i'.
/// Evaluated independently of the network code path; used to confirm that
/// the quadratic network is the same objective.
double matrix_sensing_objective(const RealMatrix& inputs, const Vector& y, const Vector& theta,
                                Index hidden);

}  // namespace mgof
