#pragma once

// Catalog entries for real and complex matrix completion and third-order
// tensor completion.
//
// Parameter layouts (all factor matrices row-major):
//   real matrix     theta = (V, W)            V: n1 x r, W: n2 x r
//   complex matrix  theta = (V1, W1, V2, W2)  V = V1 + iV2, W = W1 + iW2
//   tensor          theta = (A, B, C)         A: n1 x r, B: n2 x r, C: n3 x r
//
// Observation layouts follow the order of the index set; the complex model
// stacks all real parts first, then all imaginary parts.

#include <vector>

#include "mgof/model.hpp"

namespace mgof {

struct MatrixEntry {
  Index i = 0, j = 0;
  friend bool operator==(const MatrixEntry&, const MatrixEntry&) = default;
};

struct TensorEntry {
  Index i = 0, j = 0, l = 0;
  friend bool operator==(const TensorEntry&, const TensorEntry&) = default;
};

using MatrixIndexSet = std::vector<MatrixEntry>;
using TensorIndexSet = std::vector<TensorEntry>;

MatrixIndexSet full_matrix_index(Index n1, Index n2);
/// `count` entries drawn uniformly without replacement, in row-major order.
MatrixIndexSet sample_matrix_index(Index n1, Index n2, Index count, Rng& rng);

TensorIndexSet full_tensor_index(Index n1, Index n2, Index n3);
TensorIndexSet sample_tensor_index(Index n1, Index n2, Index n3, Index count, Rng& rng);

enum class Field { kReal, kComplex };

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Copies a row-major parameter block into a matrix.
RealMatrix unpack_factor(const Vector& theta, Index offset, Index rows, Index cols);
void pack_factor(const RealMatrix& m, Vector& theta, Index offset);

class MatrixCompletionModel final : public ManifoldModel {
 public:
  /// Throws kInvalidParameter unless 1 <= r <= min(n1, n2), Omega nonempty
  /// and in range.
  MatrixCompletionModel(Index n1, Index n2, Index r, MatrixIndexSet omega,
                        Field field = Field::kReal);

  std::string name() const override;
  Index param_dim() const override;
  Index obs_dim() const override;
  Vector evaluate(const Vector& theta) const override;
  RealMatrix jacobian(const Vector& theta) const override;
  bool has_analytic_jacobian() const override { return true; }

  /// rho = r (n1 + n2 - r), doubled over the complex field. This is the
  /// rank of the Omega-restricted map when the model is well posed.
  std::optional<Index> claimed_char_rank() const override { return nonlinear_char_rank(); }
  Index nonlinear_char_rank() const;
  /// rho + (number of unobserved real coordinates): the rank of the full
  /// decomposable map under well-posedness.
  Index decomposable_char_rank() const;

  Index n1() const { return n1_; }
  Index n2() const { return n2_; }
  Index rank() const { return r_; }
  Field field() const { return field_; }
  const MatrixIndexSet& omega() const { return omega_; }

  /// Full map over all n1*n2 entries plus the linear part spanning matrices
  /// that vanish on Omega.
  DecomposableModel decomposable() const;

 private:
  Index n1_, n2_, r_;
  MatrixIndexSet omega_;
  Field field_;
};

class TensorCPModel final : public ManifoldModel {
 public:
  /// Full observation when `omega` is empty.
  TensorCPModel(Index n1, Index n2, Index n3, Index r, TensorIndexSet omega = {});

  std::string name() const override;
  Index param_dim() const override { return r_ * (n1_ + n2_ + n3_); }
  Index obs_dim() const override { return static_cast<Index>(omega_.size()); }
  Vector evaluate(const Vector& theta) const override;
  RealMatrix jacobian(const Vector& theta) const override;
  bool has_analytic_jacobian() const override { return true; }

  /// Upper bound r (n1 + n2 + n3 - 2); the actual rank is measured.
  Index formula_rank() const { return r_ * (n1_ + n2_ + n3_ - 2); }

  Index n1() const { return n1_; }
  Index n2() const { return n2_; }
  Index n3() const { return n3_; }
  Index rank() const { return r_; }
  const TensorIndexSet& omega() const { return omega_; }

 private:
  Index n1_, n2_, n3_, r_;
  TensorIndexSet omega_;
};

}  // namespace mgof
