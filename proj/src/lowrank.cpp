#include "mgof/lowrank.hpp"

#include <algorithm>

namespace mgof {

MatrixIndexSet full_matrix_index(Index n1, Index n2) {
  MatrixIndexSet out;
  out.reserve(static_cast<std::size_t>(n1 * n2));
  for (Index i = 0; i < n1; ++i)
    for (Index j = 0; j < n2; ++j) out.push_back({i, j});
  return out;
}

MatrixIndexSet sample_matrix_index(Index n1, Index n2, Index count, Rng& rng) {
  MatrixIndexSet out;
  for (Index flat : sample_without_replacement(rng, n1 * n2, count)) {
    out.push_back({flat / n2, flat % n2});
  }
  return out;
}

TensorIndexSet full_tensor_index(Index n1, Index n2, Index n3) {
  TensorIndexSet out;
  out.reserve(static_cast<std::size_t>(n1 * n2 * n3));
  for (Index i = 0; i < n1; ++i)
    for (Index j = 0; j < n2; ++j)
      for (Index l = 0; l < n3; ++l) out.push_back({i, j, l});
  return out;
}

TensorIndexSet sample_tensor_index(Index n1, Index n2, Index n3, Index count, Rng& rng) {
  TensorIndexSet out;
  for (Index flat : sample_without_replacement(rng, n1 * n2 * n3, count)) {
    out.push_back({flat / (n2 * n3), (flat / n3) % n2, flat % n3});
  }
  return out;
}

RealMatrix unpack_factor(const Vector& theta, Index offset, Index rows, Index cols) {
  return Eigen::Map<const RowMajorMatrix>(theta.data() + offset, rows, cols);
}

void pack_factor(const RealMatrix& m, Vector& theta, Index offset) {
  Eigen::Map<RowMajorMatrix>(theta.data() + offset, m.rows(), m.cols()) = m;
}

// ---------------------------------------------------------------------------

MatrixCompletionModel::MatrixCompletionModel(Index n1, Index n2, Index r, MatrixIndexSet omega,
                                             Field field)
    : n1_(n1), n2_(n2), r_(r), omega_(std::move(omega)), field_(field) {
  if (n1 < 1 || n2 < 1 || r < 1 || r > std::min(n1, n2)) {
    throw Error(ErrorKind::kInvalidParameter, "matrix completion: need 1 <= r <= min(n1, n2)");
  }
  if (omega_.empty()) throw Error(ErrorKind::kInvalidParameter, "matrix completion: empty Omega");
  for (const auto& e : omega_) {
    if (e.i < 0 || e.i >= n1 || e.j < 0 || e.j >= n2) {
      throw Error(ErrorKind::kInvalidParameter, "matrix completion: index out of range");
    }
  }
}

std::string MatrixCompletionModel::name() const {
  return field_ == Field::kReal ? "real-matrix-completion" : "complex-matrix-completion";
}

Index MatrixCompletionModel::param_dim() const {
  const Index base = r_ * (n1_ + n2_);
  return field_ == Field::kReal ? base : 2 * base;
}

Index MatrixCompletionModel::obs_dim() const {
  const auto m = static_cast<Index>(omega_.size());
  return field_ == Field::kReal ? m : 2 * m;
}

Index MatrixCompletionModel::nonlinear_char_rank() const {
  const Index rho = r_ * (n1_ + n2_ - r_);
  return field_ == Field::kReal ? rho : 2 * rho;
}

Index MatrixCompletionModel::decomposable_char_rank() const {
  const Index unobserved = n1_ * n2_ - static_cast<Index>(omega_.size());
  return nonlinear_char_rank() + (field_ == Field::kReal ? unobserved : 2 * unobserved);
}

Vector MatrixCompletionModel::evaluate(const Vector& theta) const {
  const Index m = static_cast<Index>(omega_.size());
  const Index fb = r_ * (n1_ + n2_);  // size of one (V, W) block
  Vector out(obs_dim());
  if (field_ == Field::kReal) {
    RealMatrix V = unpack_factor(theta, 0, n1_, r_);
    RealMatrix W = unpack_factor(theta, n1_ * r_, n2_, r_);
    for (Index t = 0; t < m; ++t) {
      const auto& e = omega_[static_cast<std::size_t>(t)];
      out(t) = V.row(e.i).dot(W.row(e.j));
    }
    return out;
  }
  RealMatrix V1 = unpack_factor(theta, 0, n1_, r_);
  RealMatrix W1 = unpack_factor(theta, n1_ * r_, n2_, r_);
  RealMatrix V2 = unpack_factor(theta, fb, n1_, r_);
  RealMatrix W2 = unpack_factor(theta, fb + n1_ * r_, n2_, r_);
  for (Index t = 0; t < m; ++t) {
    const auto& e = omega_[static_cast<std::size_t>(t)];
    out(t) = V1.row(e.i).dot(W1.row(e.j)) - V2.row(e.i).dot(W2.row(e.j));
    out(m + t) = V1.row(e.i).dot(W2.row(e.j)) + V2.row(e.i).dot(W1.row(e.j));
  }
  return out;
}

RealMatrix MatrixCompletionModel::jacobian(const Vector& theta) const {
  const Index m = static_cast<Index>(omega_.size());
  const Index w_off = n1_ * r_;
  RealMatrix jac = RealMatrix::Zero(obs_dim(), param_dim());
  if (field_ == Field::kReal) {
    for (Index t = 0; t < m; ++t) {
      const auto& e = omega_[static_cast<std::size_t>(t)];
      for (Index k = 0; k < r_; ++k) {
        jac(t, e.i * r_ + k) = theta(w_off + e.j * r_ + k);  // d/dV_ik = W_jk
        jac(t, w_off + e.j * r_ + k) = theta(e.i * r_ + k);  // d/dW_jk = V_ik
      }
    }
    return jac;
  }
  const Index fb = r_ * (n1_ + n2_);
  auto v1 = [&](Index i, Index k) { return i * r_ + k; };
  auto w1 = [&](Index j, Index k) { return w_off + j * r_ + k; };
  auto v2 = [&](Index i, Index k) { return fb + i * r_ + k; };
  auto w2 = [&](Index j, Index k) { return fb + w_off + j * r_ + k; };
  for (Index t = 0; t < m; ++t) {
    const auto& e = omega_[static_cast<std::size_t>(t)];
    for (Index k = 0; k < r_; ++k) {
      // Re = V1 W1' - V2 W2'
      jac(t, v1(e.i, k)) = theta(w1(e.j, k));
      jac(t, w1(e.j, k)) = theta(v1(e.i, k));
      jac(t, v2(e.i, k)) = -theta(w2(e.j, k));
      jac(t, w2(e.j, k)) = -theta(v2(e.i, k));
      // Im = V1 W2' + V2 W1'
      jac(m + t, v1(e.i, k)) = theta(w2(e.j, k));
      jac(m + t, w2(e.j, k)) = theta(v1(e.i, k));
      jac(m + t, v2(e.i, k)) = theta(w1(e.j, k));
      jac(m + t, w1(e.j, k)) = theta(v2(e.i, k));
    }
  }
  return jac;
}

DecomposableModel MatrixCompletionModel::decomposable() const {
  auto full = std::make_shared<MatrixCompletionModel>(n1_, n2_, r_, full_matrix_index(n1_, n2_),
                                                      field_);
  std::vector<bool> observed(static_cast<std::size_t>(n1_ * n2_), false);
  for (const auto& e : omega_) observed[static_cast<std::size_t>(e.i * n2_ + e.j)] = true;
  const Index cells = n1_ * n2_;
  const Index copies = field_ == Field::kReal ? 1 : 2;
  const Index unobserved = cells - static_cast<Index>(std::count(observed.begin(), observed.end(), true));
  RealMatrix A = RealMatrix::Zero(copies * cells, copies * unobserved);
  Index col = 0;
  for (Index c = 0; c < copies; ++c) {
    for (Index flat = 0; flat < cells; ++flat) {
      if (!observed[static_cast<std::size_t>(flat)]) A(c * cells + flat, col++) = 1.0;
    }
  }
  return DecomposableModel(std::move(full), std::move(A));
}

// ---------------------------------------------------------------------------

TensorCPModel::TensorCPModel(Index n1, Index n2, Index n3, Index r, TensorIndexSet omega)
    : n1_(n1), n2_(n2), n3_(n3), r_(r), omega_(std::move(omega)) {
  if (r < 1) throw Error(ErrorKind::kInvalidParameter, "tensor model: rank must be >= 1");
  if (n1 < 1 || n2 < 1 || n3 < 1) {
    throw Error(ErrorKind::kInvalidParameter, "tensor model: dimensions must be >= 1");
  }
  if (omega_.empty()) omega_ = full_tensor_index(n1, n2, n3);
  for (const auto& e : omega_) {
    if (e.i < 0 || e.i >= n1 || e.j < 0 || e.j >= n2 || e.l < 0 || e.l >= n3) {
      throw Error(ErrorKind::kInvalidParameter, "tensor model: index out of range");
    }
  }
}

std::string TensorCPModel::name() const { return "tensor-cp"; }

Vector TensorCPModel::evaluate(const Vector& theta) const {
  const Index b_off = n1_ * r_, c_off = (n1_ + n2_) * r_;
  Vector out(obs_dim());
  for (std::size_t t = 0; t < omega_.size(); ++t) {
    const auto& e = omega_[t];
    double s = 0.0;
    for (Index k = 0; k < r_; ++k) {
      s += theta(e.i * r_ + k) * theta(b_off + e.j * r_ + k) * theta(c_off + e.l * r_ + k);
    }
    out(static_cast<Index>(t)) = s;
  }
  return out;
}

RealMatrix TensorCPModel::jacobian(const Vector& theta) const {
  const Index b_off = n1_ * r_, c_off = (n1_ + n2_) * r_;
  RealMatrix jac = RealMatrix::Zero(obs_dim(), param_dim());
  for (std::size_t t = 0; t < omega_.size(); ++t) {
    const auto& e = omega_[t];
    const auto row = static_cast<Index>(t);
    for (Index k = 0; k < r_; ++k) {
      const double a = theta(e.i * r_ + k);
      const double b = theta(b_off + e.j * r_ + k);
      const double c = theta(c_off + e.l * r_ + k);
      jac(row, e.i * r_ + k) = b * c;
      jac(row, b_off + e.j * r_ + k) = a * c;
      jac(row, c_off + e.l * r_ + k) = a * b;
    }
  }
  return jac;
}

}  // namespace mgof
