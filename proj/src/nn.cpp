#include "mgof/nn.hpp"

#include <cmath>

#include "mgof/lowrank.hpp"

namespace mgof {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::kQuadratic: return "quadratic";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kRelu: return "relu";
  }
  return "unknown";
}

Activation parse_activation(std::string_view s) {
  if (s == "quadratic") return Activation::kQuadratic;
  if (s == "sigmoid") return Activation::kSigmoid;
  if (s == "relu") return Activation::kRelu;
  throw Error(ErrorKind::kInvalidParameter, "unknown activation '" + std::string(s) + "'");
}

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double act(Activation a, double z) {
  switch (a) {
    case Activation::kQuadratic: return z * z;
    case Activation::kSigmoid: return sigmoid(z);
    case Activation::kRelu: return z > 0.0 ? z : 0.0;
  }
  return 0.0;
}

// ReLU subgradient at 0 is taken as 0.
double act_deriv(Activation a, double z) {
  switch (a) {
    case Activation::kQuadratic: return 2.0 * z;
    case Activation::kSigmoid: {
      const double s = sigmoid(z);
      return s * (1.0 - s);
    }
    case Activation::kRelu: return z > 0.0 ? 1.0 : 0.0;
  }
  return 0.0;
}

}  // namespace

OneLayerNNModel::OneLayerNNModel(RealMatrix inputs, Index hidden, Activation activation)
    : inputs_(std::move(inputs)), r_(hidden), activation_(activation) {
  if (inputs_.rows() < 1 || inputs_.cols() < 1) {
    throw Error(ErrorKind::kInvalidParameter, "nn model: need m >= 1 inputs of dimension >= 1");
  }
  if (r_ < 1) throw Error(ErrorKind::kInvalidParameter, "nn model: hidden units must be >= 1");
  if (!inputs_.allFinite()) throw Error(ErrorKind::kInvalidInput, "nn model: non-finite inputs");
}

std::string OneLayerNNModel::name() const {
  return std::string("nn-") + to_string(activation_);
}

std::optional<Index> OneLayerNNModel::claimed_char_rank() const {
  const Index d = inputs_.cols();
  switch (activation_) {
    case Activation::kQuadratic: return d * r_ - r_ * (r_ - 1) / 2;
    case Activation::kSigmoid: return d * r_;
    case Activation::kRelu: return std::nullopt;
  }
  return std::nullopt;
}

RealMatrix OneLayerNNModel::pre_activation(const Vector& theta) const {
  return inputs_ * unpack_factor(theta, 0, inputs_.cols(), r_);
}

Vector OneLayerNNModel::evaluate(const Vector& theta) const {
  RealMatrix Z = pre_activation(theta);
  Vector out(obs_dim());
  for (Index i = 0; i < Z.rows(); ++i) {
    double s = 0.0;
    for (Index k = 0; k < r_; ++k) s += act(activation_, Z(i, k));
    out(i) = s;
  }
  return out;
}

RealMatrix OneLayerNNModel::jacobian(const Vector& theta) const {
  RealMatrix Z = pre_activation(theta);
  const Index d = inputs_.cols();
  RealMatrix jac(obs_dim(), param_dim());
  for (Index i = 0; i < Z.rows(); ++i) {
    for (Index k = 0; k < r_; ++k) {
      const double dq = act_deriv(activation_, Z(i, k));
      for (Index j = 0; j < d; ++j) jac(i, j * r_ + k) = dq * inputs_(i, j);
    }
  }
  return jac;
}

Vector OneLayerNNModel::rss_gradient(const Vector& theta, const Vector& y) const {
  RealMatrix Z = pre_activation(theta);
  Vector resid = y - evaluate(theta);
  RealMatrix D(Z.rows(), r_);
  for (Index i = 0; i < Z.rows(); ++i)
    for (Index k = 0; k < r_; ++k) D(i, k) = act_deriv(activation_, Z(i, k)) * resid(i);
  RealMatrix G = -2.0 * inputs_.transpose() * D;  // d x r
  Vector out(param_dim());
  pack_factor(G, out, 0);
  return out;
}

RealMatrix gaussian_design(Index m, Index d, Rng& rng) {
  Vector v = standard_normal(rng, m * d);
  return Eigen::Map<const RowMajorMatrix>(v.data(), m, d);
}

double matrix_sensing_objective(const RealMatrix& inputs, const Vector& y, const Vector& theta,
                                Index hidden) {
  const Index d = inputs.cols();
  RealMatrix U = unpack_factor(theta, 0, d, hidden);
  RealMatrix X = U * U.transpose();
  double total = 0.0;
  for (Index i = 0; i < inputs.rows(); ++i) {
    RealMatrix A = inputs.row(i).transpose() * inputs.row(i);
    const double inner = (A.cwiseProduct(X)).sum();  // <A, X> = tr(A X) for symmetric A
    total += (y(i) - inner) * (y(i) - inner);
  }
  return total;
}

}  // namespace mgof
