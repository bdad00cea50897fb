#include "mgof/fitting.hpp"

#include <cmath>
#include <array>
#include <complex>
#include <limits>

namespace mgof {

const char* to_string(StepPolicy p) {
  switch (p) {
    case StepPolicy::kLevenbergMarquardt: return "lm";
    case StepPolicy::kGradientDescent: return "gd";
  }
  return "unknown";
}

StepPolicy parse_step_policy(std::string_view s) {
  if (s == "lm") return StepPolicy::kLevenbergMarquardt;
  if (s == "gd") return StepPolicy::kGradientDescent;
  throw Error(ErrorKind::kInvalidParameter, "unknown step policy '" + std::string(s) + "'");
}

void FitOptions::validate() const {
  if (max_iters < 1) throw Error(ErrorKind::kInvalidParameter, "fit options: max_iters must be >= 1");
  if (num_restarts < 1) {
    throw Error(ErrorKind::kInvalidParameter, "fit options: num_restarts must be >= 1");
  }
  if (!(grad_tol > 0) || !(certificate_tol > 0) || !(als_tol > 0)) {
    throw Error(ErrorKind::kInvalidParameter, "fit options: tolerances must be positive");
  }
}

double orthogonality_score(const ManifoldModel& model, const Vector& theta,
                           const Vector& residual) {
  const Vector g = model.jacobian(theta).transpose() * residual;
  return g.norm() / std::max(1.0, residual.norm());
}

namespace {

// rss of y - G(theta), or +inf when the map cannot be evaluated there.
double try_rss(const ManifoldModel& model, const Vector& y, const Vector& theta) {
  try {
    const Vector x = model.evaluate(theta);
    if (!x.allFinite()) return std::numeric_limits<double>::infinity();
    return (y - x).squaredNorm();
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

void finalize(const ManifoldModel& model, const Vector& y, FitResult& fit, double cert_tol) {
  fit.x_hat = model.evaluate(fit.theta);
  fit.residual = y - fit.x_hat;
  fit.rss = fit.residual.squaredNorm();
  fit.orthogonality_score = orthogonality_score(model, fit.theta, fit.residual);
  fit.converged = std::isfinite(fit.rss) && fit.orthogonality_score < cert_tol;
}

FitResult levenberg_marquardt(const ManifoldModel& model, const Vector& y, Vector theta,
                              const FitOptions& opts) {
  FitResult out;
  double rss = try_rss(model, y, theta);
  if (!std::isfinite(rss)) {
    throw Error(ErrorKind::kNumericalFailure, model.name() + ": non-finite starting point");
  }
  out.rss_trace.push_back(rss);
  double lambda = -1.0;
  double nu = 2.0;
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    const RealMatrix J = model.jacobian(theta);
    const Vector e = y - model.evaluate(theta);
    const Vector g = J.transpose() * e;
    if (g.norm() / std::max(1.0, e.norm()) < opts.grad_tol) break;
    const RealMatrix A = J.transpose() * J;
    Vector scale = A.diagonal();
    const double floor = std::max(scale.maxCoeff(), 1.0) * 1e-12;
    scale = scale.cwiseMax(floor);
    if (lambda < 0) lambda = 1e-3;

    bool accepted = false;
    bool stalled = false;
    while (!accepted) {
      RealMatrix M = A;
      M.diagonal() += lambda * scale;
      const Vector delta = M.ldlt().solve(g);
      const Vector cand = theta + delta;
      const double rss_new = try_rss(model, y, cand);
      const double predicted = delta.dot(lambda * scale.cwiseProduct(delta) + g);
      if (std::isfinite(rss_new) && rss_new < rss) {
        const double ratio = predicted > 0 ? (rss - rss_new) / predicted : 1.0;
        const bool tiny = (rss - rss_new) <= 1e-15 * rss &&
                          delta.norm() <= 1e-14 * (1.0 + theta.norm());
        theta = cand;
        rss = rss_new;
        lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * ratio - 1.0, 3));
        nu = 2.0;
        accepted = true;
        stalled = tiny;
      } else {
        lambda *= nu;
        nu *= 2.0;
        if (lambda > 1e16 || !std::isfinite(lambda)) {
          stalled = true;
          break;
        }
      }
    }
    if (accepted) out.rss_trace.push_back(rss);
    if (stalled) {
      ++it;
      break;
    }
  }
  out.theta = std::move(theta);
  out.iterations = it;
  return out;
}

FitResult gradient_descent(const ManifoldModel& model, const Vector& y, Vector theta,
                           const FitOptions& opts) {
  constexpr double kArmijo = 1e-4;
  FitResult out;
  double rss = try_rss(model, y, theta);
  if (!std::isfinite(rss)) {
    throw Error(ErrorKind::kNumericalFailure, model.name() + ": non-finite starting point");
  }
  out.rss_trace.push_back(rss);
  double t = 1.0;
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    const Vector e = y - model.evaluate(theta);
    const Vector g = model.jacobian(theta).transpose() * e;  // -grad / 2
    const double gg = g.squaredNorm();
    if (std::sqrt(gg) / std::max(1.0, e.norm()) < opts.grad_tol) break;
    t *= 2.0;
    double rss_new = try_rss(model, y, theta + t * g);
    while (!(rss_new <= rss - kArmijo * 2.0 * t * gg)) {
      t *= 0.5;
      if (t < 1e-30) break;
      rss_new = try_rss(model, y, theta + t * g);
    }
    if (t < 1e-30) break;
    theta += t * g;
    rss = rss_new;
    out.rss_trace.push_back(rss);
  }
  out.theta = std::move(theta);
  out.iterations = it;
  return out;
}

template <class LocalFn>
FitResult multi_restart(const FitOptions& opts, RngSeed seed, LocalFn&& local) {
  FitResult best;
  best.rss = std::numeric_limits<double>::infinity();
  int used = 0;
  for (int i = 0; i < opts.num_restarts; ++i) {
    FitResult fit = local(seed.split(static_cast<std::uint64_t>(i)));
    ++used;
    if (fit.rss < best.rss) best = std::move(fit);
    if (opts.accept_rss && best.converged && best.rss <= *opts.accept_rss) break;
  }
  best.restarts_used = used;
  return best;
}

void require_dof(Index dof_needed, Index observations, const std::string& what) {
  if (dof_needed > observations) {
    throw Error(ErrorKind::kUnderdetermined,
                what + ": characteristic rank " + std::to_string(dof_needed) +
                    " exceeds the number of observations " + std::to_string(observations));
  }
}

// Least-squares update of one factor row; rows with no observations keep
// their current value.
template <class Mat, class Vec, class Row>
void solve_row(const Mat& design, const Vec& rhs, Row&& row) {
  if (design.rows() == 0) return;
  row = design.completeOrthogonalDecomposition().solve(rhs).transpose();
}

// Alternating least squares for X = V W' on Omega over Scalar (double or
// complex<double>). `values` holds the observed entries in Omega order.
template <class Scalar>
std::pair<Eigen::Matrix<Scalar, -1, -1>, Eigen::Matrix<Scalar, -1, -1>> als_matrix(
    const MatrixIndexSet& omega, const Eigen::Matrix<Scalar, -1, 1>& values, Index n1, Index n2,
    Eigen::Matrix<Scalar, -1, -1> V, Eigen::Matrix<Scalar, -1, -1> W, const FitOptions& opts,
    std::vector<double>& trace) {
  using Mat = Eigen::Matrix<Scalar, -1, -1>;
  using Vec = Eigen::Matrix<Scalar, -1, 1>;
  const Index r = V.cols();
  std::vector<std::vector<Index>> by_row(static_cast<std::size_t>(n1)),
      by_col(static_cast<std::size_t>(n2));
  for (std::size_t t = 0; t < omega.size(); ++t) {
    by_row[static_cast<std::size_t>(omega[t].i)].push_back(static_cast<Index>(t));
    by_col[static_cast<std::size_t>(omega[t].j)].push_back(static_cast<Index>(t));
  }
  auto rss_of = [&]() {
    double s = 0.0;
    for (std::size_t t = 0; t < omega.size(); ++t) {
      const Scalar x = (V.row(omega[t].i).array() * W.row(omega[t].j).array()).sum();
      s += std::norm(values(static_cast<Index>(t)) - x);
    }
    return s;
  };
  double prev = rss_of();
  trace.push_back(prev);
  for (int sweep = 0; sweep < opts.max_iters; ++sweep) {
    for (Index i = 0; i < n1; ++i) {
      const auto& obs = by_row[static_cast<std::size_t>(i)];
      Mat D(static_cast<Index>(obs.size()), r);
      Vec b(static_cast<Index>(obs.size()));
      for (std::size_t q = 0; q < obs.size(); ++q) {
        D.row(static_cast<Index>(q)) = W.row(omega[static_cast<std::size_t>(obs[q])].j);
        b(static_cast<Index>(q)) = values(obs[q]);
      }
      solve_row(D, b, V.row(i));
    }
    for (Index j = 0; j < n2; ++j) {
      const auto& obs = by_col[static_cast<std::size_t>(j)];
      Mat D(static_cast<Index>(obs.size()), r);
      Vec b(static_cast<Index>(obs.size()));
      for (std::size_t q = 0; q < obs.size(); ++q) {
        D.row(static_cast<Index>(q)) = V.row(omega[static_cast<std::size_t>(obs[q])].i);
        b(static_cast<Index>(q)) = values(obs[q]);
      }
      solve_row(D, b, W.row(j));
    }
    const double cur = rss_of();
    trace.push_back(cur);
    const bool done = prev - cur <= opts.als_tol * std::max(prev, 1e-300);
    prev = cur;
    if (done) break;
  }
  return {std::move(V), std::move(W)};
}

FitResult polish_and_finalize(const ManifoldModel& model, const Vector& y, FitResult fit,
                              const FitOptions& opts) {
  if (opts.polish) {
    FitOptions lm = opts;
    lm.step = StepPolicy::kLevenbergMarquardt;
    FitResult refined = levenberg_marquardt(model, y, fit.theta, lm);
    fit.theta = std::move(refined.theta);
    fit.iterations += refined.iterations;
    fit.rss_trace.insert(fit.rss_trace.end(), refined.rss_trace.begin() + 1,
                         refined.rss_trace.end());
  }
  finalize(model, y, fit, opts.certificate_tol);
  return fit;
}

}  // namespace

FitResult local_fit(const ManifoldModel& model, const Vector& y, const Vector& theta0,
                    const FitOptions& opts) {
  if (y.size() != model.obs_dim()) {
    throw Error(ErrorKind::kInvalidInput, model.name() + ": observation length " +
                                              std::to_string(y.size()) + ", expected " +
                                              std::to_string(model.obs_dim()));
  }
  FitResult fit = opts.step == StepPolicy::kLevenbergMarquardt
                      ? levenberg_marquardt(model, y, theta0, opts)
                      : gradient_descent(model, y, theta0, opts);
  finalize(model, y, fit, opts.certificate_tol);
  return fit;
}

FitResult fit_model(const ManifoldModel& model, const Vector& y, const FitOptions& opts,
                    RngSeed seed, const Initializer& init) {
  opts.validate();
  return multi_restart(opts, seed, [&](RngSeed s) {
    const Vector theta0 = init ? init(s) : model.sample_param(s);
    return local_fit(model, y, theta0, opts);
  });
}

FitResult fit_lowrank_matrix(const MatrixIndexSet& omega, const Vector& y, Index n1, Index n2,
                             Index r, const FitOptions& opts, RngSeed seed) {
  opts.validate();
  const MatrixCompletionModel model(n1, n2, r, omega, Field::kReal);
  require_dof(model.nonlinear_char_rank(), model.obs_dim(), "matrix completion");
  if (y.size() != model.obs_dim()) throw Error(ErrorKind::kInvalidInput, "matrix completion: |y| != |Omega|");
  return multi_restart(opts, seed, [&](RngSeed s) {
    Rng rng = make_rng(s);
    RealMatrix V = Eigen::Map<const RealMatrix>(standard_normal(rng, n1 * r).data(), n1, r);
    RealMatrix W = Eigen::Map<const RealMatrix>(standard_normal(rng, n2 * r).data(), n2, r);
    FitResult fit;
    auto [Vh, Wh] = als_matrix<double>(omega, y, n1, n2, V, W, opts, fit.rss_trace);
    fit.theta.resize(model.param_dim());
    pack_factor(Vh, fit.theta, 0);
    pack_factor(Wh, fit.theta, n1 * r);
    fit.iterations = static_cast<int>(fit.rss_trace.size()) - 1;
    return polish_and_finalize(model, y, std::move(fit), opts);
  });
}

FitResult fit_lowrank_complex(const MatrixIndexSet& omega, const Vector& y, Index n1, Index n2,
                              Index r, const FitOptions& opts, RngSeed seed) {
  using CMat = Eigen::MatrixXcd;
  opts.validate();
  const MatrixCompletionModel model(n1, n2, r, omega, Field::kComplex);
  require_dof(model.nonlinear_char_rank(), model.obs_dim(), "complex matrix completion");
  if (y.size() != model.obs_dim()) {
    throw Error(ErrorKind::kInvalidInput, "complex matrix completion: |y| != 2 |Omega|");
  }
  const auto m = static_cast<Index>(omega.size());
  Eigen::VectorXcd values(m);
  for (Index t = 0; t < m; ++t) values(t) = {y(t), y(m + t)};
  return multi_restart(opts, seed, [&](RngSeed s) {
    Rng rng = make_rng(s);
    auto draw = [&](Index rows) {
      const Vector re = standard_normal(rng, rows * r), im = standard_normal(rng, rows * r);
      CMat out(rows, r);
      for (Index q = 0; q < rows * r; ++q) out(q / r, q % r) = {re(q), im(q)};
      return out;
    };
    CMat V = draw(n1), W = draw(n2);
    FitResult fit;
    auto [Vh, Wh] = als_matrix<std::complex<double>>(omega, values, n1, n2, V, W, opts,
                                                      fit.rss_trace);
    const Index fb = r * (n1 + n2);
    fit.theta.resize(model.param_dim());
    pack_factor(Vh.real(), fit.theta, 0);
    pack_factor(Wh.real(), fit.theta, n1 * r);
    pack_factor(Vh.imag(), fit.theta, fb);
    pack_factor(Wh.imag(), fit.theta, fb + n1 * r);
    fit.iterations = static_cast<int>(fit.rss_trace.size()) - 1;
    return polish_and_finalize(model, y, std::move(fit), opts);
  });
}

FitResult fit_tensor_cp(const TensorIndexSet& omega_in, const Vector& y, Index n1, Index n2,
                        Index n3, Index r, const FitOptions& opts, RngSeed seed) {
  opts.validate();
  const TensorCPModel model(n1, n2, n3, r, omega_in);
  const TensorIndexSet& omega = model.omega();
  require_dof(model.formula_rank(), model.obs_dim(), "tensor completion");
  if (y.size() != model.obs_dim()) throw Error(ErrorKind::kInvalidInput, "tensor completion: |y| != |Omega|");

  std::array<std::vector<std::vector<Index>>, 3> groups;
  const std::array<Index, 3> dims{n1, n2, n3};
  for (int mode = 0; mode < 3; ++mode) groups[mode].resize(static_cast<std::size_t>(dims[mode]));
  for (std::size_t t = 0; t < omega.size(); ++t) {
    groups[0][static_cast<std::size_t>(omega[t].i)].push_back(static_cast<Index>(t));
    groups[1][static_cast<std::size_t>(omega[t].j)].push_back(static_cast<Index>(t));
    groups[2][static_cast<std::size_t>(omega[t].l)].push_back(static_cast<Index>(t));
  }

  return multi_restart(opts, seed, [&](RngSeed s) {
    Rng rng = make_rng(s);
    std::array<RealMatrix, 3> F;
    for (int mode = 0; mode < 3; ++mode) {
      F[mode] = Eigen::Map<const RealMatrix>(standard_normal(rng, dims[mode] * r).data(),
                                             dims[mode], r);
    }
    auto coords = [&](std::size_t t) {
      return std::array<Index, 3>{omega[t].i, omega[t].j, omega[t].l};
    };
    auto rss_of = [&]() {
      double acc = 0.0;
      for (std::size_t t = 0; t < omega.size(); ++t) {
        const auto c = coords(t);
        const double x = (F[0].row(c[0]).array() * F[1].row(c[1]).array() * F[2].row(c[2]).array()).sum();
        acc += (y(static_cast<Index>(t)) - x) * (y(static_cast<Index>(t)) - x);
      }
      return acc;
    };
    FitResult fit;
    double prev = rss_of();
    fit.rss_trace.push_back(prev);
    for (int sweep = 0; sweep < opts.max_iters; ++sweep) {
      for (int mode = 0; mode < 3; ++mode) {
        const int o1 = (mode + 1) % 3, o2 = (mode + 2) % 3;
        for (Index row = 0; row < dims[mode]; ++row) {
          const auto& obs = groups[mode][static_cast<std::size_t>(row)];
          RealMatrix D(static_cast<Index>(obs.size()), r);
          Vector b(static_cast<Index>(obs.size()));
          for (std::size_t q = 0; q < obs.size(); ++q) {
            const auto c = coords(static_cast<std::size_t>(obs[q]));
            D.row(static_cast<Index>(q)) = F[o1].row(c[o1]).cwiseProduct(F[o2].row(c[o2]));
            b(static_cast<Index>(q)) = y(obs[q]);
          }
          solve_row(D, b, F[mode].row(row));
        }
      }
      const double cur = rss_of();
      fit.rss_trace.push_back(cur);
      const bool done = prev - cur <= opts.als_tol * std::max(prev, 1e-300);
      prev = cur;
      if (done) break;
    }
    fit.theta.resize(model.param_dim());
    pack_factor(F[0], fit.theta, 0);
    pack_factor(F[1], fit.theta, n1 * r);
    pack_factor(F[2], fit.theta, (n1 + n2) * r);
    fit.iterations = static_cast<int>(fit.rss_trace.size()) - 1;
    return polish_and_finalize(model, y, std::move(fit), opts);
  });
}

FitResult fit_nn(const RealMatrix& inputs, const Vector& y, Index r, Activation activation,
                 const FitOptions& opts, RngSeed seed) {
  const OneLayerNNModel model(inputs, r, activation);
  if (y.size() != model.obs_dim()) throw Error(ErrorKind::kInvalidInput, "nn fit: |y| != m");
  // Start at the scale of a unit-norm direction per hidden unit so that
  // pre-activations are O(1) regardless of d.
  const double scale = 1.0 / std::sqrt(static_cast<double>(inputs.cols()));
  return fit_model(model, y, opts, seed, [&](RngSeed s) {
    Rng rng = make_rng(s);
    return Vector(scale * standard_normal(rng, model.param_dim()));
  });
}

FitResult matrix_sensing_equiv(const RealMatrix& inputs, const Vector& y, Index r,
                               const FitOptions& opts, RngSeed seed) {
  return fit_nn(inputs, y, r, Activation::kQuadratic, opts, seed);
}

int default_demixing_restarts(Index sources) { return sources >= 4 ? 20 : 5; }

FitResult fit_demixing(Index sensors, Index sources, Index grid, const DemixIndexSet& omega,
                       const Vector& y, const FitOptions& opts, RngSeed seed) {
  auto base = std::make_shared<const DemixingModel>(sensors, sources, grid, omega);
  const LogWidthDemixingModel model(base);
  if (y.size() != model.obs_dim()) throw Error(ErrorKind::kInvalidInput, "demixing fit: |y| != 2 |Omega|");
  FitResult fit = fit_model(model, y, opts, seed);
  // Report in natural coordinates; the certificate is recomputed there.
  fit.theta = model.to_natural(fit.theta);
  const double score = orthogonality_score(*base, fit.theta, fit.residual);
  fit.orthogonality_score = score;
  fit.converged = fit.converged && score < opts.certificate_tol;
  return fit;
}

}  // namespace mgof
