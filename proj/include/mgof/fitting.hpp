#pragma once

// Nonlinear least squares min_theta ||y - G(theta)||^2 for the catalog
// families. Matrix and tensor families use alternating least squares over the
// observed entries followed by a Levenberg-Marquardt polish; the network and
// demixing families use a generic solver on the model's analytic Jacobian.
// All fits keep the best of several seeded restarts.

#include <functional>
#include <optional>
#include <vector>

#include "mgof/demixing.hpp"
#include "mgof/lowrank.hpp"
#include "mgof/nn.hpp"

namespace mgof {

enum class StepPolicy {
  kLevenbergMarquardt,
  kGradientDescent,  // steepest descent with Armijo backtracking
};

const char* to_string(StepPolicy p);
StepPolicy parse_step_policy(std::string_view s);

struct FitOptions {
  int max_iters = 500;
  /// Solver stops once ||J'e|| / max(1, ||e||) drops below this.
  double grad_tol = 1e-9;
  /// A fit is reported converged when the same score is below this.
  double certificate_tol = 1e-5;
  /// ALS stops when the relative rss change of a sweep is below this.
  double als_tol = 1e-10;
  int num_restarts = 5;
  StepPolicy step = StepPolicy::kLevenbergMarquardt;
  /// Run the Jacobian-based solver after ALS (matrix and tensor families).
  bool polish = true;
  /// Stop restarting once a converged restart reaches rss <= accept_rss.
  std::optional<double> accept_rss;

  void validate() const;  // throws kInvalidParameter
};

struct FitResult {
  Vector theta;
  Vector x_hat;
  Vector residual;
  double rss = 0.0;
  int restarts_used = 0;
  bool converged = false;
  double orthogonality_score = 0.0;
  int iterations = 0;            // of the restart that was kept
  std::vector<double> rss_trace;  // per sweep/iteration of the kept restart
};

/// ||J(theta)' e|| / max(1, ||e||).
double orthogonality_score(const ManifoldModel& model, const Vector& theta, const Vector& residual);

/// Produces the starting point of restart i.
using Initializer = std::function<Vector(RngSeed)>;

/// Generic multi-restart solver. Restart i starts at init(seed.split(i)), or
/// at model.sample_param(seed.split(i)) when init is empty.
FitResult fit_model(const ManifoldModel& model, const Vector& y, const FitOptions& opts,
                    RngSeed seed, const Initializer& init = {});

/// Single local solve from theta0 with the configured step policy.
FitResult local_fit(const ManifoldModel& model, const Vector& y, const Vector& theta0,
                    const FitOptions& opts);

/// Real matrix completion. Throws kUnderdetermined if r (n1 + n2 - r) > |Omega|.
FitResult fit_lowrank_matrix(const MatrixIndexSet& omega, const Vector& y, Index n1, Index n2,
                             Index r, const FitOptions& opts, RngSeed seed);

/// Complex matrix completion; y stacks real parts then imaginary parts.
FitResult fit_lowrank_complex(const MatrixIndexSet& omega, const Vector& y, Index n1, Index n2,
                              Index r, const FitOptions& opts, RngSeed seed);

/// CP completion; an empty omega means full observation.
/// Throws kUnderdetermined if r (n1 + n2 + n3 - 2) > |Omega|.
FitResult fit_tensor_cp(const TensorIndexSet& omega, const Vector& y, Index n1, Index n2, Index n3,
                        Index r, const FitOptions& opts, RngSeed seed);

FitResult fit_nn(const RealMatrix& inputs, const Vector& y, Index r, Activation activation,
                 const FitOptions& opts, RngSeed seed);

/// Matrix sensing with rank-one symmetric measurements A_i = x_i x_i'. The
/// objective coincides with the quadratic network, so this delegates.
FitResult matrix_sensing_equiv(const RealMatrix& inputs, const Vector& y, Index r,
                               const FitOptions& opts, RngSeed seed);

/// Demixing fit over (rho, log alpha, tau). The returned theta is in the
/// natural (rho, alpha, tau) coordinates.
FitResult fit_demixing(Index sensors, Index sources, Index grid, const DemixIndexSet& omega,
                       const Vector& y, const FitOptions& opts, RngSeed seed);

/// 5 restarts, 20 for K >= 4.
int default_demixing_restarts(Index sources);

}  // namespace mgof
