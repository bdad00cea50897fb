#pragma once

// Shared numerical kernels: chi-square tails, numerical rank, finite
// difference Jacobians and the seeded randomness contract.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>

#include <Eigen/Dense>

#include "mgof/error.hpp"

namespace mgof {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Chi-square distribution

struct Chi2Params {
  double dof = 1.0;           // degrees of freedom, >= 1
  double noncentrality = 0.0; // delta, >= 0
};

/// P(X >= x) for X ~ chi2(dof, delta).
///
/// The central case uses the regularized upper incomplete gamma function.
/// The noncentral case sums the Poisson(delta/2) mixture of central terms,
/// starting at the Poisson mode and widening until the Poisson mass left out
/// of the window is below 1e-12.
double chi2_sf(double x, Chi2Params params);
double chi2_cdf(double x, Chi2Params params);

/// Central chi-square quantile, p in (0, 1).
double chi2_quantile(double p, double dof);

// ---------------------------------------------------------------------------
// Numerical rank

struct RankPolicy {
  enum class Mode {
    kDefault,   // tau = max(rows, cols) * eps * sigma_max
    kRelative,  // tau = threshold * sigma_max
    kAbsolute,  // tau = threshold
  };
  Mode mode = Mode::kDefault;
  double threshold = 0.0;

  static RankPolicy relative(double t) { return {Mode::kRelative, t}; }
  static RankPolicy absolute(double t) { return {Mode::kAbsolute, t}; }
};

/// Singular values in non-increasing order. Throws kNumericalFailure (with the
/// matrix dimensions in the message) when the SVD does not converge.
Vector singular_values(const RealMatrix& m);

double rank_tolerance(const Vector& singular_values, Index rows, Index cols,
                      const RankPolicy& policy);

Index rank_from_singular_values(const Vector& sv, Index rows, Index cols,
                                const RankPolicy& policy = {});

Index numerical_rank(const RealMatrix& m, const RankPolicy& policy = {});

// ---------------------------------------------------------------------------
// Finite differences

using MapFn = std::function<Vector(const Vector&)>;

/// Central-difference Jacobian. `step <= 0` selects the default
/// h_j = cbrt(eps) * max(1, |theta_j|).
RealMatrix fd_jacobian(const MapFn& f, const Vector& theta, double step = 0.0);

// ---------------------------------------------------------------------------
// Randomness

/// Seeds are split into independent streams by hashing (seed, stream) through
/// splitmix64; replication i of a batch always uses stream i, so results do
/// not depend on how work is scheduled across threads.
struct RngSeed {
  std::uint64_t value = 0;

  RngSeed split(std::uint64_t stream) const;
};

using Rng = std::mt19937_64;

Rng make_rng(RngSeed seed);

Vector standard_normal(Rng& rng, Index n);
Vector uniform(Rng& rng, Index n, double lo, double hi);

/// k distinct integers from [0, n), uniformly without replacement, sorted.
std::vector<Index> sample_without_replacement(Rng& rng, Index n, Index k);

// ---------------------------------------------------------------------------
// Goodness-of-fit helpers on samples

/// One-sample Kolmogorov-Smirnov statistic of `sample` against `cdf`.
double ks_statistic(std::span<const double> sample,
                    const std::function<double(double)>& cdf);

/// Asymptotic critical value of the one-sample KS statistic at level alpha.
double ks_critical_value(std::size_t n, double alpha);

double pearson_correlation(std::span<const double> a, std::span<const double> b);

}  // namespace mgof
