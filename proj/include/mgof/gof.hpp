#pragma once

// Goodness-of-fit statistics: T = N * rss / sigma^2 against chi2(m - r),
// the nested difference T' - T against chi2(r - r'), and the leave-out
// noise-variance estimate.

#include <cstdint>
#include <optional>
#include <string>

#include "mgof/fitting.hpp"

namespace mgof {

enum class Sigma2Source { kKnown, kEstimated, kPooled };

const char* to_string(Sigma2Source s);
Sigma2Source parse_sigma2_source(std::string_view s);

struct Sigma2 {
  double value = 1.0;
  Sigma2Source source = Sigma2Source::kKnown;
};

/// Identifies an observation vector (and N) for pairing checks.
std::uint64_t observation_fingerprint(const ObservationSet& obs);

struct TestReport {
  double statistic = 0.0;
  Index dof = 0;
  double p_value = 1.0;
  double sigma2_used = 1.0;
  Sigma2Source sigma2_source = Sigma2Source::kKnown;
  Index char_rank_used = 0;
  Index obs_dim = 0;
  std::optional<double> noncentrality;
  double rss = 0.0;
  bool fit_converged = true;
  /// Set when the characteristic rank is a convention rather than a measured
  /// or proven value (ReLU networks).
  bool heuristic_dof = false;
  std::uint64_t obs_fingerprint = 0;
};

/// T = N * rss / sigma^2, p = chi2_sf(T, m - r, delta).
/// Throws kUnderdetermined when m <= r and kInvalidParameter for sigma^2 <= 0.
/// A fit that did not meet its certificate is recorded in fit_converged.
TestReport gof_test(const ObservationSet& obs, const FitResult& fit, Index char_rank,
                    Sigma2 sigma2, std::optional<double> noncentrality = std::nullopt,
                    bool heuristic_dof = false);

/// Same statistic from a bare rss; used where no FitResult exists.
TestReport gof_test_rss(const ObservationSet& obs, double rss, Index char_rank, Sigma2 sigma2,
                        std::optional<double> noncentrality = std::nullopt,
                        bool heuristic_dof = false);

struct NestedComparison {
  double t_diff = 0.0;  // T(small) - T(big), clamped at 0
  Index dof_diff = 0;   // r(big) - r(small)
  double p_value_diff = 1.0;
  bool clamped = false;
  double raw_t_diff = 0.0;
};

/// `small` is the report for the submodel. Both reports must come from the
/// same observation and sigma^2 (kInvalidPairing otherwise) and the
/// characteristic ranks must differ by at least one (kInvalidParameter).
NestedComparison nested_test(const TestReport& small, const TestReport& big);

struct VarianceEstimate {
  double sigma2 = 0.0;
  Index dof_used = 0;
  double rss_outer = 0.0;  // fit on the full index set
  double rss_inner = 0.0;  // fit with observations left out
  bool clamped = false;
  std::string warning;
};

/// sigma2_hat = N (rss_outer - rss_inner) / dof_used. A negative numerator
/// is clamped to a tiny positive floor and flagged.
VarianceEstimate variance_from_leave_out(double rss_outer, double rss_inner, Index dof_used,
                                         double N = 1.0);

}  // namespace mgof
