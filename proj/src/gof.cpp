#include "mgof/gof.hpp"

#include <cmath>
#include <cstring>

namespace mgof {

const char* to_string(Sigma2Source s) {
  switch (s) {
    case Sigma2Source::kKnown: return "known";
    case Sigma2Source::kEstimated: return "estimated";
    case Sigma2Source::kPooled: return "pooled";
  }
  return "unknown";
}

Sigma2Source parse_sigma2_source(std::string_view s) {
  if (s == "known") return Sigma2Source::kKnown;
  if (s == "estimated") return Sigma2Source::kEstimated;
  if (s == "pooled") return Sigma2Source::kPooled;
  throw Error(ErrorKind::kInvalidParameter, "unknown sigma2 source '" + std::string(s) + "'");
}

std::uint64_t observation_fingerprint(const ObservationSet& obs) {
  // FNV-1a over the raw bytes of y_hat and N.
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  mix(obs.y_hat.data(), static_cast<std::size_t>(obs.y_hat.size()) * sizeof(double));
  mix(&obs.N, sizeof(double));
  return h;
}

TestReport gof_test_rss(const ObservationSet& obs, double rss, Index char_rank, Sigma2 sigma2,
                        std::optional<double> noncentrality, bool heuristic_dof) {
  const Index m = obs.y_hat.size();
  if (!(sigma2.value > 0) || !std::isfinite(sigma2.value)) {
    throw Error(ErrorKind::kInvalidParameter, "gof test: sigma^2 must be positive and finite");
  }
  if (!(rss >= 0) || !std::isfinite(rss)) {
    throw Error(ErrorKind::kInvalidInput, "gof test: rss must be finite and nonnegative");
  }
  if (m <= char_rank) {
    throw Error(ErrorKind::kUnderdetermined,
                "gof test: characteristic rank " + std::to_string(char_rank) +
                    " leaves no degrees of freedom with m = " + std::to_string(m));
  }
  TestReport rep;
  rep.obs_dim = m;
  rep.char_rank_used = char_rank;
  rep.dof = m - char_rank;
  rep.rss = rss;
  rep.sigma2_used = sigma2.value;
  rep.sigma2_source = sigma2.source;
  rep.noncentrality = noncentrality;
  rep.heuristic_dof = heuristic_dof;
  rep.statistic = obs.N * rss / sigma2.value;
  rep.p_value = chi2_sf(rep.statistic, {static_cast<double>(rep.dof), noncentrality.value_or(0.0)});
  rep.obs_fingerprint = observation_fingerprint(obs);
  return rep;
}

TestReport gof_test(const ObservationSet& obs, const FitResult& fit, Index char_rank,
                    Sigma2 sigma2, std::optional<double> noncentrality, bool heuristic_dof) {
  if (fit.residual.size() != obs.y_hat.size()) {
    throw Error(ErrorKind::kInvalidPairing, "gof test: fit residual does not match the observation");
  }
  TestReport rep = gof_test_rss(obs, fit.rss, char_rank, sigma2, noncentrality, heuristic_dof);
  rep.fit_converged = fit.converged;
  return rep;
}

NestedComparison nested_test(const TestReport& small, const TestReport& big) {
  if (small.obs_fingerprint != big.obs_fingerprint || small.obs_dim != big.obs_dim) {
    throw Error(ErrorKind::kInvalidPairing, "nested test: reports come from different observations");
  }
  if (small.sigma2_used != big.sigma2_used) {
    throw Error(ErrorKind::kInvalidPairing, "nested test: reports use different sigma^2");
  }
  NestedComparison out;
  out.dof_diff = big.char_rank_used - small.char_rank_used;
  if (out.dof_diff < 1) {
    throw Error(ErrorKind::kInvalidParameter,
                "nested test: the larger model must have a strictly larger characteristic rank");
  }
  out.raw_t_diff = small.statistic - big.statistic;
  out.clamped = out.raw_t_diff < 0;
  out.t_diff = std::max(0.0, out.raw_t_diff);
  double delta = 0.0;
  if (small.noncentrality && big.noncentrality) {
    delta = std::max(0.0, *small.noncentrality - *big.noncentrality);
  }
  out.p_value_diff = chi2_sf(out.t_diff, {static_cast<double>(out.dof_diff), delta});
  return out;
}

VarianceEstimate variance_from_leave_out(double rss_outer, double rss_inner, Index dof_used,
                                         double N) {
  if (dof_used < 1) {
    throw Error(ErrorKind::kInvalidParameter, "sigma^2 estimate: need at least one left-out coordinate");
  }
  VarianceEstimate est;
  est.dof_used = dof_used;
  est.rss_outer = rss_outer;
  est.rss_inner = rss_inner;
  const double raw = N * (rss_outer - rss_inner) / static_cast<double>(dof_used);
  const double floor = std::max(1e-12 * N * rss_outer / static_cast<double>(dof_used), 1e-300);
  if (!(raw > floor)) {
    est.sigma2 = floor;
    est.clamped = true;
    est.warning = "leave-out numerator not positive (inner fit poorer than outer fit); clamped";
  } else {
    est.sigma2 = raw;
  }
  return est;
}

}  // namespace mgof
