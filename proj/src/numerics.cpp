#include "mgof/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>
#include <lapacke.h>

namespace mgof {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidParameter: return "invalid-parameter";
    case ErrorKind::kInvalidInput: return "invalid-input";
    case ErrorKind::kNumericalFailure: return "numerical-failure";
    case ErrorKind::kInvalidModel: return "invalid-model";
    case ErrorKind::kUnderdetermined: return "underdetermined";
    case ErrorKind::kInvalidPairing: return "invalid-pairing";
  }
  return "unknown";
}

namespace {

constexpr double kPoissonTailMass = 1e-12;

void check_chi2_args(double x, const Chi2Params& p) {
  if (!(p.dof >= 1.0) || !std::isfinite(p.dof)) {
    throw Error(ErrorKind::kInvalidParameter, "chi2: dof must be >= 1");
  }
  if (!(p.noncentrality >= 0.0) || !std::isfinite(p.noncentrality)) {
    throw Error(ErrorKind::kInvalidParameter, "chi2: noncentrality must be >= 0");
  }
  if (!std::isfinite(x)) {
    throw Error(ErrorKind::kInvalidInput, "chi2: x must be finite");
  }
}

double central_sf(double x, double dof) {
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

double poisson_log_pmf(long j, double lambda) {
  return static_cast<double>(j) * std::log(lambda) - lambda -
         std::lgamma(static_cast<double>(j) + 1.0);
}

// Poisson(lambda) mass strictly below j_lo and strictly above j_hi, using
// P(J <= k) = Q(k + 1, lambda).
double poisson_outside(long j_lo, long j_hi, double lambda) {
  double below = j_lo > 0 ? boost::math::gamma_q(static_cast<double>(j_lo), lambda) : 0.0;
  double above = boost::math::gamma_p(static_cast<double>(j_hi + 1), lambda);
  return below + above;
}

// Sum over j of w_j * term(j), w_j ~ Poisson(lambda), on a window around the
// mode grown until the excluded Poisson mass drops below the tolerance.
template <typename Term>
double poisson_mixture(double lambda, Term term) {
  long mode = static_cast<long>(std::floor(lambda));
  long lo = mode, hi = mode;
  double sum = std::exp(poisson_log_pmf(mode, lambda)) * term(mode);
  long step = 1;
  while (poisson_outside(lo, hi, lambda) >= kPoissonTailMass) {
    for (long k = 0; k < step; ++k) {
      if (lo > 0) {
        --lo;
        sum += std::exp(poisson_log_pmf(lo, lambda)) * term(lo);
      }
      ++hi;
      sum += std::exp(poisson_log_pmf(hi, lambda)) * term(hi);
    }
    step = std::min<long>(step * 2, 64);
  }
  return sum;
}

}  // namespace

double chi2_sf(double x, Chi2Params params) {
  check_chi2_args(x, params);
  if (x < 0.0) {
    throw Error(ErrorKind::kInvalidInput, "chi2: x must be >= 0");
  }
  if (params.noncentrality == 0.0) return central_sf(x, params.dof);
  if (x == 0.0) return 1.0;
  double lambda = 0.5 * params.noncentrality;
  double sf = poisson_mixture(lambda, [&](long j) {
    return central_sf(x, params.dof + 2.0 * static_cast<double>(j));
  });
  return std::clamp(sf, 0.0, 1.0);
}

double chi2_cdf(double x, Chi2Params params) {
  check_chi2_args(x, params);
  if (x <= 0.0) return 0.0;
  if (params.noncentrality == 0.0) return boost::math::gamma_p(0.5 * params.dof, 0.5 * x);
  double lambda = 0.5 * params.noncentrality;
  double cdf = poisson_mixture(lambda, [&](long j) {
    return boost::math::gamma_p(0.5 * params.dof + static_cast<double>(j), 0.5 * x);
  });
  return std::clamp(cdf, 0.0, 1.0);
}

double chi2_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorKind::kInvalidInput, "chi2_quantile: p must be in (0, 1)");
  }
  if (!(dof >= 1.0)) {
    throw Error(ErrorKind::kInvalidParameter, "chi2_quantile: dof must be >= 1");
  }
  return 2.0 * boost::math::gamma_p_inv(0.5 * dof, p);
}

// ---------------------------------------------------------------------------

Vector singular_values(const RealMatrix& m) {
  const Index rows = m.rows(), cols = m.cols();
  const Index k = std::min(rows, cols);
  Vector sv(k);
  if (k == 0) return sv;
  if (!m.allFinite()) {
    throw Error(ErrorKind::kInvalidInput, "singular_values: matrix has non-finite entries");
  }
  RealMatrix work = m;  // dgesdd overwrites its input
  lapack_int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'N', static_cast<lapack_int>(rows),
                                   static_cast<lapack_int>(cols), work.data(),
                                   static_cast<lapack_int>(rows), sv.data(), nullptr, 1,
                                   nullptr, 1);
  if (info != 0) {
    std::ostringstream os;
    os << "SVD did not converge (info=" << info << ") for a " << rows << "x" << cols
       << " matrix";
    throw Error(ErrorKind::kNumericalFailure, os.str());
  }
  return sv;
}

double rank_tolerance(const Vector& sv, Index rows, Index cols, const RankPolicy& policy) {
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  switch (policy.mode) {
    case RankPolicy::Mode::kDefault:
      return static_cast<double>(std::max(rows, cols)) *
             std::numeric_limits<double>::epsilon() * smax;
    case RankPolicy::Mode::kRelative:
      return policy.threshold * smax;
    case RankPolicy::Mode::kAbsolute:
      return policy.threshold;
  }
  return 0.0;
}

Index rank_from_singular_values(const Vector& sv, Index rows, Index cols,
                                const RankPolicy& policy) {
  const double tau = rank_tolerance(sv, rows, cols, policy);
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tau) ++rank;
  }
  return rank;
}

Index numerical_rank(const RealMatrix& m, const RankPolicy& policy) {
  return rank_from_singular_values(singular_values(m), m.rows(), m.cols(), policy);
}

// ---------------------------------------------------------------------------

RealMatrix fd_jacobian(const MapFn& f, const Vector& theta, double step) {
  const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  Vector f0 = f(theta);
  RealMatrix jac(f0.size(), theta.size());
  Vector probe = theta;
  for (Index j = 0; j < theta.size(); ++j) {
    const double h = step > 0.0 ? step : base * std::max(1.0, std::abs(theta(j)));
    probe(j) = theta(j) + h;
    Vector fp = f(probe);
    probe(j) = theta(j) - h;
    Vector fm = f(probe);
    probe(j) = theta(j);
    if (!fp.allFinite() || !fm.allFinite()) {
      throw Error(ErrorKind::kNumericalFailure,
                  "fd_jacobian: non-finite evaluation at coordinate " + std::to_string(j));
    }
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

// ---------------------------------------------------------------------------

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

RngSeed RngSeed::split(std::uint64_t stream) const {
  return RngSeed{splitmix64(splitmix64(value) ^ splitmix64(stream + 0x632be59bd9b4e019ULL))};
}

Rng make_rng(RngSeed seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed.value),
                    static_cast<std::uint32_t>(seed.value >> 32)};
  return Rng(seq);
}

Vector standard_normal(Rng& rng, Index n) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = dist(rng);
  return v;
}

Vector uniform(Rng& rng, Index n, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = dist(rng);
  return v;
}

std::vector<Index> sample_without_replacement(Rng& rng, Index n, Index k) {
  if (k < 0 || k > n) {
    throw Error(ErrorKind::kInvalidParameter, "sample_without_replacement: need 0 <= k <= n");
  }
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(k));
  std::sort(pool.begin(), pool.end());
  return pool;
}

// ---------------------------------------------------------------------------

double ks_statistic(std::span<const double> sample,
                    const std::function<double(double)>& cdf) {
  std::vector<double> xs(sample.begin(), sample.end());
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_critical_value(std::size_t n, double alpha) {
  // Stephens' small-sample adjustment of the Kolmogorov limit.
  const double c = std::sqrt(-0.5 * std::log(0.5 * alpha));
  const double rn = std::sqrt(static_cast<double>(n));
  return c / (rn + 0.12 + 0.11 / rn);
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw Error(ErrorKind::kInvalidInput, "pearson_correlation: need two equal-length samples");
  }
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace mgof
