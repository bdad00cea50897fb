#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "mgof/char_rank.hpp"
#include "mgof/demixing.hpp"

using namespace mgof;

namespace {

using Complex = std::complex<double>;
constexpr double kPi = std::numbers::pi;

// Independent oracle: build the sensor signals x_n(t) = sum_k s_k(t - tau_{n,k})
// on a fine time grid, transform by trapezoidal quadrature and form
// X_n(f) conj(X_m(f)).
Complex time_domain_cross(const DemixParams& p, Index n, Index m, double f) {
  const double h = 1e-3, t_max = 12.0;
  auto transform = [&](Index sensor) {
    Complex acc = 0.0;
    for (double t = -t_max; t <= t_max; t += h) {
      double x = 0.0;
      for (Index k = 0; k < p.rho.size(); ++k) {
        const double s = t - p.tau(sensor, k);
        x += p.rho(k) * std::exp(-p.alpha(k) * s * s);
      }
      acc += x * std::polar(1.0, 2.0 * kPi * f * t);
    }
    return acc * h;
  };
  return transform(n) * std::conj(transform(m));
}

DemixParams fixed_params() {
  DemixParams p;
  p.rho = Vector(2);
  p.rho << 10.3, 10.8;
  p.alpha = Vector(2);
  p.alpha << 10.1, 10.7;
  p.tau = RealMatrix(3, 2);
  p.tau << 0.4, -1.2, 2.1, 0.3, -0.7, 1.9;
  return p;
}

TEST(Demixing, ClosedFormMatchesTimeDomainOracle) {
  const DemixingModel model(3, 2, 16);
  const DemixParams p = fixed_params();
  for (Index f = 0; f <= 3; ++f) {
    for (Index n = 0; n < 3; ++n) {
      for (Index m = 0; m < 3; ++m) {
        const Complex closed = model.cross_spectrum(p, n, m, f);
        const Complex oracle = time_domain_cross(p, n, m, static_cast<double>(f));
        EXPECT_LE(std::abs(closed - oracle), 1e-3 * std::abs(oracle))
            << "n=" << n << " m=" << m << " f=" << f << " closed=" << closed << " oracle=" << oracle;
      }
    }
  }
}

TEST(Demixing, SingleSourceWithoutDelaysIsReal) {
  const DemixingModel model(4, 1, 8);
  DemixParams p;
  p.rho = Vector::Constant(1, 10.5);
  p.alpha = Vector::Constant(1, 10.2);
  p.tau = RealMatrix::Zero(4, 1);
  const Vector y = model.evaluate(model.pack(p));
  const Index half = y.size() / 2;
  EXPECT_EQ(y.tail(half).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT(y.head(half).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Demixing, SwappingSensorsConjugates) {
  const DemixingModel model(3, 2, 16);
  const DemixParams p = fixed_params();
  for (Index f = 0; f < 5; ++f) {
    const Complex a = model.cross_spectrum(p, 0, 2, f);
    const Complex b = model.cross_spectrum(p, 2, 0, f);
    EXPECT_NEAR(a.real(), b.real(), 1e-12 * std::max(1.0, std::abs(a)));
    EXPECT_NEAR(a.imag(), -b.imag(), 1e-12 * std::max(1.0, std::abs(a)));
  }
}

TEST(Demixing, InvariantUnderSourcePermutationAndSignFlip) {
  const DemixingModel model(3, 2, 16);
  const DemixParams p = fixed_params();
  const Vector y = model.evaluate(model.pack(p));

  DemixParams swapped = p;
  swapped.rho << p.rho(1), p.rho(0);
  swapped.alpha << p.alpha(1), p.alpha(0);
  swapped.tau.col(0) = p.tau.col(1);
  swapped.tau.col(1) = p.tau.col(0);
  EXPECT_LT((model.evaluate(model.pack(swapped)) - y).cwiseAbs().maxCoeff(), 1e-10);

  DemixParams flipped = p;
  flipped.rho = -p.rho;
  EXPECT_LT((model.evaluate(model.pack(flipped)) - y).cwiseAbs().maxCoeff(), 1e-10);

  DemixParams shifted = p;
  shifted.tau.array() += 0.37;
  EXPECT_LT((model.evaluate(model.pack(shifted)) - y).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Demixing, RankDeficiencyIsExactlyOne) {
  for (Index K = 1; K <= 3; ++K) {
    const DemixingModel model(8, K, 16);
    const RankEstimate est = estimate_char_rank(model, 5, {static_cast<std::uint64_t>(K)});
    EXPECT_EQ(est.estimate, model.param_dim() - 1) << "K=" << K;
    EXPECT_EQ(est.estimate, *model.claimed_char_rank());
  }
  EXPECT_EQ(estimate_char_rank(DemixingModel(8, 1, 16), 5, {9}).estimate, 9);
}

TEST(Demixing, PackUnpackRoundTrip) {
  const DemixingModel model(5, 3, 8);
  const Vector theta = model.sample_param({4});
  EXPECT_EQ(model.pack(model.unpack(theta)), theta);
  const DemixParams p = model.unpack(theta);
  EXPECT_EQ(p.tau(2, 1), theta(2 * 3 + 2 * 3 + 1));
  EXPECT_GE(p.alpha.minCoeff(), 10.0);
  EXPECT_LE(p.alpha.maxCoeff(), 11.0);
  EXPECT_LE(p.tau.cwiseAbs().maxCoeff(), 2.5);
}

TEST(Demixing, RejectsNonPositiveWidthAndBadIndex) {
  const DemixingModel model(3, 2, 8);
  DemixParams p = fixed_params();
  p.alpha(1) = 0.0;
  EXPECT_THROW(model.evaluate(model.pack(p)), Error);
  EXPECT_THROW(DemixingModel(3, 2, 8, {{0, 3, 0}}), Error);
  EXPECT_THROW(DemixingModel(3, 0, 8), Error);
}

TEST(Demixing, IndexSets) {
  EXPECT_EQ(upper_demix_index(4, 5).size(), 10u * 5u);
  EXPECT_EQ(full_demix_index(4, 5).size(), 16u * 5u);
  EXPECT_EQ(DemixingModel(4, 2, 5).obs_dim(), 2 * 10 * 5);
}

TEST(LogWidthDemixing, CoordinatesAndJacobian) {
  auto base = std::make_shared<DemixingModel>(4, 2, 8);
  const LogWidthDemixingModel lw(base);
  const Vector natural = base->sample_param({3});
  const Vector beta = lw.from_natural(natural);
  EXPECT_LT((lw.to_natural(beta) - natural).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(beta(2), std::log(natural(2)), 1e-14);
  EXPECT_LT((lw.evaluate(beta) - base->evaluate(natural)).cwiseAbs().maxCoeff(), 1e-12);
  const RealMatrix fd = fd_jacobian([&](const Vector& t) { return lw.evaluate(t); }, beta);
  EXPECT_LT((lw.jacobian(beta) - fd).cwiseAbs().maxCoeff(), 1e-4);
}

}  // namespace
