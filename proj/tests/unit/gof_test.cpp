#include <gtest/gtest.h>

#include <cmath>

#include "mgof/gof.hpp"

using namespace mgof;

namespace {

ObservationSet make_obs(Index m, std::uint64_t seed, double N = 1.0) {
  Rng rng = make_rng({seed});
  ObservationSet obs;
  obs.y_hat = standard_normal(rng, m);
  obs.N = N;
  return obs;
}

FitResult residual_fit(const Vector& residual) {
  FitResult fit;
  fit.residual = residual;
  fit.rss = residual.squaredNorm();
  fit.converged = true;
  return fit;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kInvalidInput;
}

TEST(GofTest, StatisticDofAndPValue) {
  const ObservationSet obs = make_obs(50, 1, 4.0);
  const FitResult fit = residual_fit(0.5 * obs.y_hat);
  const TestReport rep = gof_test(obs, fit, 10, {0.25, Sigma2Source::kKnown});
  EXPECT_EQ(rep.dof, 40);
  EXPECT_EQ(rep.obs_dim, 50);
  EXPECT_NEAR(rep.statistic, 4.0 * fit.rss / 0.25, 1e-12);
  EXPECT_NEAR(rep.p_value, chi2_sf(rep.statistic, {40.0, 0.0}), 1e-15);
  EXPECT_TRUE(rep.fit_converged);
  EXPECT_FALSE(rep.noncentrality.has_value());
}

TEST(GofTest, ScaleEquivariance) {
  const ObservationSet obs = make_obs(30, 2);
  ObservationSet scaled = obs;
  scaled.y_hat *= 7.0;
  const FitResult fit = residual_fit(0.3 * obs.y_hat);
  const FitResult fit_scaled = residual_fit(0.3 * scaled.y_hat);
  const TestReport a = gof_test(obs, fit, 5, {2.0, Sigma2Source::kKnown});
  const TestReport b = gof_test(scaled, fit_scaled, 5, {2.0 * 49.0, Sigma2Source::kKnown});
  EXPECT_NEAR(a.statistic, b.statistic, 1e-10 * a.statistic);
  EXPECT_NEAR(a.p_value, b.p_value, 1e-12);
}

TEST(GofTest, NoncentralityLowersTheEvidenceAgainstTheModel) {
  const ObservationSet obs = make_obs(40, 3);
  const FitResult fit = residual_fit(obs.y_hat);
  const TestReport central = gof_test(obs, fit, 4, {0.5, Sigma2Source::kKnown});
  const TestReport shifted = gof_test(obs, fit, 4, {0.5, Sigma2Source::kKnown}, 10.0);
  EXPECT_GT(shifted.p_value, central.p_value);
  EXPECT_NEAR(shifted.p_value, chi2_sf(shifted.statistic, {36.0, 10.0}), 1e-15);
}

TEST(GofTest, ErrorKinds) {
  const ObservationSet obs = make_obs(10, 4);
  const FitResult fit = residual_fit(obs.y_hat);
  EXPECT_EQ(kind_of([&] { gof_test(obs, fit, 10, {1.0, Sigma2Source::kKnown}); }), ErrorKind::kUnderdetermined);
  EXPECT_EQ(kind_of([&] { gof_test(obs, fit, 3, {0.0, Sigma2Source::kKnown}); }), ErrorKind::kInvalidParameter);
  EXPECT_EQ(kind_of([&] { gof_test(obs, fit, 3, {-1.0, Sigma2Source::kKnown}); }), ErrorKind::kInvalidParameter);
  EXPECT_EQ(kind_of([&] { gof_test(obs, residual_fit(Vector::Zero(9)), 3, {1.0, Sigma2Source::kKnown}); }),
            ErrorKind::kInvalidPairing);
  EXPECT_EQ(kind_of([&] { gof_test_rss(obs, -1.0, 3, {1.0, Sigma2Source::kKnown}); }), ErrorKind::kInvalidInput);
}

TEST(GofTest, UnconvergedFitIsFlagged) {
  const ObservationSet obs = make_obs(20, 5);
  FitResult fit = residual_fit(obs.y_hat);
  fit.converged = false;
  EXPECT_FALSE(gof_test(obs, fit, 3, {1.0, Sigma2Source::kKnown}).fit_converged);
}

TEST(NestedTest, DifferenceAndPValue) {
  const ObservationSet obs = make_obs(60, 6);
  const Sigma2 s2{1.0, Sigma2Source::kKnown};
  const TestReport small = gof_test_rss(obs, 80.0, 10, s2);
  const TestReport big = gof_test_rss(obs, 50.0, 16, s2);
  const NestedComparison nc = nested_test(small, big);
  EXPECT_EQ(nc.dof_diff, 6);
  EXPECT_DOUBLE_EQ(nc.t_diff, 30.0);
  EXPECT_FALSE(nc.clamped);
  EXPECT_NEAR(nc.p_value_diff, chi2_sf(30.0, {6.0, 0.0}), 1e-15);
}

TEST(NestedTest, NegativeDifferenceIsClamped) {
  const ObservationSet obs = make_obs(60, 7);
  const Sigma2 s2{1.0, Sigma2Source::kKnown};
  const NestedComparison nc = nested_test(gof_test_rss(obs, 49.0, 10, s2), gof_test_rss(obs, 50.0, 16, s2));
  EXPECT_TRUE(nc.clamped);
  EXPECT_DOUBLE_EQ(nc.t_diff, 0.0);
  EXPECT_DOUBLE_EQ(nc.raw_t_diff, -1.0);
  EXPECT_DOUBLE_EQ(nc.p_value_diff, 1.0);
}

TEST(NestedTest, PairingErrors) {
  const ObservationSet a = make_obs(60, 8), b = make_obs(60, 9);
  const Sigma2 s2{1.0, Sigma2Source::kKnown};
  EXPECT_EQ(kind_of([&] { nested_test(gof_test_rss(a, 80, 10, s2), gof_test_rss(b, 50, 16, s2)); }),
            ErrorKind::kInvalidPairing);
  EXPECT_EQ(kind_of([&] {
              nested_test(gof_test_rss(a, 80, 10, s2), gof_test_rss(a, 50, 16, {2.0, Sigma2Source::kKnown}));
            }),
            ErrorKind::kInvalidPairing);
  EXPECT_EQ(kind_of([&] { nested_test(gof_test_rss(a, 80, 16, s2), gof_test_rss(a, 50, 16, s2)); }),
            ErrorKind::kInvalidParameter);
  EXPECT_EQ(kind_of([&] { nested_test(gof_test_rss(a, 80, 16, s2), gof_test_rss(a, 50, 10, s2)); }),
            ErrorKind::kInvalidParameter);
}

TEST(Fingerprint, DependsOnDataAndSampleSize) {
  const ObservationSet a = make_obs(20, 10);
  ObservationSet b = a;
  EXPECT_EQ(observation_fingerprint(a), observation_fingerprint(b));
  b.N = 2.0;
  EXPECT_NE(observation_fingerprint(a), observation_fingerprint(b));
  b = a;
  b.y_hat(3) += 1e-12;
  EXPECT_NE(observation_fingerprint(a), observation_fingerprint(b));
}

TEST(LeaveOutVariance, FormulaAndClamping) {
  const VarianceEstimate e = variance_from_leave_out(150.0, 100.0, 40, 2.0);
  EXPECT_DOUBLE_EQ(e.sigma2, 2.0 * 50.0 / 40.0);
  EXPECT_FALSE(e.clamped);
  EXPECT_TRUE(e.warning.empty());

  const VarianceEstimate c = variance_from_leave_out(100.0, 101.0, 40);
  EXPECT_TRUE(c.clamped);
  EXPECT_GT(c.sigma2, 0.0);
  EXPECT_LT(c.sigma2, 1e-9);
  EXPECT_FALSE(c.warning.empty());

  EXPECT_THROW(variance_from_leave_out(1.0, 0.5, 0), Error);
}

TEST(Sigma2Source, ParseRoundTrip) {
  for (Sigma2Source s : {Sigma2Source::kKnown, Sigma2Source::kEstimated, Sigma2Source::kPooled}) {
    EXPECT_EQ(parse_sigma2_source(to_string(s)), s);
  }
  EXPECT_THROW(parse_sigma2_source("guess"), Error);
}

}  // namespace
