#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "mgof/fitting.hpp"

using namespace mgof;

namespace {

RealMatrix full_matrix(const Vector& theta, Index n1, Index n2, Index r) {
  return unpack_factor(theta, 0, n1, r) * unpack_factor(theta, n1 * r, n2, r).transpose();
}

TEST(FitLowrankMatrix, RecoversNoiselessMatrix) {
  Rng rng = make_rng({1});
  const Index n1 = 15, n2 = 12, r = 2;
  const MatrixIndexSet omega = sample_matrix_index(n1, n2, 120, rng);
  const MatrixCompletionModel m(n1, n2, r, omega);
  const Vector truth = m.sample_param({2});
  const FitResult fit = fit_lowrank_matrix(omega, m.evaluate(truth), n1, n2, r, {}, {3});
  EXPECT_LT(fit.rss, 1e-16);
  EXPECT_TRUE(fit.converged);
  // Unobserved entries are completed too.
  const RealMatrix diff = full_matrix(fit.theta, n1, n2, r) - full_matrix(truth, n1, n2, r);
  EXPECT_LT(diff.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(FitLowrankMatrix, FullRankFitInterpolates) {
  Rng rng = make_rng({4});
  const Vector y = standard_normal(rng, 20);
  const FitResult fit = fit_lowrank_matrix(full_matrix_index(5, 4), y, 5, 4, 4, {}, {5});
  EXPECT_LT(fit.rss, 1e-16);
}

TEST(FitLowrankMatrix, RejectsBadRankAndUnderdeterminedProblems) {
  Rng rng = make_rng({6});
  const MatrixIndexSet omega = sample_matrix_index(10, 10, 30, rng);
  const Vector y = standard_normal(rng, 30);
  EXPECT_THROW(fit_lowrank_matrix(omega, y, 10, 10, 0, {}, {1}), Error);
  try {
    fit_lowrank_matrix(omega, y, 10, 10, 2, {}, {1});
    FAIL() << "expected an underdetermined error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnderdetermined);
  }
  EXPECT_THROW(fit_lowrank_matrix(omega, standard_normal(rng, 29), 10, 10, 1, {}, {1}), Error);
}

// Oracle: at the truth with iid N(0, sigma^2) noise, rss / sigma^2 of the
// least-squares fit is approximately chi2(|Omega| - rho) at high SNR. The mean
// of 200 draws has sd sqrt(2 dof / 200); the band is 4 sd wide on each side.
TEST(FitLowrankMatrix, ResidualChiSquareMeanBand) {
  Rng rng = make_rng({7});
  const Index n1 = 15, n2 = 12, r = 2;
  const MatrixIndexSet omega = sample_matrix_index(n1, n2, 120, rng);
  const MatrixCompletionModel m(n1, n2, r, omega);
  const double sigma = 0.01;
  const double dof = 120.0 - static_cast<double>(m.nonlinear_char_rank());
  double sum = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const auto obs = synthesize_observation(m, m.sample_param(RngSeed{8}.split(rep)), sigma, {}, 1.0,
                                            RngSeed{9}.split(rep));
    sum += fit_lowrank_matrix(omega, obs.y_hat, n1, n2, r, {}, RngSeed{10}.split(rep)).rss / (sigma * sigma);
  }
  EXPECT_NEAR(sum / 200.0, dof, 4.0 * std::sqrt(2.0 * dof / 200.0));
}

TEST(FitLowrankMatrix, AlsSweepsNeverIncreaseRss) {
  Rng rng = make_rng({11});
  const MatrixIndexSet omega = sample_matrix_index(20, 20, 200, rng);
  const Vector y = standard_normal(rng, 200);
  FitOptions opts;
  opts.polish = false;
  opts.num_restarts = 1;
  const FitResult fit = fit_lowrank_matrix(omega, y, 20, 20, 3, opts, {12});
  ASSERT_GE(fit.rss_trace.size(), 2u);
  for (std::size_t i = 1; i < fit.rss_trace.size(); ++i) {
    EXPECT_LE(fit.rss_trace[i], fit.rss_trace[i - 1] + 1e-12 * fit.rss_trace[i - 1]) << "sweep " << i;
  }
}

TEST(FitLowrankMatrix, RssNonIncreasingInOrder) {
  Rng rng = make_rng({13});
  const MatrixIndexSet omega = sample_matrix_index(15, 15, 180, rng);
  const MatrixCompletionModel m(15, 15, 2, omega);
  const auto obs = synthesize_observation(m, m.sample_param({14}), 0.3, {}, 1.0, {15});
  double prev = std::numeric_limits<double>::infinity();
  for (Index r = 1; r <= 4; ++r) {
    const double rss = fit_lowrank_matrix(omega, obs.y_hat, 15, 15, r, {}, {16}).rss;
    EXPECT_LE(rss, prev * (1.0 + 1e-8)) << "r=" << r;
    prev = rss;
  }
}

TEST(FitLowrankMatrix, DeterministicInSeed) {
  Rng rng = make_rng({17});
  const MatrixIndexSet omega = sample_matrix_index(10, 9, 60, rng);
  const Vector y = standard_normal(rng, 60);
  const FitResult a = fit_lowrank_matrix(omega, y, 10, 9, 2, {}, {18});
  const FitResult b = fit_lowrank_matrix(omega, y, 10, 9, 2, {}, {18});
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_EQ(a.rss, b.rss);
  EXPECT_EQ(a.restarts_used, b.restarts_used);
}

TEST(FitLowrankMatrix, CertificateHoldsOnConvergedFit) {
  Rng rng = make_rng({19});
  const MatrixIndexSet omega = sample_matrix_index(12, 12, 100, rng);
  const MatrixCompletionModel m(12, 12, 2, omega);
  const auto obs = synthesize_observation(m, m.sample_param({20}), 0.5, {}, 1.0, {21});
  const FitResult fit = fit_lowrank_matrix(omega, obs.y_hat, 12, 12, 2, {}, {22});
  ASSERT_TRUE(fit.converged);
  EXPECT_LT(fit.orthogonality_score, 1e-5);
  EXPECT_NEAR(orthogonality_score(m, fit.theta, fit.residual), fit.orthogonality_score, 1e-12);
  EXPECT_LT((fit.residual - (obs.y_hat - fit.x_hat)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(fit.residual.squaredNorm(), fit.rss, 1e-12 * std::max(1.0, fit.rss));
}

TEST(FitLowrankMatrix, AcceptThresholdStopsRestartsEarly) {
  Rng rng = make_rng({23});
  const MatrixIndexSet omega = sample_matrix_index(10, 10, 80, rng);
  const MatrixCompletionModel m(10, 10, 2, omega);
  const Vector y = m.evaluate(m.sample_param({24}));
  FitOptions opts;
  opts.num_restarts = 5;
  opts.accept_rss = 1e-10;
  EXPECT_EQ(fit_lowrank_matrix(omega, y, 10, 10, 2, opts, {25}).restarts_used, 1);
  opts.accept_rss.reset();
  EXPECT_EQ(fit_lowrank_matrix(omega, y, 10, 10, 2, opts, {25}).restarts_used, 5);
}

TEST(FitLowrankComplex, RecoversNoiselessMatrixAndIsConjugationSymmetric) {
  Rng rng = make_rng({26});
  const MatrixIndexSet omega = sample_matrix_index(12, 10, 90, rng);
  const MatrixCompletionModel m(12, 10, 2, omega, Field::kComplex);
  const Vector clean = m.evaluate(m.sample_param({27}));
  EXPECT_LT(fit_lowrank_complex(omega, clean, 12, 10, 2, {}, {28}).rss, 1e-14);

  const auto obs = synthesize_observation(m, m.sample_param({29}), 0.2, {}, 1.0, {30});
  Vector conj = obs.y_hat;
  conj.tail(90) *= -1.0;
  const double a = fit_lowrank_complex(omega, obs.y_hat, 12, 10, 2, {}, {31}).rss;
  const double b = fit_lowrank_complex(omega, conj, 12, 10, 2, {}, {32}).rss;
  EXPECT_NEAR(a, b, 1e-6 * a);
}

TEST(FitTensorCp, RecoversNoiselessTensor) {
  const TensorCPModel m(4, 5, 6, 2);
  const Vector y = m.evaluate(m.sample_param({33}));
  const FitResult fit = fit_tensor_cp({}, y, 4, 5, 6, 2, {}, {34});
  EXPECT_LT(fit.rss, 1e-14);
  EXPECT_TRUE(fit.converged);
}

TEST(FitTensorCp, RejectsUnderdetermined) {
  Rng rng = make_rng({35});
  const TensorIndexSet omega = sample_tensor_index(4, 4, 4, 19, rng);  // bound 2 (4 + 4 + 4 - 2) = 20
  EXPECT_THROW(fit_tensor_cp(omega, standard_normal(rng, 19), 4, 4, 4, 2, {}, {1}), Error);
}

TEST(FitNn, RealizableQuadraticFitIsExact) {
  Rng rng = make_rng({36});
  const RealMatrix x = gaussian_design(200, 6, rng);
  const OneLayerNNModel m(x, 2, Activation::kQuadratic);
  const Vector y = m.evaluate(m.sample_param({37}));
  const FitResult fit = fit_nn(x, y, 2, Activation::kQuadratic, {}, {38});
  EXPECT_LT(fit.rss, 1e-12 * y.squaredNorm());
}

TEST(FitNn, SigmoidFitIsCertified) {
  Rng rng = make_rng({39});
  const RealMatrix x = gaussian_design(200, 5, rng);
  const OneLayerNNModel m(x, 2, Activation::kSigmoid);
  const auto obs = synthesize_observation(m, m.sample_param({40}), 0.1, {}, 1.0, {41});
  const FitResult fit = fit_nn(x, obs.y_hat, 2, Activation::kSigmoid, {}, {42});
  EXPECT_TRUE(fit.converged);
  EXPECT_LT(fit.orthogonality_score, 1e-5);
  EXPECT_LT(fit.rss / 200.0, 0.02);
}

TEST(MatrixSensing, SameSolutionAsQuadraticNetwork) {
  Rng rng = make_rng({43});
  const RealMatrix x = gaussian_design(150, 5, rng);
  const OneLayerNNModel m(x, 2, Activation::kQuadratic);
  const auto obs = synthesize_observation(m, m.sample_param({44}), 0.5, {}, 1.0, {45});
  const FitResult a = matrix_sensing_equiv(x, obs.y_hat, 2, {}, {46});
  const FitResult b = fit_nn(x, obs.y_hat, 2, Activation::kQuadratic, {}, {46});
  EXPECT_NEAR(a.rss, b.rss, 1e-8 * std::max(1.0, b.rss));
  EXPECT_NEAR(matrix_sensing_objective(x, obs.y_hat, a.theta, 2), a.rss, 1e-8 * std::max(1.0, a.rss));
}

TEST(FitDemixing, RecoversSingleSource) {
  const DemixingModel m(4, 1, 16);
  const Vector truth = m.sample_param({47});
  const auto obs = synthesize_observation(m, truth, std::sqrt(0.05), {}, 1.0, {48});
  const FitResult fit = fit_demixing(4, 1, 16, {}, obs.y_hat, {}, {49});
  EXPECT_TRUE(fit.converged);
  EXPECT_GT(fit.theta(1), 0.0);  // natural width
  // Fitted rss is no larger than the rss at the truth.
  EXPECT_LE(fit.rss, (obs.y_hat - m.evaluate(truth)).squaredNorm() * (1.0 + 1e-9));
}

TEST(LocalFit, GradientDescentReducesRss) {
  Rng rng = make_rng({50});
  const RealMatrix x = gaussian_design(100, 4, rng);
  const OneLayerNNModel m(x, 2, Activation::kSigmoid);
  const Vector y = m.evaluate(m.sample_param({51}));
  FitOptions opts;
  opts.step = StepPolicy::kGradientDescent;
  opts.max_iters = 200;
  const Vector theta0 = m.sample_param({52});
  const FitResult fit = local_fit(m, y, theta0, opts);
  EXPECT_LT(fit.rss, (y - m.evaluate(theta0)).squaredNorm());
  for (std::size_t i = 1; i < fit.rss_trace.size(); ++i) EXPECT_LE(fit.rss_trace[i], fit.rss_trace[i - 1]);
}

TEST(FitOptions, ValidationAndParsing) {
  FitOptions o;
  o.num_restarts = 0;
  EXPECT_THROW(o.validate(), Error);
  o = {};
  o.grad_tol = 0.0;
  EXPECT_THROW(o.validate(), Error);
  EXPECT_EQ(parse_step_policy("lm"), StepPolicy::kLevenbergMarquardt);
  EXPECT_EQ(parse_step_policy(to_string(StepPolicy::kGradientDescent)), StepPolicy::kGradientDescent);
  EXPECT_THROW(parse_step_policy("newton"), Error);
  EXPECT_EQ(default_demixing_restarts(3), 5);
  EXPECT_EQ(default_demixing_restarts(4), 20);
}

}  // namespace
