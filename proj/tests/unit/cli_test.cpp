#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "mgof/cli/config.hpp"
#include "mgof/cli/data.hpp"
#include "mgof/cli/records.hpp"
#include "mgof/cli/runner.hpp"

namespace mgof::cli {
namespace {

using nlohmann::json;

int error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

TEST(Config, OnlyFamilyIsRequired) {
  const ExperimentConfig c = parse_config("model:\n  family: tensor\n");
  EXPECT_EQ(c.family, FamilyKind::kTensor);
  EXPECT_EQ(c.schema_version, 1);
  EXPECT_EQ(c.order, 1);
  EXPECT_DOUBLE_EQ(c.alpha, 0.05);
  EXPECT_FALSE(c.procedure.has_value());
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ReadsEverySection) {
  const ExperimentConfig c = parse_config(R"(schema_version: 1
procedure: select
model:
  family: complex_matrix
  n1: 12
  n2: 10
  num_observed: 80
  order: 2
noise:
  estimate: {order: 2, kept_units: 60}
  N: 4
truth: {order: 2, sigma: 0.5, signal_scale: 2}
selection: {r_max: 3}
alpha: 0.01
replications: 7
seed: 18446744073709551615
jobs: 3
output: out
fit: {step: gd, num_restarts: 2, polish: false}
)");
  EXPECT_EQ(*c.procedure, Procedure::kSelect);
  EXPECT_EQ(c.n1, 12);
  EXPECT_EQ(c.num_observed, 80);
  EXPECT_EQ(c.estimate->kept_units, 60);
  EXPECT_DOUBLE_EQ(c.N, 4.0);
  EXPECT_DOUBLE_EQ(c.sigma, 0.5);
  EXPECT_EQ(c.r_max, 3);
  EXPECT_EQ(c.seed, 18446744073709551615ULL);
  EXPECT_EQ(c.fit.step, StepPolicy::kGradientDescent);
  EXPECT_FALSE(c.fit.polish);
  EXPECT_EQ(c.line_of("model.n2"), 6);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ErrorsCarryTheirLine) {
  EXPECT_EQ(error_line("model:\n  family: tensor\n  n4: 3\n"), 3);             // unknown key
  EXPECT_EQ(error_line("model:\n  family: tensor\n  n1: three\n"), 3);         // type
  EXPECT_EQ(error_line("model:\n  family: banana\n"), 2);                      // enum
  EXPECT_EQ(error_line("alpha: 0.1\nmodel:\n  n1: 3\n"), 3);                   // missing family
  EXPECT_EQ(error_line("schema_version: 2\nmodel: {family: nn}\n"), 1);        // version
  EXPECT_EQ(error_line("model:\n  family: nn\n   bad indent: [\n"), 3);        // syntax
  EXPECT_EQ(error_line("model: {family: nn}\nfit:\n  step: newton\n"), 3);
  EXPECT_EQ(error_line("model: {family: nn}\nprocedure: fit\n"), 2);
  EXPECT_GT(error_line(""), 0);
}

TEST(Config, ValidationErrorsPointAtTheKey) {
  ExperimentConfig c = parse_config("model:\n  family: real_matrix\n  n1: 4\n  n2: 5\n  order: 9\n");
  try {
    c.validate();
    FAIL() << "order above min(n1, n2) accepted";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 5);
  }
  c = parse_config("model: {family: nn}\nalpha: 1.5\n");
  EXPECT_THROW(c.validate(), ConfigError);
  c = parse_config("model: {family: nn}\ndata: {path: x.csv}\n");
  c.procedure = Procedure::kTest;
  EXPECT_THROW(c.validate(), ConfigError);  // observed data needs a variance source
  c.procedure = Procedure::kSimulate;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, EstimateDefaultsResolve) {
  ExperimentConfig c = parse_config("model: {family: real_matrix, order: 3}\nnoise: {estimate: {}}\n");
  const LeaveOutSpec s = c.resolve_estimate(400);
  EXPECT_EQ(s.order, 3);
  EXPECT_EQ(s.kept_units, 300);
}

TEST(Records, ConfigRoundTrips) {
  ExperimentConfig c = parse_config(R"(model: {family: demixing, sensors: 6, grid: 12, order: 2}
noise: {sigma2: 0.25, noncentrality: 1.5, drift: 0.1}
data: {path: d.csv}
seed: 99
fit: {grad_tol: 1.0e-11}
)");
  c.procedure = Procedure::kTest;
  const json j = c;
  const ExperimentConfig back = j.get<ExperimentConfig>();
  EXPECT_EQ(json(back), j);
  EXPECT_EQ(back.sensors, 6);
  EXPECT_EQ(*back.sigma2, 0.25);
  EXPECT_EQ(*back.data_path, "d.csv");
  EXPECT_EQ(back.fit.grad_tol, 1.0e-11);
}

TEST(Records, PayloadsRoundTripExactly) {
  TestReport r;
  r.statistic = 1.0 / 3.0;
  r.dof = 968;
  r.p_value = 0.1234567890123456789;
  r.sigma2_used = 25.0;
  r.sigma2_source = Sigma2Source::kEstimated;
  r.char_rank_used = 232;
  r.obs_dim = 1200;
  r.noncentrality = 2.5;
  r.rss = 1e-300;
  r.fit_converged = false;
  r.heuristic_dof = true;
  r.obs_fingerprint = 0xfedcba9876543210ULL;

  SelectionTrace t;
  t.alpha = 0.05;
  t.r_max = 3;
  t.chosen_order = 2;
  t.sigma2 = {24.9, Sigma2Source::kEstimated};
  t.sigma2_estimate = VarianceEstimate{24.9, 300, 1000.5, 700.25, false, ""};
  t.entries.push_back({1, Decision::kReject, r, "", 5});
  t.entries.push_back({2, Decision::kAccept, r, "note", 1});
  t.entries.push_back({3, Decision::kSkipped, std::nullopt, "saturated", 0});

  ReplicationOutcome ok{3, true, "", t};
  ReplicationOutcome bad{4, false, "boom", {}};

  RankEstimate e;
  e.estimate = 50;
  e.per_sample_ranks = {50, 49, 50};
  e.num_samples = 3;
  e.agreement_fraction = 2.0 / 3.0;
  e.smallest_retained_sv = 1.2345678901234567e-3;
  e.largest_discarded_sv = 4.4e-17;
  e.warning = true;
  e.note = "n";

  for (const json& j : {json(r), json(t), json(ok), json(bad), json(e)}) {
    const json reparsed = json::parse(j.dump());
    EXPECT_EQ(reparsed, j);
  }
  const TestReport r2 = json::parse(json(r).dump()).get<TestReport>();
  EXPECT_EQ(r2.statistic, r.statistic);
  EXPECT_EQ(r2.p_value, r.p_value);
  EXPECT_EQ(r2.rss, r.rss);
  EXPECT_EQ(r2.obs_fingerprint, r.obs_fingerprint);
  EXPECT_EQ(r2.noncentrality, r.noncentrality);
  const SelectionTrace t2 = json::parse(json(t).dump()).get<SelectionTrace>();
  EXPECT_EQ(json(t2), json(t));
  EXPECT_FALSE(t2.entries[2].report.has_value());
  EXPECT_EQ(json(json(bad).get<ReplicationOutcome>()), json(bad));
  EXPECT_EQ(json(json(e).get<RankEstimate>()), json(e));
}

TEST(Records, RunIdIgnoresSchedulingOnly) {
  ExperimentConfig a = parse_config("model: {family: nn}\n");
  ExperimentConfig b = a;
  b.jobs = 4;
  b.output = "elsewhere";
  EXPECT_EQ(run_id(Procedure::kRank, a), run_id(Procedure::kRank, b));
  EXPECT_EQ(run_id(Procedure::kRank, a).size(), 12u);
  b.seed = 1;
  EXPECT_NE(run_id(Procedure::kRank, a), run_id(Procedure::kRank, b));
  EXPECT_NE(run_id(Procedure::kRank, a), run_id(Procedure::kTest, a));
}

TEST(Data, MatrixWithHeader) {
  ExperimentConfig c = parse_config("model: {family: complex_matrix, n1: 3, n2: 2}\n");
  const LoadedData d = parse_data(c, "i,j,value,value_imag\n0,1,1.5,-2\n2,0,3,4\n", "m.csv");
  EXPECT_EQ(d.family->obs_dim(), 4);
  EXPECT_EQ(d.family->num_units(), 2);
  EXPECT_EQ(d.y, (Vector(4) << 1.5, 3, -2, 4).finished());
}

TEST(Data, NetworkDesignFromColumns) {
  ExperimentConfig c = parse_config("model: {family: nn, activation: quadratic}\n");
  const LoadedData d = parse_data(c, "1,2,3,10\n4,5,6,20\n", "n.csv");
  EXPECT_EQ(d.family->obs_dim(), 2);
  EXPECT_EQ(d.family->model(1)->param_dim(), 3);
  EXPECT_EQ(d.y, (Vector(2) << 10, 20).finished());
}

TEST(Data, DemixingLayout) {
  ExperimentConfig c = parse_config("model: {family: demixing, sensors: 2, grid: 4}\n");
  const LoadedData d = parse_data(c, "0,1,2,0.5,0.25\n1,1,0,2,0\n", "x.csv");
  EXPECT_EQ(d.y, (Vector(4) << 0.5, 2, 0.25, 0).finished());
}

TEST(Data, ErrorsNameTheLine) {
  ExperimentConfig c = parse_config("model: {family: tensor, n1: 2, n2: 2, n3: 2}\n");
  auto message = [&](const std::string& text) {
    try {
      parse_data(c, text, "t.csv");
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message("0,0,0,1\n0,0,2,1\n").find("t.csv:2:"), std::string::npos);  // out of range
  EXPECT_NE(message("0,0,0,1\n0,0,0,2\n").find("t.csv:2: repeated"), std::string::npos);
  EXPECT_NE(message("0,0,0,1\n0,0,1\n").find("t.csv:2:"), std::string::npos);    // width
  EXPECT_NE(message("0,0,0,1\n\n1,1,x,1\n").find("t.csv:3:"), std::string::npos);
  EXPECT_NE(message("0,0,0.5,1\n").find("t.csv:1:"), std::string::npos);
  EXPECT_NE(message("i,j,l,value\n").find("no data rows"), std::string::npos);
}

TEST(Runner, InvalidConfigWritesNothing) {
  ExperimentConfig c = parse_config("model: {family: real_matrix, n1: 3, n2: 3, order: 7}\n");
  c.output = ::testing::TempDir() + "mgof_runner_invalid";
  std::ostringstream err;
  const RunOutcome o = run(Procedure::kRank, c, err);
  EXPECT_EQ(o.exit_code, kExitUsage);
  EXPECT_TRUE(o.files.empty());
  EXPECT_FALSE(std::filesystem::exists(c.output));
  EXPECT_NE(err.str().find("model.order"), std::string::npos);
}

}  // namespace
}  // namespace mgof::cli
