#include "mgof/cli/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "mgof/cli/data.hpp"
#include "mgof/cli/records.hpp"

using nlohmann::json;

namespace mgof::cli {

namespace {

namespace fs = std::filesystem;

struct Prepared {
  FamilyPtr family;
  ObservationSet obs;
  bool synthetic = false;
};

/// Everything that can fail because of the input happens here, before any
/// output exists.
Prepared prepare(Procedure proc, const ExperimentConfig& cfg) {
  Prepared p;
  if (proc == Procedure::kSimulate) {
    cfg.scenario().validate();
    return p;
  }
  if (cfg.data_path) {
    LoadedData d = load_data(cfg, *cfg.data_path);
    p.family = std::move(d.family);
    p.obs.y_hat = std::move(d.y);
    p.obs.N = cfg.N;
    if (cfg.sigma2) p.obs.noise_sd = std::sqrt(*cfg.sigma2);
  } else {
    ScenarioInstance inst = synthesize_scenario(cfg.scenario(), RngSeed{cfg.seed}.split(0));
    p.family = std::move(inst.family);
    p.obs = std::move(inst.obs);
    p.synthetic = true;
  }
  p.obs.validate();

  // Construct the probed model so that an out-of-range order is a usage error.
  const Index order = cfg.order;
  (void)p.family->model(order);
  if (proc == Procedure::kTest) {
    const Index cr = p.family->char_rank(order);
    if (cr >= p.family->obs_dim()) {
      throw Error(ErrorKind::kUnderdetermined,
                  "order " + std::to_string(order) + " saturates the data: characteristic rank " +
                      std::to_string(cr) + " >= " + std::to_string(p.family->obs_dim()) +
                      " observed coordinates");
    }
  }
  if (proc == Procedure::kSigma2 || (cfg.estimate && proc != Procedure::kRank)) {
    const LeaveOutSpec spec = cfg.resolve_estimate(p.family->num_units());
    if (spec.kept_units < 1 || spec.kept_units >= p.family->num_units()) {
      throw ConfigError("'noise.estimate.kept_units': must be in [1, " +
                            std::to_string(p.family->num_units() - 1) + "]",
                        cfg.line_of("noise.estimate.kept_units"));
    }
    (void)p.family->model(spec.order);
  }
  return p;
}

Sigma2 known_sigma2(const ExperimentConfig& cfg) {
  return {cfg.sigma2 ? *cfg.sigma2 : cfg.sigma * cfg.sigma, Sigma2Source::kKnown};
}

json fit_json(const FitResult& f) {
  return json{{"rss", f.rss},
              {"converged", f.converged},
              {"orthogonality_score", f.orthogonality_score},
              {"restarts_used", f.restarts_used},
              {"iterations", f.iterations}};
}

struct Computed {
  json result;          // payload of the "result" record (single-run procedures)
  std::vector<json> replications;
  json summary_payload;  // null except for simulate
  bool complete = true;
  std::string message;
  std::vector<std::string> extra_files;
};

Computed compute_rank(const ExperimentConfig& cfg, const Prepared& p) {
  const ModelPtr model = p.family->model(cfg.order);
  const RankEstimate est = estimate_char_rank(*model, cfg.rank_samples, RngSeed{cfg.seed}.split(1));
  Computed c;
  c.result = json{{"order", cfg.order},
                  {"model", model->name()},
                  {"param_dim", model->param_dim()},
                  {"obs_dim", model->obs_dim()},
                  {"estimate", est}};
  const auto claimed = model->claimed_char_rank();
  c.result["claimed_char_rank"] = claimed ? json(*claimed) : json(nullptr);
  return c;
}

Computed compute_test(const ExperimentConfig& cfg, const Prepared& p) {
  const RngSeed seed{cfg.seed};
  Computed c;
  Sigma2 s2 = known_sigma2(cfg);
  json est_json = nullptr;
  if (cfg.estimate) {
    const VarianceEstimate v = estimate_sigma2(*p.family, p.obs.y_hat, p.obs.N,
                                               cfg.resolve_estimate(p.family->num_units()),
                                               cfg.fit, seed.split(2));
    s2 = {v.sigma2, Sigma2Source::kEstimated};
    est_json = v;
  }
  const FitOptions opts = p.family->fit_options(cfg.order, cfg.fit);
  const FitResult fit = p.family->fit(cfg.order, p.obs.y_hat, opts, seed.split(1));
  const TestReport rep = gof_test(p.obs, fit, p.family->char_rank(cfg.order), s2,
                                  cfg.noncentrality, p.family->heuristic_dof());
  c.result = json{{"order", cfg.order}, {"fit", fit_json(fit)}, {"report", rep},
                  {"sigma2_estimate", est_json}};
  if (!fit.converged) {
    c.complete = false;
    c.message = "fit did not meet the orthogonality certificate";
  }
  return c;
}

Computed compute_select(const ExperimentConfig& cfg, const Prepared& p) {
  Sigma2Policy policy = known_sigma2(cfg);
  if (cfg.estimate) policy = cfg.resolve_estimate(p.family->num_units());
  const SelectionTrace trace =
      select_order(*p.family, p.obs, cfg.r_max, cfg.alpha, policy, cfg.fit, RngSeed{cfg.seed}.split(1));
  Computed c;
  c.result = json{{"trace", trace}};
  for (const auto& e : trace.entries) {
    if (e.report && !e.report->fit_converged) {
      c.complete = false;
      c.message = "fit at order " + std::to_string(e.order) + " did not meet the orthogonality certificate";
      break;
    }
  }
  return c;
}

Computed compute_sigma2(const ExperimentConfig& cfg, const Prepared& p) {
  const LeaveOutSpec spec = cfg.resolve_estimate(p.family->num_units());
  const VarianceEstimate v =
      estimate_sigma2(*p.family, p.obs.y_hat, p.obs.N, spec, cfg.fit, RngSeed{cfg.seed}.split(2));
  Computed c;
  c.result = json{{"order", spec.order},
                  {"kept_units", spec.kept_units},
                  {"num_units", p.family->num_units()},
                  {"estimate", v}};
  return c;
}

/// Sorted statistics at the true order against chi-square quantiles at the
/// plotting positions (i - 0.5) / n. Replications whose scan stopped before
/// the true order contribute nothing.
json write_qq(const ReplicationSummary& s, const fs::path& path) {
  std::vector<double> stats;
  std::map<Index, std::size_t> dofs;
  for (const auto& o : s.outcomes) {
    if (!o.ok) continue;
    for (const auto& e : o.trace.entries) {
      if (e.order == s.true_order && e.report) {
        stats.push_back(e.report->statistic);
        ++dofs[e.report->dof];
      }
    }
  }
  std::sort(stats.begin(), stats.end());
  Index dof = 0;
  std::size_t best = 0;
  for (const auto& [d, n] : dofs) {
    if (n > best) dof = d, best = n;
  }
  std::ofstream out(path);
  out << "i,plotting_position,statistic,chi2_quantile\n";
  out << std::setprecision(17);
  const std::size_t n = stats.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double pp = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    out << i + 1 << ',' << pp << ',' << stats[i] << ',' << chi2_quantile(pp, static_cast<double>(dof))
        << '\n';
  }
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return json{{"file", path.filename().string()},
              {"points", n},
              {"dof", dof},
              {"dof_values", dofs.size()}};
}

Computed compute_simulate(const ExperimentConfig& cfg, const fs::path& qq_path) {
  const ReplicationSummary s =
      run_replications(cfg.scenario(), cfg.replications, RngSeed{cfg.seed}, cfg.jobs);
  Computed c;
  for (const auto& o : s.outcomes) c.replications.push_back(o);
  json counts = json::array();
  for (const auto& [order, n] : s.counts) counts.push_back({{"order", order}, {"count", n}});
  c.summary_payload = json{{"num_reps", s.num_reps},
                           {"completed", s.completed},
                           {"failed", s.failed},
                           {"true_order", s.true_order},
                           {"counts", counts},
                           {"fdr", s.fdr ? json(*s.fdr) : json(nullptr)},
                           {"qq", write_qq(s, qq_path)}};
  c.extra_files.push_back(qq_path.string());
  if (s.failed > 0) {
    c.complete = false;
    c.message = std::to_string(s.failed) + " of " + std::to_string(s.num_reps) + " replications failed";
  }
  return c;
}

}  // namespace

RunOutcome run(Procedure proc, ExperimentConfig cfg, std::ostream& err) {
  RunOutcome outcome;
  cfg.procedure = proc;
  Prepared prep;
  try {
    cfg.validate();
    prep = prepare(proc, cfg);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    outcome.exit_code = kExitUsage;
    return outcome;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    outcome.exit_code = kExitUsage;
    return outcome;
  } catch (const Error& e) {
    err << "invalid parameters: " << e.what() << '\n';
    outcome.exit_code = kExitUsage;
    return outcome;
  }

  const std::string id = run_id(proc, cfg);
  const fs::path dir(cfg.output);
  const std::string stem = std::string(to_string(proc)) + "-" + id;
  const fs::path result_path = dir / (stem + ".jsonl");
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(result_path);
  if (!out) {
    err << "cannot write " << result_path.string() << '\n';
    outcome.exit_code = kExitUsage;
    return outcome;
  }
  outcome.files.push_back(result_path.string());

  out << dump_line(json{{"record", "run"},
                        {"run_id", id},
                        {"schema_version", kSchemaVersion},
                        {"procedure", to_string(proc)},
                        {"started_at", utc_timestamp()},
                        {"config", cfg}})
      << '\n';
  out.flush();

  json summary{{"record", "summary"}, {"payload", nullptr}};
  try {
    Computed c;
    switch (proc) {
      case Procedure::kRank: c = compute_rank(cfg, prep); break;
      case Procedure::kTest: c = compute_test(cfg, prep); break;
      case Procedure::kSelect: c = compute_select(cfg, prep); break;
      case Procedure::kSigma2: c = compute_sigma2(cfg, prep); break;
      case Procedure::kSimulate: c = compute_simulate(cfg, dir / (stem + "-qq.csv")); break;
    }
    if (proc == Procedure::kSimulate) {
      for (const auto& r : c.replications) out << dump_line(json{{"record", "replication"}, {"payload", r}}) << '\n';
    } else {
      out << dump_line(json{{"record", "result"}, {"payload", c.result}}) << '\n';
    }
    summary["payload"] = c.summary_payload;
    summary["status"] = c.complete ? "complete" : "incomplete";
    summary["message"] = c.message;
    if (!c.complete) {
      err << "warning: " << c.message << '\n';
      outcome.exit_code = kExitIncomplete;
    }
    outcome.files.insert(outcome.files.end(), c.extra_files.begin(), c.extra_files.end());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    summary["status"] = "failed";
    summary["message"] = e.what();
    outcome.exit_code = kExitIncomplete;
  }
  summary["finished_at"] = utc_timestamp();
  out << dump_line(summary) << '\n';
  if (!out) {
    err << "error writing " << result_path.string() << '\n';
    outcome.exit_code = kExitIncomplete;
  }
  return outcome;
}

}  // namespace mgof::cli
