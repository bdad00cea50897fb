#include "mgof/cli/records.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>

using nlohmann::json;

namespace mgof {

namespace {

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
  j[key] = v ? json(*v) : json(nullptr);
}

template <typename T>
void get_optional(const json& j, const char* key, std::optional<T>& v) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    v.reset();
  } else {
    v = it->get<T>();
  }
}

Decision parse_decision(const std::string& s) {
  for (Decision d : {Decision::kReject, Decision::kAccept, Decision::kSkipped}) {
    if (s == to_string(d)) return d;
  }
  throw json::other_error::create(501, "unknown decision '" + s + "'", nullptr);
}

}  // namespace

void to_json(json& j, const RankEstimate& r) {
  j = json{{"estimate", r.estimate},
           {"per_sample_ranks", r.per_sample_ranks},
           {"num_samples", r.num_samples},
           {"agreement_fraction", r.agreement_fraction},
           {"smallest_retained_sv", r.smallest_retained_sv},
           {"largest_discarded_sv", r.largest_discarded_sv},
           {"warning", r.warning},
           {"note", r.note}};
}

void from_json(const json& j, RankEstimate& r) {
  j.at("estimate").get_to(r.estimate);
  j.at("per_sample_ranks").get_to(r.per_sample_ranks);
  j.at("num_samples").get_to(r.num_samples);
  j.at("agreement_fraction").get_to(r.agreement_fraction);
  j.at("smallest_retained_sv").get_to(r.smallest_retained_sv);
  j.at("largest_discarded_sv").get_to(r.largest_discarded_sv);
  j.at("warning").get_to(r.warning);
  j.at("note").get_to(r.note);
}

void to_json(json& j, const TestReport& r) {
  j = json{{"statistic", r.statistic},
           {"dof", r.dof},
           {"p_value", r.p_value},
           {"sigma2_used", r.sigma2_used},
           {"sigma2_source", to_string(r.sigma2_source)},
           {"char_rank_used", r.char_rank_used},
           {"obs_dim", r.obs_dim},
           {"rss", r.rss},
           {"fit_converged", r.fit_converged},
           {"heuristic_dof", r.heuristic_dof},
           {"obs_fingerprint", r.obs_fingerprint}};
  put_optional(j, "noncentrality", r.noncentrality);
}

void from_json(const json& j, TestReport& r) {
  j.at("statistic").get_to(r.statistic);
  j.at("dof").get_to(r.dof);
  j.at("p_value").get_to(r.p_value);
  j.at("sigma2_used").get_to(r.sigma2_used);
  r.sigma2_source = parse_sigma2_source(j.at("sigma2_source").get<std::string>());
  j.at("char_rank_used").get_to(r.char_rank_used);
  j.at("obs_dim").get_to(r.obs_dim);
  j.at("rss").get_to(r.rss);
  j.at("fit_converged").get_to(r.fit_converged);
  j.at("heuristic_dof").get_to(r.heuristic_dof);
  j.at("obs_fingerprint").get_to(r.obs_fingerprint);
  get_optional(j, "noncentrality", r.noncentrality);
}

void to_json(json& j, const VarianceEstimate& v) {
  j = json{{"sigma2", v.sigma2},         {"dof_used", v.dof_used}, {"rss_outer", v.rss_outer},
           {"rss_inner", v.rss_inner},   {"clamped", v.clamped},   {"warning", v.warning}};
}

void from_json(const json& j, VarianceEstimate& v) {
  j.at("sigma2").get_to(v.sigma2);
  j.at("dof_used").get_to(v.dof_used);
  j.at("rss_outer").get_to(v.rss_outer);
  j.at("rss_inner").get_to(v.rss_inner);
  j.at("clamped").get_to(v.clamped);
  j.at("warning").get_to(v.warning);
}

void to_json(json& j, const FitOptions& o) {
  j = json{{"max_iters", o.max_iters},
           {"grad_tol", o.grad_tol},
           {"certificate_tol", o.certificate_tol},
           {"als_tol", o.als_tol},
           {"num_restarts", o.num_restarts},
           {"step", to_string(o.step)},
           {"polish", o.polish}};
  put_optional(j, "accept_rss", o.accept_rss);
}

void from_json(const json& j, FitOptions& o) {
  j.at("max_iters").get_to(o.max_iters);
  j.at("grad_tol").get_to(o.grad_tol);
  j.at("certificate_tol").get_to(o.certificate_tol);
  j.at("als_tol").get_to(o.als_tol);
  j.at("num_restarts").get_to(o.num_restarts);
  o.step = parse_step_policy(j.at("step").get<std::string>());
  j.at("polish").get_to(o.polish);
  get_optional(j, "accept_rss", o.accept_rss);
}

void to_json(json& j, const SelectionEntry& e) {
  j = json{{"order", e.order},
           {"decision", to_string(e.decision)},
           {"note", e.note},
           {"restarts_used", e.restarts_used}};
  put_optional(j, "report", e.report);
}

void from_json(const json& j, SelectionEntry& e) {
  j.at("order").get_to(e.order);
  e.decision = parse_decision(j.at("decision").get<std::string>());
  j.at("note").get_to(e.note);
  j.at("restarts_used").get_to(e.restarts_used);
  get_optional(j, "report", e.report);
}

void to_json(json& j, const SelectionTrace& t) {
  j = json{{"alpha", t.alpha},
           {"r_max", t.r_max},
           {"entries", t.entries},
           {"chosen_order", t.chosen_order},
           {"sigma2", t.sigma2.value},
           {"sigma2_source", to_string(t.sigma2.source)}};
  put_optional(j, "sigma2_estimate", t.sigma2_estimate);
}

void from_json(const json& j, SelectionTrace& t) {
  j.at("alpha").get_to(t.alpha);
  j.at("r_max").get_to(t.r_max);
  j.at("entries").get_to(t.entries);
  j.at("chosen_order").get_to(t.chosen_order);
  j.at("sigma2").get_to(t.sigma2.value);
  t.sigma2.source = parse_sigma2_source(j.at("sigma2_source").get<std::string>());
  get_optional(j, "sigma2_estimate", t.sigma2_estimate);
}

void to_json(json& j, const ReplicationOutcome& o) {
  j = json{{"rep", o.rep}, {"ok", o.ok}, {"error", o.error}};
  j["trace"] = o.ok ? json(o.trace) : json(nullptr);
}

void from_json(const json& j, ReplicationOutcome& o) {
  j.at("rep").get_to(o.rep);
  j.at("ok").get_to(o.ok);
  j.at("error").get_to(o.error);
  o.trace = j.at("trace").is_null() ? SelectionTrace{} : j.at("trace").get<SelectionTrace>();
}

}  // namespace mgof

namespace mgof::cli {

void to_json(json& j, const ExperimentConfig& c) {
  json model{{"family", to_string(c.family)},
             {"n1", c.n1},
             {"n2", c.n2},
             {"n3", c.n3},
             {"num_observed", c.num_observed},
             {"input_dim", c.input_dim},
             {"num_inputs", c.num_inputs},
             {"activation", to_string(c.activation)},
             {"sensors", c.sensors},
             {"grid", c.grid},
             {"order", c.order},
             {"rank_samples", c.rank_samples}};
  json noise{{"N", c.N}, {"drift", c.drift}};
  put_optional(noise, "sigma2", c.sigma2);
  put_optional(noise, "noncentrality", c.noncentrality);
  noise["estimate"] = c.estimate ? json{{"order", c.estimate->order},
                                        {"kept_units", c.estimate->kept_units}}
                                 : json(nullptr);
  j = json{{"schema_version", c.schema_version},
           {"model", std::move(model)},
           {"truth", {{"order", c.true_order}, {"sigma", c.sigma}, {"signal_scale", c.signal_scale}}},
           {"noise", std::move(noise)},
           {"selection", {{"r_max", c.r_max}}},
           {"alpha", c.alpha},
           {"replications", c.replications},
           {"seed", c.seed},
           {"jobs", c.jobs},
           {"output", c.output},
           {"fit", c.fit}};
  j["procedure"] = c.procedure ? json(to_string(*c.procedure)) : json(nullptr);
  j["data"] = {{"path", c.data_path ? json(*c.data_path) : json(nullptr)}};
}

void from_json(const json& j, ExperimentConfig& c) {
  c = ExperimentConfig{};
  j.at("schema_version").get_to(c.schema_version);
  if (!j.at("procedure").is_null()) c.procedure = parse_procedure(j.at("procedure").get<std::string>());
  const json& m = j.at("model");
  c.family = parse_family_kind(m.at("family").get<std::string>());
  m.at("n1").get_to(c.n1);
  m.at("n2").get_to(c.n2);
  m.at("n3").get_to(c.n3);
  m.at("num_observed").get_to(c.num_observed);
  m.at("input_dim").get_to(c.input_dim);
  m.at("num_inputs").get_to(c.num_inputs);
  c.activation = parse_activation(m.at("activation").get<std::string>());
  m.at("sensors").get_to(c.sensors);
  m.at("grid").get_to(c.grid);
  m.at("order").get_to(c.order);
  m.at("rank_samples").get_to(c.rank_samples);
  get_optional(j.at("data"), "path", c.data_path);
  const json& t = j.at("truth");
  t.at("order").get_to(c.true_order);
  t.at("sigma").get_to(c.sigma);
  t.at("signal_scale").get_to(c.signal_scale);
  const json& n = j.at("noise");
  n.at("N").get_to(c.N);
  n.at("drift").get_to(c.drift);
  get_optional(n, "sigma2", c.sigma2);
  get_optional(n, "noncentrality", c.noncentrality);
  if (!n.at("estimate").is_null()) {
    c.estimate = LeaveOutSpec{n.at("estimate").at("order").get<Index>(),
                              n.at("estimate").at("kept_units").get<Index>()};
  }
  j.at("selection").at("r_max").get_to(c.r_max);
  j.at("alpha").get_to(c.alpha);
  j.at("replications").get_to(c.replications);
  j.at("seed").get_to(c.seed);
  j.at("jobs").get_to(c.jobs);
  j.at("output").get_to(c.output);
  j.at("fit").get_to(c.fit);
}

std::string run_id(Procedure proc, const ExperimentConfig& cfg) {
  json j = cfg;
  // Scheduling and destination do not change results.
  j.erase("jobs");
  j.erase("output");
  const std::string text = std::string(to_string(proc)) + "\n" + j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a 64
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf, 12);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string dump_line(const json& j) { return j.dump(); }

}  // namespace mgof::cli
