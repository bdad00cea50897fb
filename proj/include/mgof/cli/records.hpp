#pragma once

// JSON-lines result records. A result file holds, in order:
//
//   {"record": "run", "run_id", "schema_version", "procedure", "started_at", "config"}
//   {"record": "result", "payload": {...}}            rank / test / select / sigma2
//   {"record": "replication", "payload": {...}}       simulate, one per replication
//   {"record": "summary", "finished_at", "status", "payload": {...}}
//
// Payloads never contain timestamps, so reruns of the same config and seed
// produce byte-identical payload lines. Every payload type converts back
// from its JSON form without loss.

#include <string>

#include <nlohmann/json.hpp>

#include "mgof/cli/config.hpp"

namespace mgof {

void to_json(nlohmann::json& j, const RankEstimate& r);
void from_json(const nlohmann::json& j, RankEstimate& r);
void to_json(nlohmann::json& j, const TestReport& r);
void from_json(const nlohmann::json& j, TestReport& r);
void to_json(nlohmann::json& j, const VarianceEstimate& v);
void from_json(const nlohmann::json& j, VarianceEstimate& v);
void to_json(nlohmann::json& j, const FitOptions& o);
void from_json(const nlohmann::json& j, FitOptions& o);
void to_json(nlohmann::json& j, const SelectionEntry& e);
void from_json(const nlohmann::json& j, SelectionEntry& e);
void to_json(nlohmann::json& j, const SelectionTrace& t);
void from_json(const nlohmann::json& j, SelectionTrace& t);
void to_json(nlohmann::json& j, const ReplicationOutcome& o);
void from_json(const nlohmann::json& j, ReplicationOutcome& o);

}  // namespace mgof

namespace mgof::cli {

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

/// Short hex digest of the procedure and the resolved config. Identical
/// inputs give identical ids.
std::string run_id(Procedure proc, const ExperimentConfig& cfg);

/// Current UTC time as ISO 8601 with seconds.
std::string utc_timestamp();

/// One compact JSON line (no trailing newline).
std::string dump_line(const nlohmann::json& j);

}  // namespace mgof::cli
