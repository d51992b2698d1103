#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace finsler {

/// One inequality check: both sides, margin, parameters, outcome. "measured"
/// reports carry an empirically measured constant in `rhs` and never claim
/// pass/fail (the paper's constant is existential).
struct InequalityReport {
  std::string ineq_id;
  std::string space;
  nlohmann::json params = nlohmann::json::object();
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs when both sides are explicit
  enum class Status { Pass, Fail, Measured } status = Status::Measured;

  bool passed() const { return status != Status::Fail; }

  nlohmann::json to_json() const;
  static InequalityReport from_json(const nlohmann::json& j);
  /// FNV-1a hash of the canonical params dump, for baseline keys.
  std::string params_hash() const;
};

std::string to_string(InequalityReport::Status s);

/// JSON-lines serialization (one report per line) and the summary CSV
/// (ineq_id, space, params-hash, lhs, rhs, margin, status).
std::string to_jsonl(const std::vector<InequalityReport>& reports);
std::string to_summary_csv(const std::vector<InequalityReport>& reports);

}  // namespace finsler
