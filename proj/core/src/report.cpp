#include "finsler/report.hpp"

#include <sstream>

namespace finsler {

std::string to_string(InequalityReport::Status s) {
  switch (s) {
    case InequalityReport::Status::Pass: return "pass";
    case InequalityReport::Status::Fail: return "fail";
    case InequalityReport::Status::Measured: return "measured";
  }
  return "measured";
}

nlohmann::json InequalityReport::to_json() const {
  return nlohmann::json{{"ineq_id", ineq_id}, {"space", space},   {"params", params},
                        {"lhs", lhs},         {"rhs", rhs},       {"margin", margin},
                        {"status", to_string(status)}};
}

InequalityReport InequalityReport::from_json(const nlohmann::json& j) {
  InequalityReport r;
  r.ineq_id = j.at("ineq_id").get<std::string>();
  r.space = j.value("space", "");
  r.params = j.value("params", nlohmann::json::object());
  r.lhs = j.at("lhs").get<double>();
  r.rhs = j.at("rhs").get<double>();
  r.margin = j.at("margin").get<double>();
  const std::string s = j.at("status").get<std::string>();
  r.status = s == "pass"   ? Status::Pass
             : s == "fail" ? Status::Fail
                           : Status::Measured;
  return r;
}

std::string InequalityReport::params_hash() const {
  const std::string dump = params.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

std::string to_jsonl(const std::vector<InequalityReport>& reports) {
  std::string out;
  for (const auto& r : reports) {
    out += r.to_json().dump();
    out += '\n';
  }
  return out;
}

std::string to_summary_csv(const std::vector<InequalityReport>& reports) {
  std::ostringstream os;
  os << "ineq_id,space,params_hash,lhs,rhs,margin,status\n";
  os.precision(17);
  for (const auto& r : reports) {
    os << r.ineq_id << ',' << r.space << ',' << r.params_hash() << ',' << r.lhs << ',' << r.rhs
       << ',' << r.margin << ',' << to_string(r.status) << '\n';
  }
  return os.str();
}

}  // namespace finsler
