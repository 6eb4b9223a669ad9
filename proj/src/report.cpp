#include <susyfactor/report.hpp>

#include <fstream>

namespace susyfactor {

Json checks_to_json(const std::vector<CheckResult>& checks) {
  Json arr = Json::array();
  for (const auto& c : checks) {
    Json j;
    j["name"] = c.name;
    j["max_residual"] = c.max_residual;
    j["tolerance"] = c.tolerance;
    j["pass"] = c.pass;
    arr.push_back(j);
  }
  return arr;
}

bool all_pass(const std::vector<CheckResult>& checks) {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

void write_report(const Json& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write report to '" + path + "'");
  out << report.dump(2) << "\n";
}

}  // namespace susyfactor
