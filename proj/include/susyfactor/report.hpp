// JSON report assembly ("schema": 1). Reports are deterministic for a fixed
// spec + seed: no timestamps, fixed key order, fixed reduction order.

#pragma once

#include <susyfactor/types.hpp>

#include <json.hpp>

#include <string>
#include <vector>

namespace susyfactor {

using Json = nlohmann::ordered_json;

struct CheckResult {
  std::string name;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

Json checks_to_json(const std::vector<CheckResult>& checks);
bool all_pass(const std::vector<CheckResult>& checks);

void write_report(const Json& report, const std::string& path);

}  // namespace susyfactor
