// Spec files: a small TOML subset (sections, key = value, numbers, strings,
// booleans, nested arrays, # comments; arrays may span lines). The exact
// grammar is documented in docs/spec_format.md.

#pragma once

#include <susyfactor/susy.hpp>

#include <optional>
#include <string>

namespace susyfactor {

struct SpecError : Error {
  int line;
  SpecError(int line_, const std::string& msg)
      : Error("spec:" + std::to_string(line_) + ": " + msg), line(line_) {}
};

struct VerifySettings {
  Box box;
  int grid_points = 0;  // 0: default by dimension (21 for n<=3, 9 for n>=4)
  int test_functions = 8;
  std::uint64_t seed = 1;
  double tol_assumption = 1e-8;
  double tol_eikonal = 1e-10;
  double tol_factorization = 1e-8;
  double tol_pde = 1e-8;

  int effective_grid_points(int n) const {
    if (grid_points > 0) return grid_points;
    return n <= 3 ? 21 : 9;
  }
};

struct Morse2dSettings {
  int grid_points = 201;
  double saddle_margin = 0.0;  // 0: automatic
  double fit_tol = 1e-4;
  double glue_tol = 1e-4;
  double div_tol = 1e-8;
};

struct SpecFile {
  std::string name;
  int dimension = 0;
  std::vector<double> h;
  OperatorSpec op;           // includes phases
  ThetaDecomposition dec;
  bool has_theta = false;
  VerifySettings verify;
  std::optional<Morse2dSettings> morse;
};

SpecFile parse_spec(const std::string& text, const std::string& name);
SpecFile load_spec(const std::string& path);

}  // namespace susyfactor
