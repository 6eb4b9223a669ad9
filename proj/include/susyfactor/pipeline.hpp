// Verification pipelines behind the CLI subcommands. Each returns the JSON
// report, the verdict, and the process exit code (0 pass, 1 fail, 2 input
// error; input errors are raised as exceptions by the loaders instead).

#pragma once

#include <susyfactor/analysis.hpp>
#include <susyfactor/morse2d.hpp>
#include <susyfactor/report.hpp>
#include <susyfactor/specfile.hpp>

#include <optional>

namespace susyfactor {

struct RunResult {
  Json report;
  bool pass = false;
  int exit_code = 1;
};

struct VerifyOutcome {
  RunResult rr;
  std::optional<SusyStructure> structure;  // present when assembly succeeded
};

/// Assumption -> assembly -> eikonal / certificate / factorization residuals
/// -> temperateness -> invertibility.
VerifyOutcome run_verify_full(const SpecFile& spec);
RunResult run_verify(const SpecFile& spec);

/// Critical points -> stream recovery -> partition -> profile fits -> gluing.
RunResult run_morse2d(const SpecFile& spec);

/// Verifies both inputs, then checks the factorization of the direct sum
/// through the block structure on the product box.
RunResult run_tensor(const SpecFile& a, const SpecFile& b);

// Shared pieces (also used by the gallery runner and the acceptance suite).

/// Seeded polynomial-times-Gaussian test function on the box (degree <= 3).
Expr random_test_function(int n, const Box& box, Rng& rng);

/// max over sampled points of |u| + max|grad u| + max|Hess u|.
double c2_norm(const ScalarField& u, const std::vector<Vec>& pts, double h);

struct ResidualSweep {
  double eikonal_r1 = 0.0, eikonal_r2 = 0.0;
  double pde_certificate = 0.0;
  double factorization_rel = 0.0;  // max residual / (1 + ||u||_C2)
  double v_identity = 0.0;
};

/// Runs the residual sweeps for an operator with an assembled structure.
ResidualSweep residual_sweep(const OperatorSpec& op, const SusyStructure& S,
                             const std::vector<Vec>& grid, const std::vector<double>& h_list,
                             const Box& box, int n_test_functions, std::uint64_t seed,
                             int factorization_points = 50, int certificate_points = 200);

Json temperateness_to_json(const TemperatenessFit& fit);
Json invertibility_to_json(const StructureInvertibility& inv);

}  // namespace susyfactor
