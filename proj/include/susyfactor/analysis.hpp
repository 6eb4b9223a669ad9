// Temperateness estimation over (x, h) grids and invertibility of G.
//
// Temperateness: fit m and the constants C_nu in
//   || d^nu G(x, h) || <= C_nu (1 + |x|^2)^{m/2},   |nu| <= 2,
// and flag whether the constants are h-uniform. Invertibility follows the
// two routes of the theory: uniformly definite A (then ||G^-1|| <= 1/C), and
// the kernel-splitting case R^n = E + F with E = ker A, where G is injective
// iff B restricted to E is injective into F.

#pragma once

#include <susyfactor/susy.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace susyfactor {

using MultiIndex = std::vector<int>;  // |nu| <= 2: length 0, 1 or 2 list of axes

std::vector<MultiIndex> default_nu_set(int n);
std::string nu_name(const MultiIndex& nu);

struct TemperatenessFit {
  double m = 0.0;                       // fitted growth exponent
  std::map<std::string, double> C;      // per-multi-index constants
  std::map<std::string, double> h_variation;  // max/min ratio of C over h grid
  double fit_residual = 0.0;            // rms residual of the log-log fit
  double max_h_variation = 1.0;
  bool pass = false;                    // h-uniform within the declared factor
};

TemperatenessFit fit_temperateness(const SusyStructure& S, const std::vector<Vec>& x_grid,
                                   const std::vector<double>& h_grid,
                                   const std::vector<MultiIndex>& nu_set,
                                   double uniformity_factor = 2.0);

struct DefiniteReport {
  bool applicable = false;  // false when A has (numerically) zero eigenvalues
  double C = 0.0;           // min over samples of lambda_min(A)
  double max_inv_norm = 0.0;
  bool pass = false;        // ||G^-1|| <= 1/C everywhere (violation = bug)
};

DefiniteReport invertibility_definite(const SusyStructure& S, const std::vector<Vec>& x_samples,
                                      double h);

struct SplitReport {
  bool applicable = false;
  bool injective = false;
  bool dim_check = false;       // dim F >= dim E
  int dim_E = 0, dim_F = 0;
  double C0 = 0.0;              // smallest eigenvalue of A on F
  double sigma_min_BE = 0.0;    // smallest singular value of B|_E : E -> F
  std::optional<double> inv_norm_bound;  // conservative chain bound
  std::optional<double> inv_norm_sharp;  // direct ||G^-1||
  std::string note;
};

/// Pointwise splitting analysis of G = A0 + B0 (B0 is the antisymmetric part
/// of G as a matrix). Throws PreconditionError if A0 is not PSD or B0 does
/// not map ker A0 into its complement.
SplitReport invertibility_split(const Mat& A0, const Mat& B0);

struct StructureInvertibility {
  DefiniteReport definite;
  SplitReport split;           // evaluated at the first sample when applicable
  bool kernel_consistent = true;  // E agrees across samples (principal angles)
};

StructureInvertibility invertibility_analysis(const SusyStructure& S,
                                              const std::vector<Vec>& x_samples, double h);

}  // namespace susyfactor
