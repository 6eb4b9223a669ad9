// Construction and verification of the supersymmetric structure G = A + B.
//
// Given phases phi, psi with the first eikonal equation satisfied, and a
// decomposition  U + A d(phi-psi) = delta( sum_k (alpha_k . phihat) theta_k ),
// phihat = phi + psi, delta(theta_k) = 0, the antisymmetric corrector is
//
//   B(x) = sum_k I_k(x) theta_k(x),
//   I_k(x) = \int_0^{(m_inf - phihat(x))/h} alpha_k'(h s + phihat(x)) e^{-s} ds
//
// (bivector normalization; as a linear map the contribution to G is -2 B).
// B solves  h delta(B) + dphihat -| B = sum_k (alpha_k' . phihat) dphihat -| theta_k,
// which is the certificate `pde_certificate_residual` measures pointwise.

#pragma once

#include <susyfactor/operator.hpp>
#include <susyfactor/quadrature.hpp>
#include <susyfactor/util.hpp>

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace susyfactor {

struct ThetaTerm {
  Expr alpha;        // t-context profile
  BivecField theta;  // delta-closed bivector field
};

struct ThetaDecomposition {
  std::vector<ThetaTerm> terms;
  int N = 1;  // growth order of the profiles
  double m_inf = std::numeric_limits<double>::infinity();

  bool empty() const { return terms.empty(); }
};

/// Numerical admissibility check: delta(theta_k) = 0 on the grid and the
/// profiles (with derivatives to order 3) do not outgrow <t>^N on the sampled
/// range. Throws PreconditionError with a description on failure.
void validate_dec(const ThetaDecomposition& dec, double t_lo, double t_hi,
                  const std::vector<Vec>& grid, double h, double closed_tol = 1e-9);

struct AssumptionReport {
  double max_residual = 0.0;     // max |U + A d(phi-psi) - delta(theta-sum)|
  double max_delta_theta = 0.0;  // max |delta theta_k| over terms and points
  Vec worst_point;
};

AssumptionReport check_assumption(const OperatorSpec& op, const ThetaDecomposition& dec,
                                  const std::vector<Vec>& grid, double h);

/// Corrector entries (bivector normalization) with derivatives to `order`
/// (0, 1 or 2). Throws PreconditionError when m_inf is finite and
/// phihat(x) > m_inf, unless clamp_outside (then B = 0 there, which is the
/// correct smooth continuation when the profiles vanish near m_inf).
std::vector<std::vector<Jet2>> construct_B(const ThetaDecomposition& dec,
                                           const ScalarField& phihat, double h,
                                           const QuadratureConfig& qc, const Vec& x, int order,
                                           bool clamp_outside = false);

Bivector construct_B_value(const ThetaDecomposition& dec, const ScalarField& phihat, double h,
                           const QuadratureConfig& qc, const Vec& x);

struct ClassicalExpansion {
  std::vector<Bivector> coeffs;  // B_0 .. B_K at x
  bool exact = true;             // false: valid modulo O(e^{-c/h}) (finite m_inf)
};

/// B_j(x) = sum_k alpha_k^{(j+1)}(phihat(x)) theta_k(x); requires K <= 6.
ClassicalExpansion classical_expansion(const ThetaDecomposition& dec, const ScalarField& phihat,
                                       int K, const Vec& x);

struct SusyStructure {
  int n = 0;
  ScalarField phi, psi;
  SymMatField A;
  // Antisymmetric part of G in map normalization (G = A + Bmap).
  std::function<MatJet(const Vec&, double, int)> Bmap;
  ThetaDecomposition dec;  // empty for supplied/tensor structures
  ScalarField phihat;      // phi + psi
  ScalarField chi;         // cutoff weight on the certificate RHS (perturbation only)
  QuadratureConfig qc;
  std::string kind = "quadrature";  // quadrature | supplied | tensor | perturbation
  double assumption_residual = 0.0;
  double v_identity_residual = 0.0;
};

MatJet G_jet(const SusyStructure& S, const Vec& x, double h, int order);
Mat G_value(const SusyStructure& S, const Vec& x, double h);

/// Quadrature-backed structure for a decomposition, no admissibility checks.
/// The corrector solves its own certificate PDE whether or not the
/// decomposition matches the operator.
SusyStructure make_quadrature_structure(const OperatorSpec& op, const ThetaDecomposition& dec,
                                        const QuadratureConfig& qc);

/// Checks the assumption on the grid (throws PreconditionError above
/// assumption_tol), builds the quadrature-backed structure and verifies the
/// zeroth-order identity v = h delta(A dphi) - h delta(B dphi) + dpsi -| (A dphi)
/// - dpsi -| (B dphi) on the grid (stored, not assumed).
SusyStructure assemble_G(const OperatorSpec& op, const ThetaDecomposition& dec,
                         const QuadratureConfig& qc, const std::vector<Vec>& grid,
                         const std::vector<double>& h_list, double assumption_tol);

/// Structure with an externally supplied constant antisymmetric part.
SusyStructure supplied_structure(const OperatorSpec& op, const Mat& antisym_const);
/// Structure with an externally supplied antisymmetric-part field.
SusyStructure supplied_structure(const OperatorSpec& op,
                                 std::function<MatJet(const Vec&, double, int)> bmap);

/// Twisted differential d_{phi,h} u = h du + u dphi at x (component values).
Vec twisted_d(const ScalarField& phi, double h, const ScalarField& u, const Vec& x);
/// Component jets of the same (exact to order 2, from order-3 data).
std::vector<Jet2> twisted_d_jets(const ScalarField& phi, double h, const ScalarField& u,
                                 const Vec& x);

using CovecJetField = std::function<std::vector<Jet2>(const Vec&, double)>;

/// d*_{psi,h,G} omega = h delta(G^t omega) + <dpsi, G^t omega> at x.
double twisted_dstar_G(const SusyStructure& S, double h, const CovecJetField& omega,
                       const Vec& x);

/// apply_P(u) - d*_{psi,h,G} d_{phi,h} u at x.
double factorization_residual(const OperatorSpec& op, const SusyStructure& S,
                              const ScalarField& u, const Vec& x, double h);

/// Pointwise certificate |h delta(B) + dphihat -| B - chi sum_k (alpha_k'.phihat)
/// dphihat -| theta_k| (nullopt when the structure carries no decomposition).
std::optional<double> pde_certificate_residual(const SusyStructure& S, const Vec& x, double h);

/// Residual of the zeroth-order identity at x.
double v_identity_residual(const OperatorSpec& op, const SusyStructure& S, const Vec& x,
                           double h);

/// Block-diagonal product structure with summed phases.
SusyStructure tensorize(const SusyStructure& a, const SusyStructure& b);
/// The operator P1 (+) P2 on the product space.
OperatorSpec direct_sum(const OperatorSpec& a, const OperatorSpec& b);
/// Zero-dimensional neutral element for tensorize.
SusyStructure trivial_structure();

struct PerturbationGallery {
  OperatorSpec op;      // P_eps = U_eps . h d  (A = 0, v = 0)
  SusyStructure S;      // B = chi_eps B0, temperate by construction
  int component_cells = 0;
};

/// The cutoff-perturbation construction: U_eps = delta((chi_eps alpha.phi) theta)
/// with chi_eps = 1 on the connected component of {phi < sigma - eps} around
/// `seed` and supported in that component of {phi < sigma}. `alpha` is a
/// base-scale profile supported in t < sigma - eps.
PerturbationGallery build_perturbation_gallery(const Expr& phi, double sigma, double eps,
                                               const Expr& alpha, const BivecField& theta,
                                               const Vec& seed, const Box& box,
                                               int flood_grid_per_axis,
                                               const QuadratureConfig& qc);

}  // namespace susyfactor
