// The second-order operator in normal form
//   P = h delta . A(x;h) . h d + U(x;h) . h d + v(x;h)
// and the pieces built directly on it: application to scalar fields, formal
// adjoint, eikonal residuals, Weyl symbol split, and the codifferentials.
//
// Sign conventions (forced by matching the normal form to its coordinate
// expansion -sum h d_i a_ij h d_j + ...):
//   codiff_vec(V)      = -div V = -sum_i d_i V_i
//   codiff_bivec(W)_i  = -2 sum_j d_j W_ij
// the latter paired with contract(xi, W) = 2 W xi so that the Leibniz rule
// delta((a.phi) theta) = (a.phi) delta(theta) - (a'.phi) dphi -| theta holds.

#pragma once

#include <susyfactor/field.hpp>

#include <string>

namespace susyfactor {

struct OperatorSpec {
  std::string name;
  FieldBundle f;
  int dim() const { return f.n; }
};

struct EikonalResiduals {
  double r1 = 0.0;  // first eikonal equation, LHS
  double r2 = 0.0;  // adjoint-side eikonal equation, LHS
  Vec x;
  double h = 0.0;
};

/// delta of a vector field: -sum_i d_i V_i.
double codiff_vec(const CovecField& V, const Vec& x, double h);
/// Same from already-evaluated component jets (order >= 1).
double codiff_vec(const std::vector<Jet2>& V);
/// Jet-valued: components to order 3 in, delta V as a Jet2 out.
Jet2 codiff_vec_jet(const std::vector<Jet3>& V);

/// delta of a bivector field: (delta W)_i = -2 sum_j d_j W_ij.
Vec codiff_bivec(const BivecField& W, const Vec& x, double h);
Vec codiff_bivec(const std::vector<std::vector<Jet2>>& W);
std::vector<Jet2> codiff_bivec_jet(const std::vector<std::vector<Jet3>>& W);

/// Applies P at x by the expanded coordinate form:
/// -h^2 sum_ij [(d_i a_ij)(d_j u) + a_ij d_i d_j u] + h sum_k U_k d_k u + v u.
double apply_P(const OperatorSpec& op, const ScalarField& u, const Vec& x, double h);

/// Formal adjoint (A, -U, v + h delta(U)); delta(U) is synthesized
/// symbolically from the U entry ASTs (closure-backed v is supported, the
/// first-order coefficients must be expression-backed).
OperatorSpec adjoint(const OperatorSpec& op);

EikonalResiduals eikonal_residuals(const OperatorSpec& op, const ScalarField& phi,
                                   const ScalarField& psi, const Vec& x, double h);

/// Weyl symbol split: returns (p_even, imaginary coefficient of p_odd).
/// p_even = xi^T A xi + v + (h/2) div U + (h^2/4) sum d_i d_j a_ij,
/// p_odd  = -i U(x) . xi (second component of the return value).
std::pair<double, double> symbol_split(const OperatorSpec& op, const Vec& x, const Vec& xi,
                                       double h);

}  // namespace susyfactor
