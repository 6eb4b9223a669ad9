// Pointwise exterior algebra on R^n: wedge, interior product, determinant
// pairing and the 2D Hodge star.
//
// Normalization anchor (everything downstream depends on it):
//   wedge(u,v)_ij = (u_i v_j - u_j v_i)/2
//   contract(xi, W)_i = 2 (W xi)_i
// which are chosen jointly so that
//   contract(xi, wedge(u,v)) = (xi.v) u - (xi.u) v
// holds verbatim. See README "Conventions" for the consequences (sign of
// theta entries in spec files, bivector -> linear map factor -2).

#pragma once

#include <susyfactor/types.hpp>

#include <vector>

namespace susyfactor {

/// u ^ v as a (1/2-normalized) antisymmetric matrix.
Bivector wedge(const Vec& u, const Vec& v);

/// Interior product of a covector with a bivector, contract(xi, W) = 2 W xi.
Vec contract(const Vec& xi, const Bivector& w);

/// Determinant pairing <u_1^..^u_k, v*_1^..^v*_k> = det(v*_i(u_j)), k in {1,2}.
double pairing_det(const std::vector<Vec>& u, const std::vector<Vec>& vstar);

/// Hodge star on 1-forms in R^2 with orientation dx1^dx2:
/// *(u1 dx1 + u2 dx2) = -u2 dx1 + u1 dx2.
Vec hodge_star_2d(const Vec& u);

}  // namespace susyfactor
