// Exponentially weighted quadrature for the corrector integrals
//   I = \int_0^T f(s) e^{-s} ds
// with smooth f. Composite Gauss-Legendre panels, sized geometrically from 0
// (the weight concentrates mass there), truncated at max_s where e^{-s} is
// below double-precision noise.

#pragma once

#include <susyfactor/jets.hpp>

#include <functional>
#include <vector>

namespace susyfactor {

struct QuadratureConfig {
  double max_s = 50.0;     // e^{-50} ~ 2e-22
  int panels = 10;
  int nodes_per_panel = 24;
  double tol = 1e-11;      // convergence check on the scalar integral

  void validate() const {
    if (max_s < 40.0) throw QuadratureError("QuadratureConfig: max_s must be >= 40");
    if (tol > 1e-10) throw QuadratureError("QuadratureConfig: tol must be <= 1e-10");
    if (panels < 1 || nodes_per_panel < 2)
      throw QuadratureError("QuadratureConfig: bad panel configuration");
  }
};

/// Gauss-Legendre nodes and weights on [-1, 1] (cached per order).
void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights);

/// Panel boundaries 0 = b_0 < ... < b_P = upper, geometrically graded.
std::vector<double> exp_panels(double upper, const QuadratureConfig& qc);

/// Refines the geometric panels until the weighted integral of every probe
/// component converges panel-wise (bisection, local tolerances proportional
/// to panel length). The probe supplies the integrand components whose
/// resolution matters (for the corrector: profile derivatives to order 3, so
/// the same panels serve value and jet integration).
std::vector<double> adaptive_exp_panels(const std::function<Vec(double)>& probe, double upper,
                                        const QuadratureConfig& qc);

/// Integrates f(s) e^{-s} over a fixed panel decomposition.
template <class T>
T integrate_exp_weighted_on(const std::vector<double>& bounds, const std::function<T(double)>& f,
                            int nodes, const T& zero) {
  std::vector<double> xs, ws;
  gauss_legendre(nodes, xs, ws);
  T acc = zero;
  for (std::size_t p = 0; p + 1 < bounds.size(); ++p) {
    const double a = bounds[p], b = bounds[p + 1];
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (std::size_t q = 0; q < xs.size(); ++q) {
      const double s = mid + half * xs[q];
      acc = acc + (half * ws[q] * std::exp(-s)) * f(s);
    }
  }
  return acc;
}

/// Integrates f(s) e^{-s} over [0, min(upper, qc.max_s)]. T must support
/// T+T and double*T (double, Jet2, Jet3 all qualify).
template <class T>
T integrate_exp_weighted(const std::function<T(double)>& f, double upper,
                         const QuadratureConfig& qc, const T& zero) {
  const double top = std::min(upper, qc.max_s);
  T acc = zero;
  if (top <= 0.0) return acc;
  std::vector<double> xs, ws;
  gauss_legendre(qc.nodes_per_panel, xs, ws);
  const std::vector<double> bounds = exp_panels(top, qc);
  for (std::size_t p = 0; p + 1 < bounds.size(); ++p) {
    const double a = bounds[p], b = bounds[p + 1];
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (std::size_t q = 0; q < xs.size(); ++q) {
      const double s = mid + half * xs[q];
      acc = acc + (half * ws[q] * std::exp(-s)) * f(s);
    }
  }
  return acc;
}

/// Scalar integral with an a-posteriori refinement check against qc.tol.
/// Throws QuadratureError on non-convergence.
double integrate_exp_weighted_checked(const std::function<double(double)>& f, double upper,
                                      const QuadratureConfig& qc);

}  // namespace susyfactor
