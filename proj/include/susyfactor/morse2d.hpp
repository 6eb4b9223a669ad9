// Level-set analysis on R^2 for first-order divergence-free operators
// P = U . h d annihilating e^{-phi/h}: recover the stream potential alpha with
// U = delta(alpha w), w = wedge(e1, e2), test that alpha is a function of phi
// on every component of the plane minus the saddle levels, and test whether
// the per-component profiles glue to a single global one.
//
// Stream conventions (fixed once, see README):
//   U1 = -d2 alpha,  U2 = +d1 alpha
//   alpha(y) - alpha(x) = - \int_gamma *U   (s = -1)

#pragma once

#include <susyfactor/susy.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace susyfactor {

struct CriticalPoint {
  Vec x;
  int index = 0;  // negative Hessian eigenvalues
  double value = 0.0;
};

struct CriticalSet {
  std::vector<CriticalPoint> points;
  std::vector<std::string> warnings;
  std::vector<double> saddle_values() const;
};

/// Newton iterations from a seed lattice; deduplicated, Morse-classified.
/// Throws NotMorseError on a degenerate converged Hessian.
CriticalSet find_critical_points(const ScalarField& phi, const Box& box,
                                 int seeds_per_axis = 15);

struct Grid2 {
  Box box;
  int nx = 0, ny = 0;
  double dx() const { return (box.hi[0] - box.lo[0]) / (nx - 1); }
  double dy() const { return (box.hi[1] - box.lo[1]) / (ny - 1); }
  int flat(int i, int j) const { return j * nx + i; }
  Vec point(int i, int j) const {
    Vec p(2);
    p[0] = box.lo[0] + dx() * i;
    p[1] = box.lo[1] + dy() * j;
    return p;
  }
};

struct StreamGrid {
  Grid2 g;
  std::vector<double> alpha;     // per node, anchored alpha = 0 at node (0,0)
  double max_div = 0.0;          // integrability residual seen on the grid
  double max_loop_residual = 0.0;
};

/// Integrates the stream potential along the left edge then the rows.
/// Pre: div U = 0 on the grid (|d1 U1 + d2 U2| <= div_tol); loop closure is
/// verified on seeded random rectangles.
StreamGrid recover_stream(const CovecField& U, const Grid2& g, double h, double div_tol,
                          std::uint64_t seed = 7);

struct ComponentChart {
  Grid2 g;
  std::vector<int> label;   // -1: masked (near a saddle level), else component id
  std::vector<double> phi;  // phi at nodes
  int n_components = 0;
  std::vector<char> touches_boundary;           // per component
  std::map<int, std::vector<double>> adjacency;  // component -> saddle values nearby
  double margin = 0.0;
};

/// Labels {x : dist(phi(x), saddle values) > margin} by flood fill.
ComponentChart component_partition(const ScalarField& phi, const CriticalSet& cs,
                                   const Grid2& g, double saddle_margin);

/// Several grid cells worth of phi-variation near the saddle levels, clamped
/// so no sublevel component can be swallowed.
double default_saddle_margin(const ScalarField& phi, const Grid2& g, const CriticalSet& cs);

struct ProfileFit {
  int component = -1;
  std::vector<double> knots;     // sorted phi values
  std::vector<double> f_values;  // mean alpha per bin
  double deviation = 0.0;        // max |alpha - f(phi)| over the component
  double alpha_range = 0.0;
  bool pass = false;
};

/// Bins the component by phi and measures how far alpha is from a function
/// of phi. Throws when the component has too few cells to bin.
ProfileFit fit_profile(const StreamGrid& stream, const ComponentChart& chart, int component,
                       double fit_tol);

struct GluePair {
  int comp_a = 0, comp_b = 0;
  double level = 0.0;
  double mismatch = 0.0;        // |f_a(level) - f_b(level)|
  double star_integral_check = 0.0;  // |(alpha(y)-alpha(x)) + int_gamma *U|
};

struct SaddleMatch {
  double saddle_value = 0.0;
  double value_gap = 0.0, d1_gap = 0.0, d2_gap = 0.0;
  bool tested = false;
  bool smooth = false;
};

struct GlueReport {
  std::vector<GluePair> pairs;
  std::vector<SaddleMatch> saddles;
  double max_mismatch = 0.0;
  double max_star_residual = 0.0;
  bool global_pass = false;
  std::string verdict_mode = "sampled";  // finite sample of level pairs
};

/// Cross-component comparison of the recovered profiles at shared levels,
/// plus one-sided polynomial matching across each saddle value.
GlueReport glue_check(const std::vector<ProfileFit>& fits, const StreamGrid& stream,
                      const ComponentChart& chart, const CovecField& U, const CriticalSet& cs,
                      double h, double glue_tol,
                      const std::vector<std::pair<Vec, Vec>>& explicit_pairs = {});

/// \int_gamma *U along the straight segment from a to b.
double star_integral(const CovecField& U, const Vec& a, const Vec& b, double h);

}  // namespace susyfactor
