#include <susyfactor/morse2d.hpp>
#include <susyfactor/quadrature.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

namespace susyfactor {

std::vector<double> CriticalSet::saddle_values() const {
  std::vector<double> v;
  for (const auto& p : points)
    if (p.index == 1) v.push_back(p.value);
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end(),
                      [](double a, double b) { return std::abs(a - b) < 1e-9; }),
          v.end());
  return v;
}

CriticalSet find_critical_points(const ScalarField& phi, const Box& box, int seeds_per_axis) {
  const int n = box.dim();
  CriticalSet cs;
  const double diam = (box.hi - box.lo).norm();
  for (const Vec& seed : tensor_grid(box, seeds_per_axis)) {
    Vec x = seed;
    bool converged = false;
    for (int it = 0; it < 60; ++it) {
      const Jet2 j = phi.jet2(x, 0.0);
      if (j.g.norm() < 1e-12) {
        converged = true;
        break;
      }
      Eigen::FullPivLU<Mat> lu(j.h);
      if (!lu.isInvertible()) break;
      x -= lu.solve(j.g).eval();
      if ((x - seed).norm() > 4.0 * diam) break;
    }
    if (!converged || !box.contains(x)) continue;
    bool dup = false;
    for (const auto& p : cs.points)
      if ((p.x - x).norm() <= 1e-6) dup = true;
    if (dup) continue;
    const Jet2 j = phi.jet2(x, 0.0);
    const double hscale = std::max(1.0, j.h.cwiseAbs().maxCoeff());
    if (std::abs(j.h.determinant()) < 1e-8 * std::pow(hscale, n))
      throw NotMorseError("degenerate Hessian at a critical point: phi is not Morse");
    Eigen::SelfAdjointEigenSolver<Mat> es(j.h);
    int index = 0;
    for (int i = 0; i < n; ++i)
      if (es.eigenvalues()[i] < 0) ++index;
    cs.points.push_back({x, index, phi.value(x, 0.0)});
  }

  // sign-change cells with no nearby converged point get a warning
  const int sc = seeds_per_axis;
  if (n == 2) {
    std::vector<Vec> lattice = tensor_grid(box, sc);
    auto grad_at = [&](int i, int j) { return phi.jet2(lattice[j * sc + i], 0.0).g; };
    const double cell = (box.hi - box.lo).maxCoeff() / (sc - 1);
    for (int i = 0; i + 1 < sc; ++i)
      for (int j = 0; j + 1 < sc; ++j) {
        const Vec g00 = grad_at(i, j), g10 = grad_at(i + 1, j), g01 = grad_at(i, j + 1),
                  g11 = grad_at(i + 1, j + 1);
        bool sign_change = true;
        for (int c = 0; c < 2; ++c) {
          const double mn = std::min({g00[c], g10[c], g01[c], g11[c]});
          const double mx = std::max({g00[c], g10[c], g01[c], g11[c]});
          if (mn > 0.0 || mx < 0.0) sign_change = false;
        }
        if (!sign_change) continue;
        const Vec center = 0.5 * (lattice[j * sc + i] + lattice[(j + 1) * sc + i + 1]);
        bool found = false;
        for (const auto& p : cs.points)
          if ((p.x - center).norm() <= 2.0 * cell) found = true;
        if (!found)
          cs.warnings.push_back("gradient sign change near (" + std::to_string(center[0]) +
                                ", " + std::to_string(center[1]) +
                                ") but Newton found no critical point");
      }
  }
  return cs;
}

// ---------------------------------------------------------------------------
// Stream recovery

namespace {

// Integral of f(gamma(t)) dt over [t0, t1], gamma the straight chord a -> b.
// Adaptive bisection so cutoff-type fields (sharp but smooth) integrate to
// full accuracy while polynomial fields cost two quadrature passes.
template <class F>
double chord_integral(const F& f, const Vec& a, const Vec& b, double t0, double t1, int depth) {
  std::vector<double> x8, w8, x16, w16;
  gauss_legendre(8, x8, w8);
  gauss_legendre(16, x16, w16);
  const double mid = 0.5 * (t0 + t1), half = 0.5 * (t1 - t0);
  double coarse = 0.0, fine = 0.0;
  for (std::size_t q = 0; q < x8.size(); ++q)
    coarse += half * w8[q] * f(a + (mid + half * x8[q]) * (b - a));
  for (std::size_t q = 0; q < x16.size(); ++q)
    fine += half * w16[q] * f(a + (mid + half * x16[q]) * (b - a));
  if (depth >= 8 || std::abs(fine - coarse) <= 1e-13 * (1.0 + std::abs(fine))) return fine;
  return chord_integral(f, a, b, t0, mid, depth + 1) +
         chord_integral(f, a, b, mid, t1, depth + 1);
}

template <class F>
double segment_integral(const F& f, const Vec& a, const Vec& b) {
  return chord_integral(f, a, b, 0.0, 1.0, 0);
}

}  // namespace

StreamGrid recover_stream(const CovecField& U, const Grid2& g, double h, double div_tol,
                          std::uint64_t seed) {
  if (U.size() != 2) throw DimensionError("recover_stream: U must have 2 components");
  StreamGrid out;
  out.g = g;
  out.alpha.assign(static_cast<std::size_t>(g.nx) * g.ny, 0.0);

  // integrability: delta U = 0 means d1 U1 + d2 U2 = 0
  {
    std::vector<double> divs(static_cast<std::size_t>(g.nx) * g.ny, 0.0);
    parallel_for(g.nx * g.ny, [&](int f) {
      const int i = f % g.nx, j = f / g.nx;
      const Vec x = g.point(i, j);
      divs[f] = std::abs(U[0].jet2(x, h).g[0] + U[1].jet2(x, h).g[1]);
    });
    out.max_div = *std::max_element(divs.begin(), divs.end());
    if (out.max_div > div_tol)
      throw PreconditionError("recover_stream: U is not divergence-free on the grid (max |div U| = " +
                              std::to_string(out.max_div) + ")");
  }

  // d1 alpha = U2, d2 alpha = -U1; left edge first, then rows
  auto u1 = [&](const Vec& x) { return U[0].value(x, h); };
  auto u2 = [&](const Vec& x) { return U[1].value(x, h); };
  // line integral of grad(alpha) = (U2, -U1) along the straight segment a -> b
  auto dalpha = [&](const Vec& a, const Vec& b) {
    return (b[0] - a[0]) * segment_integral(u2, a, b) -
           (b[1] - a[1]) * segment_integral(u1, a, b);
  };
  for (int j = 1; j < g.ny; ++j)
    out.alpha[g.flat(0, j)] =
        out.alpha[g.flat(0, j - 1)] + dalpha(g.point(0, j - 1), g.point(0, j));
  parallel_for(g.ny, [&](int j) {
    for (int i = 1; i < g.nx; ++i)
      out.alpha[g.flat(i, j)] =
          out.alpha[g.flat(i - 1, j)] + dalpha(g.point(i - 1, j), g.point(i, j));
  });

  // loop closure on random rectangles, walking grid edges cell by cell so the
  // path integration matches the recovery accuracy
  Rng rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    const int i0 = static_cast<int>(rng.uniform(0, g.nx - 1));
    const int i1 = i0 + 1 + static_cast<int>(rng.uniform(0, g.nx - 1 - i0));
    const int j0 = static_cast<int>(rng.uniform(0, g.ny - 1));
    const int j1 = j0 + 1 + static_cast<int>(rng.uniform(0, g.ny - 1 - j0));
    double circ = 0.0;
    for (int i = i0; i < i1; ++i) circ += dalpha(g.point(i, j0), g.point(i + 1, j0));
    for (int j = j0; j < j1; ++j) circ += dalpha(g.point(i1, j), g.point(i1, j + 1));
    for (int i = i1; i > i0; --i) circ += dalpha(g.point(i, j1), g.point(i - 1, j1));
    for (int j = j1; j > j0; --j) circ += dalpha(g.point(i0, j), g.point(i0, j - 1));
    const double len =
        2.0 * (g.dx() * (i1 - i0) + g.dy() * (j1 - j0));
    worst = std::max(worst, std::abs(circ) / std::max(1.0, len));
    if (std::abs(circ) > 10.0 * div_tol * std::max(1.0, len))
      throw PreconditionError("recover_stream: path dependence detected (loop residual " +
                              std::to_string(std::abs(circ)) + ")");
  }
  out.max_loop_residual = worst;
  return out;
}

// ---------------------------------------------------------------------------
// Component partition

ComponentChart component_partition(const ScalarField& phi, const CriticalSet& cs,
                                   const Grid2& g, double saddle_margin) {
  if (!(saddle_margin > 0.0))
    throw PreconditionError("component_partition: saddle_margin must be positive");
  const std::vector<double> sigma = cs.saddle_values();
  ComponentChart chart;
  chart.g = g;
  chart.margin = saddle_margin;
  const int total = g.nx * g.ny;
  chart.phi.assign(total, 0.0);
  chart.label.assign(total, -1);
  parallel_for(total, [&](int f) {
    chart.phi[f] = phi.value(g.point(f % g.nx, f / g.nx), 0.0);
  });

  auto masked = [&](int f) {
    for (double s : sigma)
      if (std::abs(chart.phi[f] - s) <= saddle_margin) return true;
    return false;
  };

  int next = 0;
  for (int start = 0; start < total; ++start) {
    if (chart.label[start] != -1 || masked(start)) continue;
    const int id = next++;
    std::deque<int> queue{start};
    chart.label[start] = id;
    while (!queue.empty()) {
      const int f = queue.front();
      queue.pop_front();
      const int i = f % g.nx, j = f / g.nx;
      const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
      for (auto& q : nb) {
        if (q[0] < 0 || q[0] >= g.nx || q[1] < 0 || q[1] >= g.ny) continue;
        const int fq = g.flat(q[0], q[1]);
        if (chart.label[fq] != -1 || masked(fq)) continue;
        chart.label[fq] = id;
        queue.push_back(fq);
      }
    }
  }
  chart.n_components = next;

  chart.touches_boundary.assign(next, 0);
  for (int i = 0; i < g.nx; ++i)
    for (int j : {0, g.ny - 1})
      if (chart.label[g.flat(i, j)] >= 0) chart.touches_boundary[chart.label[g.flat(i, j)]] = 1;
  for (int j = 0; j < g.ny; ++j)
    for (int i : {0, g.nx - 1})
      if (chart.label[g.flat(i, j)] >= 0) chart.touches_boundary[chart.label[g.flat(i, j)]] = 1;

  // adjacency between components and the saddle levels separating them
  for (int f = 0; f < total; ++f) {
    if (chart.label[f] != -1) continue;
    double nearest = sigma.empty() ? 0.0 : sigma[0];
    for (double s : sigma)
      if (std::abs(chart.phi[f] - s) < std::abs(chart.phi[f] - nearest)) nearest = s;
    const int i = f % g.nx, j = f / g.nx;
    const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
    for (auto& q : nb) {
      if (q[0] < 0 || q[0] >= g.nx || q[1] < 0 || q[1] >= g.ny) continue;
      const int lab = chart.label[g.flat(q[0], q[1])];
      if (lab < 0) continue;
      auto& v = chart.adjacency[lab];
      if (std::find_if(v.begin(), v.end(),
                       [&](double s) { return std::abs(s - nearest) < 1e-12; }) == v.end())
        v.push_back(nearest);
    }
  }

  // a margin that swallows a well is an input error, not a partition
  for (const auto& p : cs.points) {
    if (p.index == 1) continue;
    // nearest node
    const int i = std::clamp(static_cast<int>(std::lround((p.x[0] - g.box.lo[0]) / g.dx())), 0,
                             g.nx - 1);
    const int j = std::clamp(static_cast<int>(std::lround((p.x[1] - g.box.lo[1]) / g.dy())), 0,
                             g.ny - 1);
    if (chart.label[g.flat(i, j)] == -1)
      throw PreconditionError(
          "component_partition: saddle_margin so large that the component around a critical "
          "point vanished; use a smaller margin");
  }
  return chart;
}

double default_saddle_margin(const ScalarField& phi, const Grid2& g, const CriticalSet& cs) {
  const std::vector<double> sigma = cs.saddle_values();
  const double cell = std::max(g.dx(), g.dy());
  double gmax = 0.0, band_max = 0.0;
  for (int f = 0; f < g.nx * g.ny; ++f) {
    const Vec x = g.point(f % g.nx, f / g.nx);
    const Jet2 j = phi.jet2(x, 0.0);
    const double gn = j.g.norm();
    gmax = std::max(gmax, gn);
    for (double s : sigma)
      if (std::abs(j.v - s) <= 5.0 * cell * std::max(gn, 1e-12))
        band_max = std::max(band_max, gn);
  }
  double margin = 5.0 * cell * (band_max > 0.0 ? band_max : gmax);
  // never swallow the gap between distinct critical values
  std::vector<double> values;
  for (const auto& p : cs.points) values.push_back(p.value);
  std::sort(values.begin(), values.end());
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    const double gap = values[i + 1] - values[i];
    if (gap > 1e-9) margin = std::min(margin, 0.25 * gap);
  }
  return std::max(margin, 1e-9);
}

// ---------------------------------------------------------------------------
// Profile fit

namespace {

// Piecewise-linear through the knots, linearly extrapolated at the ends.
double interp_profile(const std::vector<double>& knots, const std::vector<double>& f, double t) {
  const std::size_t m = knots.size();
  if (m == 1) return f[0];
  std::size_t k;
  if (t <= knots.front())
    k = 1;
  else if (t >= knots.back())
    k = m - 1;
  else
    k = std::upper_bound(knots.begin(), knots.end(), t) - knots.begin();
  const double w = (t - knots[k - 1]) / (knots[k] - knots[k - 1]);
  return (1.0 - w) * f[k - 1] + w * f[k];
}

}  // namespace

ProfileFit fit_profile(const StreamGrid& stream, const ComponentChart& chart, int component,
                       double fit_tol) {
  std::vector<std::pair<double, double>> cells;  // (phi, alpha)
  for (int f = 0; f < chart.g.nx * chart.g.ny; ++f)
    if (chart.label[f] == component) cells.push_back({chart.phi[f], stream.alpha[f]});
  if (cells.size() < 20)
    throw PreconditionError("fit_profile: component " + std::to_string(component) +
                            " has too few cells to bin");
  std::sort(cells.begin(), cells.end());

  const int nbins =
      std::max(1, std::min(static_cast<int>(cells.size()) / 20, 800));
  ProfileFit fit;
  fit.component = component;
  const std::size_t per = cells.size() / nbins;
  for (int b = 0; b < nbins; ++b) {
    const std::size_t lo = b * per;
    const std::size_t hi = b + 1 == nbins ? cells.size() : lo + per;
    double sp = 0, sa = 0;
    for (std::size_t c = lo; c < hi; ++c) {
      sp += cells[c].first;
      sa += cells[c].second;
    }
    fit.knots.push_back(sp / (hi - lo));
    fit.f_values.push_back(sa / (hi - lo));
  }
  // enforce strictly increasing knots (duplicates collapse)
  for (std::size_t k = 1; k < fit.knots.size();) {
    if (fit.knots[k] - fit.knots[k - 1] < 1e-14) {
      fit.f_values[k - 1] = 0.5 * (fit.f_values[k - 1] + fit.f_values[k]);
      fit.knots.erase(fit.knots.begin() + k);
      fit.f_values.erase(fit.f_values.begin() + k);
    } else {
      ++k;
    }
  }

  auto interp = [&](double t) { return interp_profile(fit.knots, fit.f_values, t); };

  double amin = cells.front().second, amax = amin;
  for (const auto& c : cells) {
    amin = std::min(amin, c.second);
    amax = std::max(amax, c.second);
    fit.deviation = std::max(fit.deviation, std::abs(c.second - interp(c.first)));
  }
  fit.alpha_range = amax - amin;
  fit.pass = fit.deviation <= fit_tol * (1.0 + fit.alpha_range);
  return fit;
}

// ---------------------------------------------------------------------------
// Gluing

double star_integral(const CovecField& U, const Vec& a, const Vec& b, double h) {
  // *U = -U2 dx1 + U1 dx2 along the straight segment
  auto integrand = [&](const Vec& p) {
    return -U[1].value(p, h) * (b[0] - a[0]) + U[0].value(p, h) * (b[1] - a[1]);
  };
  return segment_integral(integrand, a, b);
}

namespace {

struct PolyFit {
  Vec coeff;  // degree 4
  double at(double t) const {
    double r = 0, p = 1;
    for (int k = 0; k < coeff.size(); ++k, p *= t) r += coeff[k] * p;
    return r;
  }
  double d1(double t) const {
    double r = 0, p = 1;
    for (int k = 1; k < coeff.size(); ++k, p *= t) r += k * coeff[k] * p;
    return r;
  }
  double d2(double t) const {
    double r = 0, p = 1;
    for (int k = 2; k < coeff.size(); ++k, p *= t) r += k * (k - 1.0) * coeff[k] * p;
    return r;
  }
};

std::optional<PolyFit> ls_poly4(const std::vector<std::pair<double, double>>& data, double t0) {
  if (data.size() < 30) return std::nullopt;
  const int deg = 4;
  Mat A(data.size(), deg + 1);
  Vec b(data.size());
  for (std::size_t r = 0; r < data.size(); ++r) {
    double p = 1.0;
    const double t = data[r].first - t0;  // center at the saddle value
    for (int k = 0; k <= deg; ++k, p *= t) A(r, k) = p;
    b[r] = data[r].second;
  }
  PolyFit f;
  f.coeff = A.colPivHouseholderQr().solve(b);
  return f;
}

}  // namespace

GlueReport glue_check(const std::vector<ProfileFit>& fits, const StreamGrid& stream,
                      const ComponentChart& chart, const CovecField& U, const CriticalSet& cs,
                      double h, double glue_tol,
                      const std::vector<std::pair<Vec, Vec>>& explicit_pairs) {
  for (const auto& f : fits)
    if (!f.pass)
      throw PreconditionError("glue_check: per-component fit " + std::to_string(f.component) +
                              " did not pass");
  GlueReport rep;
  const Grid2& g = chart.g;

  auto interp_fit = [&](const ProfileFit& f, double t) {
    return interp_profile(f.knots, f.f_values, t);
  };

  auto node_near_level = [&](int comp, double level) -> std::optional<Vec> {
    double best = std::numeric_limits<double>::infinity();
    int best_f = -1;
    for (int f = 0; f < g.nx * g.ny; ++f) {
      if (chart.label[f] != comp) continue;
      const double d = std::abs(chart.phi[f] - level);
      if (d < best) {
        best = d;
        best_f = f;
      }
    }
    if (best_f < 0) return std::nullopt;
    return g.point(best_f % g.nx, best_f / g.nx);
  };

  double fscale = 0.0;
  for (const auto& f : fits)
    for (double v : f.f_values) fscale = std::max(fscale, std::abs(v));

  // auto-generated equal-level pairs on the overlap of knot ranges
  for (std::size_t a = 0; a < fits.size(); ++a)
    for (std::size_t b = a + 1; b < fits.size(); ++b) {
      const double lo = std::max(fits[a].knots.front(), fits[b].knots.front());
      const double hi = std::min(fits[a].knots.back(), fits[b].knots.back());
      if (hi <= lo) continue;
      for (int s = 0; s < 5; ++s) {
        const double level = lo + (hi - lo) * (s + 0.5) / 5.0;
        GluePair pair;
        pair.comp_a = fits[a].component;
        pair.comp_b = fits[b].component;
        pair.level = level;
        pair.mismatch = std::abs(interp_fit(fits[a], level) - interp_fit(fits[b], level));
        const auto xa = node_near_level(fits[a].component, level);
        const auto xb = node_near_level(fits[b].component, level);
        if (xa && xb) {
          // alpha(y) - alpha(x) = - int *U (convention s = -1)
          const int fa = g.flat(
              static_cast<int>(std::lround(((*xa)[0] - g.box.lo[0]) / g.dx())),
              static_cast<int>(std::lround(((*xa)[1] - g.box.lo[1]) / g.dy())));
          const int fb = g.flat(
              static_cast<int>(std::lround(((*xb)[0] - g.box.lo[0]) / g.dx())),
              static_cast<int>(std::lround(((*xb)[1] - g.box.lo[1]) / g.dy())));
          const double dalpha = stream.alpha[fb] - stream.alpha[fa];
          pair.star_integral_check = std::abs(dalpha + star_integral(U, *xa, *xb, h));
          rep.max_star_residual = std::max(rep.max_star_residual, pair.star_integral_check);
        }
        rep.max_mismatch = std::max(rep.max_mismatch, pair.mismatch);
        rep.pairs.push_back(pair);
      }
    }

  for (const auto& xy : explicit_pairs) {
    if (!g.box.contains(xy.first) || !g.box.contains(xy.second))
      throw PreconditionError("glue_check: path leaves the grid");
    auto node_phi = [&](const Vec& x) {
      const int i = std::clamp(static_cast<int>(std::lround((x[0] - g.box.lo[0]) / g.dx())), 0,
                               g.nx - 1);
      const int j = std::clamp(static_cast<int>(std::lround((x[1] - g.box.lo[1]) / g.dy())), 0,
                               g.ny - 1);
      return chart.phi[g.flat(i, j)];
    };
    const double pa = node_phi(xy.first);
    const double pb = node_phi(xy.second);
    if (std::abs(pa - pb) > 1e-6 * (1.0 + std::abs(pa)))
      throw PreconditionError("glue_check: pair with phi(x) != phi(y)");
    GluePair pair;
    pair.comp_a = pair.comp_b = -1;
    pair.level = pa;
    pair.star_integral_check = std::abs(star_integral(U, xy.first, xy.second, h));
    rep.pairs.push_back(pair);
  }

  // one-sided smoothness across each saddle value
  const double delta = 0.5;
  for (double s : cs.saddle_values()) {
    SaddleMatch match;
    match.saddle_value = s;
    std::vector<std::pair<double, double>> below, above;
    for (int f = 0; f < g.nx * g.ny; ++f) {
      if (chart.label[f] < 0) continue;
      const double p = chart.phi[f];
      if (p < s && p >= s - delta) below.push_back({p, stream.alpha[f]});
      if (p > s && p <= s + delta) above.push_back({p, stream.alpha[f]});
    }
    const auto pb = ls_poly4(below, s);
    const auto pa = ls_poly4(above, s);
    if (pb && pa) {
      match.tested = true;
      match.value_gap = std::abs(pb->at(0.0) - pa->at(0.0));
      match.d1_gap = std::abs(pb->d1(0.0) - pa->d1(0.0));
      match.d2_gap = std::abs(pb->d2(0.0) - pa->d2(0.0));
      const double tol = 1e-3 * (1.0 + fscale);
      match.smooth = match.value_gap <= tol && match.d1_gap <= tol && match.d2_gap <= tol;
    }
    rep.saddles.push_back(match);
  }

  rep.global_pass = rep.max_mismatch <= glue_tol * (1.0 + fscale);
  for (const auto& m : rep.saddles)
    if (m.tested && !m.smooth) rep.global_pass = false;
  return rep;
}

}  // namespace susyfactor
