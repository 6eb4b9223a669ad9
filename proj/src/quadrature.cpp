#include <susyfactor/quadrature.hpp>

#include <cmath>
#include <map>
#include <mutex>

namespace susyfactor {

namespace {

// Newton iteration on Legendre polynomials, nodes symmetric about 0.
void compute_gl(int m, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(m, 0.0);
  weights.assign(m, 0.0);
  const int half = (m + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (m + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < m; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = m * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[m - 1 - i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    weights[m - 1 - i] = weights[i];
  }
}

}  // namespace

void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights) {
  static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(m);
  if (it == cache.end()) {
    std::pair<std::vector<double>, std::vector<double>> e;
    compute_gl(m, e.first, e.second);
    it = cache.emplace(m, std::move(e)).first;
  }
  nodes = it->second.first;
  weights = it->second.second;
}

std::vector<double> exp_panels(double upper, const QuadratureConfig& qc) {
  std::vector<double> b;
  b.push_back(0.0);
  if (qc.panels == 1) {
    b.push_back(upper);
    return b;
  }
  // geometric grading: panel widths grow by a fixed ratio away from 0
  const double ratio = 1.7;
  // first width w solves w * (ratio^P - 1)/(ratio - 1) = upper
  const double w0 = upper * (ratio - 1.0) / (std::pow(ratio, qc.panels) - 1.0);
  double w = w0;
  double pos = 0.0;
  for (int p = 0; p < qc.panels - 1; ++p) {
    pos += w;
    b.push_back(pos);
    w *= ratio;
  }
  b.push_back(upper);
  return b;
}

namespace {

void refine_panel(const std::function<Vec(double)>& probe, double a, double b, double tol_rate,
                  int depth, std::vector<double>& bounds) {
  std::vector<double> xs16, ws16, xs32, ws32;
  gauss_legendre(16, xs16, ws16);
  gauss_legendre(32, xs32, ws32);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  Vec coarse, fine;
  for (std::size_t q = 0; q < xs16.size(); ++q) {
    const double s = mid + half * xs16[q];
    const Vec v = half * ws16[q] * std::exp(-s) * probe(s);
    coarse = q == 0 ? v : Vec(coarse + v);
  }
  for (std::size_t q = 0; q < xs32.size(); ++q) {
    const double s = mid + half * xs32[q];
    const Vec v = half * ws32[q] * std::exp(-s) * probe(s);
    fine = q == 0 ? v : Vec(fine + v);
  }
  const double err = (coarse - fine).cwiseAbs().maxCoeff();
  const double scale = 1.0 + fine.cwiseAbs().maxCoeff();
  if (depth >= 12 || err <= tol_rate * (b - a) * scale) {
    bounds.push_back(b);
    return;
  }
  refine_panel(probe, a, mid, tol_rate, depth + 1, bounds);
  refine_panel(probe, mid, b, tol_rate, depth + 1, bounds);
}

}  // namespace

std::vector<double> adaptive_exp_panels(const std::function<Vec(double)>& probe, double upper,
                                        const QuadratureConfig& qc) {
  const double top = std::min(upper, qc.max_s);
  std::vector<double> bounds{0.0};
  if (top <= 0.0) {
    bounds.push_back(0.0);
    return bounds;
  }
  const std::vector<double> seed = exp_panels(top, qc);
  const double tol_rate = 0.05 * qc.tol / std::max(1.0, top);
  for (std::size_t p = 0; p + 1 < seed.size(); ++p)
    refine_panel(probe, seed[p], seed[p + 1], tol_rate, 0, bounds);
  return bounds;
}

double integrate_exp_weighted_checked(const std::function<double(double)>& f, double upper,
                                      const QuadratureConfig& qc) {
  qc.validate();
  const double coarse = integrate_exp_weighted<double>(f, upper, qc, 0.0);
  QuadratureConfig fine = qc;
  fine.nodes_per_panel += 8;
  fine.panels += 2;
  const double refined = integrate_exp_weighted<double>(f, upper, fine, 0.0);
  if (std::abs(refined - coarse) > qc.tol * (1.0 + std::abs(refined)))
    throw QuadratureError("exp-weighted quadrature did not converge to tolerance");
  return refined;
}

}  // namespace susyfactor
