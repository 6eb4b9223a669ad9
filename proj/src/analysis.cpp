#include <susyfactor/analysis.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>

namespace susyfactor {

namespace {

constexpr double kKernelRel = 1e-10;  // eigenvalues below this (rel. to max) span ker A

double spectral_norm(const Mat& m) {
  if (m.rows() == 0) return 0.0;
  return m.jacobiSvd().singularValues()(0);
}

double sigma_min(const Mat& m) {
  if (m.rows() == 0) return 0.0;
  auto sv = m.jacobiSvd().singularValues();
  return sv(sv.size() - 1);
}

Mat nu_derivative(const MatJet& G, const MultiIndex& nu) {
  if (nu.empty()) return G.val;
  if (nu.size() == 1) return G.d1[nu[0]];
  return G.d2[nu[0]][nu[1]];
}

}  // namespace

std::vector<MultiIndex> default_nu_set(int n) {
  std::vector<MultiIndex> set;
  set.push_back({});
  for (int i = 0; i < n; ++i) set.push_back({i});
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) set.push_back({i, j});
  return set;
}

std::string nu_name(const MultiIndex& nu) {
  if (nu.empty()) return "0";
  std::string s;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(nu[i] + 1);
  }
  return s;
}

TemperatenessFit fit_temperateness(const SusyStructure& S, const std::vector<Vec>& x_grid,
                                   const std::vector<double>& h_grid,
                                   const std::vector<MultiIndex>& nu_set,
                                   double uniformity_factor) {
  if (x_grid.empty() || h_grid.empty())
    throw PreconditionError("fit_temperateness: empty grid");
  const int npts = static_cast<int>(x_grid.size());
  const int nh = static_cast<int>(h_grid.size());

  // norms[nu][h][point]
  std::vector<std::vector<std::vector<double>>> norms(
      nu_set.size(), std::vector<std::vector<double>>(nh, std::vector<double>(npts, 0.0)));
  for (int ih = 0; ih < nh; ++ih) {
    const double h = h_grid[ih];
    parallel_for(npts, [&](int p) {
      const MatJet G = G_jet(S, x_grid[p], h, 2);
      for (std::size_t q = 0; q < nu_set.size(); ++q)
        norms[q][ih][p] = spectral_norm(nu_derivative(G, nu_set[q]));
    });
  }

  TemperatenessFit fit;

  // Fit m from the upper envelope of ||G|| against rho_1: bin by log rho,
  // take the max per bin, least-squares on the bin maxima. The envelope is
  // the right estimator for a sup-type bound (a raw point cloud is dominated
  // by interior points where ||G|| dips).
  {
    std::vector<double> lr(npts), lv(npts);
    double vmax = 0.0;
    for (int p = 0; p < npts; ++p) {
      double mx = 0.0;
      for (int ih = 0; ih < nh; ++ih) mx = std::max(mx, norms[0][ih][p]);
      lr[p] = 0.5 * std::log1p(x_grid[p].squaredNorm());
      lv[p] = mx;
      vmax = std::max(vmax, mx);
    }
    const int nbins = 8;
    const double lo = *std::min_element(lr.begin(), lr.end());
    const double hi = *std::max_element(lr.begin(), lr.end());
    std::vector<double> bin_max(nbins, 0.0);
    for (int p = 0; p < npts; ++p) {
      const int b = hi > lo ? std::min(nbins - 1, static_cast<int>((lr[p] - lo) / (hi - lo) *
                                                                   nbins))
                            : 0;
      bin_max[b] = std::max(bin_max[b], lv[p]);
    }
    std::vector<double> lx, ly;
    for (int b = 0; b < nbins; ++b) {
      if (bin_max[b] < 1e-9 * (1.0 + vmax)) continue;
      lx.push_back(lo + (hi - lo) * (b + 0.5) / nbins);
      ly.push_back(std::log(bin_max[b]));
    }
    double slope = 0.0, resid = 0.0;
    if (lx.size() >= 2) {
      double mx = 0, my = 0;
      for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
      }
      mx /= lx.size();
      my /= ly.size();
      double num = 0, den = 0;
      for (std::size_t i = 0; i < lx.size(); ++i) {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
      }
      slope = den > 1e-12 ? num / den : 0.0;
      for (std::size_t i = 0; i < lx.size(); ++i) {
        const double e = ly[i] - my - slope * (lx[i] - mx);
        resid += e * e;
      }
      resid = std::sqrt(resid / lx.size());
    }
    fit.m = std::max(0.0, slope);
    fit.fit_residual = resid;
  }

  auto rho_m = [&](const Vec& x) { return std::pow(1.0 + x.squaredNorm(), 0.5 * fit.m); };

  fit.max_h_variation = 1.0;
  for (std::size_t q = 0; q < nu_set.size(); ++q) {
    double c_all = 0.0, c_min = std::numeric_limits<double>::infinity(), c_max = 0.0;
    for (int ih = 0; ih < nh; ++ih) {
      double c_h = 0.0;
      for (int p = 0; p < npts; ++p) c_h = std::max(c_h, norms[q][ih][p] / rho_m(x_grid[p]));
      c_all = std::max(c_all, c_h);
      c_min = std::min(c_min, c_h);
      c_max = std::max(c_max, c_h);
    }
    const std::string name = nu_name(nu_set[q]);
    fit.C[name] = c_all;
    // derivatives that vanish identically have no h-variation to measure
    const double var = c_max < 1e-12 ? 1.0 : (c_min < 1e-300 ? 1e300 : c_max / c_min);
    fit.h_variation[name] = var;
    fit.max_h_variation = std::max(fit.max_h_variation, var);
  }
  fit.pass = fit.max_h_variation <= uniformity_factor;
  return fit;
}

DefiniteReport invertibility_definite(const SusyStructure& S, const std::vector<Vec>& x_samples,
                                      double h) {
  DefiniteReport rep;
  if (x_samples.empty()) throw PreconditionError("invertibility_definite: no samples");
  double cmin = std::numeric_limits<double>::infinity();
  double amax = 0.0;
  for (const Vec& x : x_samples) {
    const Mat A = S.A.value(x, h);
    Eigen::SelfAdjointEigenSolver<Mat> es(A);
    cmin = std::min(cmin, es.eigenvalues().minCoeff());
    amax = std::max(amax, std::abs(es.eigenvalues().cwiseAbs().maxCoeff()));
  }
  rep.C = cmin;
  if (cmin <= 1e-10 * (1.0 + amax)) {
    rep.applicable = false;  // A only positive semidefinite: defer to the splitting test
    return rep;
  }
  rep.applicable = true;
  rep.pass = true;
  for (const Vec& x : x_samples) {
    const Mat G = G_value(S, x, h);
    const double smin = sigma_min(G);
    if (smin <= 0.0) {
      rep.pass = false;
      continue;
    }
    rep.max_inv_norm = std::max(rep.max_inv_norm, 1.0 / smin);
  }
  // coercivity transfers from A to G; a violation here indicates a
  // convention or implementation bug, not a property of the input
  if (rep.max_inv_norm > 1.0 / rep.C + 1e-12) rep.pass = false;
  return rep;
}

SplitReport invertibility_split(const Mat& A0, const Mat& B0) {
  const int n = static_cast<int>(A0.rows());
  SplitReport rep;
  const double scale = std::max(1.0, spectral_norm(A0));
  if ((A0 - A0.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw PreconditionError("invertibility_split: A0 not symmetric");
  if ((B0 + B0.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + spectral_norm(B0)))
    throw PreconditionError("invertibility_split: B0 not antisymmetric");

  Eigen::SelfAdjointEigenSolver<Mat> es(A0);
  const Vec ev = es.eigenvalues();
  if (ev.minCoeff() < -1e-9 * scale)
    throw PreconditionError("invertibility_split: A0 is not positive semidefinite");
  const double thresh = kKernelRel * std::max(scale, ev.cwiseAbs().maxCoeff());

  std::vector<int> e_idx, f_idx;
  for (int i = 0; i < n; ++i) (ev[i] <= thresh ? e_idx : f_idx).push_back(i);
  rep.dim_E = static_cast<int>(e_idx.size());
  rep.dim_F = static_cast<int>(f_idx.size());
  rep.applicable = true;

  Mat E(n, rep.dim_E), F(n, rep.dim_F);
  for (int i = 0; i < rep.dim_E; ++i) E.col(i) = es.eigenvectors().col(e_idx[i]);
  for (int i = 0; i < rep.dim_F; ++i) F.col(i) = es.eigenvectors().col(f_idx[i]);
  rep.C0 = rep.dim_F > 0 ? ev[f_idx[0]] : 0.0;
  for (int i : f_idx) rep.C0 = std::min(rep.C0, ev[i]);

  if (rep.dim_E == 0) {
    // definite case in disguise
    rep.injective = true;
    rep.dim_check = true;
    const Mat G = A0 + B0;
    const double smin = sigma_min(G);
    if (smin > 0) rep.inv_norm_sharp = 1.0 / smin;
    rep.inv_norm_bound = 1.0 / rep.C0;
    rep.note = "A0 definite; splitting degenerate";
    return rep;
  }

  // B0 must map E into F (i.e. the E-E block vanishes)
  const Mat bee = E.transpose() * B0 * E;
  const double bscale = 1.0 + spectral_norm(B0);
  if (bee.cwiseAbs().maxCoeff() > 1e-10 * bscale)
    throw PreconditionError("invertibility_split: splitting hypothesis violated (B(E) not in F)");

  rep.dim_check = rep.dim_F >= rep.dim_E;
  const Mat b_fe = F.transpose() * B0 * E;  // B|_E : E -> F in the eigenbases
  rep.sigma_min_BE = rep.dim_F == 0 ? 0.0 : sigma_min(b_fe);
  rep.injective = rep.dim_check && rep.sigma_min_BE > 1e-10 * bscale;

  const Mat G = A0 + B0;
  const double smin = sigma_min(G);
  if (smin > 1e-300) rep.inv_norm_sharp = 1.0 / smin;

  if (rep.injective && rep.C0 > 0.0) {
    // chain bound: ||Pi_F xi|| <= 2 C0^-1 ||eta||, then solve for the E part
    const double norm_a = spectral_norm(A0), norm_b = spectral_norm(B0);
    const double bound =
        (1.0 + 2.0 / rep.C0 * (norm_a + norm_b)) / rep.sigma_min_BE + 2.0 / rep.C0;
    rep.inv_norm_bound = bound;
  }
  return rep;
}

StructureInvertibility invertibility_analysis(const SusyStructure& S,
                                              const std::vector<Vec>& x_samples, double h) {
  StructureInvertibility out;
  out.definite = invertibility_definite(S, x_samples, h);
  if (out.definite.applicable) {
    out.split.applicable = false;
    return out;
  }
  // kernel-splitting route; also check E is the same subspace at every sample
  Mat E_ref;
  for (std::size_t s = 0; s < x_samples.size(); ++s) {
    const Mat A = S.A.value(x_samples[s], h);
    Eigen::SelfAdjointEigenSolver<Mat> es(A);
    const double thresh =
        kKernelRel * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    std::vector<int> e_idx;
    for (int i = 0; i < A.rows(); ++i)
      if (es.eigenvalues()[i] <= thresh) e_idx.push_back(i);
    Mat E(A.rows(), e_idx.size());
    for (std::size_t i = 0; i < e_idx.size(); ++i) E.col(i) = es.eigenvectors().col(e_idx[i]);
    if (s == 0) {
      E_ref = E;
    } else if (E.cols() != E_ref.cols() ||
               (E * E.transpose() - E_ref * E_ref.transpose()).cwiseAbs().maxCoeff() > 1e-8) {
      out.kernel_consistent = false;
    }
  }
  const Vec& x0 = x_samples.front();
  const Mat G = G_value(S, x0, h);
  const Mat A0 = 0.5 * (G + G.transpose());
  const Mat B0 = 0.5 * (G - G.transpose());
  out.split = invertibility_split(A0, B0);
  return out;
}

}  // namespace susyfactor
