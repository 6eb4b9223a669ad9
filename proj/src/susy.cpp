#include <susyfactor/susy.hpp>

#include <algorithm>
#include <cmath>
#include <deque>

namespace susyfactor {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Derivatives of a profile at tau: {a, a', a'', a'''}.
std::array<double, 4> profile_derivs(const Expr& alpha, double tau) {
  const Jet3 j = alpha.jet3_t(tau);
  return {j.v, j.g[0], j.h(0, 0), j.t(0, 0, 0)};
}

// (alpha composed with an inner x-jet) as a Jet2; shift selects which
// derivative of alpha sits at order zero (0: alpha, 1: alpha').
Jet2 compose_profile(const Expr& alpha, const Jet2& inner, int shift) {
  const Jet3 j = alpha.jet3_t(inner.v);
  const double d[4] = {j.v, j.g[0], j.h(0, 0), j.t(0, 0, 0)};
  return compose({d[shift], d[shift + 1], d[shift + 2]}, inner);
}

ScalarField add_fields(const ScalarField& a, const ScalarField& b) {
  if (a.is_expr() && b.is_expr()) {
    ExprBuilder eb(a.expr().dim());
    return ScalarField(eb.add(a.expr(), b.expr()));
  }
  return ScalarField(ScalarField::Jet3Fn(
      [a, b](const Vec& x, double h) { return a.jet3(x, h) + b.jet3(x, h); }));
}

// -sum_i d_i (M grad w)_i from an order-1 matrix jet and an order-3 scalar jet.
double delta_mat_grad(const MatJet& M, const Jet3& w) {
  double acc = 0.0;
  for (int i = 0; i < M.n; ++i)
    for (int j = 0; j < M.n; ++j) acc += M.d1[i](i, j) * w.g[j] + M.val(i, j) * w.h(i, j);
  return -acc;
}

}  // namespace

// ---------------------------------------------------------------------------
// Decomposition admissibility

void validate_dec(const ThetaDecomposition& dec, double t_lo, double t_hi,
                  const std::vector<Vec>& grid, double h, double closed_tol) {
  for (std::size_t k = 0; k < dec.terms.size(); ++k) {
    const ThetaTerm& term = dec.terms[k];
    // theta closed: delta(theta) = 0 on the grid
    double scale = 1.0, worst = 0.0;
    for (const Vec& x : grid) {
      const Bivector th = term.theta.value(x, h);
      scale = std::max(scale, th.mat().cwiseAbs().maxCoeff());
      worst = std::max(worst, codiff_bivec(term.theta, x, h).cwiseAbs().maxCoeff());
    }
    if (worst > closed_tol * scale)
      throw PreconditionError("theta term " + std::to_string(k + 1) +
                              " is not delta-closed (max |delta theta| = " +
                              std::to_string(worst) + ")");

    // growth: alpha^{(j)} must stay within <t>^N on the sampled range.
    // Detector: log-log slope against <t>, with a magnitude guard so bounded
    // compactly-supported profiles are never rejected.
    const int samples = 160;
    if (t_hi - t_lo < 1e-9) continue;
    for (int j = 0; j <= 3; ++j) {
      Expr d = term.alpha;
      for (int r = 0; r < j; ++r) d = diff_t(d);
      std::vector<double> logt, logv;
      double vmax = 0.0;
      for (int s = 0; s < samples; ++s) {
        const double t = t_lo + (t_hi - t_lo) * s / (samples - 1);
        const double val = std::abs(d.value_t(t));
        vmax = std::max(vmax, val);
        if (val > 1e-12) {
          logt.push_back(0.5 * std::log1p(t * t));
          logv.push_back(std::log(val));
        }
      }
      const double guard = 1e3 * (1.0 + std::pow(1.0 + t_hi * t_hi, 0.5 * dec.N));
      if (vmax <= guard || logt.size() < 8) continue;
      // least-squares slope
      double mt = 0, mv = 0;
      for (std::size_t s = 0; s < logt.size(); ++s) {
        mt += logt[s];
        mv += logv[s];
      }
      mt /= logt.size();
      mv /= logv.size();
      double num = 0, den = 0;
      for (std::size_t s = 0; s < logt.size(); ++s) {
        num += (logt[s] - mt) * (logv[s] - mv);
        den += (logt[s] - mt) * (logt[s] - mt);
      }
      const double slope = den > 0 ? num / den : 0.0;
      if (slope > dec.N + 2.0)
        throw PreconditionError("profile " + std::to_string(k + 1) + " (derivative order " +
                                std::to_string(j) + ") grows faster than <t>^N on [" +
                                std::to_string(t_lo) + ", " + std::to_string(t_hi) +
                                "] (fitted growth " + std::to_string(slope) + ", N = " +
                                std::to_string(dec.N) + ")");
    }
  }
}

// ---------------------------------------------------------------------------
// Assumption (the structural hypothesis on U)

AssumptionReport check_assumption(const OperatorSpec& op, const ThetaDecomposition& dec,
                                  const std::vector<Vec>& grid, double h) {
  if (dec.empty()) throw PreconditionError("check_assumption: empty decomposition");
  const int n = op.dim();
  const int npts = static_cast<int>(grid.size());
  std::vector<double> res(npts, 0.0), dres(npts, 0.0);

  parallel_for(npts, [&](int p) {
    const Vec& x = grid[p];
    const Jet2 phij = op.f.phi.jet2(x, h);
    const Jet2 psij = op.f.psi.jet2(x, h);
    const Mat A = op.f.A.value(x, h);
    Vec lhs(n);
    for (int i = 0; i < n; ++i) lhs[i] = op.f.U[i].value(x, h);
    lhs += A * (phij.g - psij.g);

    const Jet2 phihat = phij + psij;
    Vec delta_sum = Vec::Zero(n);
    double dmax = 0.0;
    for (const ThetaTerm& term : dec.terms) {
      const Jet2 a = compose_profile(term.alpha, phihat, 0);
      auto th = term.theta.jet2(x, h);
      std::vector<std::vector<Jet2>> w(n, std::vector<Jet2>(n, Jet2::constant(n, 0.0)));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) w[i][j] = a * th[i][j];
      delta_sum += codiff_bivec(w);
      dmax = std::max(dmax, codiff_bivec(th).cwiseAbs().maxCoeff());
    }
    res[p] = (lhs - delta_sum).norm();
    dres[p] = dmax;
  });

  AssumptionReport rep;
  int worst = 0;
  for (int p = 0; p < npts; ++p) {
    if (res[p] > rep.max_residual) {
      rep.max_residual = res[p];
      worst = p;
    }
    rep.max_delta_theta = std::max(rep.max_delta_theta, dres[p]);
  }
  rep.worst_point = grid.empty() ? Vec() : grid[worst];
  return rep;
}

// ---------------------------------------------------------------------------
// Corrector quadrature

std::vector<std::vector<Jet2>> construct_B(const ThetaDecomposition& dec,
                                           const ScalarField& phihat, double h,
                                           const QuadratureConfig& qc, const Vec& x, int order,
                                           bool clamp_outside) {
  (void)order;  // jets to order 2 are always carried
  qc.validate();
  if (!(h > 0.0)) throw PreconditionError("construct_B: h must be positive");
  const int n = static_cast<int>(x.size());
  const Jet2 pj = phihat.jet2(x, h);

  double upper = kInf;
  if (std::isfinite(dec.m_inf)) {
    upper = (dec.m_inf - pj.v) / h;
    if (upper <= 0.0) {
      if (!clamp_outside)
        throw PreconditionError("construct_B: phihat(x) > m_inf (outside validity region)");
      std::vector<std::vector<Jet2>> zero(n, std::vector<Jet2>(n, Jet2::constant(n, 0.0)));
      return zero;
    }
  }

  std::vector<std::vector<Jet2>> entries(n, std::vector<Jet2>(n, Jet2::constant(n, 0.0)));
  for (const ThetaTerm& term : dec.terms) {
    const Expr& alpha = term.alpha;
    const std::function<double(double)> scalar_f = [&](double s) {
      return profile_derivs(alpha, h * s + pj.v)[1];
    };
    auto check_on = [&](const std::vector<double>& bounds) {
      const double a = integrate_exp_weighted_on<double>(bounds, scalar_f, qc.nodes_per_panel, 0.0);
      const double b =
          integrate_exp_weighted_on<double>(bounds, scalar_f, qc.nodes_per_panel + 10, 0.0);
      return std::abs(a - b) <= qc.tol * (1.0 + std::abs(b));
    };

    // fixed geometric panels first; adaptively refined ones when the profile
    // has features the h-rescaling compresses below the panel scale
    std::vector<double> bounds = exp_panels(std::min(upper, qc.max_s), qc);
    if (!check_on(bounds)) {
      const std::function<Vec(double)> probe = [&](double s) {
        const auto d = profile_derivs(alpha, h * s + pj.v);
        Vec v(3);
        v << d[1], h * d[2], h * h * d[3];
        return v;
      };
      bounds = adaptive_exp_panels(probe, upper, qc);
      if (!check_on(bounds))
        throw QuadratureError("exp-weighted quadrature did not converge to tolerance");
    }

    const Jet2 zero = Jet2::constant(n, 0.0);
    const std::function<Jet2(double)> jet_f = [&](double s) {
      Jet2 inner = pj;
      inner.v = pj.v + h * s;
      return compose_profile(alpha, inner, 1);
    };
    const Jet2 I = integrate_exp_weighted_on<Jet2>(bounds, jet_f, qc.nodes_per_panel, zero);

    auto th = term.theta.jet2(x, h);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const Jet2 e = I * th[i][j];
        entries[i][j] = entries[i][j] + e;
        entries[j][i] = -entries[i][j];
      }
  }
  return entries;
}

Bivector construct_B_value(const ThetaDecomposition& dec, const ScalarField& phihat, double h,
                           const QuadratureConfig& qc, const Vec& x) {
  auto entries = construct_B(dec, phihat, h, qc, x, 0);
  const int n = static_cast<int>(x.size());
  Mat m = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = entries[i][j].v;
  return Bivector(m, 1e-12);
}

ClassicalExpansion classical_expansion(const ThetaDecomposition& dec, const ScalarField& phihat,
                                       int K, const Vec& x) {
  if (K > 6) throw PreconditionError("classical_expansion: K > 6 not supported");
  if (K < 0) throw PreconditionError("classical_expansion: K must be >= 0");
  const int n = static_cast<int>(x.size());
  const double tau = phihat.value(x, 0.0);
  ClassicalExpansion out;
  out.exact = !std::isfinite(dec.m_inf);
  std::vector<Mat> coeffs(K + 1, Mat::Zero(n, n));
  for (const ThetaTerm& term : dec.terms) {
    const Mat th = term.theta.value(x, 0.0).mat();
    Expr d = term.alpha;
    for (int j = 0; j <= K; ++j) {
      d = diff_t(d);  // after j+1 applications this is alpha^{(j+1)}
      coeffs[j] += d.value_t(tau) * th;
    }
  }
  for (int j = 0; j <= K; ++j) out.coeffs.emplace_back(coeffs[j], 1e-12);
  return out;
}

// ---------------------------------------------------------------------------
// Structure assembly and the twisted complex

MatJet G_jet(const SusyStructure& S, const Vec& x, double h, int order) {
  return mat_jet(S.A, x, h, order) + S.Bmap(x, h, order);
}

Mat G_value(const SusyStructure& S, const Vec& x, double h) { return G_jet(S, x, h, 0).val; }

namespace {

MatJet entries_to_map_jet(const std::vector<std::vector<Jet2>>& entries, int order) {
  const int n = static_cast<int>(entries.size());
  MatJet m = MatJet::zero(n, order);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Jet2& e = entries[i][j];
      m.val(i, j) = -2.0 * e.v;
      if (order >= 1)
        for (int k = 0; k < n; ++k) m.d1[k](i, j) = -2.0 * e.g[k];
      if (order >= 2)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) m.d2[k][l](i, j) = -2.0 * e.h(k, l);
    }
  return m;
}

}  // namespace

SusyStructure make_quadrature_structure(const OperatorSpec& op, const ThetaDecomposition& dec,
                                        const QuadratureConfig& qc) {
  SusyStructure S;
  S.n = op.dim();
  S.phi = op.f.phi;
  S.psi = op.f.psi;
  S.A = op.f.A;
  S.phihat = add_fields(op.f.phi, op.f.psi);
  S.dec = dec;
  S.qc = qc;
  S.kind = "quadrature";
  ThetaDecomposition dec_copy = dec;
  ScalarField phihat = S.phihat;
  QuadratureConfig qcc = qc;
  S.Bmap = [dec_copy, phihat, qcc](const Vec& x, double h, int order) {
    return entries_to_map_jet(construct_B(dec_copy, phihat, h, qcc, x, order), order);
  };
  return S;
}

SusyStructure assemble_G(const OperatorSpec& op, const ThetaDecomposition& dec,
                         const QuadratureConfig& qc, const std::vector<Vec>& grid,
                         const std::vector<double>& h_list, double assumption_tol) {
  if (grid.empty() || h_list.empty()) throw PreconditionError("assemble_G: empty grid or h list");

  double t_lo = kInf, t_hi = -kInf;
  for (const Vec& x : grid) {
    const double t = op.f.phi.value(x, h_list.front()) + op.f.psi.value(x, h_list.front());
    t_lo = std::min(t_lo, t);
    t_hi = std::max(t_hi, t);
  }
  validate_dec(dec, t_lo, t_hi, grid, h_list.front());

  SusyStructure S = make_quadrature_structure(op, dec, qc);
  for (double h : h_list) {
    const AssumptionReport rep = check_assumption(op, dec, grid, h);
    S.assumption_residual = std::max(S.assumption_residual, rep.max_residual);
  }
  if (S.assumption_residual > assumption_tol)
    throw PreconditionError("assemble_G: assumption residual " +
                            std::to_string(S.assumption_residual) + " exceeds tolerance " +
                            std::to_string(assumption_tol));

  // verify (not assume) the zeroth-order identity, per-point
  const int npts = static_cast<int>(grid.size());
  for (double h : h_list) {
    std::vector<double> r(npts, 0.0);
    parallel_for(npts, [&](int p) { r[p] = v_identity_residual(op, S, grid[p], h); });
    for (double v : r) S.v_identity_residual = std::max(S.v_identity_residual, v);
  }
  return S;
}

SusyStructure supplied_structure(const OperatorSpec& op, const Mat& antisym_const) {
  const int n = op.dim();
  if (antisym_const.rows() != n || antisym_const.cols() != n)
    throw DimensionError("supplied_structure: matrix dimension mismatch");
  const double scale = 1.0 + antisym_const.cwiseAbs().maxCoeff();
  if ((antisym_const + antisym_const.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw Error("supplied_structure: antisymmetric part is not antisymmetric");
  Mat m = antisym_const;
  return supplied_structure(op, [m](const Vec& x, double, int order) {
    MatJet j = MatJet::zero(static_cast<int>(x.size()), order);
    j.val = m;
    return j;
  });
}

SusyStructure supplied_structure(const OperatorSpec& op,
                                 std::function<MatJet(const Vec&, double, int)> bmap) {
  SusyStructure S;
  S.n = op.dim();
  S.phi = op.f.phi;
  S.psi = op.f.psi;
  S.A = op.f.A;
  S.phihat = add_fields(op.f.phi, op.f.psi);
  S.Bmap = std::move(bmap);
  S.kind = "supplied";
  return S;
}

Vec twisted_d(const ScalarField& phi, double h, const ScalarField& u, const Vec& x) {
  const Jet2 uj = u.jet2(x, h);
  const Jet2 pj = phi.jet2(x, h);
  return h * uj.g + uj.v * pj.g;
}

std::vector<Jet2> twisted_d_jets(const ScalarField& phi, double h, const ScalarField& u,
                                 const Vec& x) {
  const int n = static_cast<int>(x.size());
  const Jet3 u3 = u.jet3(x, h);
  const Jet3 p3 = phi.jet3(x, h);
  const Jet2 u2 = truncate(u3);
  std::vector<Jet2> omega;
  omega.reserve(n);
  for (int i = 0; i < n; ++i) omega.push_back(h * partial(u3, i) + u2 * partial(p3, i));
  return omega;
}

double twisted_dstar_G(const SusyStructure& S, double h, const CovecJetField& omega,
                       const Vec& x) {
  const int n = S.n;
  const std::vector<Jet2> w = omega(x, h);
  const MatJet G = G_jet(S, x, h, 1);
  // (G^t w)_i = sum_j G(j,i) w_j ; div = sum_i d_i (G^t w)_i
  double div = 0.0;
  Vec gtw = Vec::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      gtw[i] += G.val(j, i) * w[j].v;
      div += G.d1[i](j, i) * w[j].v + G.val(j, i) * w[j].g[i];
    }
  const Jet2 psij = S.psi.jet2(x, h);
  return h * (-div) + psij.g.dot(gtw);
}

double factorization_residual(const OperatorSpec& op, const SusyStructure& S,
                              const ScalarField& u, const Vec& x, double h) {
  ScalarField phi = S.phi;
  ScalarField uu = u;
  CovecJetField omega = [phi, uu](const Vec& y, double hh) {
    return twisted_d_jets(phi, hh, uu, y);
  };
  return apply_P(op, u, x, h) - twisted_dstar_G(S, h, omega, x);
}

std::optional<double> pde_certificate_residual(const SusyStructure& S, const Vec& x, double h) {
  if (S.dec.empty()) return std::nullopt;
  const int n = S.n;
  const MatJet M = S.Bmap(x, h, 1);
  const Jet2 ph = S.phihat.jet2(x, h);
  Vec lhs(n);
  for (int i = 0; i < n; ++i) {
    double rowdiv = 0.0;
    for (int j = 0; j < n; ++j) rowdiv += M.d1[j](i, j);
    lhs[i] = h * rowdiv;
  }
  lhs -= M.val * ph.g;
  Vec rhs = Vec::Zero(n);
  for (const ThetaTerm& term : S.dec.terms) {
    const double ap = profile_derivs(term.alpha, ph.v)[1];
    rhs += ap * 2.0 * (term.theta.value(x, h).mat() * ph.g);
  }
  const double chi = S.chi.valid() ? S.chi.value(x, h) : 1.0;
  return (lhs - chi * rhs).norm();
}

double v_identity_residual(const OperatorSpec& op, const SusyStructure& S, const Vec& x,
                           double h) {
  const Jet3 phij = S.phi.jet3(x, h);
  const Jet2 psij = S.psi.jet2(x, h);
  const MatJet A = mat_jet(op.f.A, x, h, 1);
  const MatJet M = S.Bmap(x, h, 1);
  const double rhs = h * delta_mat_grad(A, phij) - h * delta_mat_grad(M, phij) +
                     psij.g.dot(A.val * phij.g) - psij.g.dot(M.val * phij.g);
  return std::abs(op.f.v.value(x, h) - rhs);
}

// ---------------------------------------------------------------------------
// Tensorization

namespace {

Jet2 embed_jet2(const Jet2& s, int off, int n) {
  Jet2 r = Jet2::constant(n, s.v);
  const int m = s.dim();
  r.g.segment(off, m) = s.g;
  r.h.block(off, off, m, m) = s.h;
  return r;
}

Jet3 embed_jet3(const Jet3& s, int off, int n) {
  Jet3 r = Jet3::constant(n, s.v);
  const int m = s.dim();
  r.g.segment(off, m) = s.g;
  r.h.block(off, off, m, m) = s.h;
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j)
      for (int k = j; k < m; ++k) r.t.set_sym(off + i, off + j, off + k, s.t(i, j, k));
  return r;
}

ScalarField embed_field(const ScalarField& f, int off, int sub_n, int n) {
  if (f.is_expr()) return ScalarField(shift_vars(f.expr(), off, n));
  return ScalarField(ScalarField::Jet3Fn([f, off, sub_n, n](const Vec& x, double h) {
    return embed_jet3(f.jet3(x.segment(off, sub_n), h), off, n);
  }));
}

MatJet embed_matjet(const MatJet& s, int off, int n, int order) {
  MatJet r = MatJet::zero(n, order);
  const int m = s.n;
  r.val.block(off, off, m, m) = s.val;
  if (order >= 1)
    for (int k = 0; k < m; ++k) r.d1[off + k].block(off, off, m, m) = s.d1[k];
  if (order >= 2)
    for (int k = 0; k < m; ++k)
      for (int l = 0; l < m; ++l) r.d2[off + k][off + l].block(off, off, m, m) = s.d2[k][l];
  return r;
}

SymMatField block_diag_sym(const SymMatField& a, const SymMatField& b) {
  const int n1 = a.dim(), n2 = b.dim(), n = n1 + n2;
  ExprBuilder eb(n);
  std::vector<ScalarField> upper;
  upper.reserve(n * (n + 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      if (j < n1)
        upper.push_back(embed_field(a.entry(i, j), 0, n1, n));
      else if (i >= n1)
        upper.push_back(embed_field(b.entry(i - n1, j - n1), n1, n2, n));
      else
        upper.push_back(ScalarField(eb.num(0.0)));
    }
  return SymMatField(n, std::move(upper));
}

}  // namespace

SusyStructure trivial_structure() {
  SusyStructure S;
  S.n = 0;
  ExprBuilder eb(0);
  S.phi = ScalarField(eb.num(0.0));
  S.psi = ScalarField(eb.num(0.0));
  S.phihat = ScalarField(eb.num(0.0));
  S.A = SymMatField::constant(Mat::Zero(0, 0));
  S.Bmap = [](const Vec& x, double, int order) {
    return MatJet::zero(static_cast<int>(x.size()), order);
  };
  S.kind = "supplied";
  return S;
}

SusyStructure tensorize(const SusyStructure& a, const SusyStructure& b) {
  if (a.n == 0) return b;
  if (b.n == 0) return a;
  const int n1 = a.n, n2 = b.n, n = n1 + n2;
  SusyStructure S;
  S.n = n;
  S.phi = add_fields(embed_field(a.phi, 0, n1, n), embed_field(b.phi, n1, n2, n));
  S.psi = add_fields(embed_field(a.psi, 0, n1, n), embed_field(b.psi, n1, n2, n));
  S.phihat = add_fields(embed_field(a.phihat, 0, n1, n), embed_field(b.phihat, n1, n2, n));
  S.A = block_diag_sym(a.A, b.A);
  auto bmap1 = a.Bmap;
  auto bmap2 = b.Bmap;
  S.Bmap = [bmap1, bmap2, n1, n2, n](const Vec& x, double h, int order) {
    MatJet m = embed_matjet(bmap1(x.head(n1), h, order), 0, n, order);
    MatJet m2 = embed_matjet(bmap2(x.tail(n2), h, order), n1, n, order);
    return m + m2;
  };
  S.qc = a.qc;
  S.kind = "tensor";
  return S;
}

OperatorSpec direct_sum(const OperatorSpec& a, const OperatorSpec& b) {
  const int n1 = a.dim(), n2 = b.dim(), n = n1 + n2;
  OperatorSpec op;
  op.name = a.name + "(+)" + b.name;
  op.f.n = n;
  op.f.A = block_diag_sym(a.f.A, b.f.A);
  op.f.U.resize(n);
  for (int k = 0; k < n1; ++k) op.f.U[k] = embed_field(a.f.U[k], 0, n1, n);
  for (int k = 0; k < n2; ++k) op.f.U[n1 + k] = embed_field(b.f.U[k], n1, n2, n);
  op.f.v = add_fields(embed_field(a.f.v, 0, n1, n), embed_field(b.f.v, n1, n2, n));
  op.f.phi = add_fields(embed_field(a.f.phi, 0, n1, n), embed_field(b.f.phi, n1, n2, n));
  op.f.psi = add_fields(embed_field(a.f.psi, 0, n1, n), embed_field(b.f.psi, n1, n2, n));
  return op;
}

// ---------------------------------------------------------------------------
// Cutoff perturbation (finite m_inf mechanism)

namespace {

// Flood fill of {phi < sigma} on a uniform lattice; nearest-node indicator.
struct FloodIndicator {
  Box box;
  int per_axis = 0;
  int n = 0;
  std::vector<char> inside;

  std::size_t flat(const std::vector<int>& idx) const {
    std::size_t f = 0;
    for (int i = 0; i < n; ++i) f = f * per_axis + idx[i];
    return f;
  }

  bool at(const Vec& x) const {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) {
      const double step = (box.hi[i] - box.lo[i]) / (per_axis - 1);
      const double r = (x[i] - box.lo[i]) / step;
      const int q = static_cast<int>(std::lround(r));
      if (q < 0 || q >= per_axis) return false;
      idx[i] = q;
    }
    return inside[flat(idx)] != 0;
  }
};

FloodIndicator flood_fill_component(const Expr& phi, double sigma, const Vec& seed,
                                    const Box& box, int per_axis) {
  const int n = phi.dim();
  FloodIndicator ind;
  ind.box = box;
  ind.per_axis = per_axis;
  ind.n = n;
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= per_axis;
  std::vector<char> sub(total, 0);
  ind.inside.assign(total, 0);

  std::vector<double> step(n);
  for (int i = 0; i < n; ++i) step[i] = (box.hi[i] - box.lo[i]) / (per_axis - 1);
  auto point_of = [&](const std::vector<int>& idx) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = box.lo[i] + step[i] * idx[i];
    return x;
  };

  {
    std::vector<int> idx(n, 0);
    for (std::size_t f = 0; f < total; ++f) {
      sub[f] = phi.value(point_of(idx), 0.0) < sigma ? 1 : 0;
      for (int i = n - 1; i >= 0; --i) {
        if (++idx[i] < per_axis) break;
        idx[i] = 0;
      }
    }
  }

  std::vector<int> seed_idx(n);
  for (int i = 0; i < n; ++i) {
    const int q = static_cast<int>(std::lround((seed[i] - box.lo[i]) / step[i]));
    if (q < 0 || q >= per_axis)
      throw PreconditionError("perturbation: seed outside the flood-fill box");
    seed_idx[i] = q;
  }
  if (!sub[ind.flat(seed_idx)])
    throw PreconditionError("perturbation: seed is not in the sublevel set {phi < sigma}");

  std::deque<std::vector<int>> queue;
  queue.push_back(seed_idx);
  ind.inside[ind.flat(seed_idx)] = 1;
  while (!queue.empty()) {
    std::vector<int> cur = queue.front();
    queue.pop_front();
    for (int i = 0; i < n; ++i)
      for (int d : {-1, 1}) {
        std::vector<int> nb = cur;
        nb[i] += d;
        if (nb[i] < 0 || nb[i] >= per_axis) continue;
        const std::size_t f = ind.flat(nb);
        if (!sub[f] || ind.inside[f]) continue;
        ind.inside[f] = 1;
        queue.push_back(nb);
      }
  }
  return ind;
}

std::vector<double> critical_values_newton(const Expr& phi, const Box& box, int seeds_per_axis) {
  const int n = phi.dim();
  std::vector<double> values;
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
      const Vec dx = lu.solve(j.g);
      x -= dx;
      if (x.norm() > 10.0 * (box.hi.norm() + box.lo.norm() + 1.0)) break;
    }
    if (!converged || !box.contains(x)) continue;
    values.push_back(phi.value(x, 0.0));
  }
  return values;
}

}  // namespace

PerturbationGallery build_perturbation_gallery(const Expr& phi, double sigma, double eps,
                                               const Expr& alpha, const BivecField& theta,
                                               const Vec& seed, const Box& box,
                                               int flood_grid_per_axis,
                                               const QuadratureConfig& qc) {
  const int n = phi.dim();
  if (!(eps > 0.0)) throw PreconditionError("perturbation: eps must be positive");
  if (theta.dim() != n) throw DimensionError("perturbation: theta dimension mismatch");

  // alpha must vanish identically above sigma - eps
  {
    double amax = 0.0, tail = 0.0;
    for (int s = 0; s <= 400; ++s) {
      const double t = sigma - eps - 2.0 + (2.0 + 4.0) * s / 400.0;  // [sigma-eps-2, sigma+4]
      const double v = std::abs(alpha.value_t(t));
      amax = std::max(amax, v);
      if (t >= sigma - eps) tail = std::max(tail, v);
    }
    if (tail > 1e-10 * (1.0 + amax))
      throw PreconditionError("perturbation: alpha support reaches beyond sigma - eps");
  }

  // no critical value of phi inside ]sigma - eps, sigma[
  for (double cv : critical_values_newton(phi, box, 9))
    if (cv > sigma - eps + 1e-9 && cv < sigma - 1e-9)
      throw PreconditionError("perturbation: critical value of phi inside ]sigma-eps, sigma[");

  FloodIndicator ind = flood_fill_component(phi, sigma, seed, box, flood_grid_per_axis);

  ExprBuilder eb(n);
  const Expr chi_expr = eb.bump(phi, sigma - eps, sigma - 0.5 * eps);
  const Expr phihat_expr = eb.mul(eb.num(2.0), phi);
  const Expr alpha_of_phi = subst_t(alpha, phi);  // alpha(phi(x)) = alphabar(phihat(x))

  // U_eps = delta((chi alpha.phi) theta); the indicator is locally constant so
  // it factors out of the symbolic derivative.
  std::vector<ScalarField> U(n);
  for (int i = 0; i < n; ++i) {
    Expr acc = eb.num(0.0);
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      bool neg = false;
      const ScalarField& e = theta.upper_entry(i, j, neg);
      if (!e.is_expr())
        throw PreconditionError("perturbation: theta entries must be expression-backed");
      Expr th_ij = neg ? eb.neg(e.expr()) : e.expr();
      Expr w_ij = eb.mul(chi_expr, eb.mul(alpha_of_phi, th_ij));
      acc = eb.add(acc, diff_x(w_ij, j));
    }
    const Expr e_i = eb.mul(eb.num(-2.0), acc);
    U[i] = ScalarField(ScalarField::Jet3Fn([ind, e_i](const Vec& x, double h) {
      if (!ind.at(x)) return Jet3::constant(static_cast<int>(x.size()), 0.0);
      return e_i.jet3(x, h);
    }));
  }

  PerturbationGallery out;
  out.op.name = "perturbation";
  out.op.f.n = n;
  out.op.f.A = SymMatField::zero(n);
  out.op.f.U = U;
  out.op.f.v = ScalarField(eb.num(0.0));
  out.op.f.phi = ScalarField(phi);
  out.op.f.psi = ScalarField(phi);
  out.component_cells = static_cast<int>(std::count(ind.inside.begin(), ind.inside.end(), 1));

  ThetaDecomposition dec;
  dec.N = 1;
  dec.m_inf = 2.0 * (sigma - eps);
  dec.terms.push_back({subst_t_scale(alpha, 0.5), theta});

  SusyStructure S;
  S.n = n;
  S.phi = out.op.f.phi;
  S.psi = out.op.f.psi;
  S.phihat = ScalarField(phihat_expr);
  S.A = out.op.f.A;
  S.dec = dec;
  S.qc = qc;
  S.kind = "perturbation";
  S.chi = ScalarField(ScalarField::Jet3Fn([ind, chi_expr](const Vec& x, double h) {
    if (!ind.at(x)) return Jet3::constant(static_cast<int>(x.size()), 0.0);
    return chi_expr.jet3(x, h);
  }));
  ScalarField phihat_field = S.phihat;
  ScalarField chi_field = S.chi;
  QuadratureConfig qcc = qc;
  S.Bmap = [dec, phihat_field, chi_field, qcc](const Vec& x, double h, int order) {
    const int nn = static_cast<int>(x.size());
    auto b0 = construct_B(dec, phihat_field, h, qcc, x, order, /*clamp_outside=*/true);
    const Jet2 chi = chi_field.jet2(x, h);
    std::vector<std::vector<Jet2>> entries(nn, std::vector<Jet2>(nn, Jet2::constant(nn, 0.0)));
    for (int i = 0; i < nn; ++i)
      for (int j = 0; j < nn; ++j) entries[i][j] = chi * b0[i][j];
    return entries_to_map_jet(entries, order);
  };
  out.S = S;
  return out;
}

}  // namespace susyfactor
