#include <susyfactor/operator.hpp>

#include <cmath>

namespace susyfactor {

double codiff_vec(const CovecField& V, const Vec& x, double h) {
  double acc = 0.0;
  for (std::size_t i = 0; i < V.size(); ++i) acc += V[i].jet2(x, h).g[static_cast<int>(i)];
  return -acc;
}

double codiff_vec(const std::vector<Jet2>& V) {
  double acc = 0.0;
  for (std::size_t i = 0; i < V.size(); ++i) acc += V[i].g[static_cast<int>(i)];
  return -acc;
}

Jet2 codiff_vec_jet(const std::vector<Jet3>& V) {
  const int n = static_cast<int>(V.size());
  Jet2 acc = Jet2::constant(n, 0.0);
  for (int i = 0; i < n; ++i) acc = acc + partial(V[i], i);
  return -acc;
}

Vec codiff_bivec(const BivecField& W, const Vec& x, double h) {
  return codiff_bivec(W.jet2(x, h));
}

Vec codiff_bivec(const std::vector<std::vector<Jet2>>& W) {
  const int n = static_cast<int>(W.size());
  Vec r = Vec::Zero(n);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += W[i][j].g[j];
    r[i] = -2.0 * acc;
  }
  return r;
}

std::vector<Jet2> codiff_bivec_jet(const std::vector<std::vector<Jet3>>& W) {
  const int n = static_cast<int>(W.size());
  std::vector<Jet2> r;
  r.reserve(n);
  for (int i = 0; i < n; ++i) {
    Jet2 acc = Jet2::constant(n, 0.0);
    for (int j = 0; j < n; ++j) acc = acc + partial(W[i][j], j);
    r.push_back(-2.0 * acc);
  }
  return r;
}

double apply_P(const OperatorSpec& op, const ScalarField& u, const Vec& x, double h) {
  const int n = op.dim();
  const Jet2 uj = u.jet2(x, h);
  double second = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Jet2 a = op.f.A.entry(i, j).jet2(x, h);
      second += a.g[i] * uj.g[j] + a.v * uj.h(i, j);
    }
  double first = 0.0;
  for (int k = 0; k < n; ++k) first += op.f.U[k].value(x, h) * uj.g[k];
  return -h * h * second + h * first + op.f.v.value(x, h) * uj.v;
}

OperatorSpec adjoint(const OperatorSpec& op) {
  const int n = op.dim();
  for (const auto& uk : op.f.U)
    if (!uk.is_expr())
      throw Error("adjoint: first-order coefficients must be expression-backed");
  ExprBuilder eb(n);
  // delta(U) = -sum_k d_k U_k, synthesized symbolically
  Expr div_u = eb.num(0.0);
  for (int k = 0; k < n; ++k) div_u = eb.add(div_u, diff_x(op.f.U[k].expr(), k));
  Expr delta_u = eb.neg(div_u);

  OperatorSpec adj = op;
  adj.name = op.name.empty() ? "adjoint" : op.name + "*";
  for (int k = 0; k < n; ++k) adj.f.U[k] = ScalarField(eb.neg(op.f.U[k].expr()));
  if (op.f.v.is_expr()) {
    adj.f.v = ScalarField(eb.add(op.f.v.expr(), eb.mul(eb.h(), delta_u)));
  } else {
    ScalarField v_old = op.f.v;
    Expr extra = eb.mul(eb.h(), delta_u);
    adj.f.v = ScalarField(ScalarField::Jet3Fn([v_old, extra](const Vec& x, double h) {
      return v_old.jet3(x, h) + extra.jet3(x, h);
    }));
  }
  std::swap(adj.f.phi, adj.f.psi);
  return adj;
}

EikonalResiduals eikonal_residuals(const OperatorSpec& op, const ScalarField& phi,
                                   const ScalarField& psi, const Vec& x, double h) {
  const int n = op.dim();
  const Jet3 phij = phi.jet3(x, h);
  const Jet3 psij = psi.jet3(x, h);
  const MatJet A = mat_jet(op.f.A, x, h, 1);
  Vec Uv(n);
  std::vector<Jet2> Uj(n, Jet2::constant(n, 0.0));
  for (int k = 0; k < n; ++k) {
    Uj[k] = op.f.U[k].jet2(x, h);
    Uv[k] = Uj[k].v;
  }
  const double v = op.f.v.value(x, h);

  auto delta_A_grad = [&](const Jet3& w) {
    // delta(A dw) = -sum_ij [(d_i a_ij)(d_j w) + a_ij d_i d_j w]
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) acc += A.d1[i](i, j) * w.g[j] + A.val(i, j) * w.h(i, j);
    return -acc;
  };

  EikonalResiduals r;
  r.x = x;
  r.h = h;
  const Vec Agphi = A.val * phij.g;
  const Vec Agpsi = A.val * psij.g;
  r.r1 = phij.g.dot(Agphi) + Uv.dot(phij.g) - v + h * delta_A_grad(phij);
  double div_u = 0.0;
  for (int k = 0; k < n; ++k) div_u += Uj[k].g[k];
  r.r2 = psij.g.dot(Agpsi) - Uv.dot(psij.g) - v - h * (-div_u) + h * delta_A_grad(psij);
  return r;
}

std::pair<double, double> symbol_split(const OperatorSpec& op, const Vec& x, const Vec& xi,
                                       double h) {
  const int n = op.dim();
  if (xi.size() != n) throw DimensionError("symbol_split: xi dimension mismatch");
  const Mat A = op.f.A.value(x, h);
  const double v = op.f.v.value(x, h);
  double div_u = 0.0, u_dot_xi = 0.0;
  for (int k = 0; k < n; ++k) {
    const Jet2 uk = op.f.U[k].jet2(x, h);
    div_u += uk.g[k];
    u_dot_xi += uk.v * xi[k];
  }
  double lap_a = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) lap_a += op.f.A.entry(i, j).jet2(x, h).h(i, j);
  const double p_even = xi.dot(A * xi) + v + 0.5 * h * div_u + 0.25 * h * h * lap_a;
  const double p_odd_imag = -u_dot_xi;
  return {p_even, p_odd_imag};
}

}  // namespace susyfactor
