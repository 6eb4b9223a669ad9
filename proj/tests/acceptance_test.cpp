// Acceptance suite: the release gate for the library. Each numbered check
// prints one PASS/FAIL line with the measured quantity next to its bound.

#include <susyfactor/gallery.hpp>
#include <susyfactor/morse2d.hpp>
#include <susyfactor/multilinear.hpp>

#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace susyfactor;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %2d. %-38s %s\n", pass ? "PASS" : "FAIL", number, name.c_str(),
              detail.c_str());
  if (!pass) ++g_failures;
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

Vec pt(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}

const ParseContext kT{0, true, false};

SusyStructure assembled(const SpecFile& spec, int grid_pts = 9) {
  const auto grid = tensor_grid(spec.verify.box, grid_pts);
  return assemble_G(spec.op, spec.dec, QuadratureConfig{}, grid, spec.h,
                    spec.verify.tol_assumption);
}

double max_factorization(const OperatorSpec& op, const SusyStructure& S, const Box& box,
                         const std::vector<double>& h_list, int n_points, int n_funcs,
                         std::uint64_t seed, bool relative = false) {
  Rng rng(seed);
  std::vector<Vec> pts;
  for (int i = 0; i < n_points; ++i) pts.push_back(rng.point_in(box));
  double worst = 0.0;
  for (int f = 0; f < n_funcs; ++f) {
    const ScalarField u(random_test_function(op.dim(), box, rng));
    const double scale = relative ? 1.0 + c2_norm(u, pts, h_list.front()) : 1.0;
    for (double h : h_list) {
      std::vector<double> r(pts.size(), 0.0);
      parallel_for(static_cast<int>(pts.size()), [&](int p) {
        r[p] = std::abs(factorization_residual(op, S, u, pts[p], h)) / scale;
      });
      for (double v : r) worst = std::max(worst, v);
    }
  }
  return worst;
}

// --- criterion 6 support: random constant-coefficient splitting instances ---

Mat random_orthogonal(Rng& rng, int n) {
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
  Eigen::HouseholderQR<Mat> qr(a);
  return qr.householderQ();
}

double smin(const Mat& m) {
  auto sv = m.jacobiSvd().singularValues();
  return sv(sv.size() - 1);
}

struct SplitInstance {
  Mat A0, B0;
};

SplitInstance random_split_instance(Rng& rng, int n, bool make_injective) {
  SplitInstance inst;
  const Mat Q = random_orthogonal(rng, n);
  const int dim_e = 1 + static_cast<int>(rng.uniform(0.0, n - 1));
  const int dim_f = n - dim_e;
  Vec ev = Vec::Zero(n);
  for (int i = dim_e; i < n; ++i) ev[i] = rng.uniform(0.2, 2.0);
  inst.A0 = Q * ev.asDiagonal() * Q.transpose();
  inst.A0 = 0.5 * (inst.A0 + inst.A0.transpose()).eval();
  Mat M = Mat::Zero(dim_f, dim_e);
  const bool want = make_injective && dim_f >= dim_e;
  if (want) {
    Mat g(dim_f, dim_e);
    for (int i = 0; i < dim_f; ++i)
      for (int j = 0; j < dim_e; ++j) g(i, j) = rng.uniform(-1.0, 1.0);
    Eigen::JacobiSVD<Mat> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec s(std::min(dim_f, dim_e));
    for (int i = 0; i < s.size(); ++i) s[i] = rng.uniform(0.3, 1.0);
    M = svd.matrixU().leftCols(s.size()) * s.asDiagonal() *
        svd.matrixV().leftCols(s.size()).transpose();
  } else if (dim_f > 0 && dim_e > 1) {
    Mat g(dim_f, dim_e);
    for (int i = 0; i < dim_f; ++i)
      for (int j = 0; j < dim_e; ++j) g(i, j) = rng.uniform(-1.0, 1.0);
    g.col(0).setZero();
    M = g;
  }
  Mat S = Mat::Zero(dim_f, dim_f);
  for (int i = 0; i < dim_f; ++i)
    for (int j = i + 1; j < dim_f; ++j) {
      S(i, j) = rng.uniform(-1.0, 1.0);
      S(j, i) = -S(i, j);
    }
  Mat Bq = Mat::Zero(n, n);
  Bq.block(dim_e, 0, dim_f, dim_e) = M;
  Bq.block(0, dim_e, dim_e, dim_f) = -M.transpose();
  Bq.block(dim_e, dim_e, dim_f, dim_f) = S;
  inst.B0 = Q * Bq * Q.transpose();
  inst.B0 = 0.5 * (inst.B0 - inst.B0.transpose()).eval();
  return inst;
}

// --- the supplied 3D structure of criterion 9 ---

struct R3Pieces {
  OperatorSpec op3d;
  SusyStructure S3d;
};

R3Pieces build_r3_supplied() {
  const ParseContext x2h{2, false, true};
  const ParseContext x2{2, false, false};
  const ParseContext x1h{1, false, true};
  const ParseContext x1{1, false, false};
  ExprBuilder eb2(2), eb1(1);

  OperatorSpec op12;
  op12.name = "r3-plane";
  op12.f.n = 2;
  op12.f.A = SymMatField::zero(2);
  op12.f.U = {ScalarField(parse("-x2*cos(x1^2 + x2^2)", x2h)),
              ScalarField(parse("x1*cos(x1^2 + x2^2)", x2h))};
  op12.f.v = ScalarField(eb2.num(0.0));
  op12.f.phi = ScalarField(parse("x1^2 + x2^2", x2));
  op12.f.psi = op12.f.phi;

  ThetaDecomposition dec12;
  dec12.N = 1;
  dec12.terms.push_back(
      {parse("sin(t/2)/2", kT), BivecField::constant(wedge(Vec::Unit(2, 0), Vec::Unit(2, 1)))});

  Box box12;
  box12.lo = pt(-1.5, -1.5);
  box12.hi = pt(1.5, 1.5);
  const SusyStructure S12 = assemble_G(op12, dec12, QuadratureConfig{}, tensor_grid(box12, 9),
                                       {0.05, 0.1, 0.2, 0.4}, 1e-8);

  OperatorSpec op3;
  op3.name = "zero-line";
  op3.f.n = 1;
  op3.f.A = SymMatField::zero(1);
  op3.f.U = {ScalarField(eb1.num(0.0))};
  op3.f.v = ScalarField(eb1.num(0.0));
  op3.f.phi = ScalarField(parse("x1^2", x1));
  op3.f.psi = op3.f.phi;
  ThetaDecomposition dec3;
  dec3.N = 1;
  dec3.terms.push_back({parse("0", kT), BivecField::zero(1)});
  Box box3;
  box3.lo = Vec::Constant(1, -1.5);
  box3.hi = Vec::Constant(1, 1.5);
  const SusyStructure S3 = assemble_G(op3, dec3, QuadratureConfig{}, tensor_grid(box3, 9),
                                      {0.05, 0.1, 0.2, 0.4}, 1e-8);

  R3Pieces out;
  out.op3d = direct_sum(op12, op3);
  out.S3d = tensorize(S12, S3);
  return out;
}

const char* kMixedToml = R"TOML(name = "mixed-phases"
dimension = 2
h = [0.05, 0.1, 0.2, 0.4]

[phases]
phi = "(x1^2 + x2^2)/2"
psi = "x1^2/2 + x2^2/4"

[operator]
A = [["1", "0"], ["0", "1"]]
U = ["-3*x2", "4*x1 - x2/2"]
v = "x1^2 + x2^2/2 + x1*x2 - 2*h"

[theta]
N = 1
m_infinity = "inf"
alpha = ["t"]
theta_1 = [["0", "1"], ["-1", "0"]]

[verify]
box_min = [-2, -2]
box_max = [2, 2]
grid_points = 13
)TOML";

// forward stream generator for criterion 8
CovecField stream_field(const Expr& alpha) {
  ExprBuilder eb(2);
  return {ScalarField(eb.neg(diff_x(alpha, 1))), ScalarField(diff_x(alpha, 0))};
}

}  // namespace

int main() {
  std::printf("susyfactor acceptance suite\n");

  // 1. Witten gallery: factorization and eikonal residuals
  {
    const double t0 = now_seconds();
    const SpecFile spec = gallery_spec("witten");
    const SusyStructure S = assembled(spec);
    Rng rng(101);
    std::vector<Vec> pts;
    for (int i = 0; i < 100; ++i) pts.push_back(rng.point_in(spec.verify.box));
    double eik = 0.0;
    for (double h : spec.h)
      for (const Vec& x : pts) {
        const EikonalResiduals er = eikonal_residuals(spec.op, spec.op.f.phi, spec.op.f.psi, x, h);
        eik = std::max(eik, std::max(std::abs(er.r1), std::abs(er.r2)));
      }
    const double fact =
        max_factorization(spec.op, S, spec.verify.box, spec.h, 100, 4, 102);
    const double dt = now_seconds() - t0;
    report(1, "witten factorization + eikonal", fact <= 1e-8 && eik <= 1e-10 && dt <= 5.0,
           fmt("fact %.2e (<=1e-8), eik %.2e (<=1e-10), %.1fs (<=5s)", fact, eik, dt));
  }

  // 2. KFP gallery: exact constant structure and its inverse
  {
    const SpecFile spec = gallery_spec("kfp");
    const SusyStructure S = assembled(spec);
    Rng rng(103);
    bool constant = true, sym_exact = true;
    const Mat G0 = G_value(S, pt(0.37, -0.81), 0.1);
    for (int i = 0; i < 25; ++i) {
      const Vec x = rng.point_in(spec.verify.box);
      const Mat G = G_value(S, x, 0.05 + 0.3 * rng.uniform());
      if ((G - G0).cwiseAbs().maxCoeff() > 1e-12) constant = false;
      const Mat sym = 0.5 * (G + G.transpose());
      if (sym(0, 0) != 0.0 || sym(0, 1) != 0.0 || sym(1, 0) != 0.0 || sym(1, 1) != 1.0)
        sym_exact = false;
    }
    Mat ginv_expect(2, 2);
    ginv_expect << 4.0, -2.0, 2.0, 0.0;
    const double inv_err = (G0.inverse() - ginv_expect).cwiseAbs().maxCoeff();
    const double fact =
        max_factorization(spec.op, S, spec.verify.box, spec.h, 60, 4, 104);
    report(2, "kfp constant G and exact inverse",
           constant && sym_exact && inv_err <= 1e-12 && fact <= 1e-8,
           fmt("inv err %.2e (<=1e-12), fact %.2e (<=1e-8)", inv_err, fact));
  }

  // 3. PDE certificate for every gallery decomposition
  {
    double worst = 0.0;
    const std::vector<double> hs = {0.05, 0.1, 0.2, 0.5};
    auto sweep = [&](const SusyStructure& S, const Box& box, std::uint64_t seed) {
      Rng rng(seed);
      std::vector<Vec> pts;
      for (int i = 0; i < 200; ++i) pts.push_back(rng.point_in(box));
      for (double h : hs) {
        std::vector<double> r(pts.size(), 0.0);
        parallel_for(static_cast<int>(pts.size()), [&](int p) {
          const auto res = pde_certificate_residual(S, pts[p], h);
          r[p] = res ? *res : 0.0;
        });
        for (double v : r) worst = std::max(worst, v);
      }
    };
    for (const char* name : {"witten", "kfp", "alpha-linear"}) {
      const SpecFile spec = gallery_spec(name);
      sweep(assembled(spec), spec.verify.box, 105);
    }
    {
      // the r3 decomposition does not match its operator, but the corrector
      // still solves its own certificate equation
      const SpecFile r3 = gallery_spec("r3-example");
      sweep(make_quadrature_structure(r3.op, r3.dec, QuadratureConfig{}), r3.verify.box, 106);
    }
    {
      const PerturbationGallery g = build_two_wells_gallery();
      Box box;
      box.lo = pt(-2.2, -1.4);
      box.hi = pt(2.2, 1.4);
      sweep(g.S, box, 107);
    }
    report(3, "PDE certificate, all gallery decs", worst <= 1e-8,
           fmt("max residual %.2e (<=1e-8), h in {0.05,0.1,0.2,0.5}", worst));
  }

  // 4. Closed-form correctors and the classical expansion power law
  {
    const ParseContext x2h{2, false, true};
    const ScalarField phihat(parse("x1^2 + x2^2", x2h));
    Mat thm(2, 2);
    thm << 0.0, 0.7, -0.7, 0.0;
    const Bivector theta(thm, 0.0);
    QuadratureConfig qc;
    Rng rng(108);
    double lin_err = 0.0, quad_err = 0.0;
    for (double h : {0.05, 0.1, 0.2, 0.5}) {
      for (int trial = 0; trial < 10; ++trial) {
        const Vec x = pt(rng.uniform(-1.8, 1.8), rng.uniform(-1.8, 1.8));
        ThetaDecomposition lin;
        lin.terms.push_back({parse("t", kT), BivecField::constant(theta)});
        const Bivector bl = construct_B_value(lin, phihat, h, qc, x);
        lin_err = std::max(lin_err, (bl.mat() - theta.mat()).cwiseAbs().maxCoeff());
        ThetaDecomposition sq;
        sq.N = 2;
        sq.terms.push_back({parse("t^2/2", kT), BivecField::constant(theta)});
        const Bivector bq = construct_B_value(sq, phihat, h, qc, x);
        const double c = phihat.value(x, h) + h;
        quad_err = std::max(
            quad_err, (bq.mat() - (c * theta).mat()).cwiseAbs().maxCoeff() / (1.0 + c * 0.7));
      }
    }
    // slope fits for alpha = sin t at phihat = 1
    ThetaDecomposition dec;
    dec.terms.push_back({parse("sin(t)", kT), BivecField::constant(theta)});
    const Vec x0 = pt(0.8, 0.6);
    double min_margin = 1e9;
    for (int K = 0; K <= 2; ++K) {
      const ClassicalExpansion ce = classical_expansion(dec, phihat, K, x0);
      std::vector<double> lh, lr;
      for (double h = 0.02; h <= 0.4 + 1e-12; h *= 1.6) {
        const Bivector b = construct_B_value(dec, phihat, h, qc, x0);
        double approx = 0.0, hp = 1.0;
        for (int k = 0; k <= K; ++k) {
          approx += hp * ce.coeffs[k].mat()(0, 1);
          hp *= h;
        }
        lh.push_back(std::log(h));
        lr.push_back(std::log(std::abs(b.mat()(0, 1) - approx)));
      }
      double mh = 0, mr = 0;
      for (std::size_t i = 0; i < lh.size(); ++i) {
        mh += lh[i];
        mr += lr[i];
      }
      mh /= lh.size();
      mr /= lr.size();
      double num = 0, den = 0;
      for (std::size_t i = 0; i < lh.size(); ++i) {
        num += (lh[i] - mh) * (lr[i] - mr);
        den += (lh[i] - mh) * (lh[i] - mh);
      }
      min_margin = std::min(min_margin, num / den - (K + 0.9));
    }
    report(4, "closed-form correctors + h-power law",
           lin_err <= 1e-11 && quad_err <= 1e-11 && min_margin >= 0.0,
           fmt("B=theta err %.2e, B=(phihat+h)theta err %.2e, slope margin %+.2f", lin_err,
               quad_err, min_margin));
  }

  // 5. Eikonal implication on every spec passing the assumption and r1 checks
  {
    bool ok = true;
    double worst_ratio = 0.0;
    std::vector<SpecFile> specs;
    for (const char* name : {"witten", "kfp", "alpha-linear"}) specs.push_back(gallery_spec(name));
    specs.push_back(parse_spec(kMixedToml, "mixed-phases"));
    for (const SpecFile& spec : specs) {
      const auto grid = tensor_grid(spec.verify.box, 9);
      double r1 = 0, r2 = 0, assumption = 0;
      for (double h : spec.h) {
        assumption = std::max(assumption, check_assumption(spec.op, spec.dec, grid, h).max_residual);
        for (const Vec& x : grid) {
          const EikonalResiduals er =
              eikonal_residuals(spec.op, spec.op.f.phi, spec.op.f.psi, x, h);
          r1 = std::max(r1, std::abs(er.r1));
          r2 = std::max(r2, std::abs(er.r2));
        }
      }
      const double bound = 10.0 * (r1 + assumption) + 1e-9;
      worst_ratio = std::max(worst_ratio, r2 / bound);
      ok = ok && r2 <= bound;
    }
    report(5, "eikonal implication r1+assumption => r2", ok,
           fmt("max |r2|/bound = %.2e (<=1)", worst_ratio));
  }

  // 6. Invertibility brute force on 500 random constant-coefficient instances
  {
    Rng rng(109);
    int disagreements = 0;
    for (int trial = 0; trial < 500; ++trial) {
      const int n = 2 + static_cast<int>(rng.uniform(0.0, 5.0));
      const bool want = rng.uniform() < 0.5;
      const SplitInstance inst = random_split_instance(rng, n, want);
      const SplitReport rep = invertibility_split(inst.A0, inst.B0);
      const bool direct = smin(inst.A0 + inst.B0) > 1e-10;
      if (rep.injective != direct) ++disagreements;
    }
    int bound_violations = 0;
    for (int trial = 0; trial < 500; ++trial) {
      const int n = 2 + static_cast<int>(rng.uniform(0.0, 5.0));
      const Mat Q = random_orthogonal(rng, n);
      Vec ev(n);
      for (int i = 0; i < n; ++i) ev[i] = rng.uniform(0.1, 2.0);
      Mat A0 = Q * ev.asDiagonal() * Q.transpose();
      A0 = 0.5 * (A0 + A0.transpose()).eval();
      Mat B0 = Mat::Zero(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          B0(i, j) = rng.uniform(-2.0, 2.0);
          B0(j, i) = -B0(i, j);
        }
      if (1.0 / smin(A0 + B0) > 1.0 / ev.minCoeff() + 1e-12) ++bound_violations;
    }
    report(6, "invertibility brute force (500 + 500)",
           disagreements == 0 && bound_violations == 0,
           fmt("verdict disagreements %.0f, bound violations %.0f",
               static_cast<double>(disagreements), static_cast<double>(bound_violations)));
  }

  // 7. Temperateness h-uniformity of the gallery structures
  {
    double worst = 0.0;
    const std::vector<double> hs = {0.05, 0.1, 0.2, 0.4};
    for (const char* name : {"witten", "kfp", "alpha-linear"}) {
      const SpecFile spec = gallery_spec(name);
      const TemperatenessFit fit = fit_temperateness(
          assembled(spec), tensor_grid(spec.verify.box, 7), hs, default_nu_set(spec.dimension));
      worst = std::max(worst, fit.max_h_variation);
    }
    {
      const R3Pieces r3 = build_r3_supplied();
      Box box;
      box.lo = Vec::Constant(3, -1.5);
      box.hi = Vec::Constant(3, 1.5);
      const TemperatenessFit fit =
          fit_temperateness(r3.S3d, tensor_grid(box, 5), hs, default_nu_set(3));
      worst = std::max(worst, fit.max_h_variation);
    }
    {
      const SpecFile k = gallery_spec("kfp"), w = gallery_spec("witten");
      const SusyStructure S = tensorize(assembled(k), assembled(w));
      Box box;
      box.lo = Vec::Constant(4, -2.0);
      box.hi = Vec::Constant(4, 2.0);
      const TemperatenessFit fit =
          fit_temperateness(S, tensor_grid(box, 5), hs, default_nu_set(4));
      worst = std::max(worst, fit.max_h_variation);
    }
    report(7, "temperateness h-uniformity", worst <= 1.5,
           fmt("max C_nu variation %.3f (<=1.5)", worst));
  }

  // 8. Morse 2D round trip and the two-profile gluing failure
  {
    const double t0 = now_seconds();
    const ParseContext x2{2, false, false};
    ExprBuilder eb(2);
    const Expr dwell = parse("(x1^2 - 1)^2 + x2^2", x2);
    const ScalarField phi(dwell);
    Box box;
    box.lo = pt(-2.5, -2.5);
    box.hi = pt(2.5, 2.5);
    Grid2 g;
    g.box = box;
    g.nx = g.ny = 400;
    const CriticalSet cs = find_critical_points(phi, box);
    double knot_err = 1e9;
    bool round_ok = false;
    {
      const Expr alpha = eb.powi(dwell, 2);  // f(t) = t^2
      const CovecField U = stream_field(alpha);
      const StreamGrid s = recover_stream(U, g, 0.1, 1e-8);
      const ComponentChart chart = component_partition(phi, cs, g, 0.25);
      const double anchor = alpha.value(g.point(0, 0), 0.0);
      knot_err = 0.0;
      round_ok = chart.n_components == 3;
      for (int c = 0; c < chart.n_components; ++c) {
        const ProfileFit fit = fit_profile(s, chart, c, 1e-4);
        round_ok = round_ok && fit.pass;
        for (std::size_t k = 0; k < fit.knots.size(); ++k)
          knot_err = std::max(
              knot_err,
              std::abs(fit.f_values[k] - (fit.knots[k] * fit.knots[k] - anchor)) /
                  (1.0 + std::abs(fit.knots[k] * fit.knots[k])));
      }
    }
    const double dt = now_seconds() - t0;
    bool two_profile_ok = false;
    double mismatch = 0.0;
    {
      Grid2 g2;
      g2.box = box;
      g2.nx = g2.ny = 301;
      const Expr a_of_phi = subst_t(parse("t*bump(t, 0.1, 0.5)", kT), dwell);
      const Expr chi =
          parse("bump((x1^2 - 1)^2 + x2^2, 0.55, 0.775)*(1 - bump(x1, 0.1, 0.5))", x2);
      const Expr alpha = eb.mul(a_of_phi, eb.add(eb.num(1.0), chi));
      const CovecField U = stream_field(alpha);
      const StreamGrid s = recover_stream(U, g2, 0.1, 1e-6);
      const ComponentChart chart = component_partition(phi, cs, g2, 0.25);
      std::vector<ProfileFit> fits;
      bool fits_ok = chart.n_components == 3;
      for (int c = 0; c < chart.n_components; ++c) {
        fits.push_back(fit_profile(s, chart, c, 1e-4));
        fits_ok = fits_ok && fits.back().pass;
      }
      const GlueReport glue = glue_check(fits, s, chart, U, cs, 0.1, 1e-4);
      mismatch = glue.max_mismatch;
      two_profile_ok = fits_ok && !glue.global_pass;
    }
    report(8, "morse2d round trip + gluing failure",
           round_ok && knot_err <= 1e-4 && dt <= 30.0 && two_profile_ok,
           fmt("knot err %.2e (<=1e-4), %.1fs (<=30s), glue mismatch %.2f", knot_err, dt,
               mismatch));
  }

  // 9. The 3D example: no decomposition, yet a supplied structure factorizes
  {
    const SpecFile r3 = gallery_spec("r3-example");
    const auto grid = tensor_grid(r3.verify.box, 7);
    double naive = 0.0;
    for (const Vec& x : grid)
      naive = std::max(naive, check_assumption(r3.op, r3.dec, {x}, 0.1).max_residual);
    const R3Pieces sup = build_r3_supplied();
    Box box;
    box.lo = Vec::Constant(3, -1.5);
    box.hi = Vec::Constant(3, 1.5);
    const double fact =
        max_factorization(sup.op3d, sup.S3d, box, {0.05, 0.1, 0.2, 0.4}, 60, 3, 110);
    report(9, "3D example: assumption fails, G works", naive >= 0.1 && fact <= 1e-7,
           fmt("naive residual %.2f (>=0.1), supplied-G fact %.2e (<=1e-7)", naive, fact));
  }

  // 10. Tensorization on the 4D product box
  {
    const double t0 = now_seconds();
    const SpecFile k = gallery_spec("kfp"), w = gallery_spec("witten");
    const OperatorSpec op = direct_sum(k.op, w.op);
    const SusyStructure S = tensorize(assembled(k), assembled(w));
    Box box;
    box.lo = Vec::Constant(4, -2.0);
    box.hi = Vec::Constant(4, 2.0);
    const auto grid = tensor_grid(box, 9);
    Rng rng(111);
    double worst = 0.0;
    for (int f = 0; f < 2; ++f) {
      const ScalarField u(random_test_function(4, box, rng));
      for (double h : {0.1, 0.4}) {
        std::vector<double> r(grid.size(), 0.0);
        parallel_for(static_cast<int>(grid.size()), [&](int p) {
          r[p] = std::abs(factorization_residual(op, S, u, grid[p], h));
        });
        for (double v : r) worst = std::max(worst, v);
      }
    }
    const double dt = now_seconds() - t0;
    report(10, "kfp (+) witten on the product box", worst <= 1e-8 && dt <= 60.0,
           fmt("fact %.2e (<=1e-8), %.1fs (<=60s)", worst, dt));
  }

  // 11. Jet correctness: finite differences and delta . delta = 0
  {
    const ParseContext x2h{2, false, true};
    const char* corpus[] = {
        "x1^2 + x2^2",          "sin(x1)*cos(x2)",        "exp(-(x1^2 + x2^2))",
        "sqrt(1 + x1^2)",       "tanh(x1 - x2)",          "x1/(1 + x2^2)",
        "exp(sin(x1*x2))",      "log(2 + x1^2 + x2^2)",   "bump(x1, -0.5, 0.5)",
        "(x1 + x2)^4 - x1*x2",  "h*x1 + exp(-x2^2/h)",
    };
    Rng rng(112);
    double worst_fd = 0.0;
    for (const char* s : corpus) {
      const Expr e = parse(s, x2h);
      for (int trial = 0; trial < 10; ++trial) {
        const Vec x = pt(rng.uniform(-1.4, 1.4), rng.uniform(-1.4, 1.4));
        const double h = 0.35;
        const Jet2 j = e.jet2(x, h);
        const double step = 1e-4;
        for (int i = 0; i < 2; ++i) {
          Vec xp = x, xm = x;
          xp[i] += step;
          xm[i] -= step;
          const double fd = (e.value(xp, h) - e.value(xm, h)) / (2.0 * step);
          worst_fd = std::max(worst_fd, std::abs(j.g[i] - fd) / (1.0 + std::abs(fd)));
          const double fdd =
              (e.value(xp, h) - 2.0 * e.value(x, h) + e.value(xm, h)) / (step * step);
          worst_fd = std::max(worst_fd, std::abs(j.h(i, i) - fdd) / (1.0 + std::abs(fdd)));
        }
      }
    }
    // delta . delta on bivector fields
    ExprBuilder eb(2);
    std::vector<std::vector<ScalarField>> entries(2, std::vector<ScalarField>(2));
    entries[0][0] = ScalarField(eb.num(0.0));
    entries[1][1] = ScalarField(eb.num(0.0));
    const Expr e01 = parse("sin(x1*x2)*exp(-x2^2/3) + x1^3/7", x2h);
    entries[0][1] = ScalarField(e01);
    entries[1][0] = ScalarField(eb.neg(e01));
    Box box;
    box.lo = pt(-2, -2);
    box.hi = pt(2, 2);
    const BivecField w = BivecField::from_full(2, entries, box);
    double worst_dd = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
      const Vec x = pt(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
      const std::vector<Jet2> dW = codiff_bivec_jet(w.jet3(x, 0.1));
      double div = 0.0;
      for (int i = 0; i < 2; ++i) div += dW[i].g[i];
      worst_dd = std::max(worst_dd, std::abs(div));
    }
    report(11, "jet correctness (FD + delta.delta)", worst_fd <= 1e-6 && worst_dd <= 1e-9,
           fmt("FD rel err %.2e (<=1e-6), |delta delta| %.2e (<=1e-9)", worst_fd, worst_dd));
  }

  std::printf("%s: %d criterion(s) failed\n", g_failures == 0 ? "SUCCESS" : "FAILURE",
              g_failures);
  return g_failures == 0 ? 0 : 1;
}
