#include <susyfactor/analysis.hpp>
#include <susyfactor/gallery.hpp>

#include <Eigen/SVD>

#include <doctest.h>

#include <cmath>

using namespace susyfactor;

namespace {

Vec pt(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}

SusyStructure assembled(const std::string& gallery) {
  const SpecFile spec = gallery_spec(gallery);
  const auto grid = tensor_grid(spec.verify.box, 9);
  return assemble_G(spec.op, spec.dec, QuadratureConfig{}, grid, spec.h,
                    spec.verify.tol_assumption);
}

double smin(const Mat& m) {
  auto sv = m.jacobiSvd().singularValues();
  return sv(sv.size() - 1);
}

// random orthogonal matrix via QR of a Gaussian-ish sample
Mat random_orthogonal(Rng& rng, int n) {
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
  Eigen::HouseholderQR<Mat> qr(a);
  return qr.householderQ();
}

struct SplitInstance {
  Mat A0, B0;
  bool injective_truth;
};

// constructs A0 PSD with a prescribed kernel and B0 antisymmetric with
// B0(E) in F; the truth label is by construction, with conditioning chosen
// so the direct sigma_min(G) thresholding can never disagree
SplitInstance random_split_instance(Rng& rng, int n, bool make_injective) {
  SplitInstance inst;
  const Mat Q = random_orthogonal(rng, n);
  const int dim_e = 1 + static_cast<int>(rng.uniform(0.0, n - 1));
  const int dim_f = n - dim_e;
  Vec ev = Vec::Zero(n);
  for (int i = dim_e; i < n; ++i) ev[i] = rng.uniform(0.2, 2.0);  // C0 >= 0.2
  inst.A0 = Q * ev.asDiagonal() * Q.transpose();
  inst.A0 = 0.5 * (inst.A0 + inst.A0.transpose()).eval();

  // in the Q basis: E-E block zero, F<-E block M, F-F block antisymmetric S
  Mat M = Mat::Zero(dim_f, dim_e);
  const bool want_injective = make_injective && dim_f >= dim_e;
  if (want_injective) {
    // M with singular values in [0.3, 1]
    Mat g(dim_f, dim_e);
    for (int i = 0; i < dim_f; ++i)
      for (int j = 0; j < dim_e; ++j) g(i, j) = rng.uniform(-1.0, 1.0);
    Eigen::JacobiSVD<Mat> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec s(std::min(dim_f, dim_e));
    for (int i = 0; i < s.size(); ++i) s[i] = rng.uniform(0.3, 1.0);
    M = svd.matrixU().leftCols(s.size()) * s.asDiagonal() *
        svd.matrixV().leftCols(s.size()).transpose();
  } else if (dim_f > 0 && dim_e > 1) {
    // exactly rank-deficient: zero first column in a rotated basis
    Mat g(dim_f, dim_e);
    for (int i = 0; i < dim_f; ++i)
      for (int j = 0; j < dim_e; ++j) g(i, j) = rng.uniform(-1.0, 1.0);
    g.col(0).setZero();
    M = g;
  }  // else: M = 0 (not injective unless dim_e = 0)
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
  inst.injective_truth = want_injective && smin(M) > 1e-6;
  return inst;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("temperateness of a constant structure") {
  const SusyStructure S = assembled("alpha-linear");
  const auto grid = tensor_grid(Box{pt(-2, -2), pt(2, 2)}, 9);
  const TemperatenessFit fit =
      fit_temperateness(S, grid, {0.05, 0.1, 0.2, 0.4}, default_nu_set(2));
  CHECK(fit.m == doctest::Approx(0.0).epsilon(0.05));
  // ||G|| for [[1, 1/2], [-1/2, 1]] is sqrt(5)/2
  CHECK(fit.C.at("0") == doctest::Approx(std::sqrt(5.0) / 2.0));
  CHECK(fit.C.at("1") <= 1e-12);
  CHECK(fit.C.at("1,2") <= 1e-12);
  CHECK(fit.max_h_variation == doctest::Approx(1.0));
  CHECK(fit.pass);
}

TEST_CASE("temperateness growth exponent follows a polynomial A") {
  // A = (1 + |x|^2) Id with a vanishing corrector: ||G|| grows like rho_2
  ExprBuilder eb(2);
  const ParseContext x2{2, false, true};
  OperatorSpec op;
  op.f.n = 2;
  std::vector<std::vector<ScalarField>> a(2, std::vector<ScalarField>(2));
  a[0][0] = ScalarField(parse("1 + x1^2 + x2^2", x2));
  a[1][1] = ScalarField(parse("1 + x1^2 + x2^2", x2));
  a[0][1] = ScalarField(eb.num(0.0));
  a[1][0] = ScalarField(eb.num(0.0));
  Box box{pt(-3, -3), pt(3, 3)};
  op.f.A = SymMatField::from_full(2, a, box);
  op.f.U = {ScalarField(eb.num(0.0)), ScalarField(eb.num(0.0))};
  op.f.v = ScalarField(eb.num(0.0));
  op.f.phi = ScalarField(parse("(x1^2 + x2^2)/2", ParseContext{2, false, false}));
  op.f.psi = op.f.phi;
  const SusyStructure S = supplied_structure(op, Mat::Zero(2, 2));
  const TemperatenessFit fit = fit_temperateness(S, tensor_grid(box, 13), {0.1, 0.2},
                                                 default_nu_set(2));
  CHECK(fit.m == doctest::Approx(2.0).epsilon(0.15));
  CHECK(fit.pass);
}

TEST_CASE("gallery structures have h-uniform constants") {
  for (const char* name : {"witten", "kfp", "alpha-linear"}) {
    const SusyStructure S = assembled(name);
    const auto grid = tensor_grid(Box{pt(-2, -2), pt(2, 2)}, 7);
    const TemperatenessFit fit =
        fit_temperateness(S, grid, {0.05, 0.1, 0.2, 0.4}, default_nu_set(2));
    CHECK(fit.max_h_variation <= 1.5);
    CHECK(fit.pass);
  }
}

TEST_CASE("definite invertibility") {
  {
    const SusyStructure S = assembled("alpha-linear");  // A = Id
    const auto samples = tensor_grid(Box{pt(-2, -2), pt(2, 2)}, 5);
    const DefiniteReport rep = invertibility_definite(S, samples, 0.1);
    CHECK(rep.applicable);
    CHECK(rep.C == doctest::Approx(1.0));
    CHECK(rep.max_inv_norm <= 1.0 + 1e-12);
    CHECK(rep.pass);
  }
  {
    // A = diag(2, 2), B = 0: C = 2, ||G^-1|| = 1/2
    ExprBuilder eb(2);
    OperatorSpec op;
    op.f.n = 2;
    op.f.A = SymMatField::constant(2.0 * Mat::Identity(2, 2));
    op.f.U = {ScalarField(eb.num(0.0)), ScalarField(eb.num(0.0))};
    op.f.v = ScalarField(eb.num(0.0));
    op.f.phi = ScalarField(eb.num(0.0));
    op.f.psi = op.f.phi;
    const SusyStructure S = supplied_structure(op, Mat::Zero(2, 2));
    const DefiniteReport rep = invertibility_definite(S, {pt(0, 0), pt(1, 1)}, 0.1);
    CHECK(rep.C == doctest::Approx(2.0));
    CHECK(rep.max_inv_norm == doctest::Approx(0.5));
    CHECK(rep.pass);
  }
  {
    // KFP: A = diag(0, 1) is only semidefinite, the definite route defers
    const SusyStructure S = assembled("kfp");
    const DefiniteReport rep = invertibility_definite(S, {pt(0.3, -0.4)}, 0.1);
    CHECK_FALSE(rep.applicable);
  }
}

TEST_CASE("splitting analysis of the KFP block structure") {
  Mat A0(2, 2), B0(2, 2);
  A0 << 0.0, 0.0, 0.0, 1.0;
  B0 << 0.0, 0.5, -0.5, 0.0;
  const SplitReport rep = invertibility_split(A0, B0);
  CHECK(rep.applicable);
  CHECK(rep.injective);
  CHECK(rep.dim_check);
  CHECK(rep.dim_E == 1);
  CHECK(rep.dim_F == 1);
  CHECK(rep.C0 == doctest::Approx(1.0));
  CHECK(rep.sigma_min_BE == doctest::Approx(0.5));
  REQUIRE(rep.inv_norm_sharp.has_value());
  // the exact inverse of (1/2)[[0,1],[-1,2]] is [[4,-2],[2,0]]
  Mat ginv(2, 2);
  ginv << 4.0, -2.0, 2.0, 0.0;
  const Mat G = A0 + B0;
  CHECK((G.inverse() - ginv).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(*rep.inv_norm_sharp == doctest::Approx(1.0 / smin(G)));
  REQUIRE(rep.inv_norm_bound.has_value());
  CHECK(*rep.inv_norm_bound >= *rep.inv_norm_sharp);  // conservative chain
}

TEST_CASE("splitting negatives") {
  {
    // B = 0 with a nontrivial kernel: not injective
    Mat A0 = Mat::Zero(3, 3);
    A0(2, 2) = 1.0;
    const SplitReport rep = invertibility_split(A0, Mat::Zero(3, 3));
    CHECK_FALSE(rep.injective);
  }
  {
    // dim E = 2, dim F = 1: dimension count alone rules injectivity out
    Mat A0 = Mat::Zero(3, 3);
    A0(0, 0) = 1.0;
    Mat B0 = Mat::Zero(3, 3);
    B0(0, 1) = 1.0;
    B0(1, 0) = -1.0;
    const SplitReport rep = invertibility_split(A0, B0);
    CHECK_FALSE(rep.dim_check);
    CHECK_FALSE(rep.injective);
  }
  {
    // B(E) not contained in F: hypothesis violated
    Mat A0 = Mat::Zero(2, 2);
    A0(1, 1) = 0.0;  // E = R^2
    Mat B0(2, 2);
    B0 << 0.0, 1.0, -1.0, 0.0;
    CHECK_THROWS_AS(invertibility_split(A0, B0), PreconditionError);
  }
  {
    // A0 not PSD
    Mat A0 = -Mat::Identity(2, 2);
    CHECK_THROWS_AS(invertibility_split(A0, Mat::Zero(2, 2)), PreconditionError);
  }
}

TEST_CASE("brute force: split verdicts against direct sigma_min thresholds") {
  Rng rng(81);
  int disagreements = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform(0.0, 5.0));  // up to 6
    const bool want = rng.uniform() < 0.5;
    const SplitInstance inst = random_split_instance(rng, n, want);
    const SplitReport rep = invertibility_split(inst.A0, inst.B0);
    const bool direct = smin(inst.A0 + inst.B0) > 1e-10;
    if (rep.injective != direct) ++disagreements;
  }
  CHECK(disagreements == 0);
}

TEST_CASE("brute force: definite-case inverse bound") {
  Rng rng(82);
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
    const double C = ev.minCoeff();
    const double inv_norm = 1.0 / smin(A0 + B0);
    CHECK(inv_norm <= 1.0 / C + 1e-12);
  }
}

TEST_CASE("structure-level analysis routes to the right test") {
  {
    const SusyStructure S = assembled("kfp");
    const auto samples = tensor_grid(Box{pt(-1.5, -1.5), pt(1.5, 1.5)}, 4);
    const StructureInvertibility inv = invertibility_analysis(S, samples, 0.1);
    CHECK_FALSE(inv.definite.applicable);
    CHECK(inv.split.applicable);
    CHECK(inv.split.injective);
    CHECK(inv.kernel_consistent);
  }
  {
    const SusyStructure S = assembled("witten");
    const StructureInvertibility inv = invertibility_analysis(S, {pt(0.2, 0.3)}, 0.1);
    CHECK(inv.definite.applicable);
    CHECK(inv.definite.pass);
  }
}

}  // TEST_SUITE
