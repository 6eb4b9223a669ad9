#include <susyfactor/multilinear.hpp>
#include <susyfactor/util.hpp>

#include <doctest.h>

using namespace susyfactor;

namespace {

Vec basis(int n, int i) {
  Vec e = Vec::Zero(n);
  e[i] = 1.0;
  return e;
}

Vec random_vec(Rng& rng, int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(-2.0, 2.0);
  return v;
}

}  // namespace

TEST_SUITE("multilinear") {

TEST_CASE("wedge basis case in R^2") {
  const Bivector w = wedge(basis(2, 0), basis(2, 1));
  CHECK(w.mat()(0, 1) == 0.5);
  CHECK(w.mat()(1, 0) == -0.5);
  CHECK(w.mat()(0, 0) == 0.0);
  CHECK(w.mat()(1, 1) == 0.0);
}

TEST_CASE("wedge of a vector with itself vanishes") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec u = random_vec(rng, 4);
    CHECK(wedge(u, u).mat().cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("wedge antisymmetry and exact matrix antisymmetry") {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform(0.0, 5.0));
    const Vec u = random_vec(rng, n), v = random_vec(rng, n);
    const Bivector w = wedge(u, v);
    const Bivector wr = wedge(v, u);
    CHECK((w.mat() + wr.mat()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((w.mat() + w.mat().transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("dimension mismatches are rejected") {
  CHECK_THROWS_AS(wedge(Vec::Zero(2), Vec::Zero(3)), DimensionError);
  CHECK_THROWS_AS(contract(Vec::Zero(3), Bivector::zero(2)), DimensionError);
}

TEST_CASE("contraction identity contract(xi, u^v) = (xi.v)u - (xi.u)v") {
  Rng rng(13);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform(0.0, 4.0));
    const Vec u = random_vec(rng, n), v = random_vec(rng, n), xi = random_vec(rng, n);
    const Vec got = contract(xi, wedge(u, v));
    const Vec want = xi.dot(v) * u - xi.dot(u) * v;
    const double scale = 1.0 + want.cwiseAbs().maxCoeff();
    CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-13 * scale);
  }
}

TEST_CASE("contraction of dx1 with e1^e2 (sign pinned by the identity)") {
  // contract(dx1, e1^e2) = (dx1.e2) e1 - (dx1.e1) e2 = -e2
  const Vec got = contract(basis(2, 0), wedge(basis(2, 0), basis(2, 1)));
  CHECK(got[0] == 0.0);
  CHECK(got[1] == -1.0);
}

TEST_CASE("contraction with the zero covector vanishes") {
  Rng rng(14);
  const Vec u = random_vec(rng, 3), v = random_vec(rng, 3);
  CHECK(contract(Vec::Zero(3), wedge(u, v)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("orthogonality <xi -| W, xi> = 0") {
  Rng rng(15);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform(0.0, 5.0));
    const Vec u = random_vec(rng, n), v = random_vec(rng, n), xi = random_vec(rng, n);
    const Bivector w = wedge(u, v);
    const double scale =
        (1.0 + xi.norm()) * (1.0 + w.mat().cwiseAbs().maxCoeff()) * (1.0 + xi.norm());
    CHECK(std::abs(contract(xi, w).dot(xi)) <= 1e-13 * scale);
  }
}

TEST_CASE("determinant pairing") {
  CHECK(pairing_det({basis(2, 0)}, {basis(2, 0)}) == 1.0);
  CHECK(pairing_det({basis(2, 0), basis(2, 1)}, {basis(2, 0), basis(2, 1)}) == 1.0);
  CHECK(pairing_det({basis(2, 0), basis(2, 1)}, {basis(2, 1), basis(2, 0)}) == -1.0);
  CHECK_THROWS_AS(pairing_det({basis(2, 0), basis(2, 0), basis(2, 1)},
                              {basis(2, 0), basis(2, 0), basis(2, 1)}),
                  DimensionError);
  CHECK_THROWS_AS(pairing_det({basis(2, 0)}, {}), DimensionError);
}

TEST_CASE("2D Hodge star") {
  Vec dx1 = basis(2, 0), dx2 = basis(2, 1);
  CHECK((hodge_star_2d(dx1) - dx2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(hodge_star_2d(Vec::Zero(2)).cwiseAbs().maxCoeff() == 0.0);
  Rng rng(16);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec u = random_vec(rng, 2);
    CHECK((hodge_star_2d(hodge_star_2d(u)) + u).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK_THROWS_AS(hodge_star_2d(Vec::Zero(3)), DimensionError);
}

TEST_CASE("wrappers reject non-(anti)symmetric input") {
  Mat m(2, 2);
  m << 0.0, 1.0, -0.5, 0.0;
  CHECK_THROWS_AS(Bivector{m}, Error);
  Mat s(2, 2);
  s << 1.0, 2.0, 2.5, 1.0;
  CHECK_THROWS_AS(SymMap{s}, Error);
}

}  // TEST_SUITE
