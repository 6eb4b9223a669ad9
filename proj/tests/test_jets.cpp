#include <susyfactor/jets.hpp>
#include <susyfactor/util.hpp>

#include <doctest.h>

#include <cmath>

using namespace susyfactor;

namespace {

// central differences on a scalar callable, for the independent oracle
template <class F>
Vec fd_gradient(const F& f, const Vec& x, double step) {
  Vec g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    g[i] = (f(xp) - f(xm)) / (2.0 * step);
  }
  return g;
}

template <class F>
Mat fd_hessian(const F& f, const Vec& x, double step) {
  const int n = static_cast<int>(x.size());
  Mat h(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec xpp = x, xpm = x, xmp = x, xmm = x;
      xpp[i] += step;
      xpp[j] += step;
      xpm[i] += step;
      xpm[j] -= step;
      xmp[i] -= step;
      xmp[j] += step;
      xmm[i] -= step;
      xmm[j] -= step;
      h(i, j) = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * step * step);
    }
  return h;
}

// a representative composite built from jet primitives only
template <class J>
J sample_function(const std::vector<J>& x) {
  // exp(sin(x1 x2)) + sqrt(1 + x1^2) * tanh(x2) - x1 / (2 + cos(x2))
  J a = jet_exp(jet_sin(x[0] * x[1]));
  J b = jet_sqrt(jet_pow_int(x[0], 2) + 1.0) * jet_tanh(x[1]);
  J c = x[0] / (jet_cos(x[1]) + 2.0);
  return a + b - c;
}

double sample_value(const Vec& x) {
  std::vector<double> v{x[0], x[1]};
  return sample_function(v);
}

}  // namespace

TEST_SUITE("jets") {

TEST_CASE("product of coordinate jets") {
  const Jet2 x1 = Jet2::variable(2, 0, 2.0);
  const Jet2 p = x1 * x1;
  CHECK(p.v == 4.0);
  CHECK(p.g[0] == 4.0);
  CHECK(p.g[1] == 0.0);
  CHECK(p.h(0, 0) == 2.0);
  CHECK(p.h(0, 1) == 0.0);
  CHECK(p.h(1, 1) == 0.0);
}

TEST_CASE("additive identity") {
  const Jet2 a = jet_sin(Jet2::variable(3, 1, 0.7));
  const Jet2 b = a + Jet2::constant(3, 0.0);
  CHECK(b.v == a.v);
  CHECK((b.g - a.g).cwiseAbs().maxCoeff() == 0.0);
  CHECK((b.h - a.h).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("division by a zero-valued jet throws") {
  const Jet2 a = Jet2::variable(2, 0, 1.0);
  const Jet2 z = Jet2::variable(2, 1, 0.0);
  CHECK_THROWS_AS(a / z, EvalError);
  const Jet3 a3 = Jet3::variable(2, 0, 1.0);
  const Jet3 z3 = Jet3::variable(2, 1, 0.0);
  CHECK_THROWS_AS(a3 / z3, EvalError);
}

TEST_CASE("composition at critical values") {
  const Jet2 e = jet_exp(Jet2::constant(2, 0.0));
  CHECK(e.v == 1.0);
  CHECK(e.g.cwiseAbs().maxCoeff() == 0.0);
  CHECK(e.h.cwiseAbs().maxCoeff() == 0.0);

  const Jet2 s = jet_sin(Jet2::variable(2, 0, M_PI / 2.0));
  CHECK(s.v == doctest::Approx(1.0));
  CHECK(std::abs(s.g[0]) < 1e-15);
  CHECK(s.h(0, 0) == doctest::Approx(-1.0));
  CHECK(s.h(1, 1) == 0.0);
}

TEST_CASE("domain violations") {
  CHECK_THROWS_AS(jet_log(Jet2::constant(2, -1.0)), EvalError);
  CHECK_THROWS_AS(jet_sqrt(Jet2::constant(2, -0.5)), EvalError);
  CHECK_THROWS_AS(jet_pow_real(Jet3::constant(2, -2.0), 0.5), EvalError);
  CHECK_THROWS_AS(jet_pow_int(Jet2::constant(2, 0.0), -1), EvalError);
}

TEST_CASE("finite-difference agreement for a composite") {
  Rng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    Vec x(2);
    x << rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2);
    std::vector<Jet2> seeds{Jet2::variable(2, 0, x[0]), Jet2::variable(2, 1, x[1])};
    const Jet2 j = sample_function(seeds);
    const Vec g = fd_gradient(sample_value, x, 1e-5);
    const Mat h = fd_hessian(sample_value, x, 1e-4);
    CHECK((j.g - g).cwiseAbs().maxCoeff() <= 1e-6 * (1.0 + g.cwiseAbs().maxCoeff()));
    CHECK((j.h - h).cwiseAbs().maxCoeff() <= 1e-5 * (1.0 + h.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("hessians and third tensors stay exactly symmetric") {
  Rng rng(22);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Jet3> seeds;
    for (int i = 0; i < 3; ++i) seeds.push_back(Jet3::variable(3, i, rng.uniform(-1.0, 1.0)));
    Jet3 j = jet_exp(jet_sin(seeds[0] * seeds[1])) * jet_tanh(seeds[2]) +
             seeds[1] / (jet_pow_int(seeds[2], 2) + 1.5);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        CHECK(j.h(a, b) == j.h(b, a));
        for (int c = 0; c < 3; ++c) {
          CHECK(j.t(a, b, c) == j.t(b, a, c));
          CHECK(j.t(a, b, c) == j.t(c, b, a));
          CHECK(j.t(a, b, c) == j.t(a, c, b));
        }
      }
  }
}

TEST_CASE("partial extraction from an order-3 jet") {
  // f = x1^2 x2: d1 f = 2 x1 x2 with grad (2 x2, 2 x1), hess [[0,2],[2,0]]
  const Jet3 x1 = Jet3::variable(2, 0, 1.5);
  const Jet3 x2 = Jet3::variable(2, 1, -0.5);
  const Jet3 f = x1 * x1 * x2;
  const Jet2 d1 = partial(f, 0);
  CHECK(d1.v == doctest::Approx(2.0 * 1.5 * -0.5));
  CHECK(d1.g[0] == doctest::Approx(2.0 * -0.5));
  CHECK(d1.g[1] == doctest::Approx(2.0 * 1.5));
  CHECK(d1.h(0, 0) == doctest::Approx(0.0));
  CHECK(d1.h(0, 1) == doctest::Approx(2.0));
  CHECK(d1.h(1, 1) == doctest::Approx(0.0));
}

TEST_CASE("functional equation exp(a+b) = exp(a) exp(b)") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const Jet3 a = jet_sin(Jet3::variable(2, 0, rng.uniform(-1.0, 1.0)));
    const Jet3 b = jet_cos(Jet3::variable(2, 1, rng.uniform(-1.0, 1.0)));
    const Jet3 lhs = jet_exp(a + b);
    const Jet3 rhs = jet_exp(a) * jet_exp(b);
    CHECK(lhs.v == doctest::Approx(rhs.v));
    CHECK((lhs.g - rhs.g).cwiseAbs().maxCoeff() <= 1e-13 * (1.0 + rhs.g.cwiseAbs().maxCoeff()));
    CHECK((lhs.h - rhs.h).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + rhs.h.cwiseAbs().maxCoeff()));
  }
}

}  // TEST_SUITE
