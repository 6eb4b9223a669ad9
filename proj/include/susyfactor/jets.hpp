// Forward-mode jets: value + gradient + Hessian (Jet2) and additionally the
// symmetric third-derivative tensor (Jet3). These carry every derivative the
// operator layer needs; h is always a plain parameter, never a jet variable.
//
// Hessians and third tensors are kept *exactly* symmetric: entries are either
// produced by formulas that are entrywise symmetric in IEEE arithmetic, or
// computed once per canonical index set and mirrored.

#pragma once

#include <susyfactor/types.hpp>

#include <array>
#include <vector>

namespace susyfactor {

// Dense symmetric 3-tensor, flat storage, canonical-entry mirroring.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int n) : n_(n), a_(static_cast<std::size_t>(n) * n * n, 0.0) {}

  int dim() const { return n_; }
  double operator()(int i, int j, int k) const {
    return a_[(static_cast<std::size_t>(i) * n_ + j) * n_ + k];
  }

  // Assigns value to all permutations of (i,j,k); callers pass i<=j<=k.
  void set_sym(int i, int j, int k, double v);

  Tensor3& operator+=(const Tensor3& o);
  Tensor3& operator*=(double s);
  double max_abs() const;

 private:
  int n_ = 0;
  std::vector<double> a_;
};

struct Jet2 {
  double v = 0.0;
  Vec g;
  Mat h;

  Jet2() = default;
  Jet2(double value, Vec grad, Mat hess) : v(value), g(std::move(grad)), h(std::move(hess)) {}

  static Jet2 constant(int n, double c) { return Jet2(c, Vec::Zero(n), Mat::Zero(n, n)); }
  static Jet2 variable(int n, int i, double x) {
    Jet2 j = constant(n, x);
    j.g[i] = 1.0;
    return j;
  }
  int dim() const { return static_cast<int>(g.size()); }
};

struct Jet3 {
  double v = 0.0;
  Vec g;
  Mat h;
  Tensor3 t;

  Jet3() = default;

  static Jet3 constant(int n, double c) {
    Jet3 j;
    j.v = c;
    j.g = Vec::Zero(n);
    j.h = Mat::Zero(n, n);
    j.t = Tensor3(n);
    return j;
  }
  static Jet3 variable(int n, int i, double x) {
    Jet3 j = constant(n, x);
    j.g[i] = 1.0;
    return j;
  }
  int dim() const { return static_cast<int>(g.size()); }
};

// Arithmetic.
Jet2 operator+(const Jet2& a, const Jet2& b);
Jet2 operator-(const Jet2& a, const Jet2& b);
Jet2 operator-(const Jet2& a);
Jet2 operator*(const Jet2& a, const Jet2& b);
Jet2 operator/(const Jet2& a, const Jet2& b);
Jet2 operator*(double s, const Jet2& a);
Jet2 operator+(const Jet2& a, double s);

Jet3 operator+(const Jet3& a, const Jet3& b);
Jet3 operator-(const Jet3& a, const Jet3& b);
Jet3 operator-(const Jet3& a);
Jet3 operator*(const Jet3& a, const Jet3& b);
Jet3 operator/(const Jet3& a, const Jet3& b);
Jet3 operator*(double s, const Jet3& a);
Jet3 operator+(const Jet3& a, double s);

// Univariate composition (Faa di Bruno): d = {f(g.v), f'(g.v), ...}.
Jet2 compose(const std::array<double, 3>& d, const Jet2& g);
Jet3 compose(const std::array<double, 4>& d, const Jet3& g);

// Smooth primitives. Domain violations throw EvalError.
Jet2 jet_exp(const Jet2&);
Jet2 jet_sin(const Jet2&);
Jet2 jet_cos(const Jet2&);
Jet2 jet_sqrt(const Jet2&);
Jet2 jet_log(const Jet2&);
Jet2 jet_tanh(const Jet2&);
Jet2 jet_pow_int(const Jet2&, long p);
Jet2 jet_pow_real(const Jet2&, double p);

Jet3 jet_exp(const Jet3&);
Jet3 jet_sin(const Jet3&);
Jet3 jet_cos(const Jet3&);
Jet3 jet_sqrt(const Jet3&);
Jet3 jet_log(const Jet3&);
Jet3 jet_tanh(const Jet3&);
Jet3 jet_pow_int(const Jet3&, long p);
Jet3 jet_pow_real(const Jet3&, double p);

// double versions with the same domain checks, so templated evaluation can
// treat double as the order-0 jet.
double jet_exp(double);
double jet_sin(double);
double jet_cos(double);
double jet_sqrt(double);
double jet_log(double);
double jet_tanh(double);
double jet_pow_int(double, long p);
double jet_pow_real(double, double p);

/// Drop the third-order block.
Jet2 truncate(const Jet3& j);

/// Jet of the partial derivative: (d/dx_i f) as a Jet2, extracted from a Jet3.
Jet2 partial(const Jet3& j, int i);

}  // namespace susyfactor
