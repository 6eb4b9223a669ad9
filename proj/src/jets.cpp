#include <susyfactor/jets.hpp>

#include <cmath>

namespace susyfactor {

void Tensor3::set_sym(int i, int j, int k, double v) {
  const int idx[3] = {i, j, k};
  int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (auto& p : perms) {
    a_[(static_cast<std::size_t>(idx[p[0]]) * n_ + idx[p[1]]) * n_ + idx[p[2]]] = v;
  }
}

Tensor3& Tensor3::operator+=(const Tensor3& o) {
  for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
  return *this;
}

Tensor3& Tensor3::operator*=(double s) {
  for (auto& x : a_) x *= s;
  return *this;
}

double Tensor3::max_abs() const {
  double m = 0.0;
  for (double x : a_) m = std::max(m, std::abs(x));
  return m;
}

namespace {

void check_dim(int a, int b, const char* op) {
  if (a != b) throw DimensionError(std::string("jet ") + op + ": dimension mismatch");
}

}  // namespace

// ---------------------------------------------------------------------------
// Jet2 arithmetic. Sums/outer-product pairs below are entrywise symmetric in
// IEEE arithmetic, so Hessians stay exactly symmetric.

Jet2 operator+(const Jet2& a, const Jet2& b) {
  check_dim(a.dim(), b.dim(), "+");
  return Jet2(a.v + b.v, a.g + b.g, a.h + b.h);
}

Jet2 operator-(const Jet2& a, const Jet2& b) {
  check_dim(a.dim(), b.dim(), "-");
  return Jet2(a.v - b.v, a.g - b.g, a.h - b.h);
}

Jet2 operator-(const Jet2& a) { return Jet2(-a.v, -a.g, -a.h); }

Jet2 operator*(const Jet2& a, const Jet2& b) {
  check_dim(a.dim(), b.dim(), "*");
  const int n = a.dim();
  Jet2 r;
  r.v = a.v * b.v;
  r.g = a.v * b.g + b.v * a.g;
  r.h = Mat(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double x = a.v * b.h(i, j) + b.v * a.h(i, j) + a.g[i] * b.g[j] + a.g[j] * b.g[i];
      r.h(i, j) = x;
      r.h(j, i) = x;
    }
  return r;
}

Jet2 operator/(const Jet2& a, const Jet2& b) {
  if (b.v == 0.0) throw EvalError("jet division by zero");
  const double iv = 1.0 / b.v;
  Jet2 inv = compose({iv, -iv * iv, 2.0 * iv * iv * iv}, b);
  return a * inv;
}

Jet2 operator*(double s, const Jet2& a) { return Jet2(s * a.v, s * a.g, s * a.h); }

Jet2 operator+(const Jet2& a, double s) { return Jet2(a.v + s, a.g, a.h); }

Jet2 compose(const std::array<double, 3>& d, const Jet2& g) {
  const int n = g.dim();
  Jet2 r;
  r.v = d[0];
  r.g = d[1] * g.g;
  r.h = Mat(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double x = d[2] * g.g[i] * g.g[j] + d[1] * g.h(i, j);
      r.h(i, j) = x;
      r.h(j, i) = x;
    }
  return r;
}

// ---------------------------------------------------------------------------
// Jet3 arithmetic: canonical entries (i<=j<=k) computed once and mirrored.

Jet3 operator+(const Jet3& a, const Jet3& b) {
  check_dim(a.dim(), b.dim(), "+");
  Jet3 r = a;
  r.v += b.v;
  r.g += b.g;
  r.h += b.h;
  r.t += b.t;
  return r;
}

Jet3 operator-(const Jet3& a, const Jet3& b) { return a + (-b); }

Jet3 operator-(const Jet3& a) {
  Jet3 r = a;
  r.v = -r.v;
  r.g = -r.g;
  r.h = -r.h;
  r.t *= -1.0;
  return r;
}

Jet3 operator*(const Jet3& a, const Jet3& b) {
  check_dim(a.dim(), b.dim(), "*");
  const int n = a.dim();
  Jet3 r = Jet3::constant(n, a.v * b.v);
  r.g = a.v * b.g + b.v * a.g;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double x = a.v * b.h(i, j) + b.v * a.h(i, j) + a.g[i] * b.g[j] + a.g[j] * b.g[i];
      r.h(i, j) = x;
      r.h(j, i) = x;
    }
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      for (int k = j; k < n; ++k) {
        double x = a.v * b.t(i, j, k) + b.v * a.t(i, j, k);
        x += a.h(i, j) * b.g[k] + a.h(i, k) * b.g[j] + a.h(j, k) * b.g[i];
        x += b.h(i, j) * a.g[k] + b.h(i, k) * a.g[j] + b.h(j, k) * a.g[i];
        r.t.set_sym(i, j, k, x);
      }
  return r;
}

Jet3 operator/(const Jet3& a, const Jet3& b) {
  if (b.v == 0.0) throw EvalError("jet division by zero");
  const double iv = 1.0 / b.v;
  const double iv2 = iv * iv;
  Jet3 inv = compose({iv, -iv2, 2.0 * iv2 * iv, -6.0 * iv2 * iv2}, b);
  return a * inv;
}

Jet3 operator*(double s, const Jet3& a) {
  Jet3 r = a;
  r.v *= s;
  r.g *= s;
  r.h *= s;
  r.t *= s;
  return r;
}

Jet3 operator+(const Jet3& a, double s) {
  Jet3 r = a;
  r.v += s;
  return r;
}

Jet3 compose(const std::array<double, 4>& d, const Jet3& g) {
  const int n = g.dim();
  Jet3 r = Jet3::constant(n, d[0]);
  r.g = d[1] * g.g;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double x = d[2] * g.g[i] * g.g[j] + d[1] * g.h(i, j);
      r.h(i, j) = x;
      r.h(j, i) = x;
    }
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      for (int k = j; k < n; ++k) {
        double x = d[3] * g.g[i] * g.g[j] * g.g[k];
        x += d[2] * (g.h(i, j) * g.g[k] + g.h(i, k) * g.g[j] + g.h(j, k) * g.g[i]);
        x += d[1] * g.t(i, j, k);
        r.t.set_sym(i, j, k, x);
      }
  return r;
}

// ---------------------------------------------------------------------------
// Primitive derivative tables.

namespace {

double checked_log_arg(double v) {
  if (v <= 0.0) throw EvalError("log of non-positive value");
  return v;
}

double checked_sqrt_arg(double v) {
  if (v <= 0.0) throw EvalError("sqrt of non-positive value");
  return v;
}

double ipow(double v, long p) {
  if (p < 0) {
    if (v == 0.0) throw EvalError("0 raised to negative power");
    return 1.0 / ipow(v, -p);
  }
  double r = 1.0, base = v;
  while (p > 0) {
    if (p & 1) r *= base;
    base *= base;
    p >>= 1;
  }
  return r;
}

std::array<double, 4> exp_tab(double v) {
  const double e = std::exp(v);
  return {e, e, e, e};
}
std::array<double, 4> sin_tab(double v) {
  const double s = std::sin(v), c = std::cos(v);
  return {s, c, -s, -c};
}
std::array<double, 4> cos_tab(double v) {
  const double s = std::sin(v), c = std::cos(v);
  return {c, -s, -c, s};
}
std::array<double, 4> sqrt_tab(double v) {
  checked_sqrt_arg(v);
  const double s = std::sqrt(v);
  return {s, 0.5 / s, -0.25 / (s * v), 0.375 / (s * v * v)};
}
std::array<double, 4> log_tab(double v) {
  checked_log_arg(v);
  const double iv = 1.0 / v;
  return {std::log(v), iv, -iv * iv, 2.0 * iv * iv * iv};
}
std::array<double, 4> tanh_tab(double v) {
  const double th = std::tanh(v);
  const double s = 1.0 - th * th;
  return {th, s, -2.0 * th * s, s * (6.0 * th * th - 2.0)};
}
std::array<double, 4> pow_real_tab(double v, double p) {
  if (v <= 0.0) throw EvalError("non-integer power of non-positive value");
  const double f = std::pow(v, p);
  return {f, p * f / v, p * (p - 1.0) * f / (v * v), p * (p - 1.0) * (p - 2.0) * f / (v * v * v)};
}

std::array<double, 3> head3(const std::array<double, 4>& d) { return {d[0], d[1], d[2]}; }

}  // namespace

Jet2 jet_exp(const Jet2& a) { return compose(head3(exp_tab(a.v)), a); }
Jet2 jet_sin(const Jet2& a) { return compose(head3(sin_tab(a.v)), a); }
Jet2 jet_cos(const Jet2& a) { return compose(head3(cos_tab(a.v)), a); }
Jet2 jet_sqrt(const Jet2& a) { return compose(head3(sqrt_tab(a.v)), a); }
Jet2 jet_log(const Jet2& a) { return compose(head3(log_tab(a.v)), a); }
Jet2 jet_tanh(const Jet2& a) { return compose(head3(tanh_tab(a.v)), a); }
Jet2 jet_pow_real(const Jet2& a, double p) { return compose(head3(pow_real_tab(a.v, p)), a); }

Jet3 jet_exp(const Jet3& a) { return compose(exp_tab(a.v), a); }
Jet3 jet_sin(const Jet3& a) { return compose(sin_tab(a.v), a); }
Jet3 jet_cos(const Jet3& a) { return compose(cos_tab(a.v), a); }
Jet3 jet_sqrt(const Jet3& a) { return compose(sqrt_tab(a.v), a); }
Jet3 jet_log(const Jet3& a) { return compose(log_tab(a.v), a); }
Jet3 jet_tanh(const Jet3& a) { return compose(tanh_tab(a.v), a); }
Jet3 jet_pow_real(const Jet3& a, double p) { return compose(pow_real_tab(a.v, p), a); }

// Integer powers via repeated jet multiplication: valid for any base sign and
// exactly symmetric.
Jet2 jet_pow_int(const Jet2& a, long p) {
  if (p < 0) {
    if (a.v == 0.0) throw EvalError("0 raised to negative power");
    return Jet2::constant(a.dim(), 1.0) / jet_pow_int(a, -p);
  }
  Jet2 r = Jet2::constant(a.dim(), 1.0);
  Jet2 base = a;
  while (p > 0) {
    if (p & 1) r = r * base;
    base = base * base;
    p >>= 1;
  }
  return r;
}

Jet3 jet_pow_int(const Jet3& a, long p) {
  if (p < 0) {
    if (a.v == 0.0) throw EvalError("0 raised to negative power");
    return Jet3::constant(a.dim(), 1.0) / jet_pow_int(a, -p);
  }
  Jet3 r = Jet3::constant(a.dim(), 1.0);
  Jet3 base = a;
  while (p > 0) {
    if (p & 1) r = r * base;
    base = base * base;
    p >>= 1;
  }
  return r;
}

double jet_exp(double v) { return std::exp(v); }
double jet_sin(double v) { return std::sin(v); }
double jet_cos(double v) { return std::cos(v); }
double jet_sqrt(double v) { return std::sqrt(checked_sqrt_arg(v)); }
double jet_log(double v) { return std::log(checked_log_arg(v)); }
double jet_tanh(double v) { return std::tanh(v); }
double jet_pow_int(double v, long p) { return ipow(v, p); }
double jet_pow_real(double v, double p) {
  if (v <= 0.0) throw EvalError("non-integer power of non-positive value");
  return std::pow(v, p);
}

Jet2 truncate(const Jet3& j) { return Jet2(j.v, j.g, j.h); }

Jet2 partial(const Jet3& j, int i) {
  const int n = j.dim();
  Jet2 r;
  r.v = j.g[i];
  r.g = j.h.col(i);
  r.h = Mat(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      r.h(a, b) = j.t(a, b, i);
      r.h(b, a) = r.h(a, b);
    }
  return r;
}

}  // namespace susyfactor
