// Expression language for user-supplied coefficients, phases and profiles.
//
// Grammar (whitespace-insensitive):
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | power
//   power  := primary ('^' unary)?          -- exponent must be constant
//   primary:= number | ident | ident '(' expr {',' expr} ')' | '(' expr ')'
//
// Identifiers: x1..xn in the x-context, t in the t-context, h in either
// (profiles and phases are declared h-free and reject it). Functions:
// exp, sin, cos, sqrt, log, tanh, bump(u, a, b) with constants a < b.
// bump is the smooth cutoff that is identically 1 for u <= a and 0 for
// u >= b, built from the exp(-1/s) gluing; __cex(u, k) = exp(-1/u)/u^k
// (0 for u <= 0) is the internal primitive it expands through.

#pragma once

#include <susyfactor/jets.hpp>
#include <susyfactor/types.hpp>

#include <memory>
#include <string>
#include <vector>

namespace susyfactor {

struct ParseError : Error {
  int line, col;
  ParseError(int line_, int col_, const std::string& msg)
      : Error(std::to_string(line_) + ":" + std::to_string(col_) + ": " + msg),
        line(line_),
        col(col_) {}
};

namespace detail {
struct Node;
using NodeP = std::shared_ptr<const Node>;
}  // namespace detail

struct ParseContext {
  int dim = 0;          // number of x-variables (ignored in t-context)
  bool t_context = false;
  bool allow_h = true;
};

class Expr {
 public:
  Expr() = default;

  int dim() const { return dim_; }
  bool t_context() const { return t_ctx_; }
  bool valid() const { return static_cast<bool>(root_); }
  bool contains_h() const;

  // Evaluation. x-context: vars = point in R^n. t-context: vars = {t}.
  double value(const Vec& x, double h) const;
  Jet2 jet2(const Vec& x, double h) const;
  Jet3 jet3(const Vec& x, double h) const;

  double value_t(double t, double h = 0.0) const;
  Jet3 jet3_t(double t, double h = 0.0) const;  // univariate, dim 1

  friend Expr parse(const std::string& text, const ParseContext& ctx);
  friend std::string print(const Expr& e);
  friend bool structurally_equal(const Expr& a, const Expr& b);
  friend Expr diff_x(const Expr& e, int i);
  friend Expr diff_t(const Expr& e);
  friend Expr shift_vars(const Expr& e, int offset, int new_dim);
  friend Expr subst_t_scale(const Expr& e, double c);
  friend Expr subst_t(const Expr& profile, const Expr& inner);

  friend struct ExprBuilder;

 private:
  detail::NodeP root_;
  int dim_ = 0;
  bool t_ctx_ = false;
};

Expr parse(const std::string& text, const ParseContext& ctx);
std::string print(const Expr& e);
bool structurally_equal(const Expr& a, const Expr& b);

/// Symbolic d/dx_i (x-context expressions).
Expr diff_x(const Expr& e, int i);
/// Symbolic d/dt (t-context expressions).
Expr diff_t(const Expr& e);

/// Re-homes an x-context expression on R^{new_dim}, mapping x_i -> x_{i+offset}.
Expr shift_vars(const Expr& e, int offset, int new_dim);
/// Replaces t by c*t in a t-context expression (profile rescaling).
Expr subst_t_scale(const Expr& e, double c);
/// Composes a t-context profile with an x-context expression: profile(inner(x)).
Expr subst_t(const Expr& profile, const Expr& inner);

// Programmatic construction (galleries, synthesized coefficients, test data).
struct ExprBuilder {
  explicit ExprBuilder(int dim, bool t_context = false) : dim_(dim), t_ctx_(t_context) {}

  Expr num(double v) const;
  Expr x(int i) const;  // 0-based
  Expr t() const;
  Expr h() const;
  Expr add(const Expr& a, const Expr& b) const;
  Expr sub(const Expr& a, const Expr& b) const;
  Expr mul(const Expr& a, const Expr& b) const;
  Expr div(const Expr& a, const Expr& b) const;
  Expr neg(const Expr& a) const;
  Expr powi(const Expr& a, long p) const;
  Expr call(const std::string& fn, const Expr& a) const;
  Expr bump(const Expr& u, double a, double b) const;

 private:
  Expr wrap(detail::NodeP n) const;
  int dim_;
  bool t_ctx_;
};

}  // namespace susyfactor
