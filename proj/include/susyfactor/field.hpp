// Jet-evaluable fields on R^n. DSL expressions are the common backing store;
// synthesized coefficients (cutoff-modulated forms, tensor products) are
// closures. Either way the consumer sees value/jet2/jet3 of (x, h).

#pragma once

#include <susyfactor/expr.hpp>
#include <susyfactor/util.hpp>

#include <functional>
#include <vector>

namespace susyfactor {

class ScalarField {
 public:
  using Jet3Fn = std::function<Jet3(const Vec&, double)>;

  ScalarField() = default;
  ScalarField(Expr e) : expr_(std::move(e)) {}                   // NOLINT(implicit)
  explicit ScalarField(Jet3Fn fn) : fn_(std::move(fn)) {}

  bool valid() const { return expr_.valid() || static_cast<bool>(fn_); }
  bool is_expr() const { return expr_.valid(); }
  const Expr& expr() const;

  double value(const Vec& x, double h) const;
  Jet2 jet2(const Vec& x, double h) const;
  Jet3 jet3(const Vec& x, double h) const;

 private:
  Expr expr_;
  Jet3Fn fn_;
};

using CovecField = std::vector<ScalarField>;  // components of a 1-form / vector field

// Symmetric matrix field: entries stored for i<=j only, so evaluation is
// exactly symmetric by construction.
class SymMatField {
 public:
  SymMatField() = default;
  SymMatField(int n, std::vector<ScalarField> upper);  // row-major upper incl. diagonal

  static SymMatField from_full(int n, const std::vector<std::vector<ScalarField>>& entries,
                               const Box& sample_box, double tol = 1e-8);
  static SymMatField constant(const Mat& m);
  static SymMatField identity(int n);
  static SymMatField zero(int n);

  int dim() const { return n_; }
  const ScalarField& entry(int i, int j) const;

  Mat value(const Vec& x, double h) const;

 private:
  int n_ = 0;
  std::vector<ScalarField> upper_;
};

// Antisymmetric (bivector-valued) field: strict upper entries stored; the
// lower triangle evaluates as the exact negation, the diagonal as zero.
class BivecField {
 public:
  BivecField() = default;
  BivecField(int n, std::vector<ScalarField> strict_upper);

  static BivecField from_full(int n, const std::vector<std::vector<ScalarField>>& entries,
                              const Box& sample_box, double tol = 1e-8);
  static BivecField constant(const Bivector& b);
  static BivecField zero(int n);

  int dim() const { return n_; }
  bool has_entry(int i, int j) const { return i != j; }
  // Sign-resolved access: returns the stored field and whether to negate.
  const ScalarField& upper_entry(int i, int j, bool& negate) const;

  Bivector value(const Vec& x, double h) const;
  // Entry jets as a full matrix of Jet2 (lower = exact negation, diag zero).
  std::vector<std::vector<Jet2>> jet2(const Vec& x, double h) const;
  std::vector<std::vector<Jet3>> jet3(const Vec& x, double h) const;

 private:
  int n_ = 0;
  std::vector<ScalarField> upper_;  // (0,1),(0,2),...,(n-2,n-1)
  int uidx(int i, int j) const;     // i<j
};

// A matrix field evaluated with derivatives up to `order` (0, 1 or 2):
// val = F(x), d1[k] = d_k F, d2[k][l] = d_k d_l F.
struct MatJet {
  int n = 0;
  int order = 0;
  Mat val;
  std::vector<Mat> d1;
  std::vector<std::vector<Mat>> d2;

  static MatJet zero(int n, int order);
  MatJet transpose() const;
  MatJet operator+(const MatJet& o) const;
};

/// Evaluates a symmetric field with derivatives.
MatJet mat_jet(const SymMatField& f, const Vec& x, double h, int order);
/// Evaluates a bivector field as its linear-map normalization (-2 W).
MatJet bivec_map_jet(const BivecField& f, const Vec& x, double h, int order);

// The coefficient triple of the operator normal form plus the phases.
struct FieldBundle {
  int n = 0;
  SymMatField A;
  CovecField U;       // n components
  ScalarField v;
  ScalarField phi, psi;
};

}  // namespace susyfactor
