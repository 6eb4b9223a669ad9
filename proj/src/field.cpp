#include <susyfactor/field.hpp>
#include <susyfactor/util.hpp>

#include <cmath>

namespace susyfactor {

const Expr& ScalarField::expr() const {
  if (!expr_.valid()) throw Error("ScalarField: not expression-backed");
  return expr_;
}

double ScalarField::value(const Vec& x, double h) const {
  if (expr_.valid()) return expr_.value(x, h);
  if (!fn_) throw Error("ScalarField: empty field");
  return fn_(x, h).v;
}

Jet2 ScalarField::jet2(const Vec& x, double h) const {
  if (expr_.valid()) return expr_.jet2(x, h);
  if (!fn_) throw Error("ScalarField: empty field");
  return truncate(fn_(x, h));
}

Jet3 ScalarField::jet3(const Vec& x, double h) const {
  if (expr_.valid()) return expr_.jet3(x, h);
  if (!fn_) throw Error("ScalarField: empty field");
  return fn_(x, h);
}

// ---------------------------------------------------------------------------
// SymMatField

SymMatField::SymMatField(int n, std::vector<ScalarField> upper) : n_(n), upper_(std::move(upper)) {
  if (static_cast<int>(upper_.size()) != n * (n + 1) / 2)
    throw DimensionError("SymMatField: wrong number of entries");
}

namespace {

int sym_index(int n, int i, int j) {
  // row-major upper triangle including diagonal, i <= j
  return i * n - i * (i - 1) / 2 + (j - i);
}

std::vector<Vec> sample_points(const Box& box, int per_axis = 3) {
  return tensor_grid(box, per_axis);
}

}  // namespace

SymMatField SymMatField::from_full(int n, const std::vector<std::vector<ScalarField>>& entries,
                                   const Box& sample_box, double tol) {
  if (static_cast<int>(entries.size()) != n) throw DimensionError("A: wrong row count");
  for (const auto& row : entries)
    if (static_cast<int>(row.size()) != n) throw DimensionError("A: wrong column count");
  // Symmetrize on load: identical texts share the field, otherwise average.
  std::vector<ScalarField> upper(n * (n + 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const ScalarField& a = entries[i][j];
      const ScalarField& b = entries[j][i];
      if (i == j || !a.is_expr() || !b.is_expr() || print(a.expr()) == print(b.expr())) {
        upper[sym_index(n, i, j)] = a;
      } else {
        ExprBuilder eb(a.expr().dim());
        upper[sym_index(n, i, j)] =
            ScalarField(eb.mul(eb.num(0.5), eb.add(a.expr(), b.expr())));
      }
    }
  SymMatField f(n, std::move(upper));
  // sanity: user entries should already be numerically symmetric
  for (const Vec& x : sample_points(sample_box)) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double a = entries[i][j].value(x, 0.1);
        const double b = entries[j][i].value(x, 0.1);
        if (std::abs(a - b) > tol * (1.0 + std::abs(a)))
          throw Error("A is not symmetric at a sample point; entries (" + std::to_string(i + 1) +
                      "," + std::to_string(j + 1) + ") disagree");
      }
  }
  return f;
}

SymMatField SymMatField::constant(const Mat& m) {
  SymMap sym(m);  // verifies symmetry
  const int n = sym.dim();
  ExprBuilder eb(n);
  std::vector<ScalarField> upper(n * (n + 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) upper[sym_index(n, i, j)] = ScalarField(eb.num(sym.mat()(i, j)));
  return SymMatField(n, std::move(upper));
}

SymMatField SymMatField::identity(int n) { return constant(Mat::Identity(n, n)); }
SymMatField SymMatField::zero(int n) { return constant(Mat::Zero(n, n)); }

const ScalarField& SymMatField::entry(int i, int j) const {
  if (i > j) std::swap(i, j);
  return upper_[sym_index(n_, i, j)];
}

Mat SymMatField::value(const Vec& x, double h) const {
  Mat m(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = i; j < n_; ++j) {
      m(i, j) = entry(i, j).value(x, h);
      m(j, i) = m(i, j);
    }
  return m;
}

// ---------------------------------------------------------------------------
// BivecField

BivecField::BivecField(int n, std::vector<ScalarField> strict_upper)
    : n_(n), upper_(std::move(strict_upper)) {
  if (static_cast<int>(upper_.size()) != n * (n - 1) / 2)
    throw DimensionError("BivecField: wrong number of entries");
}

int BivecField::uidx(int i, int j) const {
  // strict upper, row-major: (0,1),(0,2),..,(0,n-1),(1,2),..
  return i * n_ - i * (i + 1) / 2 + (j - i - 1);
}

BivecField BivecField::from_full(int n, const std::vector<std::vector<ScalarField>>& entries,
                                 const Box& sample_box, double tol) {
  if (static_cast<int>(entries.size()) != n) throw DimensionError("theta: wrong row count");
  for (const auto& row : entries)
    if (static_cast<int>(row.size()) != n) throw DimensionError("theta: wrong column count");
  std::vector<ScalarField> upper(n * (n - 1) / 2);
  BivecField f(n, upper);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) f.upper_[f.uidx(i, j)] = entries[i][j];
  for (const Vec& x : sample_points(sample_box)) {
    double scale = 1.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(entries[i][j].value(x, 0.1)));
    for (int i = 0; i < n; ++i) {
      if (std::abs(entries[i][i].value(x, 0.1)) > tol * scale)
        throw Error("theta: diagonal entry " + std::to_string(i + 1) + " is not zero");
      for (int j = i + 1; j < n; ++j) {
        const double a = entries[i][j].value(x, 0.1);
        const double b = entries[j][i].value(x, 0.1);
        if (std::abs(a + b) > tol * scale)
          throw Error("theta: entries (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                      ") and transpose are not antisymmetric");
      }
    }
  }
  return f;
}

BivecField BivecField::constant(const Bivector& b) {
  const int n = b.dim();
  ExprBuilder eb(n);
  std::vector<ScalarField> upper(n * (n - 1) / 2);
  BivecField f(n, upper);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) f.upper_[f.uidx(i, j)] = ScalarField(eb.num(b.mat()(i, j)));
  return f;
}

BivecField BivecField::zero(int n) { return constant(Bivector::zero(n)); }

const ScalarField& BivecField::upper_entry(int i, int j, bool& negate) const {
  negate = i > j;
  if (i > j) std::swap(i, j);
  if (i == j) throw Error("BivecField: diagonal entry has no field");
  return upper_[uidx(i, j)];
}

Bivector BivecField::value(const Vec& x, double h) const {
  Mat m = Mat::Zero(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j) {
      m(i, j) = upper_[uidx(i, j)].value(x, h);
      m(j, i) = -m(i, j);
    }
  return Bivector(m, 0.0);
}

std::vector<std::vector<Jet2>> BivecField::jet2(const Vec& x, double h) const {
  std::vector<std::vector<Jet2>> out(n_, std::vector<Jet2>(n_, Jet2::constant(n_, 0.0)));
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j) {
      out[i][j] = upper_[uidx(i, j)].jet2(x, h);
      out[j][i] = -out[i][j];
    }
  return out;
}

std::vector<std::vector<Jet3>> BivecField::jet3(const Vec& x, double h) const {
  std::vector<std::vector<Jet3>> out(n_, std::vector<Jet3>(n_, Jet3::constant(n_, 0.0)));
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j) {
      out[i][j] = upper_[uidx(i, j)].jet3(x, h);
      out[j][i] = -out[i][j];
    }
  return out;
}

// ---------------------------------------------------------------------------
// MatJet

MatJet MatJet::zero(int n, int order) {
  MatJet m;
  m.n = n;
  m.order = order;
  m.val = Mat::Zero(n, n);
  if (order >= 1) m.d1.assign(n, Mat::Zero(n, n));
  if (order >= 2) m.d2.assign(n, std::vector<Mat>(n, Mat::Zero(n, n)));
  return m;
}

MatJet MatJet::transpose() const {
  MatJet m = *this;
  m.val = val.transpose();
  for (auto& d : m.d1) d = d.transpose().eval();
  for (auto& row : m.d2)
    for (auto& d : row) d = d.transpose().eval();
  return m;
}

MatJet MatJet::operator+(const MatJet& o) const {
  if (n != o.n || order != o.order) throw DimensionError("MatJet +: shape mismatch");
  MatJet m = *this;
  m.val += o.val;
  for (int k = 0; k < static_cast<int>(d1.size()); ++k) m.d1[k] += o.d1[k];
  for (int k = 0; k < static_cast<int>(d2.size()); ++k)
    for (int l = 0; l < static_cast<int>(d2[k].size()); ++l) m.d2[k][l] += o.d2[k][l];
  return m;
}

namespace {

void fill_from_jet(MatJet& m, int i, int j, const Jet2& jet, bool mirror_sym, double sign) {
  m.val(i, j) = sign * jet.v;
  if (mirror_sym) m.val(j, i) = m.val(i, j);
  if (m.order >= 1)
    for (int k = 0; k < m.n; ++k) {
      m.d1[k](i, j) = sign * jet.g[k];
      if (mirror_sym) m.d1[k](j, i) = m.d1[k](i, j);
    }
  if (m.order >= 2)
    for (int k = 0; k < m.n; ++k)
      for (int l = 0; l < m.n; ++l) {
        m.d2[k][l](i, j) = sign * jet.h(k, l);
        if (mirror_sym) m.d2[k][l](j, i) = m.d2[k][l](i, j);
      }
}

}  // namespace

MatJet mat_jet(const SymMatField& f, const Vec& x, double h, int order) {
  const int n = f.dim();
  MatJet m = MatJet::zero(n, order);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      Jet2 jet = order == 0 ? Jet2(f.entry(i, j).value(x, h), Vec::Zero(n), Mat::Zero(n, n))
                            : f.entry(i, j).jet2(x, h);
      fill_from_jet(m, i, j, jet, true, 1.0);
    }
  return m;
}

MatJet bivec_map_jet(const BivecField& f, const Vec& x, double h, int order) {
  const int n = f.dim();
  MatJet m = MatJet::zero(n, order);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      bool neg = false;
      const ScalarField& e = f.upper_entry(i, j, neg);
      Jet2 jet = order == 0 ? Jet2(e.value(x, h), Vec::Zero(n), Mat::Zero(n, n)) : e.jet2(x, h);
      // map normalization: a bivector W acts on covectors as -2 W
      fill_from_jet(m, i, j, jet, false, -2.0);
      fill_from_jet(m, j, i, jet, false, 2.0);
    }
  return m;
}

}  // namespace susyfactor
