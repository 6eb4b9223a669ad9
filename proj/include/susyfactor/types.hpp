// Core dense types and error hierarchy.
//
// Everything in this library works on R^n with the Euclidean metric, so
// tangent and cotangent vectors are both plain Eigen vectors; the wrapper
// classes below only exist to make structural invariants (exact antisymmetry,
// exact symmetry) impossible to violate.

#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace susyfactor {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Errors

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : Error {
  using Error::Error;
};

struct EvalError : Error {
  using Error::Error;
};

struct QuadratureError : Error {
  using Error::Error;
};

struct PreconditionError : Error {
  using Error::Error;
};

struct NotMorseError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Bivector: element of Lambda^2 T_x R^n stored as an antisymmetric matrix.
//
// Convention anchor for the whole codebase (see README, "Conventions"):
//   wedge(u,v)_ij = (u_i v_j - u_j v_i)/2
//   contract(xi, W) = 2 * W * xi            so  contract(xi, u^v) = (xi.v)u - (xi.u)v
//   as a linear map T*X -> TX a bivector W acts as  -2*W
// The -2 identification is pinned by requiring P = d*_{psi,h,G} d_{phi,h}
// to hold for the assembled G; flipping it breaks every factorization test.

class Bivector {
 public:
  Bivector() = default;

  static Bivector zero(int n) {
    Bivector b;
    b.w_ = Mat::Zero(n, n);
    return b;
  }

  // Accepts an antisymmetric matrix; antisymmetry is re-enforced exactly.
  // Throws if the input deviates from antisymmetry beyond rounding.
  explicit Bivector(const Mat& w, double tol = 1e-9) {
    if (w.rows() != w.cols()) throw DimensionError("Bivector: matrix not square");
    const double scale = 1.0 + w.cwiseAbs().maxCoeff();
    if ((w + w.transpose()).cwiseAbs().maxCoeff() > tol * scale)
      throw Error("Bivector: matrix is not antisymmetric");
    w_ = Mat::Zero(w.rows(), w.cols());
    for (int i = 0; i < w.rows(); ++i)
      for (int j = i + 1; j < w.cols(); ++j) {
        w_(i, j) = w(i, j);
        w_(j, i) = -w(i, j);
      }
  }

  int dim() const { return static_cast<int>(w_.rows()); }
  const Mat& mat() const { return w_; }

  // The antisymmetric linear map T*X -> TX this bivector represents.
  Mat as_map() const { return -2.0 * w_; }

  Bivector operator+(const Bivector& o) const { return from_raw(w_ + o.w_); }
  Bivector operator-(const Bivector& o) const { return from_raw(w_ - o.w_); }
  Bivector operator*(double s) const { return from_raw(s * w_); }
  friend Bivector operator*(double s, const Bivector& b) { return b * s; }

 private:
  static Bivector from_raw(const Mat& w) {
    Bivector b;
    b.w_ = w;
    return b;
  }
  Mat w_;
};

// SymMap: symmetric matrix (A(x;h) and Hessian-like objects).
class SymMap {
 public:
  SymMap() = default;

  static SymMap zero(int n) {
    SymMap s;
    s.m_ = Mat::Zero(n, n);
    return s;
  }

  explicit SymMap(const Mat& m, double tol = 1e-9) {
    if (m.rows() != m.cols()) throw DimensionError("SymMap: matrix not square");
    const double scale = 1.0 + m.cwiseAbs().maxCoeff();
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale)
      throw Error("SymMap: matrix is not symmetric");
    m_ = Mat::Zero(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i) {
      m_(i, i) = m(i, i);
      for (int j = i + 1; j < m.cols(); ++j) {
        m_(i, j) = m(i, j);
        m_(j, i) = m(i, j);
      }
    }
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Mat& mat() const { return m_; }

 private:
  Mat m_;
};

}  // namespace susyfactor
