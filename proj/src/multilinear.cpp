#include <susyfactor/multilinear.hpp>

namespace susyfactor {

Bivector wedge(const Vec& u, const Vec& v) {
  if (u.size() != v.size()) throw DimensionError("wedge: dimension mismatch");
  const int n = static_cast<int>(u.size());
  Mat w = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      w(i, j) = 0.5 * (u[i] * v[j] - u[j] * v[i]);
      w(j, i) = -w(i, j);
    }
  return Bivector(w);
}

Vec contract(const Vec& xi, const Bivector& w) {
  if (xi.size() != w.dim()) throw DimensionError("contract: dimension mismatch");
  return 2.0 * (w.mat() * xi);
}

double pairing_det(const std::vector<Vec>& u, const std::vector<Vec>& vstar) {
  if (u.size() != vstar.size()) throw DimensionError("pairing_det: list length mismatch");
  const std::size_t k = u.size();
  if (k != 1 && k != 2) throw DimensionError("pairing_det: only k in {1,2} supported");
  Mat m(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      if (vstar[i].size() != u[j].size())
        throw DimensionError("pairing_det: dimension mismatch");
      m(i, j) = vstar[i].dot(u[j]);
    }
  if (k == 1) return m(0, 0);
  return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
}

Vec hodge_star_2d(const Vec& u) {
  if (u.size() != 2) throw DimensionError("hodge_star_2d: dimension must be 2");
  Vec r(2);
  r[0] = -u[1];
  r[1] = u[0];
  return r;
}

}  // namespace susyfactor
