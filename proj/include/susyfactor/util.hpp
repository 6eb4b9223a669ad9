// Small shared utilities: boxes, grids, seeded RNG, capped parallel loops.

#pragma once

#include <susyfactor/types.hpp>

#include <cstdint>
#include <functional>
#include <vector>

namespace susyfactor {

// Axis-aligned box in R^n.
struct Box {
  Vec lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vec& x) const {
    for (int i = 0; i < dim(); ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }
};

std::vector<double> linspace(double a, double b, int n);

// Full tensor lattice with `per_axis` points per axis.
std::vector<Vec> tensor_grid(const Box& box, int per_axis);

// Deterministic 64-bit generator (splitmix64). We avoid std distributions so
// that reports are byte-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next_u64();
  double uniform();                       // [0, 1)
  double uniform(double a, double b);     // [a, b)
  Vec point_in(const Box& box);
 private:
  std::uint64_t state_;
};

// Runs fn(i) for i in [0, n). Thread count is capped by SUSYFACTOR_THREADS
// (default: hardware concurrency, at most 8). Callers must write results into
// pre-allocated per-index slots so reductions stay deterministic.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace susyfactor
