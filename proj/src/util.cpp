#include <susyfactor/util.hpp>

#include <algorithm>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace susyfactor {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = 0.5 * (a + b);
    return v;
  }
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

std::vector<Vec> tensor_grid(const Box& box, int per_axis) {
  const int n = box.dim();
  std::vector<std::vector<double>> axes(n);
  for (int i = 0; i < n; ++i) axes[i] = linspace(box.lo[i], box.hi[i], per_axis);
  std::vector<Vec> pts;
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= axes[i].size();
  pts.reserve(total);
  std::vector<int> idx(n, 0);
  for (std::size_t c = 0; c < total; ++c) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = axes[i][idx[i]];
    pts.push_back(x);
    for (int i = n - 1; i >= 0; --i) {
      if (++idx[i] < static_cast<int>(axes[i].size())) break;
      idx[i] = 0;
    }
  }
  return pts;
}

std::uint64_t Rng::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double a, double b) { return a + (b - a) * uniform(); }

Vec Rng::point_in(const Box& box) {
  Vec x(box.dim());
  for (int i = 0; i < box.dim(); ++i) x[i] = uniform(box.lo[i], box.hi[i]);
  return x;
}

namespace {

int thread_cap() {
  unsigned hw = std::thread::hardware_concurrency();
  int cap = static_cast<int>(hw == 0 ? 1 : std::min(hw, 8u));
  if (const char* env = std::getenv("SUSYFACTOR_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) cap = v;
  }
  return cap;
}

}  // namespace

void parallel_for(int n, const std::function<void(int)>& fn) {
  const int nt = std::min(thread_cap(), n);
  if (nt <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  std::exception_ptr err;
  std::mutex err_mu;
  for (int t = 0; t < nt; ++t) {
    workers.emplace_back([&, t]() {
      try {
        for (int i = t; i < n; i += nt) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace susyfactor
