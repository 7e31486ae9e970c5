#pragma once

// Green function of simple random walk killed on leaving a region, scaled by pi/2
// so that the DGFF has variance ~ log N. Also the harmonic (hitting) measure of
// rectangles and arbitrary vertex sets.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "sigf/error.hpp"
#include "sigf/lattice.hpp"

namespace sigf {

inline constexpr double green_scale = std::numbers::pi / 2.0;
inline constexpr std::size_t default_dense_cap = 4096;

using SparseMatrix = Eigen::SparseMatrix<double>;
using SparseLLT = Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

/// 4I - A on a w x h rectangle with zero exterior; local index x*h + y.
inline SparseMatrix rect_laplacian(int w, int h) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(std::size_t(w) * std::size_t(h) * 5);
  auto id = [h](int x, int y) { return x * h + y; };
  for (int x = 0; x < w; ++x)
    for (int y = 0; y < h; ++y) {
      t.emplace_back(id(x, y), id(x, y), 4.0);
      if (x > 0) t.emplace_back(id(x, y), id(x - 1, y), -1.0);
      if (x + 1 < w) t.emplace_back(id(x, y), id(x + 1, y), -1.0);
      if (y > 0) t.emplace_back(id(x, y), id(x, y - 1), -1.0);
      if (y + 1 < h) t.emplace_back(id(x, y), id(x, y + 1), -1.0);
    }
  SparseMatrix m(w * h, w * h);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

/// Sparse factorization of the killed-walk operator on a rectangle.
class RectGreen {
 public:
  RectGreen(int w, int h) : w_(w), h_(h) {
    if (w < 1 || h < 1) throw DomainError("RectGreen: empty rectangle");
    llt_.compute(rect_laplacian(w, h));
    if (llt_.info() != Eigen::Success) throw NumericError("RectGreen: factorization failed");
  }
  int width() const { return w_; }
  int height() const { return h_; }
  int local(int x, int y) const { return x * h_ + y; }
  /// (4I - A)^{-1} e_{(x,y)}; expected visits are 4 times this.
  Eigen::VectorXd column(int x, int y) const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(Eigen::Index(w_) * h_);
    e(local(x, y)) = 1.0;
    return llt_.solve(e);
  }
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return llt_.solve(rhs); }
  const SparseLLT& factorization() const { return llt_; }

 private:
  int w_, h_;
  SparseLLT llt_;
};

/// Pi/2-scaled Green function G_B(u, v) of a rectangle, one column at a time.
inline Eigen::VectorXd green_column(const RectGreen& rg, int x, int y) {
  return (4.0 * green_scale) * rg.column(x, y);
}

struct GreenTable {
  std::vector<Vertex> region;  // sorted
  Eigen::MatrixXd matrix;

  std::ptrdiff_t find(Vertex v) const {
    auto it = std::lower_bound(region.begin(), region.end(), v);
    return (it != region.end() && *it == v) ? it - region.begin() : -1;
  }
  double operator()(Vertex u, Vertex v) const {
    const auto i = find(u), j = find(v);
    if (i < 0 || j < 0) return 0.0;
    return matrix(i, j);
  }
};

/// Dense Green table of an arbitrary finite vertex set.
inline GreenTable green_table(std::vector<Vertex> region, std::size_t cap = default_dense_cap) {
  if (region.empty()) throw DomainError("green_table: empty region");
  if (region.size() > cap)
    throw ResourceError("green_table: region of " + std::to_string(region.size()) +
                        " vertices exceeds the dense cap of " + std::to_string(cap));
  std::sort(region.begin(), region.end());
  region.erase(std::unique(region.begin(), region.end()), region.end());
  GreenTable g{std::move(region), {}};
  const auto n = Eigen::Index(g.region.size());
  Eigen::MatrixXd M = 4.0 * Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Vertex w : neighbours(g.region[std::size_t(i)])) {
      const auto j = g.find(w);
      if (j >= 0) M(i, j) = -1.0;
    }
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) throw NumericError("green_table: factorization failed");
  g.matrix = (4.0 * green_scale) * llt.solve(Eigen::MatrixXd::Identity(n, n));
  g.matrix = 0.5 * (g.matrix + g.matrix.transpose()).eval();
  return g;
}

inline GreenTable green_table(const GridSpec& spec, std::size_t cap = default_dense_cap) {
  return green_table(full_box(spec).vertices(), cap);
}

struct HarmonicWeights {
  Vertex source;
  std::vector<std::pair<Vertex, double>> weights;  // sorted by vertex

  double total() const {
    double s = 0.0;
    for (auto& [v, w] : weights) s += w;
    return s;
  }
  double at(Vertex v) const {
    for (auto& [u, w] : weights)
      if (u == v) return w;
    return 0.0;
  }
};

namespace detail {
inline HarmonicWeights collect_exit(Vertex source, const std::vector<Vertex>& interior,
                                    const Eigen::VectorXd& y) {
  std::map<Vertex, double> acc;
  std::vector<Vertex> sorted = interior;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < interior.size(); ++i) {
    if (y(Eigen::Index(i)) == 0.0) continue;
    for (Vertex b : neighbours(interior[i]))
      if (!std::binary_search(sorted.begin(), sorted.end(), b)) acc[b] += y(Eigen::Index(i));
  }
  HarmonicWeights hw{source, {}};
  hw.weights.assign(acc.begin(), acc.end());
  return hw;
}
}  // namespace detail

/// Hitting distribution on the exterior boundary of `interior` for SRW from source.
inline HarmonicWeights harmonic_measure(std::vector<Vertex> interior, Vertex source) {
  std::sort(interior.begin(), interior.end());
  interior.erase(std::unique(interior.begin(), interior.end()), interior.end());
  if (!std::binary_search(interior.begin(), interior.end(), source)) {
    bool adjacent = interior.empty();
    for (Vertex w : neighbours(source)) adjacent = adjacent || std::binary_search(interior.begin(), interior.end(), w);
    if (!adjacent) throw DomainError("harmonic_measure: source is neither inside nor on the boundary");
    return {source, {{source, 1.0}}};
  }
  const auto n = Eigen::Index(interior.size());
  std::vector<Eigen::Triplet<double>> t;
  for (Eigen::Index i = 0; i < n; ++i) {
    t.emplace_back(i, i, 4.0);
    for (Vertex w : neighbours(interior[std::size_t(i)])) {
      auto it = std::lower_bound(interior.begin(), interior.end(), w);
      if (it != interior.end() && *it == w) t.emplace_back(i, Eigen::Index(it - interior.begin()), -1.0);
    }
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  SparseLLT llt(m);
  if (llt.info() != Eigen::Success) throw NumericError("harmonic_measure: factorization failed");
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  e(std::lower_bound(interior.begin(), interior.end(), source) - interior.begin()) = 1.0;
  return detail::collect_exit(source, interior, llt.solve(e));
}

/// Rectangle factorizations shared across calls, keyed by (width, height).
class RectGreenCache {
 public:
  std::shared_ptr<const RectGreen> get(int w, int h) {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = (std::uint64_t(std::uint32_t(w)) << 32) | std::uint32_t(h);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    auto rg = std::make_shared<const RectGreen>(w, h);
    cache_.emplace(key, rg);
    return rg;
  }
  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return cache_.size();
  }

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::uint64_t, std::shared_ptr<const RectGreen>> cache_;
};

/// Harmonic measure from `source` on the exterior boundary of the rectangle `box`.
inline HarmonicWeights harmonic_measure(const Box& box, Vertex source, RectGreenCache& cache) {
  if (box.empty() || !box.contains(source)) {
    bool adjacent = box.empty();
    for (Vertex w : neighbours(source)) adjacent = adjacent || box.contains(w);
    if (!adjacent) throw DomainError("harmonic_measure: source is neither inside nor on the boundary");
    return {source, {{source, 1.0}}};
  }
  auto rg = cache.get(box.width(), box.height());
  const Eigen::VectorXd y = rg->column(source.x - box.x0, source.y - box.y0);
  std::map<Vertex, double> acc;
  const int w = box.width(), h = box.height();
  for (int lx = 0; lx < w; ++lx) {
    acc[{box.x0 + lx, box.y0 - 1}] += y(rg->local(lx, 0));
    acc[{box.x0 + lx, box.y1 + 1}] += y(rg->local(lx, h - 1));
  }
  for (int ly = 0; ly < h; ++ly) {
    acc[{box.x0 - 1, box.y0 + ly}] += y(rg->local(0, ly));
    acc[{box.x1 + 1, box.y0 + ly}] += y(rg->local(w - 1, ly));
  }
  HarmonicWeights hw{source, {}};
  for (auto& [v, val] : acc)
    if (val != 0.0) hw.weights.emplace_back(v, val);
  return hw;
}

}  // namespace sigf
