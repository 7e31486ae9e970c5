#pragma once

// Grid geometry on V_N = [0,N)^2 ∩ Z^2: scale boxes, l1 balls, dyadic boxes
// and the boundary-safe interior set used by the three-field approximation.

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include "sigf/error.hpp"

namespace sigf {

struct Vertex {
  int x = 0;
  int y = 0;

  friend constexpr auto operator<=>(const Vertex&, const Vertex&) = default;
  friend constexpr Vertex operator+(Vertex a, Vertex b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vertex operator-(Vertex a, Vertex b) { return {a.x - b.x, a.y - b.y}; }
};

/// Lattice offsets share the representation of vertices.
using Offset = Vertex;

inline int l1_norm(Offset w) { return std::abs(w.x) + std::abs(w.y); }
inline int linf_norm(Offset w) { return std::max(std::abs(w.x), std::abs(w.y)); }
inline double l2_norm(Offset w) { return std::hypot(double(w.x), double(w.y)); }

struct GridSpec {
  int N = 2;

  explicit GridSpec(int side) : N(side) {
    if (side < 2) throw DomainError("grid side N must be >= 2, got " + std::to_string(side));
  }

  std::size_t size() const { return std::size_t(N) * std::size_t(N); }
  bool contains(Vertex v) const { return v.x >= 0 && v.y >= 0 && v.x < N && v.y < N; }
  /// Row-major index with the first coordinate as the row.
  std::size_t index(Vertex v) const { return std::size_t(v.x) * std::size_t(N) + std::size_t(v.y); }
  Vertex vertex(std::size_t i) const { return {int(i / std::size_t(N)), int(i % std::size_t(N))}; }
  /// n = log2 N as a real number.
  double log2_side() const { return std::log2(double(N)); }
  bool is_power_of_two() const { return (N & (N - 1)) == 0; }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Closed axis-aligned lattice rectangle [x0,x1] x [y0,y1]. Empty if x0 > x1 or y0 > y1.
struct Box {
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;

  bool empty() const { return x0 > x1 || y0 > y1; }
  int width() const { return empty() ? 0 : x1 - x0 + 1; }
  int height() const { return empty() ? 0 : y1 - y0 + 1; }
  std::size_t size() const { return std::size_t(width()) * std::size_t(height()); }
  bool contains(Vertex v) const { return v.x >= x0 && v.x <= x1 && v.y >= y0 && v.y <= y1; }
  Box intersect(const Box& o) const {
    return {std::max(x0, o.x0), std::min(x1, o.x1), std::max(y0, o.y0), std::min(y1, o.y1)};
  }
  std::vector<Vertex> vertices() const {
    std::vector<Vertex> out;
    out.reserve(size());
    for (int x = x0; x <= x1; ++x)
      for (int y = y0; y <= y1; ++y) out.push_back({x, y});
    return out;
  }
  friend bool operator==(const Box&, const Box&) = default;
};

inline Box full_box(const GridSpec& spec) { return {0, spec.N - 1, 0, spec.N - 1}; }

/// A labelled vertex set in lattice units.
struct Region {
  std::string label;
  std::vector<Vertex> vertices;  // sorted, unique

  /// Vertices v with v/N inside the open rectangle (ax,bx) x (ay,by) of [0,1]^2.
  static Region scaled_rect(std::string label, const GridSpec& spec, double ax, double bx,
                            double ay, double by) {
    if (!(ax < bx && ay < by)) throw DomainError("scaled rectangle must have positive extent");
    Region r{std::move(label), {}};
    for (int x = 0; x < spec.N; ++x) {
      const double sx = double(x) / spec.N;
      if (!(sx > ax && sx < bx)) continue;
      for (int y = 0; y < spec.N; ++y) {
        const double sy = double(y) / spec.N;
        if (sy > ay && sy < by) r.vertices.push_back({x, y});
      }
    }
    return r;
  }

  bool disjoint_from(const Region& other) const {
    std::size_t i = 0, j = 0;
    while (i < vertices.size() && j < other.vertices.size()) {
      if (vertices[i] == other.vertices[j]) return false;
      if (vertices[i] < other.vertices[j]) ++i; else ++j;
    }
    return true;
  }
};

inline bool pairwise_disjoint(const std::vector<Region>& regions) {
  for (std::size_t a = 0; a < regions.size(); ++a)
    for (std::size_t b = a + 1; b < regions.size(); ++b)
      if (!regions[a].disjoint_from(regions[b])) return false;
  return true;
}

/// Half-width of [v]_lambda: N^{1-lambda}/2 rounded to nearest, ties up.
inline int scale_half_width(const GridSpec& spec, double lambda) {
  return int(std::floor(std::pow(double(spec.N), 1.0 - lambda) / 2.0 + 0.5));
}

/// [v]_lambda: the window of half-width N^{1-lambda}/2 around v, clipped to V_N.
inline Box box_around(Vertex v, double lambda, const GridSpec& spec) {
  if (!spec.contains(v)) throw DomainError("box_around: vertex outside V_N");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("box_around: lambda must lie in [0,1]");
  if (lambda == 0.0) return full_box(spec);
  if (lambda == 1.0) return {v.x, v.x, v.y, v.y};
  const int hw = scale_half_width(spec, lambda);
  return Box{v.x - hw, v.x + hw, v.y - hw, v.y + hw}.intersect(full_box(spec));
}

/// Vertices of V_N strictly inside the unclipped window of [v]_lambda. Values of the
/// field outside this set generate the conditioning sigma-algebra at scale lambda.
/// lambda = 0 gives all of V_N (only the zero exterior is observed), lambda = 1 nothing.
inline Box conditioning_interior(Vertex v, double lambda, const GridSpec& spec) {
  if (!spec.contains(v)) throw DomainError("conditioning_interior: vertex outside V_N");
  if (lambda <= 0.0) return full_box(spec);
  if (lambda >= 1.0) return Box{};
  const int hw = scale_half_width(spec, lambda);
  if (hw <= 0) return Box{};
  return Box{v.x - hw + 1, v.x + hw - 1, v.y - hw + 1, v.y + hw - 1}.intersect(full_box(spec));
}

/// Lambda_r(v) = {w : |v-w|_1 <= r}, unclipped.
inline std::vector<Vertex> l1_neighborhood(Vertex v, int r) {
  if (r < 0) throw DomainError("l1_neighborhood: radius must be >= 0");
  std::vector<Vertex> out;
  out.reserve(std::size_t(2 * r * r + 2 * r + 1));
  for (int dx = -r; dx <= r; ++dx) {
    const int rem = r - std::abs(dx);
    for (int dy = -rem; dy <= rem; ++dy) out.push_back({v.x + dx, v.y + dy});
  }
  return out;
}

/// Offsets of the l1 ball of radius r around the origin.
inline std::vector<Offset> l1_ball_offsets(int r) { return l1_neighborhood({0, 0}, r); }

/// All side-2^j boxes with lower-left corner in V_N that contain v.
inline std::vector<Box> dyadic_boxes_containing(Vertex v, int j, const GridSpec& spec) {
  if (j < 0 || j > 30 || (1LL << j) > spec.N)
    throw DomainError("dyadic_boxes_containing: 2^j must not exceed N");
  if (!spec.contains(v)) throw DomainError("dyadic_boxes_containing: vertex outside V_N");
  const int side = 1 << j;
  std::vector<Box> out;
  for (int cx = std::max(0, v.x - side + 1); cx <= v.x; ++cx)
    for (int cy = std::max(0, v.y - side + 1); cy <= v.y; ++cy)
      out.push_back({cx, cx + side - 1, cy, cy + side - 1});
  return out;
}

/// Number of boxes returned by dyadic_boxes_containing, without enumerating them.
inline long long dyadic_box_count(Vertex v, int j) {
  const long long side = 1LL << j;
  return (std::min<long long>(v.x, side - 1) + 1) * (std::min<long long>(v.y, side - 1) + 1);
}

namespace detail {
inline bool is_pow2(int k) { return k > 0 && (k & (k - 1)) == 0; }

// Distance from coordinate c to the exterior of the tile of side `side` containing it.
inline int tile_clearance(int c, int side) {
  const int lo = (c / side) * side;
  return std::min(c - lo + 1, lo + side - c);
}
}  // namespace detail

/// V*_{N,delta}: vertices at distance >= delta * side from the exterior of their tile,
/// simultaneously for the tilings of side N/L, N/KL, L and KL.
inline std::vector<Vertex> interior_region(const GridSpec& spec, int K, int L, int Kp, int Lp,
                                           double delta) {
  for (int k : {K, L, Kp, Lp})
    if (!detail::is_pow2(k)) throw ConfigError("interior_region: K, L, K', L' must be powers of two");
  if (!spec.is_power_of_two()) throw ConfigError("interior_region: N must be a power of two");
  if (spec.N % (K * L) != 0 || spec.N % (Kp * Lp) != 0)
    throw ConfigError("interior_region: KL and K'L' must divide N");
  if (!(delta > 0.0 && delta < 0.5)) throw DomainError("interior_region: delta must lie in (0,1/2)");
  const int sides[4] = {spec.N / L, spec.N / (K * L), L, K * L};
  std::vector<Vertex> out;
  for (int x = 0; x < spec.N; ++x)
    for (int y = 0; y < spec.N; ++y) {
      bool keep = true;
      for (int s : sides) {
        const double need = delta * s;
        if (detail::tile_clearance(x, s) < need || detail::tile_clearance(y, s) < need) {
          keep = false;
          break;
        }
      }
      if (keep) out.push_back({x, y});
    }
  return out;
}

/// The four nearest neighbours of v in Z^2.
inline std::array<Vertex, 4> neighbours(Vertex v) {
  return {Vertex{v.x + 1, v.y}, Vertex{v.x - 1, v.y}, Vertex{v.x, v.y + 1}, Vertex{v.x, v.y - 1}};
}

}  // namespace sigf
