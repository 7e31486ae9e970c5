#pragma once

// Box-indexed Gaussian perturbations, the independent-copy variant, and the
// smoothing interpolation between two independent copies of a field.

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "sigf/error.hpp"
#include "sigf/field.hpp"
#include "sigf/rng.hpp"

namespace sigf {

/// g_B for the box of side `side` containing v. Draws are keyed by (side, box index),
/// so every vertex of one box sees the same value and equal keys share a draw.
inline double box_gaussian(const RngStream& stream, int side, Vertex v) {
  auto s = stream.derive("g").derive(std::uint64_t(side)).derive(std::to_string(v.x / side) + ":" +
                                                                 std::to_string(v.y / side));
  return s.normal();
}

/// psi_v + s1 g_{B(v, r1)} + s2 g_{B(v, N / r2)}.
inline FieldSample perturbed_field(const FieldSample& base, double s1, double s2, int r1, int r2,
                                   const RngStream& stream) {
  const int N = base.spec.N;
  if (r1 < 1 || r2 < 1 || r1 > N || r2 > N) throw DomainError("perturbed_field: need 1 <= r1, r2 <= N");
  if (s1 < 0.0 || s2 < 0.0) throw DomainError("perturbed_field: s1, s2 must be >= 0");
  FieldSample out = base;
  out.sampler = base.sampler + "+perturbed";
  if (s1 == 0.0 && s2 == 0.0) return out;
  const int side2 = std::max(1, N / r2);
  // one draw per box, cached per tiling
  auto tile = [&](int side) {
    const int nb = (N + side - 1) / side;
    Eigen::MatrixXd g(nb, nb);
    for (int a = 0; a < nb; ++a)
      for (int b = 0; b < nb; ++b) g(a, b) = box_gaussian(stream, side, {a * side, b * side});
    return g;
  };
  const Eigen::MatrixXd g1 = tile(r1), g2 = tile(side2);
  for (int x = 0; x < N; ++x)
    for (int y = 0; y < N; ++y)
      out.heights(Eigen::Index(base.spec.index({x, y}))) += s1 * g1(x / r1, y / r1) + s2 * g2(x / side2, y / side2);
  return out;
}

/// psi + sqrt(|s|^2 / log N) psi~ with psi~ an independent copy.
inline FieldSample perturbed_field_star(const FieldSample& base, const FieldSample& independent_copy, double s1,
                                        double s2) {
  if (!(base.spec == independent_copy.spec)) throw DomainError("perturbed_field_star: grid mismatch");
  FieldSample out = base;
  out.heights += std::sqrt((s1 * s1 + s2 * s2) / std::log(double(base.spec.N))) * independent_copy.heights;
  out.underlying.reset();
  out.sampler = base.sampler + "+star";
  return out;
}

/// sqrt(1 - t/log N) psi' + sqrt(t/log N) psi''.
inline FieldSample smoothing_transform(const FieldSample& a, const FieldSample& b, double t) {
  if (!(a.spec == b.spec)) throw DomainError("smoothing_transform: grid mismatch");
  const double logN = std::log(double(a.spec.N));
  if (!(t >= 0.0) || !(t < logN)) throw DomainError("smoothing_transform: need 0 <= t < log N");
  if (t == 0.0) return a;
  FieldSample out;
  out.spec = a.spec;
  out.heights = std::sqrt(1.0 - t / logN) * a.heights + std::sqrt(t / logN) * b.heights;
  out.sampler = "smoothed";
  return out;
}

/// Covariance of the smoothing output for input covariance C (both copies share C).
inline Eigen::MatrixXd smoothing_covariance(const Eigen::MatrixXd& C, double t, int N) {
  const double logN = std::log(double(N));
  return (1.0 - t / logN) * C + (t / logN) * C;
}

}  // namespace sigf
