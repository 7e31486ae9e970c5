#pragma once

// Centering sequences, r-local maxima, extremal point processes and region maxima.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "sigf/error.hpp"
#include "sigf/field.hpp"
#include "sigf/lattice.hpp"
#include "sigf/profile.hpp"

namespace sigf {

/// m_N = 2 log N - (1/4) log log N.
inline double m_centering(double N) {
  if (!(N > 2.0)) throw DomainError("m_centering: need N >= 3");
  return 2.0 * std::log(N) - 0.25 * std::log(std::log(N));
}

/// 2 log N I(k/n, t/n) - (min(t, n - lbar) log n) / (4 (n - lbar)), n = log2 N.
inline double m_kt(double N, double k, double t, const VarianceProfile& profile, double lbar = 0.0) {
  const double n = std::log2(N);
  if (!(0.0 <= k && k <= t && t <= n + 1e-12)) throw DomainError("m_kt: need 0 <= k <= t <= log2 N");
  if (!(lbar >= 0.0 && lbar < n)) throw DomainError("m_kt: need 0 <= lbar < log2 N");
  const double tt = std::min(t, n);
  return 2.0 * std::log(N) * profile.integral(k / n, tt / n) - (std::min(tt, n - lbar) * std::log(n)) / (4.0 * (n - lbar));
}

struct LocalMax {
  Vertex v;
  double height;
  bool clipped;  // Lambda_r(v) leaves V_N
};

inline bool window_clipped(const GridSpec& spec, Vertex v, int r) {
  return v.x - r < 0 || v.y - r < 0 || v.x + r >= spec.N || v.y + r >= spec.N;
}

/// All v with psi_v = max over Lambda_r(v) clipped to V_N; exact ties all qualify.
inline std::vector<LocalMax> local_maxima(const FieldSample& f, int r) {
  if (r < 1) throw DomainError("local_maxima: need r >= 1");
  const GridSpec& s = f.spec;
  const auto offs = l1_ball_offsets(r);
  std::vector<LocalMax> out;
  for (int x = 0; x < s.N; ++x)
    for (int y = 0; y < s.N; ++y) {
      const Vertex v{x, y};
      const double h = f(v);
      bool ok = true;
      for (Vertex w : neighbours(v))
        if (s.contains(w) && f(w) > h) {
          ok = false;
          break;
        }
      if (!ok) continue;
      for (Offset o : offs) {
        const Vertex w = v + o;
        if (s.contains(w) && f(w) > h) {
          ok = false;
          break;
        }
      }
      if (ok) out.push_back({v, h, window_clipped(s, v, r)});
    }
  return out;
}

struct Atom {
  double x1 = 0.0, x2 = 0.0;  // v / N
  double h = 0.0;             // height - centering
  Vertex v;
  bool clipped = false;
};

struct PointProcessSample {
  int N = 0;
  int r = 0;
  double centering = 0.0;
  std::vector<Atom> atoms;

  /// Atoms with x in the open rectangle (ax,bx) x (ay,by) and h in [hlo, hhi).
  std::size_t count(double ax, double bx, double ay, double by, double hlo, double hhi) const {
    std::size_t c = 0;
    for (auto& a : atoms)
      if (a.x1 > ax && a.x1 < bx && a.x2 > ay && a.x2 < by && a.h >= hlo && a.h < hhi) ++c;
    return c;
  }
};

inline PointProcessSample extremal_process(const FieldSample& f, int r) {
  PointProcessSample pp;
  pp.N = f.spec.N;
  pp.r = r;
  pp.centering = m_centering(f.spec.N);
  for (auto& m : local_maxima(f, r))
    pp.atoms.push_back({double(m.v.x) / pp.N, double(m.v.y) / pp.N, m.height - pp.centering, m.v, m.clipped});
  return pp;
}

struct ClusteredAtom {
  Atom atom;
  std::vector<Offset> offsets;   // offsets inside V_N
  std::vector<double> theta;     // psi_v - psi_{v+w}
  bool clipped = false;          // part of the window fell outside V_N
};

struct ClusteredSample {
  PointProcessSample base;
  int window = 0;
  std::vector<ClusteredAtom> atoms;
};

inline ClusteredSample full_process(const FieldSample& f, int r, int j) {
  if (j < 0 || j > r) throw DomainError("full_process: need 0 <= j <= r");
  ClusteredSample cs;
  cs.base = extremal_process(f, r);
  cs.window = j;
  const auto offs = l1_ball_offsets(j);
  for (const Atom& a : cs.base.atoms) {
    ClusteredAtom ca;
    ca.atom = a;
    for (Offset o : offs) {
      const Vertex w = a.v + o;
      if (!f.spec.contains(w)) {
        ca.clipped = true;
        continue;
      }
      ca.offsets.push_back(o);
      ca.theta.push_back(f(a.v) - f(w));
    }
    cs.atoms.push_back(std::move(ca));
  }
  return cs;
}

/// Atoms (x_i, h_i - theta_i(w)) over all atoms and window offsets.
inline PointProcessSample superpose(const ClusteredSample& cs) {
  PointProcessSample out;
  out.N = cs.base.N;
  out.r = cs.base.r;
  out.centering = cs.base.centering;
  for (auto& ca : cs.atoms)
    for (std::size_t i = 0; i < ca.offsets.size(); ++i) {
      Atom a = ca.atom;
      a.h -= ca.theta[i];
      a.clipped = ca.clipped;
      out.atoms.push_back(a);
    }
  return out;
}

/// Gamma_N(y) = {v : psi_v >= m_N - y}.
inline std::vector<Vertex> level_set(const FieldSample& f, double y) {
  const double thr = m_centering(f.spec.N) - y;
  std::vector<Vertex> out;
  for (std::size_t i = 0; i < f.spec.size(); ++i)
    if (f.heights(Eigen::Index(i)) >= thr) out.push_back(f.spec.vertex(i));
  return out;
}

inline std::size_t level_set_size(const FieldSample& f, double y) {
  const double thr = m_centering(f.spec.N) - y;
  return std::size_t((f.heights.array() >= thr).count());
}

/// (max over region of psi) - m_N per region; nullopt when a region has no vertex.
inline std::vector<std::optional<double>> joint_region_maxima(const FieldSample& f,
                                                              const std::vector<Region>& regions) {
  if (!pairwise_disjoint(regions)) throw DomainError("joint_region_maxima: regions must be disjoint");
  const double m = m_centering(f.spec.N);
  std::vector<std::optional<double>> out;
  for (const Region& r : regions) {
    std::optional<double> best;
    for (Vertex v : r.vertices)
      if (f.spec.contains(v) && (!best || f(v) > *best)) best = f(v);
    out.push_back(best ? std::optional<double>(*best - m) : std::nullopt);
  }
  return out;
}

}  // namespace sigf
