#pragma once

// Estimators and empirical checks: tail rates, separation and localization
// frequencies, cluster profiles, f_t, Laplace functionals, distances between
// laws, the level-set first-moment bound and Poisson/Cox count diagnostics.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sigf/cluster.hpp"
#include "sigf/decompose.hpp"
#include "sigf/error.hpp"
#include "sigf/extremal.hpp"
#include "sigf/field.hpp"
#include "sigf/profile.hpp"
#include "sigf/rng.hpp"

namespace sigf {

// ---------------------------------------------------------------- basics

struct Proportion {
  std::size_t k = 0, n = 0;
  double p = 0.0, lo = 0.0, hi = 1.0;
  double se() const { return n ? std::sqrt(p * (1.0 - p) / double(n)) : 0.0; }
};

/// Wilson score interval.
inline Proportion wilson(std::size_t k, std::size_t n, double z = 1.959963984540054) {
  Proportion r;
  r.k = k;
  r.n = n;
  if (n == 0) return r;
  const double nn = double(n), p = double(k) / nn, z2 = z * z;
  const double den = 1.0 + z2 / nn;
  const double c = (p + z2 / (2.0 * nn)) / den;
  const double h = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / den;
  r.p = p;
  r.lo = std::max(0.0, c - h);
  r.hi = std::min(1.0, c + h);
  return r;
}

struct Estimate {
  double value = 0.0;
  double se = 0.0;
  double lo = 0.0, hi = 0.0;  // confidence interval
};

inline double mean_of(const std::vector<double>& x) {
  if (x.empty()) throw DomainError("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
}

inline double variance_of(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / double(x.size() - 1);
}

inline Estimate mean_estimate(const std::vector<double>& x, double z = 1.959963984540054) {
  Estimate e;
  e.value = mean_of(x);
  e.se = std::sqrt(variance_of(x) / double(x.size()));
  e.lo = e.value - z * e.se;
  e.hi = e.value + z * e.se;
  return e;
}

// ---------------------------------------------------------------- tail rate

enum class TailMode { survival, density };

struct RateFit {
  double rate = 0.0;
  double se = 0.0;
  double lo = 0.0, hi = 0.0;  // fit window
  std::size_t n = 0;          // samples in the window
  std::string method;
};

namespace detail {

// slope of log P(X >= y) on an equispaced grid of the window, least squares
inline double survival_slope(const std::vector<double>& sorted, double lo, double hi, int grid) {
  std::vector<double> xs, ys;
  const double total = double(sorted.size());
  for (int i = 0; i <= grid; ++i) {
    const double y = lo + (hi - lo) * i / grid;
    const auto above = double(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), y));
    if (above > 0) {
      xs.push_back(y);
      ys.push_back(std::log(above / total));
    }
  }
  if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mx = mean_of(xs), my = mean_of(ys);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

// truncated-exponential MLE on [0, w] given the mean excess
inline double trunc_exp_mle(double mean_excess, double w) {
  auto mean_of_rate = [w](double lam) {
    if (std::abs(lam) < 1e-9) return w / 2.0;
    return 1.0 / lam - w / std::expm1(lam * w);
  };
  // mean_of_rate decreases from w (lam -> -inf) to 0 (lam -> +inf)
  double a = -50.0 / w, b = 50.0 / w;
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    (mean_of_rate(m) > mean_excess ? a : b) = m;
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// Exponential tail rate on [lo, hi]. Survival mode: minus the slope of log of the
/// empirical survival function, jackknife SE over 20 groups. Density mode:
/// truncated-exponential MLE of the heights in the band, Fisher-information SE.
inline RateFit tail_rate_fit(const std::vector<double>& samples, double lo, double hi,
                             TailMode mode = TailMode::survival, std::size_t min_count = 30) {
  if (!(hi > lo)) throw DomainError("tail_rate_fit: empty window");
  std::vector<double> s(samples);
  std::sort(s.begin(), s.end());
  RateFit f;
  f.lo = lo;
  f.hi = hi;
  const auto first = std::lower_bound(s.begin(), s.end(), lo);
  const auto last = mode == TailMode::survival ? s.end() : std::lower_bound(s.begin(), s.end(), hi);
  f.n = std::size_t(last - first);
  if (f.n < min_count)
    throw StatisticalError("tail_rate_fit: " + std::to_string(f.n) + " samples in window, need " +
                               std::to_string(min_count),
                           f.n);
  if (*first == *(last - 1)) throw StatisticalError("tail_rate_fit: degenerate samples (no spread in window)", f.n);

  if (mode == TailMode::density) {
    const double w = hi - lo;
    double m = 0.0;
    for (auto it = first; it != last; ++it) m += *it - lo;
    m /= double(f.n);
    f.rate = detail::trunc_exp_mle(m, w);
    const double lam = f.rate;
    double info = 1.0 / (lam * lam);
    if (std::abs(lam) > 1e-9) {
      const double e = std::exp(-lam * w);
      info -= w * w * e / ((1.0 - e) * (1.0 - e));
    } else {
      info = w * w / 12.0;
    }
    f.se = 1.0 / std::sqrt(double(f.n) * info);
    f.method = "density-mle";
    return f;
  }

  const int grid = 20;
  const double slope = detail::survival_slope(s, lo, hi, grid);
  if (!std::isfinite(slope)) throw StatisticalError("tail_rate_fit: survival function empty on the window", f.n);
  f.rate = -slope;
  // delete-a-group jackknife, groups by input position
  const int G = 20;
  std::vector<double> part;
  for (int g = 0; g < G; ++g) {
    std::vector<double> rest;
    rest.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
      if (int(i % G) != g) rest.push_back(samples[i]);
    std::sort(rest.begin(), rest.end());
    const double sl = detail::survival_slope(rest, lo, hi, grid);
    if (std::isfinite(sl)) part.push_back(-sl);
  }
  const double pm = mean_of(part);
  double acc = 0.0;
  for (double v : part) acc += (v - pm) * (v - pm);
  f.se = std::sqrt(acc * double(part.size() - 1) / double(part.size()));
  if (!(f.se > 0.0)) f.se = std::numeric_limits<double>::min();
  f.method = "survival-slope";
  return f;
}

// ---------------------------------------------------------------- separation

/// Does the field contain u, v with r <= |u - v|_2 <= N/r and both heights >= threshold?
inline bool separated_pair(const FieldSample& f, int r, double threshold) {
  std::vector<Vertex> hi;
  for (std::size_t i = 0; i < f.spec.size(); ++i)
    if (f.heights(Eigen::Index(i)) >= threshold) hi.push_back(f.spec.vertex(i));
  const double lo2 = double(r) * r, up = double(f.spec.N) / r, up2 = up * up;
  for (std::size_t i = 0; i < hi.size(); ++i)
    for (std::size_t j = i + 1; j < hi.size(); ++j) {
      const double dx = hi[i].x - hi[j].x, dy = hi[i].y - hi[j].y, d2 = dx * dx + dy * dy;
      if (d2 >= lo2 && d2 <= up2) return true;
    }
  return false;
}

/// Fraction of replicas with two points at distance in [r, N/r] above m_N - c log log r.
/// `loglog_r` overrides the log log r term (used for nesting checks at a fixed threshold).
inline Proportion separation_frequency(const std::vector<FieldSample>& fields, int r, double c,
                                       std::optional<double> loglog_r = std::nullopt) {
  if (r < 2) throw DomainError("separation_frequency: need r >= 2");
  std::size_t k = 0;
  for (const auto& f : fields) {
    if (f.spec.N / r < r) throw DomainError("separation_frequency: N/r < r");
    const double thr = m_centering(f.spec.N) - c * loglog_r.value_or(std::log(std::log(double(r))));
    if (separated_pair(f, r, thr)) ++k;
  }
  return wilson(k, fields.size());
}

// ---------------------------------------------------------------- localization

enum class LocalizationEvent {
  exists,  // some v above m_N - t has its binding value outside the window
  every    // every v above m_N - t has its binding value outside the window
};

struct LocalizationOptions {
  double gamma = 0.4;
  double t = 2.0;
  double window_scale = 1.0;  // multiplies log^gamma M; +inf disables the event
  LocalizationEvent event = LocalizationEvent::exists;
};

/// Among replicas with some psi_v >= m_N - t, the fraction where the binding field
/// Phi^{M,v}_v - 2 log N I(1 - log M / log N) leaves [-log^gamma M, log^gamma M].
inline Proportion localization_frequency(const std::vector<FieldSample>& fields, BindingEvaluator& binding,
                                         const VarianceProfile& profile, const LocalizationOptions& o) {
  if (!(o.gamma > 0.0 && o.gamma < 0.5)) throw DomainError("localization_frequency: need gamma in (0, 1/2)");
  const int M = binding.window();
  if (M < 2) throw DomainError("localization_frequency: need M >= 2");
  const double half = o.window_scale * std::pow(std::log(double(M)), o.gamma);
  std::size_t cond = 0, bad = 0;
  for (const auto& f : fields) {
    if (!f.has_underlying()) throw ConfigError("localization_frequency: samples must carry the underlying phi");
    const double logN = std::log(double(f.spec.N));
    const double centre = 2.0 * logN * profile.I(1.0 - std::log(double(M)) / logN);
    const double thr = m_centering(f.spec.N) - o.t;
    bool any = false, any_out = false, all_out = true;
    for (std::size_t i = 0; i < f.spec.size(); ++i) {
      if (f.heights(Eigen::Index(i)) < thr) continue;
      any = true;
      const Vertex v = f.spec.vertex(i);
      const bool out = std::abs(binding.evaluate(f, v) - centre) > half;
      any_out = any_out || out;
      all_out = all_out && out;
      if (o.event == LocalizationEvent::exists && any_out) break;
    }
    if (!any) continue;
    ++cond;
    if (o.event == LocalizationEvent::exists ? any_out : all_out) ++bad;
  }
  return wilson(bad, cond);
}

// ---------------------------------------------------------------- cluster profile

struct ClusterProfile {
  std::vector<Offset> offsets;
  std::vector<double> mean, se;
  std::size_t samples = 0;
  double slope = 0.0, slope_se = 0.0, intercept = 0.0;
  double reference_slope = 0.0;  // 2 sigma(1)

  double at(Offset w) const {
    for (std::size_t i = 0; i < offsets.size(); ++i)
      if (offsets[i] == w) return mean[i];
    throw DomainError("ClusterProfile: offset not in window");
  }
  double se_at(Offset w) const {
    for (std::size_t i = 0; i < offsets.size(); ++i)
      if (offsets[i] == w) return se[i];
    throw DomainError("ClusterProfile: offset not in window");
  }
};

/// Unclipped atoms of a clustered sample as cluster shapes.
inline std::vector<ClusterShape> shapes_from(const ClusteredSample& cs) {
  std::vector<ClusterShape> out;
  for (auto& a : cs.atoms) {
    if (a.clipped) continue;
    ClusterShape s;
    s.r = cs.window;
    s.offsets = a.offsets;
    s.theta = Eigen::Map<const Eigen::VectorXd>(a.theta.data(), Eigen::Index(a.theta.size()));
    out.push_back(std::move(s));
  }
  return out;
}

inline ClusterProfile cluster_profile(const std::vector<ClusterShape>& shapes, double sigma1,
                                      std::size_t min_samples = 100) {
  if (shapes.size() < min_samples)
    throw StatisticalError("cluster_profile: " + std::to_string(shapes.size()) + " samples, need " +
                               std::to_string(min_samples),
                           shapes.size());
  ClusterProfile p;
  p.samples = shapes.size();
  p.reference_slope = 2.0 * sigma1;
  p.offsets = shapes.front().offsets;
  const std::size_t m = p.offsets.size();
  std::vector<double> s1(m, 0.0), s2(m, 0.0);
  for (auto& s : shapes) {
    if (s.offsets != p.offsets) throw DomainError("cluster_profile: shapes on different windows");
    for (std::size_t i = 0; i < m; ++i) {
      const double v = s.theta(Eigen::Index(i));
      s1[i] += v;
      s2[i] += v * v;
    }
  }
  const double n = double(shapes.size());
  int window = 0;
  for (std::size_t i = 0; i < m; ++i) {
    p.mean.push_back(s1[i] / n);
    const double var = std::max(0.0, (s2[i] - s1[i] * s1[i] / n) / (n - 1.0));
    p.se.push_back(std::sqrt(var / n));
    window = std::max(window, l1_norm(p.offsets[i]));
  }
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < m; ++i) {
    const double d = l2_norm(p.offsets[i]);
    if (d >= 2.0 && d <= double(window)) {
      xs.push_back(std::log(d));
      ys.push_back(p.mean[i]);
    }
  }
  if (xs.size() >= 3) {
    const double mx = mean_of(xs), my = mean_of(ys);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    p.slope = sxy / sxx;
    p.intercept = my - p.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double e = ys[i] - p.intercept - p.slope * xs[i];
      rss += e * e;
    }
    p.slope_se = std::sqrt(rss / double(xs.size() - 2) / sxx);
  }
  return p;
}

// ---------------------------------------------------------------- f_t

/// Nodes and weights for E g(Z), Z standard normal (Golub-Welsch on the Hermite
/// Jacobi matrix).
struct GaussHermite {
  std::vector<double> x, w;
};

inline const GaussHermite& gauss_hermite(int n) {
  static std::mutex mu;
  static std::map<int, GaussHermite> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) J(i, i - 1) = J(i - 1, i) = std::sqrt(double(i));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  GaussHermite g;
  for (int i = 0; i < n; ++i) {
    g.x.push_back(es.eigenvalues()(i));
    const double v = es.eigenvectors()(0, i);
    g.w.push_back(v * v);
  }
  return cache.emplace(n, std::move(g)).first->second;
}

using TestFunction = std::function<double(double x1, double x2, double h)>;

inline constexpr int default_quadrature_nodes = 64;

/// f_t(x, h) = -log E exp(-f(x, h + W_t - drift t)), Var W_t = t, drift 1/2 by
/// default. Each evaluation is repeated with doubled nodes and must agree to 1e-8.
inline TestFunction f_t_transform(TestFunction f, double t, int nodes = default_quadrature_nodes, double drift = 0.5) {
  if (!(t >= 0.0)) throw DomainError("f_t_transform: need t >= 0");
  if (t == 0.0) return f;
  const double sd = std::sqrt(t);
  return [f = std::move(f), t, sd, nodes, drift](double x1, double x2, double h) {
    auto eval = [&](int n) {
      const auto& g = gauss_hermite(n);
      double acc = 0.0;
      for (std::size_t i = 0; i < g.x.size(); ++i) acc += g.w[i] * std::exp(-f(x1, x2, h + sd * g.x[i] - drift * t));
      return -std::log(acc);
    };
    const double a = eval(nodes), b = eval(2 * nodes);
    if (!(std::abs(a - b) <= 1e-8)) throw AccuracyError("f_t_transform: quadrature did not converge", std::abs(a - b));
    return b;
  };
}

/// <eta, f> for one point-process sample.
inline double pair_with(const PointProcessSample& pp, const TestFunction& f) {
  double s = 0.0;
  for (auto& a : pp.atoms) s += f(a.x1, a.x2, a.h);
  return s;
}

/// Mean of exp(-<eta, f>) over replicas, percentile bootstrap CI.
inline Estimate laplace_functional(const std::vector<PointProcessSample>& pps, const TestFunction& f,
                                   const RngStream& stream, int resamples = 1000, double level = 0.95) {
  if (pps.empty()) throw DomainError("laplace_functional: no samples");
  std::vector<double> v;
  v.reserve(pps.size());
  for (auto& p : pps) v.push_back(std::exp(-pair_with(p, f)));
  Estimate e = mean_estimate(v);
  auto s = stream.derive("bootstrap");
  std::vector<double> boot;
  const std::size_t n = v.size();
  for (int b = 0; b < resamples; ++b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += v[std::min(n - 1, std::size_t(s.uniform() * double(n)))];
    boot.push_back(acc / double(n));
  }
  std::sort(boot.begin(), boot.end());
  const double a = 0.5 * (1.0 - level);
  e.lo = boot[std::size_t(a * (resamples - 1))];
  e.hi = boot[std::size_t((1.0 - a) * (resamples - 1))];
  return e;
}

// ---------------------------------------------------------------- distances

enum class DistanceKind { kolmogorov, levy_prokhorov_1d, dominance };

namespace detail {

inline std::vector<double> sorted_copy(const std::vector<double>& a) {
  if (a.empty()) throw DomainError("distance: empty sample");
  std::vector<double> s(a);
  std::sort(s.begin(), s.end());
  return s;
}

// empirical CDF P(X <= x)
inline double ecdf(const std::vector<double>& s, double x) {
  return double(std::upper_bound(s.begin(), s.end(), x) - s.begin()) / double(s.size());
}
// empirical P(X > x)
inline double esurv(const std::vector<double>& s, double x) { return 1.0 - ecdf(s, x); }

}  // namespace detail

inline double kolmogorov_distance(const std::vector<double>& a, const std::vector<double>& b) {
  const auto sa = detail::sorted_copy(a), sb = detail::sorted_copy(b);
  double d = 0.0;
  for (double x : sa) d = std::max(d, std::abs(detail::ecdf(sa, x) - detail::ecdf(sb, x)));
  for (double x : sb) d = std::max(d, std::abs(detail::ecdf(sa, x) - detail::ecdf(sb, x)));
  return d;
}

/// inf{delta : F(x - delta) - delta <= G(x) <= F(x + delta) + delta for all x}, by
/// bisection; the sup over x is attained at sample points shifted by delta.
inline double levy_prokhorov_1d(const std::vector<double>& a, const std::vector<double>& b) {
  const auto sa = detail::sorted_copy(a), sb = detail::sorted_copy(b);
  auto ok = [&](double d) {
    for (double x : sa)
      if (detail::ecdf(sa, x) - detail::ecdf(sb, x + d) > d + 1e-15) return false;
    for (double x : sb)
      if (detail::ecdf(sb, x) - detail::ecdf(sa, x + d) > d + 1e-15) return false;
    return true;
  };
  if (ok(0.0)) return 0.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double m = 0.5 * (lo + hi);
    (ok(m) ? hi : lo) = m;
  }
  return hi;
}

/// inf{delta : mu(X > x) <= nu(Y > x - delta) + delta for all x}, with x over the
/// pooled sample points (componentwise orthants). Rows are samples.
inline double dominance_distance(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& nu) {
  if (mu.rows() == 0 || nu.rows() == 0) throw DomainError("distance: empty sample");
  if (mu.cols() != nu.cols()) throw DomainError("dominance distance: dimension mismatch");
  std::vector<Eigen::VectorXd> grid;
  for (Eigen::Index i = 0; i < mu.rows(); ++i) grid.push_back(mu.row(i).transpose());
  for (Eigen::Index i = 0; i < nu.rows(); ++i) grid.push_back(nu.row(i).transpose());
  auto orthant = [](const Eigen::MatrixXd& s, const Eigen::VectorXd& x, double shift, bool closed) {
    std::size_t c = 0;
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      bool in = true;
      for (Eigen::Index k = 0; k < s.cols() && in; ++k)
        in = closed ? s(i, k) >= x(k) - shift : s(i, k) > x(k) - shift;
      if (in) ++c;
    }
    return double(c) / double(s.rows());
  };
  // x just below a grid point: mu(X >= g) is the sup of mu(X > x) over x < g
  std::vector<double> lhs;
  for (auto& g : grid) lhs.push_back(orthant(mu, g, 0.0, true));
  auto ok = [&](double d) {
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (lhs[i] > orthant(nu, grid[i], d, true) + d + 1e-15) return false;
    return true;
  };
  if (ok(0.0)) return 0.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 50; ++it) {
    const double m = 0.5 * (lo + hi);
    (ok(m) ? hi : lo) = m;
  }
  return hi;
}

inline double distance(const std::vector<double>& a, const std::vector<double>& b, DistanceKind kind) {
  switch (kind) {
    case DistanceKind::kolmogorov: return kolmogorov_distance(a, b);
    case DistanceKind::levy_prokhorov_1d: return levy_prokhorov_1d(a, b);
    case DistanceKind::dominance:
      return dominance_distance(Eigen::Map<const Eigen::VectorXd>(a.data(), Eigen::Index(a.size())),
                                Eigen::Map<const Eigen::VectorXd>(b.data(), Eigen::Index(b.size())));
  }
  throw InternalError("distance: unknown kind");
}

/// Asymptotic two-sample Kolmogorov-Smirnov p-value.
inline double ks_pvalue(double D, std::size_t n1, std::size_t n2) {
  const double ne = std::sqrt(double(n1) * double(n2) / double(n1 + n2));
  const double lam = (ne + 0.12 + 0.11 / ne) * D;
  if (lam < 1e-3) return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lam * lam);
    sum += term;
    if (std::abs(term) < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double D = 0.0, pvalue = 1.0;
  bool accept(double level = 0.05) const { return pvalue > level; }
};

inline KsResult ks_two_sample(const std::vector<double>& a, const std::vector<double>& b) {
  KsResult r;
  r.D = kolmogorov_distance(a, b);
  r.pvalue = ks_pvalue(r.D, a.size(), b.size());
  return r;
}

// ---------------------------------------------------------------- level sets

struct LevelSetReport {
  double y = 0.0, kappa_z = 0.0;
  double max_variance = 0.0;
  double first_moment_bound = 0.0;  // bound on E |Gamma_N(y)|
  double constant = 0.0;            // C with first_moment_bound = C e^{2y}
  double bound = 0.0;               // min(1, C e^{2y - kappa z})
  Proportion empirical;             // P(|Gamma_N(y)| > e^{kappa z})
  bool pass = false;                // empirical <= bound + 3 SE
};

/// N^2 sqrt(maxVar) / (sqrt(2 pi) (m_N - y)) exp(-(m_N - y)^2 / (2 maxVar)): the
/// union bound with the Gaussian Mills-ratio tail at the largest variance.
inline double level_set_first_moment(int N, double y, double max_variance) {
  const double u = m_centering(N) - y;
  if (!(u > 0.0)) return double(N) * N;
  const double b = double(N) * N * std::sqrt(max_variance) / (std::sqrt(2.0 * M_PI) * u) *
                   std::exp(-u * u / (2.0 * max_variance));
  return std::min(b, double(N) * N);
}

inline LevelSetReport level_set_bound_check(int N, double max_variance, double y, double kappa, double z,
                                            const std::vector<std::size_t>& level_set_sizes) {
  if (!(z > 1.0)) throw DomainError("level_set_bound_check: need z > 1");
  LevelSetReport r;
  r.y = y;
  r.kappa_z = kappa * z;
  r.max_variance = max_variance;
  r.first_moment_bound = level_set_first_moment(N, y, max_variance);
  r.constant = r.first_moment_bound * std::exp(-2.0 * y);
  r.bound = std::min(1.0, r.constant * std::exp(2.0 * y - r.kappa_z));
  const double thr = std::exp(r.kappa_z);
  std::size_t k = 0;
  for (auto s : level_set_sizes)
    if (double(s) > thr) ++k;
  r.empirical = wilson(k, level_set_sizes.size());
  r.pass = r.empirical.p <= r.bound + 3.0 * r.empirical.se();
  return r;
}

// ---------------------------------------------------------------- Poisson / Cox

struct ScaledRect {
  double ax, bx, ay, by;  // open rectangle (ax,bx) x (ay,by) in [0,1]^2
};

struct RegionCounts {
  double mean = 0.0, variance = 0.0;
  double dispersion = 0.0;     // variance / mean
  double dispersion_se = 0.0;  // sqrt(2 / (n - 1)), the Poisson reference
};

struct PoissonReport {
  std::vector<RegionCounts> regions;
  Eigen::MatrixXd correlation;   // pairwise count correlations
  std::vector<std::vector<double>> counts;  // [region][replica]
};

inline PoissonReport poisson_diagnostics(const std::vector<PointProcessSample>& pps,
                                         const std::vector<ScaledRect>& regions, double hlo, double hhi) {
  if (pps.size() < 2) throw DomainError("poisson_diagnostics: need >= 2 replicas");
  for (std::size_t i = 0; i < regions.size(); ++i)
    for (std::size_t j = i + 1; j < regions.size(); ++j) {
      const auto &a = regions[i], &b = regions[j];
      if (a.ax < b.bx && b.ax < a.bx && a.ay < b.by && b.ay < a.by)
        throw DomainError("poisson_diagnostics: regions must be disjoint");
    }
  PoissonReport rep;
  const auto k = regions.size();
  rep.counts.assign(k, {});
  for (auto& p : pps)
    for (std::size_t i = 0; i < k; ++i) {
      const auto& r = regions[i];
      rep.counts[i].push_back(double(p.count(r.ax, r.bx, r.ay, r.by, hlo, hhi)));
    }
  const double n = double(pps.size());
  for (std::size_t i = 0; i < k; ++i) {
    RegionCounts c;
    c.mean = mean_of(rep.counts[i]);
    c.variance = variance_of(rep.counts[i]);
    c.dispersion = c.mean > 0.0 ? c.variance / c.mean : 0.0;
    c.dispersion_se = std::sqrt(2.0 / (n - 1.0));
    rep.regions.push_back(c);
  }
  rep.correlation = Eigen::MatrixXd::Identity(Eigen::Index(k), Eigen::Index(k));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      double sxy = 0.0;
      for (std::size_t t = 0; t < pps.size(); ++t)
        sxy += (rep.counts[i][t] - rep.regions[i].mean) * (rep.counts[j][t] - rep.regions[j].mean);
      const double den = std::sqrt(rep.regions[i].variance * rep.regions[j].variance) * (n - 1.0);
      rep.correlation(Eigen::Index(i), Eigen::Index(j)) = rep.correlation(Eigen::Index(j), Eigen::Index(i)) =
          den > 0.0 ? sxy / den : 0.0;
    }
  return rep;
}

}  // namespace sigf
