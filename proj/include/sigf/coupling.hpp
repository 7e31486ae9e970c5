#pragma once

// Generative coupling model over the (KL)^2 coarse boxes: Bernoulli thinning,
// shifted exponentials and a coarse Gaussian field; region maxima G^(i), the
// D functionals, beta* estimation and the Laplace prediction of the joint CDF.

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "sigf/error.hpp"
#include "sigf/extremal.hpp"
#include "sigf/gaussian.hpp"
#include "sigf/green.hpp"
#include "sigf/lattice.hpp"
#include "sigf/profile.hpp"
#include "sigf/rng.hpp"
#include "sigf/stats.hpp"
#include "sigf/three_field.hpp"

namespace sigf {

/// Exponent convention of D: (1 + sigma^2(0)) log KL per box, or twice that.
enum class DExponent { single = 1, doubled = 2 };

struct CouplingParams {
  int K = 4, L = 4, Kp = 4, Lp = 4;
  double gamma = 0.25;
  double beta_star = 1.0;
  double sigma2_0 = 0.5;
  DExponent d_exponent = DExponent::single;

  int side() const { return K * L; }                    // boxes per axis
  int box_count() const { return side() * side(); }     // R
  double kbar() const { return std::log(double(K * L)); }
  double kbar_gamma() const { return std::pow(kbar(), gamma); }
  double success_probability() const {
    return beta_star * std::exp(2.0 * kbar_gamma()) * std::exp(2.0 * kbar() * (sigma2_0 - 1.0));
  }

  void validate() const {
    if (K < 1 || L < 1 || K * L < 2) throw ConfigError("coupling: need K L >= 2");
    if (!(gamma > 0.0 && gamma < 0.5)) throw ConfigError("coupling: gamma must lie in (0, 1/2)");
    if (!(sigma2_0 < 1.0 && sigma2_0 > 0.0)) throw ConfigError("coupling: need 0 < sigma(0) < 1");
    if (!(beta_star >= 0.0)) throw ConfigError("coupling: beta* must be >= 0");
    const double p = success_probability();
    if (p > 1.0) {
      std::ostringstream os;
      os << "coupling: Bernoulli success probability " << p << " > 1 (kbar = " << kbar()
         << ", sigma(0) = " << std::sqrt(sigma2_0) << ", beta* = " << beta_star << ")";
      throw ConfigError(os.str());
    }
  }

  static CouplingParams from_profile(int K, int L, const VarianceProfile& profile) {
    CouplingParams p;
    p.K = K;
    p.L = L;
    p.sigma2_0 = profile.sigma2_first();
    return p;
  }
};

/// Index sets T_i: boxes whose centres fall in the open scaled rectangle.
inline std::vector<int> boxes_in(const CouplingParams& p, const ScaledRect& r) {
  std::vector<int> out;
  const int s = p.side();
  for (int a = 0; a < s; ++a)
    for (int b = 0; b < s; ++b) {
      const double cx = (a + 0.5) / s, cy = (b + 0.5) / s;
      if (cx > r.ax && cx < r.bx && cy > r.ay && cy < r.by) out.push_back(a * s + b);
    }
  return out;
}

/// Coarse Gaussian with kernel sigma^2(0) G_{KL} on the box grid.
class CouplingModel {
 public:
  explicit CouplingModel(const CouplingParams& p) : p_(p) {
    p.validate();
    law_ = GaussianLaw::centred(p.sigma2_0 * green_table(GridSpec(p.side())).matrix);
  }

  const CouplingParams& params() const { return p_; }
  const GaussianLaw& z_law() const { return law_; }

  Eigen::VectorXd sample_z(RngStream& s) const { return gaussian_sample(law_, s); }

  /// Y on [-kbar^gamma, inf) with P(Y >= x) = exp(-2 (x + kbar^gamma)).
  double sample_y(RngStream& s) const { return -p_.kbar_gamma() + s.exponential(2.0); }

 private:
  CouplingParams p_;
  GaussianLaw law_;
};

struct CouplingDraw {
  Eigen::VectorXd z;
  std::vector<std::optional<double>> g;  // nullopt: no retained box in T_i
};

struct CouplingOverrides {
  bool force_retain = false;  // every rho = 1
};

inline CouplingDraw sample_coupling(const CouplingModel& model, const std::vector<std::vector<int>>& regions,
                                    const RngStream& stream, CouplingOverrides ov = {}) {
  const auto& p = model.params();
  auto sz = stream.derive("z"), sr = stream.derive("rho"), sy = stream.derive("y");
  CouplingDraw d;
  d.z = model.sample_z(sz);
  const double q = p.success_probability();
  const double shift = 2.0 * p.kbar() * (1.0 - p.sigma2_0) - 2.0 * p.kbar();
  std::vector<double> val(std::size_t(p.box_count()), -std::numeric_limits<double>::infinity());
  std::vector<char> kept(std::size_t(p.box_count()), 0);
  for (int j = 0; j < p.box_count(); ++j) {
    const bool rho = sr.bernoulli(q);
    const double y = model.sample_y(sy);
    if (rho || ov.force_retain) {
      kept[std::size_t(j)] = 1;
      val[std::size_t(j)] = y + d.z(j) + shift;
    }
  }
  for (auto& T : regions) {
    std::optional<double> best;
    for (int j : T) {
      if (j < 0 || j >= p.box_count()) throw DomainError("sample_coupling: box index out of range");
      if (kept[std::size_t(j)] && (!best || val[std::size_t(j)] > *best)) best = val[std::size_t(j)];
    }
    d.g.push_back(best);
  }
  return d;
}

/// D(A_i) = sum_{j in T_i} exp(-2 (c (1 + sigma^2(0)) log KL - Z_j)), c from the switch.
inline std::vector<double> compute_D(const Eigen::VectorXd& z, const std::vector<std::vector<int>>& regions,
                                     const CouplingParams& p) {
  if (z.size() != p.box_count()) throw DomainError("compute_D: Z must cover all boxes");
  const double c = double(int(p.d_exponent)) * (1.0 + p.sigma2_0) * p.kbar();
  std::vector<double> out;
  for (auto& T : regions) {
    double s = 0.0;
    for (int j : T) s += std::exp(-2.0 * (c - z(j)));
    out.push_back(s);
  }
  return out;
}

/// Mean over D samples of exp(-beta* sum_i D_i e^{-2 x_i}).
inline double laplace_prediction(const std::vector<std::vector<double>>& D, double beta_star,
                                 const std::vector<double>& x) {
  if (D.empty()) throw DomainError("laplace_prediction: no D samples");
  double acc = 0.0;
  for (auto& d : D) {
    if (d.size() != x.size()) throw DomainError("laplace_prediction: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += d[i] * std::exp(-2.0 * x[i]);
    acc += std::exp(-beta_star * s);
  }
  return acc / double(D.size());
}

/// Empirical P(G^(i) <= x_i for all i); a missing maximum counts as below every x.
inline Proportion empirical_joint_cdf(const std::vector<CouplingDraw>& draws, const std::vector<double>& x) {
  std::size_t k = 0;
  for (auto& d : draws) {
    bool all = true;
    for (std::size_t i = 0; i < x.size() && all; ++i) all = !d.g[i] || *d.g[i] <= x[i];
    if (all) ++k;
  }
  return wilson(k, draws.size());
}

// ---------------------------------------------------------------- beta*

struct BetaStarEstimate {
  double value = 0.0, se = 0.0;
  std::vector<double> z_grid;
  std::vector<double> per_z, per_z_se;
  double slope = 0.0, slope_se = 0.0;  // of per-z values against z
  bool plateau = true;                 // |slope| <= 3 SE
  double centre = 0.0;
};

/// Max of the fine field S - S^c over the coarse box (bx, by).
inline double fine_field_box_max(const ThreeFieldModel& model, const Calibration& cal, const RngStream& stream,
                                 int bx, int by) {
  auto sm = stream.derive("middle"), sb = stream.derive("bottom"), st = stream.derive("theta");
  Eigen::VectorXd h = model.sample_component(Component::middle, sm) + model.sample_component(Component::bottom, sb);
  const auto& p = model.params();
  const int f = p.fine_side(), nb = p.N / f, s = p.coarse_side();
  std::vector<double> theta(std::size_t(nb * nb));
  for (auto& t : theta) t = st.normal();
  double best = -std::numeric_limits<double>::infinity();
  for (int x = bx * s; x < (bx + 1) * s; ++x)
    for (int y = by * s; y < (by + 1) * s; ++y) {
      const double v = h(Eigen::Index(model.spec().index({x, y}))) +
                       cal.a(x % f, y % f) * theta[std::size_t((x / f) * nb + y / f)];
      best = std::max(best, v);
    }
  return best;
}

/// Centring of the fine-field box maximum: m(k, n) - kbar^gamma with k = log2 KL.
inline double beta_star_centre(const ThreeFieldModel& model, const CouplingParams& p) {
  const auto& tp = model.params();
  return m_kt(tp.N, std::log2(double(tp.K * tp.L)), std::log2(double(tp.N)), model.profile()) - p.kbar_gamma();
}

inline BetaStarEstimate estimate_beta_star(const std::vector<double>& box_maxima, double centre,
                                           const CouplingParams& p, const std::vector<double>& z_grid) {
  if (box_maxima.empty() || z_grid.empty()) throw DomainError("estimate_beta_star: empty input");
  BetaStarEstimate e;
  e.z_grid = z_grid;
  e.centre = centre;
  const double pref = std::exp(2.0 * std::log(2.0) * p.kbar() * (1.0 - p.sigma2_0)) * std::exp(-2.0 * p.kbar_gamma());
  for (double z : z_grid) {
    std::size_t k = 0;
    for (double m : box_maxima)
      if (m >= centre + z) ++k;
    const auto pr = wilson(k, box_maxima.size());
    const double scale = pref * std::exp(2.0 * z);
    e.per_z.push_back(scale * pr.p);
    e.per_z_se.push_back(scale * pr.se());
  }
  e.value = mean_of(e.per_z);
  double v = 0.0;
  for (double s : e.per_z_se) v += s * s;
  e.se = std::sqrt(v) / double(z_grid.size());
  if (z_grid.size() >= 2) {
    const double mz = mean_of(z_grid);
    double sxx = 0.0, sxy = 0.0, var = 0.0;
    for (std::size_t i = 0; i < z_grid.size(); ++i) {
      sxx += (z_grid[i] - mz) * (z_grid[i] - mz);
      sxy += (z_grid[i] - mz) * (e.per_z[i] - e.value);
    }
    e.slope = sxy / sxx;
    for (std::size_t i = 0; i < z_grid.size(); ++i) {
      const double c = (z_grid[i] - mz) / sxx;
      var += c * c * e.per_z_se[i] * e.per_z_se[i];
    }
    e.slope_se = std::sqrt(var);
    e.plateau = std::abs(e.slope) <= 3.0 * e.slope_se;
  }
  return e;
}

}  // namespace sigf
