#pragma once

// Three-field approximation of psi: coarse block field + modified inhomogeneous
// branching random walk (MIBRW) + independent bottom DGFFs + variance-matching
// Gaussians a(vbar) Theta_j.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sigf/dgff.hpp"
#include "sigf/error.hpp"
#include "sigf/field.hpp"
#include "sigf/gaussian.hpp"
#include "sigf/green.hpp"
#include "sigf/inhomogeneous.hpp"
#include "sigf/lattice.hpp"
#include "sigf/profile.hpp"

namespace sigf {

enum class Component { coarse, middle, bottom };

inline const char* to_string(Component c) {
  switch (c) {
    case Component::coarse: return "coarse";
    case Component::middle: return "middle";
    case Component::bottom: return "bottom";
  }
  return "?";
}

struct ThreeFieldParams {
  int N = 64, K = 2, L = 2, Kp = 4, Lp = 4;

  int coarse_side() const { return N / (K * L); }  // side of the N/KL boxes
  int fine_side() const { return Kp * Lp; }        // side of the K'L' boxes
  int n() const { return int(std::lround(std::log2(double(N)))); }
  int level_lo() const { return int(std::lround(std::log2(double(Kp * Lp)))); }
  int level_hi() const { return n() - int(std::lround(std::log2(double(K * L)))); }

  void validate() const {
    for (int v : {N, K, L, Kp, Lp})
      if (!detail::is_pow2(v)) throw ConfigError("three-field: N, K, L, K', L' must be powers of two");
    if (N % (K * L) != 0 || N % (Kp * Lp) != 0) throw ConfigError("three-field: KL and K'L' must divide N");
    if (K * L < 2 || Kp * Lp < 2) throw ConfigError("three-field: KL and K'L' must be at least 2");
    if (level_lo() > level_hi()) throw ConfigError("three-field: need K'L' <= N/KL");
  }

  friend bool operator==(const ThreeFieldParams&, const ThreeFieldParams&) = default;
};

class ThreeFieldModel {
 public:
  ThreeFieldModel(const ThreeFieldParams& p, const VarianceProfile& profile) : p_(p), profile_(profile), spec_(p.N) {
    p.validate();
    const int kl = p.K * p.L;
    coarse_green_ = green_table(GridSpec(kl)).matrix;
    coarse_law_ = GaussianLaw::centred(profile.sigma2_first() * coarse_green_);
    bottom_ = std::make_shared<DgffSampler>(GridSpec(p.fine_side()), std::max(default_exact_cap, p.fine_side()));
    bottom_green_diag_ = green_table(GridSpec(p.fine_side()), 1u << 16).matrix.diagonal();
    const int n = p.n();
    for (int j = p.level_lo(); j <= p.level_hi(); ++j) {
      const double integral = n * profile.sigma_integral(double(n - j - 1) / n, double(n - j) / n);
      weights_.push_back(std::ldexp(1.0, -j) * std::sqrt(std::log(2.0)) * integral);
    }
  }

  const ThreeFieldParams& params() const { return p_; }
  const VarianceProfile& profile() const { return profile_; }
  const GridSpec& spec() const { return spec_; }
  /// MIBRW weight per dyadic level, from level_lo() upwards.
  const std::vector<double>& level_weights() const { return weights_; }

  Eigen::VectorXd sample_component(Component c, RngStream& stream) const {
    switch (c) {
      case Component::coarse: return sample_coarse(stream);
      case Component::middle: return sample_middle(stream);
      case Component::bottom: return sample_bottom(stream);
    }
    throw InternalError("unknown component");
  }

  double coarse_variance(Vertex v) const {
    const int kl = p_.K * p_.L, s = p_.coarse_side();
    const int i = (v.x / s) * kl + (v.y / s);
    return profile_.sigma2_first() * coarse_green_(i, i);
  }
  double middle_variance(Vertex v) const {
    const Vertex c = fine_corner(v);
    double acc = 0.0;
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      const int j = p_.level_lo() + int(k);
      acc += double(dyadic_box_count(c, j)) * weights_[k] * weights_[k];
    }
    return acc;
  }
  double bottom_variance(Vertex v) const {
    const int f = p_.fine_side();
    return profile_.sigma2_last() * bottom_green_diag_(Eigen::Index((v.x % f) * f + (v.y % f)));
  }
  double component_variance(Vertex v) const { return coarse_variance(v) + middle_variance(v) + bottom_variance(v); }

  Vertex fine_corner(Vertex v) const {
    const int f = p_.fine_side();
    return {(v.x / f) * f, (v.y / f) * f};
  }

 private:
  Eigen::VectorXd sample_coarse(RngStream& stream) const {
    const Eigen::VectorXd z = gaussian_sample(coarse_law_, stream);
    const int kl = p_.K * p_.L, s = p_.coarse_side();
    Eigen::VectorXd out(Eigen::Index(spec_.size()));
    for (int x = 0; x < p_.N; ++x)
      for (int y = 0; y < p_.N; ++y) out(Eigen::Index(spec_.index({x, y}))) = z((x / s) * kl + (y / s));
    return out;
  }

  // For each coarse box and level, i.i.d. Gaussians on the dyadic-box corners that
  // can contain a K'L' corner of that coarse box; box sums by 2D prefix sums.
  Eigen::VectorXd sample_middle(RngStream& stream) const {
    const int N = p_.N, kl = p_.K * p_.L, s = p_.coarse_side(), f = p_.fine_side();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(Eigen::Index(spec_.size()));
    std::vector<double> pre;
    for (int bi = 0; bi < kl; ++bi)
      for (int bj = 0; bj < kl; ++bj) {
        // per coarse box: sum over levels at each K'L' corner
        const int cx0 = bi * s, cy0 = bj * s;
        const int nf = s / f;
        std::vector<double> acc(std::size_t(nf) * nf, 0.0);
        for (std::size_t k = 0; k < weights_.size(); ++k) {
          const int side = 1 << (p_.level_lo() + int(k));
          const int gx0 = std::max(0, cx0 - side + 1), gy0 = std::max(0, cy0 - side + 1);
          const int gx1 = std::min(N - 1, cx0 + s - 1), gy1 = std::min(N - 1, cy0 + s - 1);
          const int w = gx1 - gx0 + 1, h = gy1 - gy0 + 1;
          pre.assign(std::size_t(w + 1) * (h + 1), 0.0);
          auto P = [&](int a, int b) -> double& { return pre[std::size_t(a) * (h + 1) + b]; };
          for (int a = 0; a < w; ++a)
            for (int b = 0; b < h; ++b) P(a + 1, b + 1) = stream.normal() + P(a, b + 1) + P(a + 1, b) - P(a, b);
          for (int ci = 0; ci < nf; ++ci)
            for (int cj = 0; cj < nf; ++cj) {
              const int cx = cx0 + ci * f, cy = cy0 + cj * f;
              const int ax = std::max(gx0, cx - side + 1) - gx0, bx = cx - gx0 + 1;
              const int ay = std::max(gy0, cy - side + 1) - gy0, by = cy - gy0 + 1;
              const double sum = P(bx, by) - P(ax, by) - P(bx, ay) + P(ax, ay);
              acc[std::size_t(ci) * nf + cj] += weights_[k] * sum;
            }
        }
        for (int x = cx0; x < cx0 + s; ++x)
          for (int y = cy0; y < cy0 + s; ++y)
            out(Eigen::Index(spec_.index({x, y}))) = acc[std::size_t((x - cx0) / f) * nf + (y - cy0) / f];
      }
    return out;
  }

  Eigen::VectorXd sample_bottom(RngStream& stream) const {
    const int f = p_.fine_side(), nb = p_.N / f;
    const double sigma1 = profile_.sigma_last();
    Eigen::VectorXd out(Eigen::Index(spec_.size()));
    for (int bx = 0; bx < nb; ++bx)
      for (int by = 0; by < nb; ++by) {
        const Eigen::VectorXd phi = bottom_->draw(stream);
        for (int x = 0; x < f; ++x)
          for (int y = 0; y < f; ++y)
            out(Eigen::Index(spec_.index({bx * f + x, by * f + y}))) = sigma1 * phi(x * f + y);
      }
    return out;
  }

  ThreeFieldParams p_;
  VarianceProfile profile_;
  GridSpec spec_;
  Eigen::MatrixXd coarse_green_;
  GaussianLaw coarse_law_;
  std::shared_ptr<DgffSampler> bottom_;
  Eigen::VectorXd bottom_green_diag_;
  std::vector<double> weights_;
};

struct Calibration {
  ThreeFieldParams params;
  std::uint64_t profile_hash = 0;
  Eigen::MatrixXd a;  // a(vbar), indexed by residue (x mod K'L', y mod K'L')
  double alpha = 0.0;
  Vertex representative_corner;  // corner of the K'L' box used for calibration
  double max_abs_residual = 0.0; // max |Var S - Var psi - 4 alpha| at representatives
};

inline Calibration calibrate_three_field(const ThreeFieldModel& model, const InhomogeneousSampler& psi) {
  if (!(psi.spec() == model.spec()) || !(psi.op().profile() == model.profile()))
    throw ConfigError("calibrate_three_field: psi sampler and model disagree on grid or profile");
  const auto& p = model.params();
  const int f = p.fine_side();
  Calibration cal;
  cal.params = p;
  cal.profile_hash = model.profile().hash();
  cal.representative_corner = model.fine_corner({p.N / 2, p.N / 2});
  Eigen::MatrixXd var_psi(f, f), var_s(f, f);
  double gap = 0.0;
  for (int x = 0; x < f; ++x)
    for (int y = 0; y < f; ++y) {
      const Vertex v = cal.representative_corner + Vertex{x, y};
      var_psi(x, y) = psi.variance(v);
      var_s(x, y) = model.component_variance(v);
      gap = std::max(gap, var_s(x, y) - var_psi(x, y));
    }
  cal.alpha = 0.25 * std::max(gap, 0.0);
  cal.a.resize(f, f);
  for (int x = 0; x < f; ++x)
    for (int y = 0; y < f; ++y) {
      const double a2 = var_psi(x, y) + 4.0 * cal.alpha - var_s(x, y);
      if (a2 < -1e-12) throw InternalError("calibrate_three_field: negative a^2 after alpha choice");
      cal.a(x, y) = std::sqrt(std::max(a2, 0.0));
      const double resid = var_s(x, y) + cal.a(x, y) * cal.a(x, y) - var_psi(x, y) - 4.0 * cal.alpha;
      cal.max_abs_residual = std::max(cal.max_abs_residual, std::abs(resid));
    }
  return cal;
}

inline double three_field_variance(const ThreeFieldModel& model, const Calibration& cal, Vertex v) {
  const int f = model.params().fine_side();
  const double a = cal.a(v.x % f, v.y % f);
  return model.component_variance(v) + a * a;
}

/// S = coarse + middle + bottom + a(vbar) Theta_j. Components use the child streams
/// "coarse", "middle", "bottom" and "theta" of `stream`.
inline FieldSample sample_three_field(const ThreeFieldModel& model, const Calibration& cal, const RngStream& stream) {
  if (!(cal.params == model.params()) || cal.profile_hash != model.profile().hash())
    throw ConfigError("sample_three_field: calibration context does not match the model");
  auto sc = stream.derive("coarse"), sm = stream.derive("middle"), sb = stream.derive("bottom"),
       st = stream.derive("theta");
  FieldSample out;
  out.spec = model.spec();
  out.heights = model.sample_component(Component::coarse, sc) + model.sample_component(Component::middle, sm) +
                model.sample_component(Component::bottom, sb);
  const int f = model.params().fine_side(), nb = model.params().N / f;
  for (int bx = 0; bx < nb; ++bx)
    for (int by = 0; by < nb; ++by) {
      const double theta = st.normal();
      for (int x = 0; x < f; ++x)
        for (int y = 0; y < f; ++y)
          out.heights(Eigen::Index(out.spec.index({bx * f + x, by * f + y}))) += cal.a(x, y) * theta;
    }
  out.sampler = "three-field";
  return out;
}

}  // namespace sigf
