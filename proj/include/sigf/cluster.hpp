#pragma once

// Rejection samplers for the cluster shape around a local maximum.
//   pinned:   theta = phi^pinned + 2 sigma1 a on Lambda_r(0), accepted when theta >= 0
//   finite-M: sigma1 (phi_0 - phi) for a DGFF on the diamond Lambda_M(0) given
//             sigma1 phi_0 = 2 sigma1^2 log M + t, accepted when 0 is the maximum

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "sigf/error.hpp"
#include "sigf/gaussian.hpp"
#include "sigf/green.hpp"
#include "sigf/lattice.hpp"
#include "sigf/potential_kernel.hpp"
#include "sigf/rng.hpp"

namespace sigf {

enum class ClusterMode { finite_M, pinned };

inline constexpr int default_cluster_cap = 8;
inline constexpr std::uint64_t default_rejection_budget = 100000;

struct ClusterShape {
  int r = 0;
  std::vector<Offset> offsets;  // l1 ball of radius r, origin included
  Eigen::VectorXd theta;        // theta(offsets[i])
  std::uint64_t proposals = 0;  // proposals used for this draw

  double at(Offset w) const {
    for (std::size_t i = 0; i < offsets.size(); ++i)
      if (offsets[i] == w) return theta(Eigen::Index(i));
    throw DomainError("ClusterShape: offset outside the window");
  }
};

/// Smallest power of two strictly larger than r.
inline int default_cluster_window(int r) {
  int m = 1;
  while (m <= r) m *= 2;
  return m;
}

class ClusterSampler {
 public:
  struct Options {
    ClusterMode mode = ClusterMode::pinned;
    double sigma1 = std::sqrt(1.5);
    double t = 0.0;
    int M = 0;  // finite-M diamond radius; 0 selects default_cluster_window(r)
    int cap = default_cluster_cap;
    std::uint64_t budget = default_rejection_budget;
    bool strict = true;
  };

  ClusterSampler(int r, Options opt) : r_(r), opt_(opt) {
    if (r < 1 || r > opt.cap)
      throw DomainError("cluster sampler: window r must lie in [1, " + std::to_string(opt.cap) + "]");
    if (opt.strict && !(opt.sigma1 > 1.0)) throw ConfigError("cluster sampler: sigma(1) must exceed 1 in strict mode");
    offsets_ = l1_ball_offsets(r);
    if (opt.mode == ClusterMode::pinned) build_pinned();
    else build_finite();
  }

  int r() const { return r_; }
  const Options& options() const { return opt_; }
  const std::vector<Offset>& offsets() const { return offsets_; }
  /// Law of the proposal on the window offsets (pinned: excludes the origin).
  const GaussianLaw& proposal() const { return law_; }
  const std::vector<Offset>& proposal_offsets() const { return prop_offsets_; }

  ClusterShape sample(RngStream& stream) const {
    for (std::uint64_t k = 1; k <= opt_.budget; ++k) {
      const Eigen::VectorXd x = gaussian_sample(law_, stream);
      ClusterShape s;
      if (accept(x, s)) {
        s.proposals = k;
        return s;
      }
    }
    std::ostringstream os;
    os << "cluster sampler: no acceptance within " << opt_.budget << " proposals";
    throw SamplingError(os.str(), 0.0);
  }

  /// Empirical acceptance probability over n proposals.
  double acceptance_rate(RngStream& stream, std::uint64_t n) const {
    std::uint64_t acc = 0;
    ClusterShape s;
    for (std::uint64_t k = 0; k < n; ++k)
      if (accept(gaussian_sample(law_, stream), s)) ++acc;
    return double(acc) / double(n);
  }

 private:
  void build_pinned() {
    auto& a = shared_potential_kernel();
    for (Offset w : offsets_)
      if (!(w.x == 0 && w.y == 0)) prop_offsets_.push_back(w);
    const auto n = Eigen::Index(prop_offsets_.size());
    Eigen::MatrixXd C(n, n);
    Eigen::VectorXd mu(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Offset x = prop_offsets_[std::size_t(i)];
      mu(i) = 2.0 * opt_.sigma1 * a(x);
      for (Eigen::Index j = 0; j <= i; ++j) {
        const Offset y = prop_offsets_[std::size_t(j)];
        C(i, j) = C(j, i) = a(x) + a(y) - a(x - y);
      }
    }
    law_ = GaussianLaw(mu, C);
  }

  void build_finite() {
    M_ = opt_.M > 0 ? opt_.M : default_cluster_window(r_);
    if (M_ <= r_) throw DomainError("cluster sampler: diamond radius M must exceed r");
    auto g = green_table(l1_ball_offsets(M_));
    prop_offsets_ = g.region;
    const auto n = Eigen::Index(prop_offsets_.size());
    const auto c = g.find({0, 0});
    const double center = (2.0 * opt_.sigma1 * opt_.sigma1 * std::log(double(M_)) + opt_.t) / opt_.sigma1;
    std::map<Eigen::Index, double> obs{{Eigen::Index(c), center}};
    law_ = condition_gaussian(GaussianLaw(Eigen::VectorXd::Zero(n), g.matrix), obs);
    center_index_ = Eigen::Index(c);
    for (Offset w : offsets_) window_index_.push_back(g.find(w));
  }

  bool accept(const Eigen::VectorXd& x, ClusterShape& s) const {
    s.r = r_;
    s.offsets = offsets_;
    s.theta.resize(Eigen::Index(offsets_.size()));
    if (opt_.mode == ClusterMode::pinned) {
      if (x.minCoeff() < 0.0) return false;
      for (std::size_t i = 0, k = 0; i < offsets_.size(); ++i)
        s.theta(Eigen::Index(i)) = (offsets_[i].x == 0 && offsets_[i].y == 0) ? 0.0 : x(Eigen::Index(k++));
      return true;
    }
    const double c = x(center_index_);
    if (x.maxCoeff() > c) return false;
    for (std::size_t i = 0; i < offsets_.size(); ++i)
      s.theta(Eigen::Index(i)) = opt_.sigma1 * (c - x(Eigen::Index(window_index_[i])));
    return true;
  }

  int r_;
  Options opt_;
  int M_ = 0;
  std::vector<Offset> offsets_;
  std::vector<Offset> prop_offsets_;
  GaussianLaw law_;
  Eigen::Index center_index_ = 0;
  std::vector<std::ptrdiff_t> window_index_;
};

inline ClusterShape sample_cluster_law(int r, double sigma1, double t, ClusterMode mode, RngStream& stream) {
  ClusterSampler::Options o;
  o.mode = mode;
  o.sigma1 = sigma1;
  o.t = t;
  return ClusterSampler(r, o).sample(stream);
}

}  // namespace sigf
