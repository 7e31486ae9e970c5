#pragma once

// Numeric checks of the vector Slepian and Kahane comparison inequalities on
// small Gaussian vectors (n <= 4), by randomized quasi-Monte Carlo: a Sobol
// sequence with Cranley-Patterson shifts, the same points for X and Y.

#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/random/sobol.hpp>

#include "sigf/error.hpp"
#include "sigf/gaussian.hpp"
#include "sigf/rng.hpp"

namespace sigf {

inline constexpr int comparison_max_dim = 4;
inline constexpr std::size_t default_qmc_points = std::size_t(1) << 16;

struct ComparisonInstance {
  Eigen::MatrixXd cov_x, cov_y;
  std::vector<std::vector<int>> sets;  // disjoint T_1..T_k
  std::vector<double> x;               // thresholds, one per set
  // false: E X_i X_j <= E Y_i Y_j is asserted; true: the reverse ordering
  bool reversed = false;

  int dim() const { return int(cov_x.rows()); }

  /// Throws DomainError naming the first offending entry.
  void check_hypotheses() const {
    const int n = dim();
    if (n < 1 || n > comparison_max_dim) throw DomainError("comparison: dimension must lie in [1, 4]");
    if (cov_y.rows() != n || cov_x.cols() != n || cov_y.cols() != n)
      throw DomainError("comparison: covariance shapes differ");
    if (sets.size() != x.size()) throw DomainError("comparison: one threshold per set required");
    std::vector<int> seen(std::size_t(n), 0);
    for (auto& T : sets)
      for (int i : T) {
        if (i < 0 || i >= n) throw DomainError("comparison: set index out of range");
        if (seen[std::size_t(i)]++) throw DomainError("comparison: sets are not disjoint");
      }
    for (int i = 0; i < n; ++i) {
      if (std::abs(cov_x(i, i) - cov_y(i, i)) > 1e-12) {
        std::ostringstream os;
        os << "comparison: variances differ at (" << i << "," << i << "): " << cov_x(i, i) << " vs " << cov_y(i, i);
        throw DomainError(os.str());
      }
      for (int j = 0; j < n; ++j) {
        const double lhs = reversed ? cov_y(i, j) : cov_x(i, j), rhs = reversed ? cov_x(i, j) : cov_y(i, j);
        if (lhs > rhs + 1e-12) {
          std::ostringstream os;
          os << "comparison: covariance ordering fails at (" << i << "," << j << "): " << cov_x(i, j) << " vs "
             << cov_y(i, j);
          throw DomainError(os.str());
        }
      }
    }
  }

  ComparisonInstance swapped() const {
    ComparisonInstance s = *this;
    std::swap(s.cov_x, s.cov_y);
    s.reversed = !reversed;
    return s;
  }
};

struct ComparisonReport {
  // smaller side under the hypotheses: X (or Y when reversed)
  std::vector<double> lhs, rhs;  // per component; Slepian has one component
  std::vector<double> se;        // SE of lhs - rhs
  bool pass = true;              // lhs <= rhs + 3 SE in every component
  std::size_t points = 0;
};

namespace detail {

// Randomized QMC means of g over N(0, cov_x) and N(0, cov_y) with common points.
// g returns one value per component. Returns per-shift means.
inline void qmc_compare(const ComparisonInstance& inst, std::size_t points, std::uint64_t seed,
                        const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& g, int components,
                        ComparisonReport& rep) {
  const int n = inst.dim();
  const int shifts = 16;
  const std::size_t per = std::max<std::size_t>(1, points / shifts);
  const GaussianLaw lx = GaussianLaw::centred(inst.cov_x), ly = GaussianLaw::centred(inst.cov_y);
  RngStream rs(seed, {"qmc"});
  boost::math::normal_distribution<double> nd;
  Eigen::MatrixXd mx = Eigen::MatrixXd::Zero(components, shifts), my = mx;
  for (int s = 0; s < shifts; ++s) {
    std::vector<double> shift(static_cast<std::size_t>(n));
    for (auto& u : shift) u = rs.uniform();
    boost::random::sobol gen(static_cast<std::size_t>(n));
    gen.discard(std::uint64_t(n));  // skip the origin
    Eigen::VectorXd z(n);
    for (std::size_t k = 0; k < per; ++k) {
      for (int i = 0; i < n; ++i) {
        double u = double(gen() - gen.min()) / (double(gen.max() - gen.min()) + 1.0) + shift[std::size_t(i)];
        u -= std::floor(u);
        u = std::clamp(u, 1e-15, 1.0 - 1e-15);
        z(i) = boost::math::quantile(nd, u);
      }
      mx.col(s) += g(lx.transform(z));
      my.col(s) += g(ly.transform(z));
    }
    mx.col(s) /= double(per);
    my.col(s) /= double(per);
  }
  rep.points = per * shifts;
  const auto a = inst.reversed ? my : mx;
  const auto b = inst.reversed ? mx : my;
  rep.pass = true;
  for (int c = 0; c < components; ++c) {
    const double la = a.row(c).mean(), lb = b.row(c).mean();
    const Eigen::RowVectorXd d = a.row(c) - b.row(c);
    const double dm = d.mean();
    const double se = std::sqrt((d.array() - dm).square().sum() / double(shifts - 1) / double(shifts));
    rep.lhs.push_back(la);
    rep.rhs.push_back(lb);
    rep.se.push_back(se);
    if (la > lb + 3.0 * se + 1e-12) rep.pass = false;
  }
}

}  // namespace detail

/// P(max_{T_l} X <= x_l for all l) <= P(max_{T_l} Y <= x_l for all l) when Cov X <= Cov Y.
inline ComparisonReport check_vector_slepian(const ComparisonInstance& inst, std::size_t points = default_qmc_points,
                                             std::uint64_t seed = 0) {
  inst.check_hypotheses();
  ComparisonReport rep;
  auto g = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd r(1);
    bool all = true;
    for (std::size_t l = 0; l < inst.sets.size() && all; ++l)
      for (int i : inst.sets[l])
        if (v(i) > inst.x[l]) {
          all = false;
          break;
        }
    r(0) = all ? 1.0 : 0.0;
    return r;
  };
  detail::qmc_compare(inst, points, seed, g, 1, rep);
  return rep;
}

/// Vector test function: component l is prod_{i in T_l} g_i(v_i).
struct ProductFunction {
  std::vector<std::vector<int>> sets;
  std::function<double(int i, double v)> factor;
  double scale = 1.0;

  Eigen::VectorXd operator()(const Eigen::VectorXd& v) const {
    Eigen::VectorXd r(Eigen::Index(sets.size()));
    for (std::size_t l = 0; l < sets.size(); ++l) {
      double p = scale;
      for (int i : sets[l]) p *= factor(i, v(i));
      r(Eigen::Index(l)) = p;
    }
    return r;
  }
};

/// Decreasing logistic factors 1 / (1 + exp(s (v - x_l))); their products have
/// nonnegative mixed partials.
inline ProductFunction sigmoid_product(const ComparisonInstance& inst, double steepness, bool single_component) {
  ProductFunction f;
  std::vector<double> thr(std::size_t(inst.dim()), 0.0);
  for (std::size_t l = 0; l < inst.sets.size(); ++l)
    for (int i : inst.sets[l]) thr[std::size_t(i)] = inst.x[l];
  if (single_component) {
    std::vector<int> all;
    for (auto& T : inst.sets) all.insert(all.end(), T.begin(), T.end());
    f.sets = {all};
  } else {
    f.sets = inst.sets;
  }
  f.factor = [thr, steepness](int i, double v) { return 1.0 / (1.0 + std::exp(steepness * (v - thr[std::size_t(i)]))); };
  return f;
}

inline ProductFunction constant_function(const ComparisonInstance& inst, double c) {
  ProductFunction f;
  f.sets = inst.sets;
  f.factor = [](int, double) { return 1.0; };
  f.scale = c;
  return f;
}

/// E f(X) <= E f(Y) componentwise when Cov X <= Cov Y and f has nonnegative mixed partials.
inline ComparisonReport check_kahane_functional(const ComparisonInstance& inst, const ProductFunction& f,
                                                std::size_t points = default_qmc_points, std::uint64_t seed = 0) {
  inst.check_hypotheses();
  ComparisonReport rep;
  detail::qmc_compare(inst, points, seed, f, int(f.sets.size()), rep);
  return rep;
}

/// Random admissible instance: X a random correlation matrix C, Y = (1 - t) C + t J
/// (J all ones), random partition and thresholds.
inline ComparisonInstance random_instance(RngStream& s, int max_dim = 3) {
  const int n = 2 + int(s.uniform() * (max_dim - 1));
  Eigen::MatrixXd B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = s.normal();
  Eigen::MatrixXd C = B * B.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd d = C.diagonal().cwiseSqrt().cwiseInverse();
  C = d.asDiagonal() * C * d.asDiagonal();
  const double t = s.uniform();
  ComparisonInstance inst;
  inst.cov_x = C;
  inst.cov_y = (1.0 - t) * C + t * Eigen::MatrixXd::Ones(n, n);
  inst.cov_y.diagonal().setOnes();
  inst.cov_x.diagonal().setOnes();
  const int k = 1 + int(s.uniform() * n);
  inst.sets.assign(std::size_t(k), {});
  for (int i = 0; i < n; ++i) inst.sets[std::size_t(i < k ? i : int(s.uniform() * k))].push_back(i);
  for (int l = 0; l < k; ++l) inst.x.push_back(s.normal());
  return inst;
}

struct SlepianSweep {
  std::size_t instances = 0, violations = 0;
  double worst_margin = -1e300;  // max over instances of (lhs - rhs) / SE
};

inline SlepianSweep slepian_sweep(std::size_t instances, std::uint64_t seed, std::size_t points = std::size_t(1) << 12,
                                  int max_dim = 3) {
  SlepianSweep sw;
  RngStream root(seed, {"slepian-sweep"});
  for (std::size_t k = 0; k < instances; ++k) {
    auto s = root.derive(k);
    const auto inst = random_instance(s, max_dim);
    const auto rep = check_vector_slepian(inst, points, s.key());
    ++sw.instances;
    if (!rep.pass) ++sw.violations;
    if (rep.se[0] > 0) sw.worst_margin = std::max(sw.worst_margin, (rep.lhs[0] - rep.rhs[0]) / rep.se[0]);
  }
  return sw;
}

}  // namespace sigf
