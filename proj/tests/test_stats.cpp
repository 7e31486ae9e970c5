#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "sigf/cluster.hpp"
#include "sigf/decompose.hpp"
#include "sigf/dgff.hpp"
#include "sigf/inhomogeneous.hpp"
#include "sigf/stats.hpp"

using namespace sigf;

namespace {

FieldSample flat(int N, double c) {
  FieldSample f;
  f.spec = GridSpec(N);
  f.heights = Eigen::VectorXd::Constant(Eigen::Index(f.spec.size()), c);
  return f;
}

PointProcessSample single_atom(double h) {
  PointProcessSample pp;
  pp.N = 16;
  pp.atoms.push_back({0.5, 0.5, h, {8, 8}, false});
  return pp;
}

}  // namespace

TEST(Wilson, Basics) {
  const auto p = wilson(0, 100);
  EXPECT_EQ(p.p, 0.0);
  EXPECT_NEAR(p.lo, 0.0, 1e-15);
  EXPECT_GT(p.hi, 0.0);
  const auto q = wilson(50, 100);
  EXPECT_NEAR(q.lo + q.hi, 1.0, 1e-12);
}

TEST(TailFit, ExponentialRecovery) {
  for (double rate : {1.0, 2.0, 4.0})
    for (TailMode mode : {TailMode::survival, TailMode::density}) {
      RngStream s(17, {"exp", std::to_string(rate)});
      std::vector<double> x;
      for (int i = 0; i < 20000; ++i) x.push_back(s.exponential(rate));
      const auto fit = tail_rate_fit(x, 0.0, std::min(3.0, 6.0 / rate), mode);
      EXPECT_NEAR(fit.rate, rate, 3.0 * fit.se) << "rate " << rate << " mode " << fit.method;
    }
}

TEST(TailFit, DegenerateAndTooFew) {
  EXPECT_THROW(tail_rate_fit(std::vector<double>(500, 1.0), 0.0, 2.0), StatisticalError);
  EXPECT_THROW(tail_rate_fit({0.1, 0.2, 0.3}, 0.0, 2.0), StatisticalError);
  EXPECT_THROW(tail_rate_fit({0.1, 0.2}, 1.0, 1.0), DomainError);
}

TEST(TailFit, DuplicationInvariant) {
  RngStream s(18);
  std::vector<double> x;
  for (int i = 0; i < 3000; ++i) x.push_back(s.exponential(2.0));
  std::vector<double> xx = x;
  xx.insert(xx.end(), x.begin(), x.end());
  for (TailMode mode : {TailMode::survival, TailMode::density})
    EXPECT_NEAR(tail_rate_fit(x, 0.0, 2.0, mode).rate, tail_rate_fit(xx, 0.0, 2.0, mode).rate, 1e-9);
}

TEST(Separation, ZeroCases) {
  std::vector<FieldSample> low(5, flat(32, -1.0));
  EXPECT_EQ(separation_frequency(low, 2, 0.0).k, 0u);
  std::vector<FieldSample> spikes;
  for (int i = 0; i < 5; ++i) {
    FieldSample f = flat(32, -10.0);
    f.heights(Eigen::Index(f.spec.index({3 + i, 7}))) = 20.0;
    spikes.push_back(f);
  }
  for (int r : {2, 3, 4}) EXPECT_EQ(separation_frequency(spikes, r, 1.0).k, 0u);
  FieldSample two = flat(32, -10.0);
  two.heights(Eigen::Index(two.spec.index({3, 3}))) = 20.0;
  two.heights(Eigen::Index(two.spec.index({3, 8}))) = 20.0;
  EXPECT_EQ(separation_frequency({two}, 2, 1.0).k, 1u);
  EXPECT_THROW(separation_frequency({two}, 8, 1.0), DomainError);
}

TEST(Separation, NestedAtFixedThreshold) {
  RngStream s(19);
  DgffSampler d(GridSpec(32));
  std::vector<FieldSample> fs;
  for (int i = 0; i < 300; ++i) fs.push_back(d.sample(s));
  const double ll = std::log(std::log(4.0));
  const auto a = separation_frequency(fs, 2, 1.0, ll), b = separation_frequency(fs, 4, 1.0, ll);
  EXPECT_LE(b.k, a.k);
}

TEST(Localization, WindowEffects) {
  const GridSpec spec(16);
  const VarianceProfile p({0.0, 0.5, 1.0}, {0.5, 1.5});
  InhomogeneousSampler smp(spec, p);
  auto op = std::make_shared<InhomogeneousOperator>(spec, p);
  BindingEvaluator be(op, 4);
  RngStream s(20);
  std::vector<FieldSample> fs;
  for (int i = 0; i < 200; ++i) fs.push_back(smp.sample(s));
  LocalizationOptions o;
  o.t = 4.0;
  o.window_scale = std::numeric_limits<double>::infinity();
  EXPECT_EQ(localization_frequency(fs, be, p, o).k, 0u);
  o.window_scale = 1.0;
  std::size_t prev = fs.size() + 1;
  for (double g : {0.1, 0.25, 0.4, 0.49}) {
    o.gamma = g;
    const auto fr = localization_frequency(fs, be, p, o);
    EXPECT_LE(fr.k, prev);
    prev = fr.k;
  }
  o.event = LocalizationEvent::every;
  o.gamma = 0.4;
  const auto every = localization_frequency(fs, be, p, o);
  o.event = LocalizationEvent::exists;
  EXPECT_LE(every.k, localization_frequency(fs, be, p, o).k);
  o.gamma = 0.6;
  EXPECT_THROW(localization_frequency(fs, be, p, o), DomainError);
}

TEST(ClusterProfile, OriginSymmetryAndSlope) {
  ClusterSampler::Options o;
  ClusterSampler cs(4, o);
  RngStream s(21, {"prof"});
  std::vector<ClusterShape> shapes;
  for (int i = 0; i < 400; ++i) shapes.push_back(cs.sample(s));
  const auto prof = cluster_profile(shapes, o.sigma1);
  EXPECT_EQ(prof.at({0, 0}), 0.0);
  for (Offset w : {Offset{1, 0}, Offset{2, 1}, Offset{3, 0}}) {
    const Offset rot{-w.y, w.x};
    const double se = std::hypot(prof.se_at(w), prof.se_at(rot));
    EXPECT_NEAR(prof.at(w), prof.at(rot), 3.0 * se + 1e-12);
  }
  EXPECT_GT(prof.slope, 0.0);
  EXPECT_THROW(cluster_profile({shapes.begin(), shapes.begin() + 10}, o.sigma1), StatisticalError);
}

TEST(FtTransform, Identities) {
  const TestFunction zero = [](double, double, double) { return 0.0; };
  const TestFunction c = [](double, double, double) { return 0.7; };
  const TestFunction lin = [](double, double, double h) { return h; };
  for (double t : {0.5, 1.0, 2.0}) {
    const auto z = f_t_transform(zero, t), k = f_t_transform(c, t), l = f_t_transform(lin, t);
    for (double h : {-3.0, 0.0, 1.5, 4.0}) {
      EXPECT_NEAR(z(0.2, 0.3, h), 0.0, 1e-12);
      EXPECT_NEAR(k(0.2, 0.3, h), 0.7, 1e-12);
      EXPECT_NEAR(l(0.2, 0.3, h), h - t, 1e-10);
    }
  }
  EXPECT_THROW(f_t_transform(lin, -1.0), DomainError);
}

TEST(FtTransform, GaussHermiteMoments) {
  const auto& g = gauss_hermite(32);
  double m0 = 0, m2 = 0, m4 = 0;
  for (std::size_t i = 0; i < g.x.size(); ++i) {
    m0 += g.w[i];
    m2 += g.w[i] * g.x[i] * g.x[i];
    m4 += g.w[i] * std::pow(g.x[i], 4);
  }
  EXPECT_NEAR(m0, 1.0, 1e-12);
  EXPECT_NEAR(m2, 1.0, 1e-12);
  EXPECT_NEAR(m4, 3.0, 1e-11);
}

TEST(Laplace, Examples) {
  RngStream s(22);
  std::vector<PointProcessSample> pps(50, single_atom(0.0));
  const TestFunction zero = [](double, double, double) { return 0.0; };
  const TestFunction one = [](double, double, double) { return 1.0; };
  EXPECT_EQ(laplace_functional(pps, zero, s).value, 1.0);
  EXPECT_NEAR(laplace_functional(pps, one, s).value, std::exp(-1.0), 1e-15);
  std::vector<PointProcessSample> mixed;
  for (int i = 0; i < 200; ++i) mixed.push_back(single_atom(s.normal()));
  double prev = 2.0;
  for (double c : {0.1, 0.5, 1.0, 2.0}) {
    const TestFunction f = [c](double, double, double h) { return c * std::exp(h); };
    const double v = laplace_functional(mixed, f, s).value;
    EXPECT_LE(v, prev);
    prev = v;
  }
}

TEST(Distances, IdenticalAndPointMasses) {
  const std::vector<double> a = {0.1, 0.5, 0.9, 1.3};
  for (DistanceKind k : {DistanceKind::kolmogorov, DistanceKind::levy_prokhorov_1d, DistanceKind::dominance})
    EXPECT_EQ(distance(a, a, k), 0.0);
  for (double sft : {0.1, 0.4, 1.0})
    EXPECT_NEAR(levy_prokhorov_1d(std::vector<double>(5, 0.0), std::vector<double>(5, sft)), sft, 1e-9);
  Eigen::MatrixXd mu(3, 2);
  mu << 0.1, 0.2, -0.5, 1.0, 0.3, 0.3;
  Eigen::MatrixXd nu = mu.array() + 1.0;
  EXPECT_EQ(dominance_distance(mu, nu), 0.0);
  EXPECT_GT(dominance_distance(nu, mu), 0.0);
}

TEST(Distances, KsSymmetryTriangle) {
  RngStream s(23);
  std::vector<double> a, b, c;
  for (int i = 0; i < 300; ++i) {
    a.push_back(s.normal());
    b.push_back(0.3 + s.normal());
    c.push_back(1.2 * s.normal());
  }
  EXPECT_EQ(kolmogorov_distance(a, b), kolmogorov_distance(b, a));
  EXPECT_LE(kolmogorov_distance(a, c), kolmogorov_distance(a, b) + kolmogorov_distance(b, c) + 1e-15);
  EXPECT_NEAR(ks_pvalue(0.0, 100, 100), 1.0, 1e-12);
  EXPECT_LT(ks_pvalue(0.5, 100, 100), 1e-9);
}

TEST(LevelSetBound, MonotoneAndCapped) {
  double prev = 0.0;
  for (double y = -1; y <= 3; y += 0.25) {
    const double b = level_set_first_moment(32, y, 4.5);
    EXPECT_GE(b, prev);
    prev = b;
  }
  const auto r = level_set_bound_check(32, 4.5, 1.0, 3.0, 2.0, std::vector<std::size_t>(100, 1000));
  EXPECT_LE(r.empirical.p, 1.0);
  EXPECT_EQ(r.empirical.k, 100u);
  EXPECT_THROW(level_set_bound_check(32, 4.5, 1.0, 3.0, 1.0, {}), DomainError);
}

TEST(Poisson, SyntheticPppAndCox) {
  RngStream s(24, {"ppp"});
  const std::vector<ScaledRect> rects = {{0.0, 0.5, 0.0, 1.0}, {0.5, 1.0, 0.0, 1.0}};
  auto make = [&](bool cox) {
    std::vector<PointProcessSample> out;
    for (int i = 0; i < 2000; ++i) {
      const double lam = cox ? (s.uniform() < 0.5 ? 2.0 : 10.0) : 6.0;
      std::poisson_distribution<int> P(lam);
      const int n = P(s);
      PointProcessSample pp;
      pp.N = 16;
      for (int k = 0; k < n; ++k) pp.atoms.push_back({s.uniform(), s.uniform(), s.uniform(), {0, 0}, false});
      out.push_back(pp);
    }
    return out;
  };
  const auto ppp = poisson_diagnostics(make(false), rects, 0.0, 1.0);
  for (auto& r : ppp.regions) EXPECT_NEAR(r.dispersion, 1.0, 3.0 * r.dispersion_se);
  EXPECT_LT(std::abs(ppp.correlation(0, 1)), 0.1);
  const auto cox = poisson_diagnostics(make(true), rects, 0.0, 1.0);
  for (auto& r : cox.regions) EXPECT_GT(r.dispersion, 1.0 + 3.0 * r.dispersion_se);
  EXPECT_GT(cox.correlation(0, 1), 0.1);
  const auto empty = poisson_diagnostics(make(false), rects, 5.0, 6.0);
  for (auto& c : empty.counts)
    for (double v : c) EXPECT_EQ(v, 0.0);
}
