#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sigf/cluster.hpp"
#include "sigf/decompose.hpp"
#include "sigf/dgff.hpp"
#include "sigf/green.hpp"
#include "sigf/inhomogeneous.hpp"
#include "sigf/perturb.hpp"
#include "sigf/potential_kernel.hpp"
#include "sigf/stats.hpp"
#include "sigf/three_field.hpp"

using namespace sigf;

namespace {

VarianceProfile two_scale() { return VarianceProfile({0.0, 0.5, 1.0}, {0.5, 1.5}); }

}  // namespace

TEST(Profile, Integrals) {
  const auto h = VarianceProfile::homogeneous();
  EXPECT_NEAR(profile_integral(h, 0.0, 0.3), 0.3, 1e-15);
  EXPECT_NEAR(profile_integral(two_scale(), 0.0, 0.5), 0.25, 1e-15);
  EXPECT_NEAR(profile_integral(two_scale(), 0.0, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(VarianceProfile({0.0, 0.2, 0.7, 1.0}, {0.25, 1.0, 1.5}).I(1.0), 1.0, 1e-15);
}

TEST(Profile, DegenerateRejected) {
  EXPECT_THROW(VarianceProfile::homogeneous().require_admissible(false), ConfigError);
  EXPECT_NO_THROW(VarianceProfile::homogeneous().require_admissible(true));
  EXPECT_NO_THROW(two_scale().require_admissible(false));
}

TEST(Dgff, CentreVarianceMonteCarlo) {
  DgffSampler s(GridSpec(3));
  RngStream root(11, {"dgff-var"});
  const int n = 10000;
  double sum = 0.0, sum2 = 0.0, m4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double c = s.sample(root)({1, 1});
    sum += c;
    sum2 += c * c;
    m4 += c * c * c * c;
  }
  const double var = sum2 / n;
  const double se = std::sqrt((m4 / n - var * var) / n);
  EXPECT_NEAR(var, 3.0 * std::numbers::pi / 4.0, 5.0 * se);
  EXPECT_NEAR(sum / n, 0.0, 5.0 * std::sqrt(var / n));
}

TEST(Dgff, GibbsMarkovResampleKeepsMaxLaw) {
  // resample the inner 4x4 box given its outer boundary, compare maxima
  const GridSpec spec(8);
  DgffSampler s(spec);
  const GreenTable g = green_table(spec);
  std::vector<std::size_t> in, out;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const Vertex v = spec.vertex(i);
    (v.x >= 2 && v.x <= 5 && v.y >= 2 && v.y <= 5 ? in : out).push_back(i);
  }
  Eigen::MatrixXd Cii(in.size(), in.size()), Cio(in.size(), out.size()), Coo(out.size(), out.size());
  for (std::size_t a = 0; a < in.size(); ++a) {
    for (std::size_t b = 0; b < in.size(); ++b) Cii(a, b) = g.matrix(in[a], in[b]);
    for (std::size_t b = 0; b < out.size(); ++b) Cio(a, b) = g.matrix(in[a], out[b]);
  }
  for (std::size_t a = 0; a < out.size(); ++a)
    for (std::size_t b = 0; b < out.size(); ++b) Coo(a, b) = g.matrix(out[a], out[b]);
  const Eigen::MatrixXd K = Cio * Coo.inverse();
  const GaussianLaw cond = GaussianLaw::centred(Cii - K * Cio.transpose());
  RngStream sa(5, {"gm", "a"}), sb(5, {"gm", "b"});
  std::vector<double> ma, mb;
  for (int i = 0; i < 10000; ++i) {
    ma.push_back(s.sample(sa).max());
    FieldSample f = s.sample(sb);
    Eigen::VectorXd xo(out.size());
    for (std::size_t b = 0; b < out.size(); ++b) xo(Eigen::Index(b)) = f.heights(Eigen::Index(out[b]));
    const Eigen::VectorXd xi = K * xo + gaussian_sample(cond, sb);
    for (std::size_t a = 0; a < in.size(); ++a) f.heights(Eigen::Index(in[a])) = xi(Eigen::Index(a));
    mb.push_back(f.max());
  }
  EXPECT_GT(ks_two_sample(ma, mb).pvalue, 0.01);
}

TEST(Inhomogeneous, HomogeneousIsIdentity) {
  for (int N : {8, 16}) {
    const GridSpec spec(N);
    const auto m = inhomogeneous_operator(spec, VarianceProfile::homogeneous());
    const Eigen::MatrixXd L = Eigen::MatrixXd(m.op->matrix());
    EXPECT_LE((L - Eigen::MatrixXd::Identity(L.rows(), L.cols())).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((m.covariance - green_table(spec).matrix).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Inhomogeneous, HomogeneousSampleEqualsPhi) {
  InhomogeneousSampler s(GridSpec(8), VarianceProfile::homogeneous(), true);
  RngStream st(3);
  const FieldSample f = s.sample(st);
  EXPECT_LE((f.heights - *f.underlying).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Inhomogeneous, SymmetryOfCovariance) {
  const GridSpec spec(8);
  const auto m = inhomogeneous_operator(spec, two_scale());
  const int N = spec.N;
  auto idx = [&](int x, int y) { return Eigen::Index(spec.index({x, y})); };
  double dev = 0.0;
  for (int x = 0; x < N; ++x)
    for (int y = 0; y < N; ++y)
      for (int u = 0; u < N; ++u)
        for (int w = 0; w < N; ++w) {
          const double c = m.covariance(idx(x, y), idx(u, w));
          dev = std::max(dev, std::abs(c - m.covariance(idx(y, x), idx(w, u))));
          dev = std::max(dev, std::abs(c - m.covariance(idx(N - 1 - x, y), idx(N - 1 - u, w))));
          dev = std::max(dev, std::abs(c - m.covariance(idx(x, N - 1 - y), idx(u, N - 1 - w))));
        }
  EXPECT_LE(dev, 1e-9);
}

TEST(Inhomogeneous, VarianceMinusLogNStable) {
  const auto p = two_scale();
  std::vector<double> d;
  for (int N : {32, 64}) {
    InhomogeneousSampler s(GridSpec(N), p);
    d.push_back(s.variance({N / 2, N / 2}) - std::log(double(N)));
  }
  EXPECT_LE(std::abs(d[0] - d[1]), 0.5);
}

TEST(Inhomogeneous, EmpiricalCovariance) {
  const GridSpec spec(8);
  InhomogeneousSampler s(spec, two_scale());
  const auto m = inhomogeneous_operator(spec, two_scale());
  RngStream root(21, {"cov"});
  const int n = 20000;
  const std::vector<Vertex> pts = {{4, 4}, {3, 4}, {1, 1}, {6, 2}};
  std::vector<Eigen::VectorXd> rows;
  for (int i = 0; i < n; ++i) {
    const FieldSample f = s.sample(root);
    Eigen::VectorXd r(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) r(Eigen::Index(k)) = f(pts[k]);
    rows.push_back(r);
  }
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a; b < pts.size(); ++b) {
      double c = 0.0;
      for (auto& r : rows) c += r(Eigen::Index(a)) * r(Eigen::Index(b));
      c /= n;
      const double saa = m.covariance(Eigen::Index(spec.index(pts[a])), Eigen::Index(spec.index(pts[a])));
      const double sbb = m.covariance(Eigen::Index(spec.index(pts[b])), Eigen::Index(spec.index(pts[b])));
      const double sab = m.covariance(Eigen::Index(spec.index(pts[a])), Eigen::Index(spec.index(pts[b])));
      EXPECT_NEAR(c, sab, 5.0 * std::sqrt((saa * sbb + sab * sab) / n));
    }
}

TEST(Inhomogeneous, IndependentReplicaStreams) {
  InhomogeneousSampler s(GridSpec(8), two_scale());
  RngStream root(8, {"x"});
  const int n = 5000;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (int i = 0; i < n; ++i) {
    auto a = root.derive(2 * std::uint64_t(i)), b = root.derive(2 * std::uint64_t(i) + 1);
    const double x = s.sample(a)({4, 4}), y = s.sample(b)({4, 4});
    sab += x * y;
    saa += x * x;
    sbb += y * y;
  }
  EXPECT_LT(std::abs(sab / n), 5.0 * std::sqrt(saa / n * sbb / n / n));
}

TEST(ThreeField, CoarseConstantOnBoxes) {
  ThreeFieldModel m({64, 2, 2, 4, 4}, two_scale());
  RngStream s(4);
  const Eigen::VectorXd c = m.sample_component(Component::coarse, s);
  const int side = 16;
  for (int x = 0; x < 64; ++x)
    for (int y = 0; y < 64; ++y)
      ASSERT_EQ(c(Eigen::Index(m.spec().index({x, y}))),
                c(Eigen::Index(m.spec().index({(x / side) * side, (y / side) * side}))));
}

TEST(ThreeField, MiddleVarianceDirectSum) {
  const auto p = two_scale();
  ThreeFieldModel m({64, 2, 2, 4, 4}, p);
  const int N = 64, n = 6;
  for (Vertex v : {Vertex{0, 0}, Vertex{33, 17}, Vertex{63, 63}, Vertex{20, 50}}) {
    const Vertex c{(v.x / 16) * 16, (v.y / 16) * 16};
    double direct = 0.0;
    for (int j = m.params().level_lo(); j <= m.params().level_hi(); ++j) {
      const int side = 1 << j;
      const long nx = std::min(c.x, N - 1) - std::max(0, c.x - side + 1) + 1;
      const long ny = std::min(c.y, N - 1) - std::max(0, c.y - side + 1) + 1;
      const double s = n * p.sigma_integral(double(n - j - 1) / n, double(n - j) / n);
      direct += double(nx * ny) * std::pow(4.0, -j) * std::log(2.0) * s * s;
    }
    EXPECT_NEAR(m.middle_variance(v), direct, 1e-10);
  }
}

TEST(ThreeField, MiddleVarianceMonteCarlo) {
  ThreeFieldModel m({32, 2, 2, 2, 2}, two_scale());
  RngStream root(6, {"mid"});
  const Vertex v{13, 9};
  const int n = 10000;
  double s2 = 0.0, s4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = m.sample_component(Component::middle, root)(Eigen::Index(m.spec().index(v)));
    s2 += x * x;
    s4 += x * x * x * x;
  }
  const double var = s2 / n;
  EXPECT_NEAR(var, m.middle_variance(v), 5.0 * std::sqrt((s4 / n - var * var) / n));
}

TEST(ThreeField, BottomIndependentAcrossBoxes) {
  ThreeFieldModel m({64, 2, 2, 4, 4}, two_scale());
  RngStream root(7, {"bot"});
  const int n = 5000;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd b = m.sample_component(Component::bottom, root);
    const double x = b(Eigen::Index(m.spec().index({15, 8}))), y = b(Eigen::Index(m.spec().index({16, 8})));
    sab += x * y;
    saa += x * x;
    sbb += y * y;
  }
  EXPECT_LT(std::abs(sab / n), 5.0 * std::sqrt(saa / n * sbb / n / n));
}

TEST(ThreeField, CalibrationResidual) {
  const auto p = two_scale();
  ThreeFieldModel m({64, 2, 2, 4, 4}, p);
  InhomogeneousSampler psi(GridSpec(64), p);
  const Calibration cal = calibrate_three_field(m, psi);
  EXPECT_GE(cal.alpha, 0.0);
  EXPECT_LE(cal.max_abs_residual, 1e-6);
  const Vertex c = cal.representative_corner;
  for (Vertex w : {Vertex{0, 0}, Vertex{7, 3}, Vertex{15, 15}})
    EXPECT_NEAR(three_field_variance(m, cal, c + w) - psi.variance(c + w), 4.0 * cal.alpha, 1e-6);
}

TEST(ThreeField, SampledVarianceAtRepresentative) {
  const auto p = two_scale();
  ThreeFieldModel m({32, 2, 2, 2, 2}, p);
  InhomogeneousSampler psi(GridSpec(32), p);
  const Calibration cal = calibrate_three_field(m, psi);
  const Vertex v = cal.representative_corner + Vertex{1, 2};
  RngStream root(12, {"s"});
  const int n = 10000;
  double s2 = 0.0, s4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_three_field(m, cal, root.derive(std::uint64_t(i)))(v);
    s2 += x * x;
    s4 += x * x * x * x;
  }
  const double var = s2 / n;
  EXPECT_NEAR(var, psi.variance(v) + 4.0 * cal.alpha, 5.0 * std::sqrt((s4 / n - var * var) / n));
}

TEST(ThreeField, SharedContributionsAndDeterminism) {
  const auto p = two_scale();
  ThreeFieldModel m({32, 2, 2, 2, 2}, p);
  InhomogeneousSampler psi(GridSpec(32), p);
  const Calibration cal = calibrate_three_field(m, psi);
  RngStream s(1, {"three"});
  auto sm = s.derive("middle");
  const Eigen::VectorXd mid = m.sample_component(Component::middle, sm);
  for (int x = 12; x < 16; ++x)
    for (int y = 4; y < 8; ++y) ASSERT_EQ(mid(Eigen::Index(m.spec().index({x, y}))), mid(Eigen::Index(m.spec().index({12, 4}))));
  const FieldSample a = sample_three_field(m, cal, s), b = sample_three_field(m, cal, s);
  EXPECT_EQ(a.heights, b.heights);
}

TEST(ThreeField, DegenerateProfileRejected) {
  EXPECT_THROW(InhomogeneousSampler(GridSpec(16), VarianceProfile::homogeneous()), ConfigError);
}

TEST(Perturb, ZeroIsIdentity) {
  RngStream s(2);
  const FieldSample f = sample_dgff(GridSpec(8), s);
  EXPECT_EQ(perturbed_field(f, 0.0, 0.0, 2, 2, s).heights, f.heights);
}

TEST(Perturb, SameBoxSameDraw) {
  FieldSample f;
  f.spec = GridSpec(16);
  f.heights = Eigen::VectorXd::Zero(256);
  RngStream s(3);
  const FieldSample g = perturbed_field(f, 1.0, 0.0, 4, 2, s);
  EXPECT_EQ(g({4, 5}), g({7, 7}));
  EXPECT_NE(g({4, 5}), g({8, 5}));
}

TEST(Perturb, VarianceAdds) {
  const GridSpec spec(8);
  DgffSampler d(spec);
  RngStream root(4, {"pert"});
  const double s1 = 0.7, s2 = 1.1;
  const int n = 20000;
  double acc = 0.0, acc4 = 0.0;
  for (int i = 0; i < n; ++i) {
    auto st = root.derive(std::uint64_t(i));
    const double x = perturbed_field(d.sample(st), s1, s2, 2, 2, st)({3, 4});
    acc += x * x;
    acc4 += x * x * x * x;
  }
  const double var = acc / n, target = green_table(spec).matrix(spec.index({3, 4}), spec.index({3, 4})) + s1 * s1 + s2 * s2;
  EXPECT_NEAR(var, target, 5.0 * std::sqrt((acc4 / n - var * var) / n));
}

TEST(Smoothing, ZeroTimeAndCovariance) {
  RngStream s(5);
  const GridSpec spec(16);
  const FieldSample a = sample_dgff(spec, s), b = sample_dgff(spec, s);
  EXPECT_EQ(smoothing_transform(a, b, 0.0).heights, a.heights);
  const auto m = inhomogeneous_operator(spec, two_scale());
  EXPECT_LE((smoothing_covariance(m.covariance, 1.0, 16) - m.covariance).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(smoothing_transform(a, b, 10.0), DomainError);
}

TEST(Decompose, Additivity) {
  const GridSpec spec(32);
  InhomogeneousSampler s(spec, two_scale());
  const Decomposition d = decompose_around(s.op(), s.dgff(), {16, 16}, 4);
  EXPECT_LE(d.additivity_error, 1e-8);
  EXPECT_THROW(decompose_around(s.op(), s.dgff(), {2, 2}, 4), DomainError);
}

TEST(Decompose, BindingEvaluatorMatchesCovariance) {
  const GridSpec spec(16);
  InhomogeneousSampler s(spec, two_scale());
  const Decomposition d = decompose_around(s.op(), s.dgff(), {8, 8}, 3);
  BindingEvaluator be(std::make_shared<InhomogeneousOperator>(spec, two_scale()), 3);
  RngStream root(9, {"bind"});
  const int n = 10000;
  double s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = be.evaluate(s.sample(root), {8, 8});
    s2 += x * x;
  }
  const double var = d.cov_binding(d.index({8, 8}), d.index({8, 8}));
  EXPECT_NEAR(s2 / n, var, 5.0 * var * std::sqrt(2.0 / n));
}

TEST(Cluster, OriginZeroAndPinnedVariance) {
  ClusterSampler::Options o;
  ClusterSampler cs(3, o);
  RngStream s(10, {"cl"});
  for (int i = 0; i < 50; ++i) EXPECT_EQ(cs.sample(s).at({0, 0}), 0.0);
  const auto& off = cs.proposal_offsets();
  const auto it = std::find(off.begin(), off.end(), Offset{1, 0});
  ASSERT_NE(it, off.end());
  const auto k = it - off.begin();
  EXPECT_NEAR(cs.proposal().covariance()(k, k), std::numbers::pi, 0.02 * std::numbers::pi);
}

TEST(Cluster, AcceptanceNonIncreasingInR) {
  ClusterSampler::Options o;
  std::vector<double> rates;
  for (int r : {1, 2, 3}) {
    ClusterSampler cs(r, o);
    RngStream s(13, {"acc"});
    rates.push_back(cs.acceptance_rate(s, 20000));
  }
  for (std::size_t i = 1; i < rates.size(); ++i) {
    const double se = std::sqrt(rates[i - 1] * (1 - rates[i - 1]) / 20000 + rates[i] * (1 - rates[i]) / 20000);
    EXPECT_LE(rates[i], rates[i - 1] + 3.0 * se);
  }
}

TEST(Cluster, Errors) {
  ClusterSampler::Options o;
  EXPECT_THROW(ClusterSampler(0, o), DomainError);
  o.sigma1 = 0.9;
  EXPECT_THROW(ClusterSampler(2, o), ConfigError);
}
