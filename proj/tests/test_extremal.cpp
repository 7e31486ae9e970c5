#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "sigf/dgff.hpp"
#include "sigf/extremal.hpp"
#include "sigf/inhomogeneous.hpp"

using namespace sigf;

namespace {

FieldSample constant_field(int N, double c) {
  FieldSample f;
  f.spec = GridSpec(N);
  f.heights = Eigen::VectorXd::Constant(Eigen::Index(f.spec.size()), c);
  return f;
}

FieldSample spike(int N, Vertex v, double h) {
  FieldSample f = constant_field(N, 0.0);
  f.heights(Eigen::Index(f.spec.index(v))) = h;
  return f;
}

}  // namespace

TEST(Centering, Values) {
  EXPECT_NEAR(m_centering(16), 5.2902, 5e-5);
  EXPECT_NEAR(m_centering(256), 10.6621, 5e-5);
  for (int N = 8; N < 2000; ++N) ASSERT_LT(m_centering(N), m_centering(N + 1));
  EXPECT_THROW(m_centering(2), DomainError);
}

TEST(Centering, Mkt) {
  const auto h = VarianceProfile::homogeneous();
  const VarianceProfile p({0.0, 0.5, 1.0}, {0.5, 1.5});
  for (double N : {16.0, 64.0, 1024.0}) {
    const double n = std::log2(N);
    EXPECT_NEAR(m_kt(N, 0, n, p), 2 * std::log(N) - 0.25 * std::log(n), 1e-12);
    EXPECT_NEAR(m_kt(N, 0, n / 2, h), std::log(N) - std::log(n) / 8, 1e-12);
    double prev = -1e300;
    for (double t = 0; t <= n; t += 0.25) {
      const double m = m_kt(N, 0, t, p);
      EXPECT_GE(m, prev);
      prev = m;
    }
  }
  EXPECT_THROW(m_kt(64, 3, 2, p), DomainError);
}

TEST(LocalMaxima, Spike) {
  for (int r : {1, 2, 5}) {
    const auto lm = local_maxima(spike(16, {5, 9}, 3.0), r);
    // the zero background ties everywhere the spike is not visible
    EXPECT_TRUE(std::any_of(lm.begin(), lm.end(), [](const LocalMax& m) { return m.v == Vertex{5, 9}; }));
    for (auto& m : lm)
      if (m.v != Vertex{5, 9}) EXPECT_GT(l1_norm(m.v - Vertex{5, 9}), r);
  }
  FieldSample f = spike(16, {5, 9}, 3.0);
  for (std::size_t i = 0; i < f.spec.size(); ++i)
    if (f.spec.vertex(i) != Vertex{5, 9}) f.heights(Eigen::Index(i)) = -1.0 - 1e-3 * double(i);
  const auto lm = local_maxima(f, 40);
  ASSERT_EQ(lm.size(), 1u);
  EXPECT_EQ(lm[0].v, (Vertex{5, 9}));
}

TEST(LocalMaxima, ConstantAllQualify) {
  EXPECT_EQ(local_maxima(constant_field(8, 1.0), 3).size(), 64u);
}

TEST(LocalMaxima, ArgmaxIncludedAndClipFlag) {
  RngStream s(1);
  DgffSampler d(GridSpec(16));
  for (int i = 0; i < 20; ++i) {
    const FieldSample f = d.sample(s);
    const auto lm = local_maxima(f, 3);
    EXPECT_TRUE(std::any_of(lm.begin(), lm.end(), [&](const LocalMax& m) { return m.v == f.argmax(); }));
  }
  EXPECT_TRUE(window_clipped(GridSpec(16), {1, 8}, 2));
  EXPECT_FALSE(window_clipped(GridSpec(16), {2, 13}, 2));
}

TEST(ExtremalProcess, SpikeAtom) {
  const int N = 32;
  FieldSample f = spike(N, {10, 20}, m_centering(N) + 1.0);
  for (std::size_t i = 0; i < f.spec.size(); ++i)
    if (f.spec.vertex(i) != Vertex{10, 20}) f.heights(Eigen::Index(i)) = -1.0 - 1e-6 * double(i);
  const auto pp = extremal_process(f, 100);
  ASSERT_EQ(pp.atoms.size(), 1u);
  EXPECT_NEAR(pp.atoms[0].h, 1.0, 1e-12);
  EXPECT_NEAR(pp.atoms[0].x1, 10.0 / 32, 1e-15);
  EXPECT_EQ(pp.count(0.3, 0.32, 0.6, 0.7, 0.0, 2.0), 1u);
  EXPECT_EQ(pp.count(0.3, 0.32, 0.6, 0.7, 1.5, 2.0), 0u);
}

TEST(ExtremalProcess, BandCountMatchesLevelSet) {
  RngStream s(2);
  InhomogeneousSampler smp(GridSpec(32), VarianceProfile({0.0, 0.5, 1.0}, {0.5, 1.5}));
  for (int i = 0; i < 10; ++i) {
    const FieldSample f = smp.sample(s);
    const int r = 3;
    const double y = 2.5;
    const auto pp = extremal_process(f, r);
    const auto lm = local_maxima(f, r);
    const auto gamma = level_set(f, y);
    std::size_t both = 0;
    for (auto& m : lm)
      if (std::find(gamma.begin(), gamma.end(), m.v) != gamma.end()) ++both;
    EXPECT_EQ(pp.count(-1, 2, -1, 2, -y, 1e300), both);
  }
}

TEST(FullProcess, ThetaOriginAndSuperpose) {
  const int j = 3;
  FieldSample f = constant_field(32, 0.0);
  const Vertex v{16, 16};
  f.heights(Eigen::Index(f.spec.index(v))) = m_centering(32) + 0.5;
  for (int x = 0; x < 32; ++x)
    for (int y = 0; y < 32; ++y)
      if (l1_norm(Vertex{x, y} - v) <= j) f.heights(Eigen::Index(f.spec.index({x, y}))) = m_centering(32) + 0.5;
      else f.heights(Eigen::Index(f.spec.index({x, y}))) = -5.0 - 1e-4 * (x * 32 + y);
  // flat plateau: all its vertices tie; keep only the centre atom
  ClusteredSample cs = full_process(f, j, j);
  cs.atoms.erase(std::remove_if(cs.atoms.begin(), cs.atoms.end(), [&](auto& a) { return a.atom.v != v; }), cs.atoms.end());
  ASSERT_EQ(cs.atoms.size(), 1u);
  EXPECT_EQ(cs.atoms[0].theta[std::size_t(std::find(cs.atoms[0].offsets.begin(), cs.atoms[0].offsets.end(), Offset{0, 0}) -
                                         cs.atoms[0].offsets.begin())],
            0.0);
  const auto sp = superpose(cs);
  EXPECT_EQ(sp.atoms.size(), std::size_t(2 * j * j + 2 * j + 1));
  for (auto& a : sp.atoms) EXPECT_NEAR(a.h, 0.5, 1e-12);
}

TEST(FullProcess, HeightsNeverExceedParent) {
  RngStream s(3);
  DgffSampler d(GridSpec(32));
  for (int i = 0; i < 10; ++i) {
    const auto cs = full_process(d.sample(s), 4, 2);
    for (auto& ca : cs.atoms) {
      for (double t : ca.theta) EXPECT_GE(t, 0.0);
    }
  }
  EXPECT_THROW(full_process(constant_field(8, 0), 2, 3), DomainError);
}

TEST(LevelSet, LimitsAndMonotone) {
  RngStream s(4);
  const FieldSample f = DgffSampler(GridSpec(16)).sample(s);
  const double m = m_centering(16);
  EXPECT_TRUE(level_set(f, m - f.max() - 1.0).empty());
  EXPECT_EQ(level_set_size(f, m), std::size_t((f.heights.array() >= 0.0).count()));
  std::size_t prev = 0;
  for (double y = -2; y <= 8; y += 0.5) {
    const auto sz = level_set_size(f, y);
    EXPECT_GE(sz, prev);
    prev = sz;
  }
  const auto a = level_set(f, 3.0), b = level_set(f, 4.0);
  for (Vertex v : a) EXPECT_NE(std::find(b.begin(), b.end(), v), b.end());
}

TEST(RegionMaxima, Examples) {
  RngStream s(5);
  const GridSpec spec(16);
  const FieldSample f = DgffSampler(spec).sample(s);
  const double m = m_centering(16);
  const auto whole = joint_region_maxima(f, {Region::scaled_rect("all", spec, -0.1, 1.1, -0.1, 1.1)});
  EXPECT_DOUBLE_EQ(*whole[0], f.max() - m);
  const Region a = Region::scaled_rect("a", spec, -0.1, 0.5, -0.1, 1.1);
  const Region b = Region::scaled_rect("b", spec, 0.5, 1.1, -0.1, 1.1);
  const Region e = Region::scaled_rect("e", spec, 0.01, 0.02, 0.01, 0.02);
  const auto ab = joint_region_maxima(f, {a, b, e});
  const auto ba = joint_region_maxima(f, {b, a});
  EXPECT_EQ(*ab[0], *ba[1]);
  EXPECT_EQ(*ab[1], *ba[0]);
  EXPECT_LE(*ab[0], *whole[0]);
  EXPECT_LE(*ab[1], *whole[0]);
  EXPECT_FALSE(ab[2].has_value());
  EXPECT_THROW(joint_region_maxima(f, {a, a}), DomainError);
}
