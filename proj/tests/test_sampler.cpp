#include <gtest/gtest.h>

#include <cmath>

#include "sigf/gaussian.hpp"
#include "sigf/rng.hpp"

using namespace sigf;

TEST(RngStream, DeterministicPerPath) {
  RngStream a(42, {"exp", "3"}), b(42, {"exp", "3"});
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
  RngStream root(42);
  auto c = root.derive("exp").derive(3);
  RngStream d(42, {"exp", "3"});
  for (int i = 0; i < 10; ++i) EXPECT_EQ(c(), d());
}

TEST(RngStream, DerivationIgnoresParentState) {
  RngStream root(7);
  auto before = root.derive("x");
  for (int i = 0; i < 50; ++i) root();
  auto after = root.derive("x");
  for (int i = 0; i < 10; ++i) EXPECT_EQ(before(), after());
}

TEST(RngStream, DistinctPathsLookIndependent) {
  RngStream a(1, {"r", "0"}), b(1, {"r", "1"});
  const int n = 20000;
  double sab = 0.0, sa = 0.0, sb = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = a.normal(), y = b.normal();
    sab += x * y;
    sa += x;
    sb += y;
  }
  EXPECT_LT(std::abs(sab / n), 5.0 / std::sqrt(double(n)));
  EXPECT_LT(std::abs(sa / n), 5.0 / std::sqrt(double(n)));
  EXPECT_LT(std::abs(sb / n), 5.0 / std::sqrt(double(n)));
}

TEST(RngStream, UniformOpenInterval) {
  RngStream s(3);
  for (int i = 0; i < 100000; ++i) {
    const double u = s.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(GaussianSample, ZeroCovarianceReturnsMean) {
  Eigen::VectorXd m(3);
  m << 1.0, -2.0, 0.5;
  GaussianLaw law(m, Eigen::MatrixXd::Zero(3, 3));
  RngStream s(9);
  EXPECT_EQ(gaussian_sample(law, s), m);
}

TEST(GaussianSample, ScalarStd) {
  GaussianLaw law(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, 4.0));
  RngStream s(11);
  const int n = 10000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = gaussian_sample(law, s)(0);
    s1 += x;
    s2 += x * x;
  }
  const double var = s2 / n - (s1 / n) * (s1 / n);
  // SE of the sample std is about sigma / sqrt(2n)
  EXPECT_NEAR(std::sqrt(var), 2.0, 5.0 * 2.0 / std::sqrt(2.0 * n));
}

TEST(GaussianSample, EmpiricalCovariance) {
  Eigen::MatrixXd C(3, 3);
  C << 2.0, 0.6, -0.3, 0.6, 1.0, 0.2, -0.3, 0.2, 0.5;
  auto law = GaussianLaw::centred(C);
  RngStream s(12);
  const int n = 10000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(3, 3);
  for (int i = 0; i < n; ++i) {
    auto x = gaussian_sample(law, s);
    acc += x * x.transpose();
  }
  acc /= n;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double se = std::sqrt((C(i, i) * C(j, j) + C(i, j) * C(i, j)) / n);
      EXPECT_NEAR(acc(i, j), C(i, j), 5.0 * se);
    }
}

TEST(GaussianSample, SemidefiniteAccepted) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Ones(2, 2);
  auto law = GaussianLaw::centred(C);
  EXPECT_LE((law.factor() * law.factor().transpose() - C).cwiseAbs().maxCoeff(), 1e-12);
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(GaussianLaw::centred(bad), NumericError);
}

TEST(ConditionGaussian, EmptyObservation) {
  Eigen::MatrixXd C(2, 2);
  C << 1.0, 0.3, 0.3, 1.0;
  auto law = GaussianLaw::centred(C);
  auto c = condition_gaussian(law, {});
  EXPECT_EQ(c.covariance(), C);
}

TEST(ConditionGaussian, Bivariate) {
  const double rho = 0.7, y = 1.3;
  Eigen::MatrixXd C(2, 2);
  C << 1.0, rho, rho, 1.0;
  auto c = condition_gaussian(GaussianLaw::centred(C), {{1, y}});
  EXPECT_NEAR(c.mean()(0), rho * y, 1e-14);
  EXPECT_NEAR(c.covariance()(0, 0), 1.0 - rho * rho, 1e-14);
  EXPECT_EQ(c.mean()(1), y);
  EXPECT_EQ(c.covariance()(1, 1), 0.0);
}

TEST(ConditionGaussian, TowerProperty) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Random(4, 4);
  Eigen::MatrixXd C = A * A.transpose() + Eigen::MatrixXd::Identity(4, 4);
  Eigen::VectorXd m(4);
  m << 0.1, 0.2, -0.3, 0.4;
  GaussianLaw law(m, C);
  auto joint = condition_gaussian(law, {{1, 0.5}, {3, -1.0}});
  auto seq = condition_gaussian(condition_gaussian(law, {{1, 0.5}}), {{3, -1.0}});
  EXPECT_LE((joint.mean() - seq.mean()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((joint.covariance() - seq.covariance()).cwiseAbs().maxCoeff(), 1e-10);
  for (int i = 0; i < 4; ++i) EXPECT_LE(joint.covariance()(i, i), C(i, i) + 1e-12);
}

TEST(ConditionGaussian, SingularObservedBlock) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Ones(3, 3);
  EXPECT_THROW(condition_gaussian(GaussianLaw::centred(C), {{0, 1.0}, {1, 1.0}}), NumericError);
}
