#pragma once

// Dense multivariate Gaussian laws: factorized sampling and Schur-complement
// conditioning. Used for small laws (pinned fields, coarse fields, comparison
// instances); large DGFF draws go through the sparse precision path in dgff.hpp.

#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "sigf/error.hpp"
#include "sigf/rng.hpp"

namespace sigf {

class GaussianLaw {
 public:
  GaussianLaw() = default;

  GaussianLaw(Eigen::VectorXd mean, Eigen::MatrixXd cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
    if (cov_.rows() != cov_.cols() || cov_.rows() != mean_.size())
      throw DomainError("GaussianLaw: dimension mismatch between mean and covariance");
    const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
    if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw DomainError("GaussianLaw: covariance not symmetric");
    factorize();
  }

  static GaussianLaw centred(Eigen::MatrixXd cov) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(cov.rows());
    return GaussianLaw(std::move(m), std::move(cov));
  }

  Eigen::Index dim() const { return mean_.size(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  /// F with F F^T = covariance (up to the jitter reported by jitter()).
  const Eigen::MatrixXd& factor() const { return factor_; }
  double jitter() const { return jitter_; }

  /// mean + F z for a given standard normal vector z.
  Eigen::VectorXd transform(const Eigen::VectorXd& z) const { return mean_ + factor_ * z; }

 private:
  void factorize() {
    const Eigen::Index n = cov_.rows();
    if (n == 0) return;
    const double tol = 1e-10 * std::max(cov_.trace(), 0.0) / double(n);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cov_);
    if (ldlt.info() != Eigen::Success) throw NumericError("GaussianLaw: LDLT factorization failed");
    Eigen::VectorXd d = ldlt.vectorD();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (d(i) < 0.0) {
        if (-d(i) > tol) {
          std::ostringstream os;
          os << "GaussianLaw: covariance not PSD (pivot " << d(i) << ", jitter tolerance " << tol
             << ")";
          throw NumericError(os.str());
        }
        jitter_ = std::max(jitter_, -d(i));
        d(i) = 0.0;
      }
    }
    Eigen::MatrixXd L = ldlt.matrixL();
    Eigen::MatrixXd F = L * d.cwiseSqrt().asDiagonal();
    factor_ = ldlt.transpositionsP().transpose() * F;
    const double err = (factor_ * factor_.transpose() - cov_).cwiseAbs().maxCoeff();
    if (err > 1e-8 * std::max(1.0, cov_.cwiseAbs().maxCoeff()))
      throw NumericError("GaussianLaw: factor does not reproduce covariance");
  }

  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd factor_;
  double jitter_ = 0.0;
};

inline Eigen::VectorXd standard_normal_vector(Eigen::Index n, RngStream& stream) {
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = stream.normal();
  return z;
}

inline Eigen::VectorXd gaussian_sample(const GaussianLaw& law, RngStream& stream) {
  return law.transform(standard_normal_vector(law.dim(), stream));
}

/// Law of the unobserved coordinates is returned in the full dimension: observed
/// coordinates become deterministic (mean = value, zero variance).
inline GaussianLaw condition_gaussian(const GaussianLaw& law, const std::map<Eigen::Index, double>& observed) {
  if (observed.empty()) return law;
  const Eigen::Index n = law.dim();
  std::vector<Eigen::Index> obs, free;
  for (auto& [i, v] : observed) {
    (void)v;
    if (i < 0 || i >= n) throw DomainError("condition_gaussian: observed index out of range");
    obs.push_back(i);
  }
  for (Eigen::Index i = 0; i < n; ++i)
    if (!observed.count(i)) free.push_back(i);

  const auto& S = law.covariance();
  const auto& mu = law.mean();
  const Eigen::Index k = Eigen::Index(obs.size()), f = Eigen::Index(free.size());
  Eigen::MatrixXd Soo(k, k), Sfo(f, k), Sff(f, f);
  Eigen::VectorXd r(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    r(a) = observed.at(obs[a]) - mu(obs[a]);
    for (Eigen::Index b = 0; b < k; ++b) Soo(a, b) = S(obs[a], obs[b]);
    for (Eigen::Index b = 0; b < f; ++b) Sfo(b, a) = S(free[b], obs[a]);
  }
  for (Eigen::Index a = 0; a < f; ++a)
    for (Eigen::Index b = 0; b < f; ++b) Sff(a, b) = S(free[a], free[b]);

  Eigen::LLT<Eigen::MatrixXd> llt(Soo);
  if (llt.info() != Eigen::Success || llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0.0)
    throw NumericError("condition_gaussian: observed block is singular");
  const Eigen::VectorXd shift = Sfo * llt.solve(r);
  Eigen::MatrixXd cond = Sff - Sfo * llt.solve(Sfo.transpose());
  cond = 0.5 * (cond + cond.transpose());

  Eigen::VectorXd m2 = mu;
  Eigen::MatrixXd S2 = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index a = 0; a < k; ++a) m2(obs[a]) = observed.at(obs[a]);
  for (Eigen::Index a = 0; a < f; ++a) {
    m2(free[a]) += shift(a);
    for (Eigen::Index b = 0; b < f; ++b) S2(free[a], free[b]) = cond(a, b);
  }
  return GaussianLaw(std::move(m2), std::move(S2));
}

}  // namespace sigf
