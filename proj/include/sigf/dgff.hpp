#pragma once

// Exact DGFF sampling on V_N through the sparse precision (2/pi)(I - P):
// with P Q P^T = L L^T, phi = P^T L^{-T} z has covariance Q^{-1} = G.

#include <memory>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "sigf/error.hpp"
#include "sigf/field.hpp"
#include "sigf/green.hpp"
#include "sigf/rng.hpp"

namespace sigf {

inline constexpr int default_exact_cap = 64;

class DgffSampler {
 public:
  explicit DgffSampler(const GridSpec& spec, int cap = default_exact_cap) : spec_(spec) {
    if (spec.N > cap)
      throw ResourceError("sample_dgff: N = " + std::to_string(spec.N) + " exceeds the exact-mode cap of " +
                          std::to_string(cap) + " (raise the cap explicitly; hierarchical mode is not provided)");
    // precision (2/pi)(I - P) = (1/(2 pi)) (4I - A)
    SparseMatrix q = rect_laplacian(spec.N, spec.N) * (1.0 / (4.0 * green_scale));
    llt_ = std::make_shared<SparseLLT>(q);
    if (llt_->info() != Eigen::Success) throw NumericError("sample_dgff: precision factorization failed");
  }

  const GridSpec& spec() const { return spec_; }

  /// phi for a given standard normal vector.
  Eigen::VectorXd transform(const Eigen::VectorXd& z) const {
    Eigen::VectorXd y = llt_->matrixU().solve(z);
    return llt_->permutationPinv() * y;
  }

  Eigen::VectorXd draw(RngStream& stream) const {
    return transform(standard_normal(Eigen::Index(spec_.size()), stream));
  }

  FieldSample sample(RngStream& stream) const {
    FieldSample f;
    f.spec = spec_;
    f.heights = draw(stream);
    f.sampler = "dgff";
    return f;
  }

  /// G x (one solve with the precision).
  Eigen::VectorXd covariance_apply(const Eigen::VectorXd& rhs) const { return llt_->solve(rhs); }

  /// ||L^{-1} P x||^2 = x^T G x.
  double quadratic_form(const Eigen::VectorXd& x) const {
    Eigen::VectorXd px = llt_->permutationP() * x;
    Eigen::VectorXd y = llt_->matrixL().solve(px);
    return y.squaredNorm();
  }

 private:
  static Eigen::VectorXd standard_normal(Eigen::Index n, RngStream& s) {
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = s.normal();
    return z;
  }

  GridSpec spec_;
  std::shared_ptr<SparseLLT> llt_;
};

inline FieldSample sample_dgff(const GridSpec& spec, RngStream& stream, int cap = default_exact_cap) {
  return DgffSampler(spec, cap).sample(stream);
}

}  // namespace sigf
