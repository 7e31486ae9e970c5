#pragma once

// Scale-inhomogeneous DGFF as a linear image psi = L phi of a DGFF draw. For a
// step profile with breakpoints l_1 < ... < l_{M-1} the row of v is
//   sigma_M e_v + sum_i (sigma_i - sigma_{i+1}) h_{l_i}(v, .),
// where h_l(v, .) is the exit distribution from the conditioning window of v at
// scale l. Exit points outside V_N carry phi = 0 and are dropped.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "sigf/dgff.hpp"
#include "sigf/error.hpp"
#include "sigf/field.hpp"
#include "sigf/green.hpp"
#include "sigf/lattice.hpp"
#include "sigf/profile.hpp"

namespace sigf {

using RowSparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Row of L at v as an ordered (vertex -> coefficient) map.
inline std::map<Vertex, double> inhomogeneous_row(const GridSpec& spec, const VarianceProfile& p, Vertex v,
                                                  RectGreenCache& cache) {
  std::map<Vertex, double> row;
  const std::size_t M = p.pieces();
  row[v] += p.sigma(M - 1);
  for (std::size_t i = 1; i < M; ++i) {
    const double coef = p.sigma(i - 1) - p.sigma(i);
    if (coef == 0.0) continue;
    const Box D = conditioning_interior(v, p.breakpoints()[i], spec);
    const HarmonicWeights hw = harmonic_measure(D, v, cache);
    for (auto& [b, w] : hw.weights)
      if (spec.contains(b)) row[b] += coef * w;
  }
  return row;
}

class InhomogeneousOperator {
 public:
  InhomogeneousOperator(const GridSpec& spec, const VarianceProfile& profile,
                        std::shared_ptr<RectGreenCache> cache = std::make_shared<RectGreenCache>())
      : spec_(spec), profile_(profile), cache_(std::move(cache)) {
    const auto n = Eigen::Index(spec.size());
    std::vector<Eigen::Triplet<double>> t;
    for (std::size_t i = 0; i < spec.size(); ++i) {
      for (auto& [b, w] : inhomogeneous_row(spec, profile, spec.vertex(i), *cache_))
        if (w != 0.0) t.emplace_back(Eigen::Index(i), Eigen::Index(spec.index(b)), w);
    }
    L_.resize(n, n);
    L_.setFromTriplets(t.begin(), t.end());
    L_.makeCompressed();
  }

  const GridSpec& spec() const { return spec_; }
  const VarianceProfile& profile() const { return profile_; }
  const RowSparse& matrix() const { return L_; }
  RectGreenCache& cache() const { return *cache_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& phi) const { return L_ * phi; }

  /// Dense copy of row v.
  Eigen::VectorXd row(Vertex v) const { return L_.row(Eigen::Index(spec_.index(v))).transpose(); }

 private:
  GridSpec spec_;
  VarianceProfile profile_;
  std::shared_ptr<RectGreenCache> cache_;
  RowSparse L_;
};

/// Var(psi_v) = L_v G L_v^T by one triangular solve.
inline double inhomogeneous_variance(const InhomogeneousOperator& op, const DgffSampler& dgff, Vertex v) {
  return dgff.quadratic_form(op.row(v));
}

inline double inhomogeneous_covariance_entry(const InhomogeneousOperator& op, const DgffSampler& dgff, Vertex u,
                                             Vertex v) {
  return op.row(u).dot(dgff.covariance_apply(op.row(v)));
}

/// Full covariance L G L^T (validation only; dense N^2 x N^2).
inline Eigen::MatrixXd inhomogeneous_covariance(const InhomogeneousOperator& op, const DgffSampler& dgff) {
  const auto n = Eigen::Index(op.spec().size());
  Eigen::MatrixXd out(n, n);
  const Eigen::SparseMatrix<double> Lt = op.matrix().transpose();
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd col = Lt.col(j);
    out.col(j) = op.matrix() * dgff.covariance_apply(col);
  }
  return 0.5 * (out + out.transpose());
}

struct InhomogeneousModel {
  std::shared_ptr<const InhomogeneousOperator> op;
  Eigen::MatrixXd covariance;
};

/// Operator together with its covariance.
inline InhomogeneousModel inhomogeneous_operator(const GridSpec& spec, const VarianceProfile& profile,
                                                 int cap = default_exact_cap) {
  DgffSampler dgff(spec, cap);
  auto op = std::make_shared<const InhomogeneousOperator>(spec, profile);
  return {op, inhomogeneous_covariance(*op, dgff)};
}

class InhomogeneousSampler {
 public:
  InhomogeneousSampler(const GridSpec& spec, const VarianceProfile& profile, bool allow_degenerate = false,
                       int cap = default_exact_cap)
      : dgff_(std::make_shared<const DgffSampler>(spec, cap)) {
    profile.require_admissible(allow_degenerate);
    op_ = std::make_shared<const InhomogeneousOperator>(spec, profile);
  }

  const GridSpec& spec() const { return op_->spec(); }
  const InhomogeneousOperator& op() const { return *op_; }
  const DgffSampler& dgff() const { return *dgff_; }

  FieldSample sample(RngStream& stream) const {
    FieldSample f;
    f.spec = op_->spec();
    Eigen::VectorXd phi = dgff_->draw(stream);
    f.heights = op_->apply(phi);
    f.underlying = std::move(phi);
    f.sampler = "inhomogeneous";
    return f;
  }

  double variance(Vertex v) const { return inhomogeneous_variance(*op_, *dgff_, v); }

 private:
  std::shared_ptr<const DgffSampler> dgff_;
  std::shared_ptr<const InhomogeneousOperator> op_;
};

inline FieldSample sample_inhomogeneous(const GridSpec& spec, const VarianceProfile& profile, RngStream& stream,
                                        bool allow_degenerate = false) {
  return InhomogeneousSampler(spec, profile, allow_degenerate).sample(stream);
}

}  // namespace sigf
