#pragma once

// Local/binding decomposition of psi around a vertex v. With the diamond
// Lambda = Lambda_M(v) and the Gibbs-Markov split phi = H phi + phi^Lambda
// (H the harmonic extension into Lambda, phi^Lambda a DGFF on Lambda):
//   binding field Phi = L H phi   (measurable w.r.t. phi outside Lambda)
//   local field       = L phi^Lambda
// and the two are independent.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "sigf/dgff.hpp"
#include "sigf/error.hpp"
#include "sigf/field.hpp"
#include "sigf/green.hpp"
#include "sigf/inhomogeneous.hpp"
#include "sigf/lattice.hpp"

namespace sigf {

inline bool diamond_inside(const GridSpec& spec, Vertex v, int M) {
  return v.x - M >= 0 && v.y - M >= 0 && v.x + M < spec.N && v.y + M < spec.N;
}

/// Harmonic measures from every point of the diamond Lambda_M(0) (clipped to V_N
/// when anchored near the boundary), by one factorization.
class DiamondHarmonic {
 public:
  DiamondHarmonic(const GridSpec& spec, Vertex v, int M) {
    for (Vertex w : l1_neighborhood(v, M))
      if (spec.contains(w)) pts_.push_back(w);
    std::sort(pts_.begin(), pts_.end());
    const auto n = Eigen::Index(pts_.size());
    std::vector<Eigen::Triplet<double>> t;
    for (Eigen::Index i = 0; i < n; ++i) {
      t.emplace_back(i, i, 4.0);
      for (Vertex w : neighbours(pts_[std::size_t(i)])) {
        const auto j = find(w);
        if (j >= 0) t.emplace_back(i, j, -1.0);
      }
    }
    SparseMatrix m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    llt_.compute(m);
    if (llt_.info() != Eigen::Success) throw NumericError("DiamondHarmonic: factorization failed");
    spec_ = spec;
  }

  const std::vector<Vertex>& points() const { return pts_; }
  std::ptrdiff_t find(Vertex w) const {
    auto it = std::lower_bound(pts_.begin(), pts_.end(), w);
    return (it != pts_.end() && *it == w) ? it - pts_.begin() : -1;
  }

  /// Exit distribution from x (a diamond point) on exterior points inside V_N.
  std::vector<std::pair<Vertex, double>> exit(Vertex x) const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(Eigen::Index(pts_.size()));
    e(find(x)) = 1.0;
    const Eigen::VectorXd y = llt_.solve(e);
    std::map<Vertex, double> acc;
    for (std::size_t i = 0; i < pts_.size(); ++i)
      for (Vertex b : neighbours(pts_[i]))
        if (find(b) < 0 && spec_.contains(b)) acc[b] += y(Eigen::Index(i));
    return {acc.begin(), acc.end()};
  }

 private:
  GridSpec spec_{2};
  std::vector<Vertex> pts_;
  SparseLLT llt_;
};

/// Row of L H at w: L_w with diamond entries replaced by their harmonic extension.
inline Eigen::VectorXd binding_row(const InhomogeneousOperator& op, const DiamondHarmonic& dh, Vertex w) {
  const GridSpec& spec = op.spec();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(Eigen::Index(spec.size()));
  for (RowSparse::InnerIterator it(op.matrix(), Eigen::Index(spec.index(w))); it; ++it) {
    const Vertex x = spec.vertex(std::size_t(it.col()));
    if (dh.find(x) < 0) {
      out(it.col()) += it.value();
    } else {
      for (auto& [b, h] : dh.exit(x)) out(Eigen::Index(spec.index(b))) += it.value() * h;
    }
  }
  return out;
}

struct Decomposition {
  Vertex v;
  int M = 0;
  std::vector<Vertex> window;         // Lambda_M(v), sorted
  Eigen::MatrixXd cov_psi;            // psi restricted to the window
  Eigen::MatrixXd cov_binding;        // Phi^{M,v}
  Eigen::MatrixXd cov_local;          // L phi^Lambda
  Eigen::MatrixXd cov_residual;       // local field minus sigma(1) phi^Lambda
  double additivity_error = 0.0;      // max |cov_psi - cov_binding - cov_local|

  std::ptrdiff_t index(Vertex w) const {
    auto it = std::lower_bound(window.begin(), window.end(), w);
    return (it != window.end() && *it == w) ? it - window.begin() : -1;
  }
};

inline Decomposition decompose_around(const InhomogeneousOperator& op, const DgffSampler& dgff, Vertex v, int M) {
  const GridSpec& spec = op.spec();
  if (M < 1) throw DomainError("decompose_around: window must be >= 1");
  if (!diamond_inside(spec, v, M)) throw DomainError("decompose_around: window touches the boundary of V_N");
  Decomposition d;
  d.v = v;
  d.M = M;
  DiamondHarmonic dh(spec, v, M);
  d.window = dh.points();
  const auto n = Eigen::Index(d.window.size());

  // rows of L and of L H, and L restricted to the window for the local part
  std::vector<Eigen::VectorXd> Lrows, Brows;
  Eigen::MatrixXd Lloc = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vertex w = d.window[std::size_t(i)];
    Lrows.push_back(op.row(w));
    Brows.push_back(binding_row(op, dh, w));
    for (Eigen::Index j = 0; j < n; ++j) Lloc(i, j) = Lrows.back()(Eigen::Index(spec.index(d.window[std::size_t(j)])));
  }
  d.cov_psi.resize(n, n);
  d.cov_binding.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::VectorXd gl = dgff.covariance_apply(Lrows[std::size_t(j)]);
    const Eigen::VectorXd gb = dgff.covariance_apply(Brows[std::size_t(j)]);
    for (Eigen::Index i = 0; i < n; ++i) {
      d.cov_psi(i, j) = Lrows[std::size_t(i)].dot(gl);
      d.cov_binding(i, j) = Brows[std::size_t(i)].dot(gb);
    }
  }
  const GreenTable gl = green_table(d.window);
  d.cov_local = Lloc * gl.matrix * Lloc.transpose();
  const Eigen::MatrixXd R = Lloc - op.profile().sigma_last() * Eigen::MatrixXd::Identity(n, n);
  d.cov_residual = R * gl.matrix * R.transpose();
  d.additivity_error = (d.cov_psi - d.cov_binding - d.cov_local).cwiseAbs().maxCoeff();
  return d;
}

/// Evaluates Phi^{M,v}_v on realized samples from the retained phi; the functional
/// is cached per anchor vertex.
class BindingEvaluator {
 public:
  BindingEvaluator(std::shared_ptr<const InhomogeneousOperator> op, int M) : op_(std::move(op)), M_(M) {}

  int window() const { return M_; }

  /// Coefficients of Phi^{M,v}_v as a sparse functional of phi.
  const std::vector<std::pair<std::size_t, double>>& functional(Vertex v) {
    const GridSpec& spec = op_->spec();
    const std::size_t key = spec.index(v);
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = rows_.find(key);
      if (it != rows_.end()) return it->second;
    }
    DiamondHarmonic dh(spec, v, M_);
    const Eigen::VectorXd r = binding_row(*op_, dh, v);
    std::vector<std::pair<std::size_t, double>> sparse;
    for (Eigen::Index i = 0; i < r.size(); ++i)
      if (r(i) != 0.0) sparse.emplace_back(std::size_t(i), r(i));
    std::lock_guard<std::mutex> lock(mu_);
    return rows_.emplace(key, std::move(sparse)).first->second;
  }

  double evaluate(const FieldSample& f, Vertex v) {
    if (!f.has_underlying()) throw ConfigError("binding field: sample carries no underlying DGFF");
    double acc = 0.0;
    for (auto& [i, c] : functional(v)) acc += c * (*f.underlying)(Eigen::Index(i));
    return acc;
  }

 private:
  std::shared_ptr<const InhomogeneousOperator> op_;
  int M_;
  std::mutex mu_;
  std::map<std::size_t, std::vector<std::pair<std::size_t, double>>> rows_;
};

}  // namespace sigf
