#pragma once

// Potential kernel a(w) = lim G_B(c,c) - G_B(c,c+w) over boxes B of side 2^m
// centred at c. Each box costs one sparse solve; the column is cached per m.
// Errors decay like side^{-2} with a next term near side^{-3}, so successive sides
// go through two Richardson passes (ratios 4 and 8).

#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>

#include <Eigen/Dense>

#include "sigf/error.hpp"
#include "sigf/green.hpp"
#include "sigf/lattice.hpp"

namespace sigf {

class PotentialKernel {
 public:
  static constexpr int default_offset_cap = 16;
  static constexpr int default_max_level = 9;

  explicit PotentialKernel(int offset_cap = default_offset_cap, int max_level = default_max_level)
      : cap_(offset_cap), max_level_(max_level) {}

  int offset_cap() const { return cap_; }

  /// Green difference on the side-2^m box (no extrapolation).
  double box_estimate(Offset w, int m) {
    const Eigen::VectorXd& col = column(m);
    const int side = 1 << m, c = side / 2;
    const int x = c + w.x, y = c + w.y;
    if (x < 0 || y < 0 || x >= side || y >= side) throw DomainError("potential_kernel: offset outside box");
    return col(c * side + c) - col(x * side + y);
  }

  /// Extrapolated value; throws AccuracyError if successive extrapolants never agree to tol.
  double operator()(Offset w, double tol = 1e-4) {
    if (linf_norm(w) > cap_)
      throw DomainError("potential_kernel: |w|_inf exceeds the offset cap of " + std::to_string(cap_));
    if (w.x == 0 && w.y == 0) return 0.0;
    // canonical representative under the lattice symmetry group
    Offset c{std::abs(w.x), std::abs(w.y)};
    if (c.x < c.y) std::swap(c.x, c.y);
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = values_.find({c, tol});
      if (it != values_.end()) return it->second;
    }
    int m0 = 3;
    while ((1 << (m0 - 1)) <= linf_norm(c) + 1) ++m0;
    double prev_raw = box_estimate(c, m0);
    std::optional<double> prev_r1, prev_r2;
    double achieved = INFINITY;
    for (int m = m0 + 1; m <= max_level_; ++m) {
      const double raw = box_estimate(c, m);
      const double r1 = (4.0 * raw - prev_raw) / 3.0;
      if (prev_r1) {
        const double r2 = (8.0 * r1 - *prev_r1) / 7.0;
        if (prev_r2) {
          achieved = std::abs(r2 - *prev_r2);
          if (achieved < tol) {
            std::lock_guard<std::mutex> lock(mu_);
            values_[{c, tol}] = r2;
            return r2;
          }
        }
        prev_r2 = r2;
      }
      prev_r1 = r1;
      prev_raw = raw;
    }
    std::ostringstream os;
    os << "potential_kernel: no convergence to " << tol << " within boxes of side 2^" << max_level_
       << " (achieved " << achieved << ")";
    throw AccuracyError(os.str(), achieved);
  }

 private:
  const Eigen::VectorXd& column(int m) {
    if (m < 1 || m > max_level_) throw DomainError("potential_kernel: box level out of range");
    std::lock_guard<std::mutex> lock(mu_);
    auto it = columns_.find(m);
    if (it != columns_.end()) return it->second;
    const int side = 1 << m;
    RectGreen rg(side, side);
    auto [pos, ok] = columns_.emplace(m, green_column(rg, side / 2, side / 2));
    return pos->second;
  }

  struct Key {
    Offset w;
    double tol;
    bool operator<(const Key& o) const { return w < o.w || (w == o.w && tol < o.tol); }
  };

  int cap_;
  int max_level_;
  std::mutex mu_;
  std::map<int, Eigen::VectorXd> columns_;
  std::map<Key, double> values_;
};

/// Process-wide kernel instance with default caps.
inline PotentialKernel& shared_potential_kernel() {
  static PotentialKernel k;
  return k;
}

inline double potential_kernel(Offset w, double tol = 1e-4) { return shared_potential_kernel()(w, tol); }

}  // namespace sigf
