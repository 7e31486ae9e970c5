#pragma once

// Piecewise-constant variance profiles sigma^2 over scales [0,1].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <sstream>
#include <string>
#include <vector>

#include "sigf/error.hpp"
#include "sigf/rng.hpp"

namespace sigf {

class VarianceProfile {
 public:
  VarianceProfile() : VarianceProfile({0.0, 1.0}, {1.0}) {}

  /// breakpoints 0 = l_0 < ... < l_M = 1, one sigma^2 value per interval.
  VarianceProfile(std::vector<double> breakpoints, std::vector<double> sigma2)
      : bp_(std::move(breakpoints)), s2_(std::move(sigma2)) {
    if (bp_.size() < 2 || s2_.size() + 1 != bp_.size())
      throw ConfigError("profile: need M+1 breakpoints for M variance values");
    if (bp_.front() != 0.0 || bp_.back() != 1.0)
      throw ConfigError("profile: breakpoints must start at 0 and end at 1");
    for (std::size_t i = 1; i < bp_.size(); ++i)
      if (!(bp_[i] > bp_[i - 1])) throw ConfigError("profile: breakpoints must be strictly increasing");
    for (double s : s2_)
      if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("profile: sigma^2 values must be finite and >= 0");
    if (std::abs(integral(0.0, 1.0) - 1.0) > 1e-12) {
      std::ostringstream os;
      os.precision(17);
      os << "profile: integral of sigma^2 over [0,1] must be 1, got " << integral(0.0, 1.0);
      throw ConfigError(os.str());
    }
  }

  static VarianceProfile homogeneous() { return {}; }

  /// sigma^2 = (s1, s2) on [0, split) and [split, 1].
  static VarianceProfile two_scale(double s1, double s2, double split) {
    return VarianceProfile({0.0, split, 1.0}, {s1, s2});
  }

  std::size_t pieces() const { return s2_.size(); }
  const std::vector<double>& breakpoints() const { return bp_; }
  const std::vector<double>& sigma2() const { return s2_; }
  double sigma(std::size_t i) const { return std::sqrt(s2_.at(i)); }
  double sigma_first() const { return sigma(0); }
  double sigma_last() const { return sigma(s2_.size() - 1); }
  double sigma2_first() const { return s2_.front(); }
  double sigma2_last() const { return s2_.back(); }

  /// Integral of sigma^2 over [a,b].
  double integral(double a, double b) const { return piecewise(a, b, false); }
  /// Integral of sigma over [a,b].
  double sigma_integral(double a, double b) const { return piecewise(a, b, true); }
  /// I(x) = integral over [0,x].
  double I(double x) const { return integral(0.0, x); }

  /// Assumption gate: I(x) < x on the open interval, sigma(0) < 1 < sigma(1).
  bool strictly_admissible(std::string* why = nullptr) const {
    auto fail = [&](const std::string& m) {
      if (why) *why = m;
      return false;
    };
    if (!(sigma2_first() < 1.0)) return fail("sigma(0) must be < 1");
    if (!(sigma2_last() > 1.0)) return fail("sigma(1) must be > 1");
    constexpr int grid = 4096;
    for (int k = 1; k < grid; ++k) {
      const double x = double(k) / grid;
      if (!(I(x) < x)) return fail("I(x) < x fails at x = " + std::to_string(x));
    }
    for (std::size_t i = 1; i + 1 < bp_.size(); ++i)
      if (!(I(bp_[i]) < bp_[i])) return fail("I(x) < x fails at a breakpoint");
    return true;
  }

  void require_admissible(bool allow_degenerate) const {
    std::string why;
    if (!allow_degenerate && !strictly_admissible(&why))
      throw ConfigError("profile fails strict validation (" + why + "); set the override flag to explore it");
  }

  std::uint64_t hash() const {
    std::uint64_t h = detail::fnv1a64("profile");
    auto mix = [&](double d) {
      std::uint64_t bits;
      std::memcpy(&bits, &d, sizeof bits);
      h = detail::splitmix64(h ^ bits);
    };
    for (double b : bp_) mix(b);
    for (double s : s2_) mix(s);
    return h;
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(10);
    for (std::size_t i = 0; i < s2_.size(); ++i) {
      if (i) os << ' ';
      os << '[' << bp_[i] << ',' << bp_[i + 1] << "):" << s2_[i];
    }
    return os.str();
  }

  friend bool operator==(const VarianceProfile&, const VarianceProfile&) = default;

 private:
  double piecewise(double a, double b, bool root) const {
    if (!(a >= 0.0 && b <= 1.0 && a <= b)) throw DomainError("profile integral: need 0 <= a <= b <= 1");
    double acc = 0.0;
    for (std::size_t i = 0; i < s2_.size(); ++i) {
      const double lo = std::max(a, bp_[i]), hi = std::min(b, bp_[i + 1]);
      if (hi > lo) acc += (hi - lo) * (root ? std::sqrt(s2_[i]) : s2_[i]);
    }
    return acc;
  }

  std::vector<double> bp_;
  std::vector<double> s2_;
};

inline double profile_integral(const VarianceProfile& p, double a, double b) { return p.integral(a, b); }

}  // namespace sigf
