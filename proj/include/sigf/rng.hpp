#pragma once

// Seeded random streams. A stream is identified by a root seed and an ordered
// derivation path (e.g. experiment / replica / field); the engine key is a hash
// of both, so replicas can be generated in any order without sharing state.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace sigf {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace detail

class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t root_seed, std::vector<std::string> path = {})
      : seed_(root_seed), path_(std::move(path)), engine_(derive_key(seed_, path_)) {}

  /// Child stream with `label` appended to the derivation path. Independent of how
  /// many numbers this stream has already produced.
  RngStream derive(std::string_view label) const {
    auto p = path_;
    p.emplace_back(label);
    return RngStream(seed_, std::move(p));
  }
  RngStream derive(std::uint64_t index) const { return derive(std::to_string(index)); }

  std::uint64_t root_seed() const { return seed_; }
  const std::vector<std::string>& path() const { return path_; }
  std::uint64_t key() const { return derive_key(seed_, path_); }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on the open interval (0,1) with 53 random bits.
  double uniform() {
    return (double((engine_() >> 11)) + 0.5) * (1.0 / 9007199254740992.0);
  }

  /// Standard normal by the Box-Muller transform (portable, unlike
  /// std::normal_distribution whose algorithm is implementation-defined).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
  }

  double exponential(double rate) { return -std::log(uniform()) / rate; }
  bool bernoulli(double p) { return uniform() < p; }

 private:
  static std::uint64_t derive_key(std::uint64_t seed, const std::vector<std::string>& path) {
    std::uint64_t k = detail::splitmix64(seed);
    for (const auto& label : path) k = detail::splitmix64(k ^ detail::fnv1a64(label));
    return k;
  }

  std::uint64_t seed_;
  std::vector<std::string> path_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sigf
