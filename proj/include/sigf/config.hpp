#pragma once

// Experiment configuration: an INI file with sections
//   [experiment]  kind, replicas, seed, output, threads
//   [lattice]     N
//   [profile]     sigma2 (list), breakpoints (list, optional), allow_degenerate
//   [params]      kind-specific keys (a section named after the kind also works)
// Keys may be overridden as "section.key=value".

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sigf/error.hpp"
#include "sigf/profile.hpp"
#include "sigf/rng.hpp"

namespace sigf {

enum class ExperimentKind {
  covariance_check,
  tail,
  separation,
  localization,
  cluster,
  invariance,
  three_field,
  coupling,
  slepian_sweep,
};

inline const std::vector<std::pair<ExperimentKind, std::string>>& experiment_kinds() {
  static const std::vector<std::pair<ExperimentKind, std::string>> k = {
      {ExperimentKind::covariance_check, "covariance-check"},
      {ExperimentKind::tail, "tail"},
      {ExperimentKind::separation, "separation"},
      {ExperimentKind::localization, "localization"},
      {ExperimentKind::cluster, "cluster"},
      {ExperimentKind::invariance, "invariance"},
      {ExperimentKind::three_field, "three-field"},
      {ExperimentKind::coupling, "coupling"},
      {ExperimentKind::slepian_sweep, "slepian-sweep"},
  };
  return k;
}

inline std::string to_string(ExperimentKind k) {
  for (auto& [kind, name] : experiment_kinds())
    if (kind == k) return name;
  throw InternalError("unknown experiment kind");
}

inline ExperimentKind parse_kind(const std::string& s) {
  for (auto& [kind, name] : experiment_kinds())
    if (name == s) return kind;
  throw ConfigError("unknown experiment kind '" + s + "'");
}

inline constexpr const char* seed_env_var = "SIGF_SEED";

namespace detail {

inline std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t\r\n\"'");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n\"'");
  return s.substr(a, b - a + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (trim(v.substr(pos)).empty()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "': expected a number, got '" + v + "'");
}

inline long long to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d)) throw ConfigError("'" + key + "': expected an integer, got '" + v + "'");
  return (long long)d;
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::string s = v;
  for (char& c : s)
    if (c == ',' || c == '[' || c == ']') c = ' ';
  std::istringstream is(s);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) out.push_back(to_double(key, tok));
  return out;
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const auto u = std::stoull(v, &pos);
    if (trim(v.substr(pos)).empty() && v.find('-') == std::string::npos) return u;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "': expected a non-negative integer, got '" + v + "'");
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "': expected a boolean, got '" + v + "'");
}

}  // namespace detail

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::tail;
  int N = 16;
  std::vector<double> sigma2{1.0};
  std::vector<double> breakpoints;  // empty: equal pieces
  bool allow_degenerate = false;
  long long replicas = 0;
  std::optional<std::uint64_t> seed;
  std::map<std::string, std::string> params;
  std::string output_dir = "sigf-out";
  unsigned threads = 0;  // 0: hardware concurrency

  VarianceProfile profile() const {
    std::vector<double> bp = breakpoints;
    if (bp.empty())
      for (std::size_t i = 0; i <= sigma2.size(); ++i) bp.push_back(double(i) / double(sigma2.size()));
    return VarianceProfile(bp, sigma2);
  }

  bool has(const std::string& key) const { return params.count(key) > 0; }
  std::string get(const std::string& key, const std::string& def) const {
    auto it = params.find(key);
    return it == params.end() ? def : it->second;
  }
  double get_double(const std::string& key, double def) const {
    return has(key) ? detail::to_double(key, params.at(key)) : def;
  }
  long long get_int(const std::string& key, long long def) const {
    return has(key) ? detail::to_int(key, params.at(key)) : def;
  }
  std::vector<double> get_list(const std::string& key, std::vector<double> def) const {
    return has(key) ? detail::to_list(key, params.at(key)) : def;
  }
  bool get_bool(const std::string& key, bool def) const { return has(key) ? detail::to_bool(key, params.at(key)) : def; }

  /// Every result-affecting setting, in a fixed order.
  std::string canonical() const {
    std::ostringstream os;
    os.precision(17);
    os << "kind=" << to_string(kind) << "\nN=" << N << "\nsigma2=";
    for (double s : sigma2) os << s << ' ';
    os << "\nbreakpoints=";
    for (double b : breakpoints) os << b << ' ';
    os << "\nallow_degenerate=" << allow_degenerate << "\nreplicas=" << replicas << "\nseed=" << seed.value_or(0) << '\n';
    for (auto& [k, v] : params) os << "param." << k << '=' << v << '\n';
    return os.str();
  }
  std::uint64_t hash() const { return detail::fnv1a64(canonical()); }

  void set(const std::string& section, const std::string& key, const std::string& raw) {
    const std::string v = detail::trim(raw);
    const std::string full = section + "." + key;
    if (section == "experiment") {
      if (key == "kind") kind = parse_kind(v);
      else if (key == "replicas") replicas = detail::to_int(full, v);
      else if (key == "seed") seed = detail::to_u64(full, v);
      else if (key == "output") output_dir = v;
      else if (key == "threads") threads = unsigned(detail::to_int(full, v));
      else throw ConfigError("unknown key '" + full + "'");
    } else if (section == "lattice") {
      if (key == "N") N = int(detail::to_int(full, v));
      else throw ConfigError("unknown key '" + full + "'");
    } else if (section == "profile") {
      if (key == "sigma2") sigma2 = detail::to_list(full, v);
      else if (key == "breakpoints") breakpoints = detail::to_list(full, v);
      else if (key == "allow_degenerate") allow_degenerate = detail::to_bool(full, v);
      else throw ConfigError("unknown key '" + full + "'");
    } else {
      params[key] = v;
    }
  }

  /// "section.key=value"
  void apply_override(const std::string& kv) {
    const auto eq = kv.find('=');
    const auto dot = kv.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
      throw ConfigError("override must look like section.key=value, got '" + kv + "'");
    set(kv.substr(0, dot), kv.substr(dot + 1, eq - dot - 1), kv.substr(eq + 1));
  }

  /// Fills the seed from SIGF_SEED when absent.
  void seed_from_environment() {
    if (seed) return;
    if (const char* s = std::getenv(seed_env_var)) seed = detail::to_u64(seed_env_var, s);
  }

  void validate() const {
    if (replicas < 1) throw ConfigError("replicas must be >= 1");
    if (!seed) throw ConfigError("no root seed (set experiment.seed, --seed or SIGF_SEED)");
    if (N < 2) throw ConfigError("lattice.N must be >= 2");
    if (kind != ExperimentKind::slepian_sweep && kind != ExperimentKind::coupling && kind != ExperimentKind::cluster)
      profile().require_admissible(allow_degenerate);
  }
};

inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  CLI::ConfigINI ini;
  for (const auto& item : ini.from_config(in)) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    std::string section = item.parents.empty() ? "experiment" : item.parents.front();
    if (section == "default") section = "experiment";
    std::string value;
    for (std::size_t i = 0; i < item.inputs.size(); ++i) value += (i ? " " : "") + item.inputs[i];
    c.set(section, item.name, value);
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  return parse_config(in);
}

}  // namespace sigf
