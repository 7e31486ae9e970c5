#pragma once

// Experiment orchestration: replicas run on a bounded worker pool, each with the
// stream seed/<kind>/<replica>; raw rows are keyed by replica index, and the
// report is computed after all replicas finish. Outputs: raw.csv, report.csv,
// manifest.json in the output directory.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <json.hpp>

#include "sigf/cluster.hpp"
#include "sigf/config.hpp"
#include "sigf/coupling.hpp"
#include "sigf/decompose.hpp"
#include "sigf/dgff.hpp"
#include "sigf/error.hpp"
#include "sigf/extremal.hpp"
#include "sigf/gausscmp.hpp"
#include "sigf/inhomogeneous.hpp"
#include "sigf/perturb.hpp"
#include "sigf/potential_kernel.hpp"
#include "sigf/stats.hpp"
#include "sigf/three_field.hpp"

namespace sigf {

inline constexpr const char* sigf_version = "0.1.0";

enum class Verdict { pass, fail, info };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "PASS";
    case Verdict::fail: return "FAIL";
    case Verdict::info: return "INFO";
  }
  return "?";
}

struct ReportRow {
  std::string check;
  double statistic = 0.0;
  double se = std::numeric_limits<double>::quiet_NaN();
  double lo = std::numeric_limits<double>::quiet_NaN(), hi = std::numeric_limits<double>::quiet_NaN();
  std::string bound;  // analytic bound or target; never depends on replica count
  Verdict verdict = Verdict::info;
};

inline Verdict verdict_of(bool ok) { return ok ? Verdict::pass : Verdict::fail; }

inline std::string fmt(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Short form for bound strings.
inline std::string sfmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline constexpr double NA = std::numeric_limits<double>::quiet_NaN();

/// Per-kind work: a replica function producing one raw row and an aggregator.
struct Runner {
  std::vector<std::string> columns;
  std::function<std::vector<double>(std::size_t replica, RngStream& stream)> replica;
  std::function<std::vector<ReportRow>(const std::vector<std::vector<double>>& raw, const std::vector<char>& ok)>
      aggregate;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> raw;
  std::vector<std::size_t> failed;
  std::vector<std::string> failure_messages;
  std::vector<ReportRow> report;

  bool all_pass() const {
    if (!failed.empty()) return false;
    for (auto& r : report)
      if (r.verdict == Verdict::fail) return false;
    return true;
  }
  const ReportRow& row(const std::string& check) const {
    for (auto& r : report)
      if (r.check == check) return r;
    throw DomainError("no report row '" + check + "'");
  }
};

namespace detail {

inline std::vector<double> col(const std::vector<std::vector<double>>& raw, const std::vector<char>& ok, std::size_t c) {
  std::vector<double> out;
  for (std::size_t i = 0; i < raw.size(); ++i)
    if (ok[i] && !std::isnan(raw[i][c])) out.push_back(raw[i][c]);
  return out;
}

inline std::string bracket(double a, double b) { return "[" + sfmt(a) + "," + sfmt(b) + "]"; }

/// Shipped test function for the invariance check: a Gaussian bump in height.
inline double shipped_test_function(double, double, double h) { return 0.5 * std::exp(-0.5 * h * h); }

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

// ------------------------------------------------------------------ kinds

inline Runner covariance_runner(const ExperimentConfig& c) {
  const GridSpec spec(c.N);
  auto sampler = std::make_shared<InhomogeneousSampler>(spec, c.profile(), c.allow_degenerate);
  auto cov = std::make_shared<Eigen::MatrixXd>(inhomogeneous_covariance(sampler->op(), sampler->dgff()));
  auto fields = std::make_shared<std::vector<Eigen::VectorXd>>(std::size_t(c.replicas));
  const double z_bound = c.get_double("z_bound", 5.0);
  Runner r;
  r.columns = {"max", "centre"};
  r.replica = [=](std::size_t i, RngStream& s) {
    auto f = sampler->sample(s);
    (*fields)[i] = f.heights;
    return std::vector<double>{f.max(), f({c.N / 2, c.N / 2})};
  };
  r.aggregate = [=](const std::vector<std::vector<double>>&, const std::vector<char>& ok) {
    const auto n = Eigen::Index(spec.size());
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
    double count = 0.0;
    for (std::size_t i = 0; i < fields->size(); ++i)
      if (ok[i]) {
        S.selfadjointView<Eigen::Lower>().rankUpdate((*fields)[i]);
        count += 1.0;
      }
    S = S.selfadjointView<Eigen::Lower>();
    S /= count;
    double zmax = 0.0, dmax = 0.0;
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b <= a; ++b) {
        const double se = std::sqrt(((*cov)(a, a) * (*cov)(b, b) + (*cov)(a, b) * (*cov)(a, b)) / count);
        zmax = std::max(zmax, std::abs(S(a, b) - (*cov)(a, b)) / se);
        dmax = std::max(dmax, std::abs(S(a, b) - (*cov)(a, b)));
      }
    // sigma = 1 reduces to the DGFF
    InhomogeneousOperator hom(spec, VarianceProfile::homogeneous());
    const double red = max_abs_diff(inhomogeneous_covariance(hom, sampler->dgff()), green_table(spec).matrix);
    std::vector<ReportRow> rows;
    rows.push_back({"covariance-max-z", zmax, NA, NA, NA, sfmt(z_bound), verdict_of(zmax <= z_bound)});
    rows.push_back({"covariance-max-abs-error", dmax, NA, NA, NA, "", Verdict::info});
    rows.push_back({"homogeneous-reduction", red, NA, NA, NA, "1e-08", verdict_of(red <= 1e-8)});
    return rows;
  };
  return r;
}

inline Runner tail_runner(const ExperimentConfig& c) {
  const GridSpec spec(c.N);
  auto sampler = std::make_shared<InhomogeneousSampler>(spec, c.profile(), c.allow_degenerate);
  const double y0 = c.get_double("y0", 0.0), y1 = c.get_double("y1", 2.0);
  const double lo = c.get_double("rate_lo", 1.2), hi = c.get_double("rate_hi", 2.8);
  const double ly = c.get_double("level_y", 1.0), kz = c.get_double("kappa_z", 6.0), z = c.get_double("z", 2.0);
  if (!(z > 1.0)) throw ConfigError("tail: z must exceed 1");
  double maxvar = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i) maxvar = std::max(maxvar, sampler->variance(spec.vertex(i)));
  const double mN = m_centering(c.N);
  Runner r;
  r.columns = {"max_centred", "level_set_size"};
  r.replica = [=](std::size_t, RngStream& s) {
    auto f = sampler->sample(s);
    return std::vector<double>{f.max() - mN, double(level_set_size(f, ly))};
  };
  r.aggregate = [=](const std::vector<std::vector<double>>& raw, const std::vector<char>& ok) {
    std::vector<ReportRow> rows;
    const auto maxima = col(raw, ok, 0);
    rows.push_back({"mean-centred-max", mean_of(maxima), mean_estimate(maxima).se, NA, NA, "", Verdict::info});
    try {
      const auto fit = tail_rate_fit(maxima, y0, y1, TailMode::survival);
      rows.push_back({"tail-rate", fit.rate, fit.se, fit.rate - 1.96 * fit.se, fit.rate + 1.96 * fit.se,
                      bracket(lo, hi), verdict_of(fit.rate >= lo && fit.rate <= hi)});
    } catch (const StatisticalError& e) {
      rows.push_back({"tail-rate", NA, NA, NA, NA, bracket(lo, hi), Verdict::fail});
    }
    std::vector<std::size_t> sizes;
    for (double v : col(raw, ok, 1)) sizes.push_back(std::size_t(v));
    const auto lr = level_set_bound_check(c.N, maxvar, ly, kz / z, z, sizes);
    rows.push_back({"level-set-bound", lr.empirical.p, lr.empirical.se(), lr.empirical.lo, lr.empirical.hi,
                    sfmt(lr.bound), verdict_of(lr.pass)});
    rows.push_back({"level-set-first-moment", lr.first_moment_bound, NA, NA, NA, "", Verdict::info});
    return rows;
  };
  return r;
}

inline Runner separation_runner(const ExperimentConfig& c) {
  const GridSpec spec(c.N);
  auto sampler = std::make_shared<InhomogeneousSampler>(spec, c.profile(), c.allow_degenerate);
  const double cc = c.get_double("c", 1.0);
  std::vector<int> rs;
  for (double v : c.get_list("r", {2, 8})) rs.push_back(int(v));
  if (rs.size() < 2) throw ConfigError("separation: need at least two r values");
  for (int r : rs)
    if (r < 2 || c.N / r < r) throw ConfigError("separation: every r needs 2 <= r and r <= N/r");
  Runner run;
  for (int r : rs) run.columns.push_back("sep_r" + std::to_string(r));
  run.replica = [=](std::size_t, RngStream& s) {
    auto f = sampler->sample(s);
    std::vector<double> out;
    for (int r : rs) out.push_back(separated_pair(f, r, m_centering(c.N) - cc * std::log(std::log(double(r)))) ? 1.0 : 0.0);
    return out;
  };
  run.aggregate = [=](const std::vector<std::vector<double>>& raw, const std::vector<char>& ok) {
    std::vector<ReportRow> rows;
    std::vector<Proportion> ps;
    for (std::size_t k = 0; k < rs.size(); ++k) {
      const auto v = col(raw, ok, k);
      std::size_t hits = 0;
      for (double x : v) hits += x > 0.5;
      ps.push_back(wilson(hits, v.size()));
      rows.push_back({"separation-frequency-r" + std::to_string(rs[k]), ps.back().p, ps.back().se(), ps.back().lo,
                      ps.back().hi, "", Verdict::info});
    }
    const auto &a = ps.front(), &b = ps.back();
    rows.push_back({"separation-trend", b.p - a.p, NA, NA, NA, "freq(r_last) < freq(r_first), disjoint CIs",
                    verdict_of(b.p < a.p && b.hi < a.lo)});
    return rows;
  };
  return run;
}

inline Runner localization_runner(const ExperimentConfig& c) {
  const GridSpec spec(c.N);
  const auto profile = c.profile();
  auto sampler = std::make_shared<InhomogeneousSampler>(spec, profile, c.allow_degenerate);
  auto op = std::make_shared<const InhomogeneousOperator>(spec, profile);
  const int M = int(c.get_int("M", 8));
  auto binding = std::make_shared<BindingEvaluator>(op, M);
  LocalizationOptions o;
  o.gamma = c.get_double("gamma", 0.4);
  o.t = c.get_double("t", 2.0);
  o.event = c.get("event", "exists") == "every" ? LocalizationEvent::every : LocalizationEvent::exists;
  const double maxf = c.get_double("max_frequency", 0.2);
  Runner r;
  r.columns = {"conditioned", "bad"};
  r.replica = [=](std::size_t, RngStream& s) {
    std::vector<FieldSample> one{sampler->sample(s)};
    const auto p = localization_frequency(one, *binding, profile, o);
    return std::vector<double>{double(p.n), double(p.k)};
  };
  r.aggregate = [=](const std::vector<std::vector<double>>& raw, const std::vector<char>& ok) {
    std::size_t n = 0, k = 0;
    for (std::size_t i = 0; i < raw.size(); ++i)
      if (ok[i]) {
        n += std::size_t(raw[i][0]);
        k += std::size_t(raw[i][1]);
      }
    const auto p = wilson(k, n);
    return std::vector<ReportRow>{
        {"localization-frequency", p.p, p.se(), p.lo, p.hi, sfmt(maxf), verdict_of(p.p <= maxf)},
        {"localization-conditioned-replicas", double(n), NA, NA, NA, "", Verdict::info}};
  };
  return r;
}

inline Runner cluster_runner(const ExperimentConfig& c) {
  ClusterSampler::Options o;
  o.mode = c.get("mode", "pinned") == "finite-M" ? ClusterMode::finite_M : ClusterMode::pinned;
  o.sigma1 = c.get_double("sigma1", std::sqrt(1.5));
  o.t = c.get_double("t", 0.0);
  o.M = int(c.get_int("M", 0));
  o.strict = !c.allow_degenerate;
  const int rr = int(c.get_int("r", 6));
  auto sampler = std::make_shared<ClusterSampler>(rr, o);
  auto shapes = std::make_shared<std::vector<ClusterShape>>(std::size_t(c.replicas));
  const double tol = c.get_double("slope_tolerance", 0.35);
  Runner r;
  r.columns = {"theta_origin", "theta_1_0", "proposals"};
  r.replica = [=](std::size_t i, RngStream& s) {
    auto sh = sampler->sample(s);
    (*shapes)[i] = sh;
    return std::vector<double>{sh.at({0, 0}), sh.at({1, 0}), double(sh.proposals)};
  };
  r.aggregate = [=](const std::vector<std::vector<double>>& raw, const std::vector<char>& ok) {
    std::vector<ClusterShape> good;
    double origin = 0.0, props = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i)
      if (ok[i]) {
        good.push_back((*shapes)[i]);
        origin = std::max(origin, std::abs(raw[i][0]));
        props += raw[i][2];
      }
    std::vector<ReportRow> rows;
    const double ref = 2.0 * o.sigma1;
    try {
      const auto p = cluster_profile(good, o.sigma1);
      const double rel = std::abs(p.slope - ref) / ref;
      rows.push_back({"cluster-slope", p.slope, p.slope_se, p.slope - 1.96 * p.slope_se, p.slope + 1.96 * p.slope_se,
                      sfmt(ref) + " +/- " + sfmt(tol * 100) + "%", verdict_of(rel <= tol)});
    } catch (const StatisticalError&) {
      rows.push_back({"cluster-slope", NA, NA, NA, NA, sfmt(ref), Verdict::fail});
    }
    rows.push_back({"cluster-theta-origin", origin, NA, NA, NA, "0", verdict_of(origin == 0.0)});
    auto& a = shared_potential_kernel();
    const double pv = 2.0 * a({1, 0}) - a({0, 0});
    rows.push_back({"pinned-variance-1-0", pv, NA, NA, NA, sfmt(M_PI) + " +/- 2%",
                    verdict_of(std::abs(pv - M_PI) <= 0.02 * M_PI)});
    rows.push_back({"cluster-acceptance-rate", good.empty() ? NA : double(good.size()) / props, NA, NA, NA, "",
                    Verdict::info});
    return rows;
  };
  return r;
}

inline Runner invariance_runner(const ExperimentConfig& c) {
  const GridSpec spec(c.N);
  auto sampler = std::make_shared<InhomogeneousSampler>(spec, c.profile(), c.allow_degenerate);
  const double t = c.get_double("t", 1.0);
  const int rr = int(c.get_int("r", 4));
  const double slack = c.get_double("slack", 0.05);
  if (!(t > 0.0 && t < std::log(double(c.N)))) throw ConfigError("invariance: need 0 < t < log N");
  TestFunction f = shipped_test_function;
  auto ft = std::make_shared<TestFunction>(f_t_transform(f, t));
  const double drift_alt = c.get_double("drift_alt", 1.0);
  auto ft_alt = std::make_shared<TestFunction>(f_t_transform(f, t, default_quadrature_nodes, drift_alt));
  const double mN = m_centering(c.N);
  Runner r;
  r.columns = {"max_psi", "max_transform", "laplace_f", "laplace_ft", "laplace_ft_alt"};
  r.replica = [=](std::size_t, RngStream& s) {
    auto sa = s.derive("a"), sb = s.derive("b"), sc = s.derive("c");
    const auto a = sampler->sample(sa), b = sampler->sample(sb), cc = sampler->sample(sc);
    const auto tr = smoothing_transform(b, cc, t);
    const double lf = std::exp(-pair_with(extremal_process(a, rr), f));
    const auto eb = extremal_process(b, rr);
    const double lft = std::exp(-pair_with(eb, *ft)), lalt = std::exp(-pair_with(eb, *ft_alt));
    return std::vector<double>{a.max() - mN, tr.max() - mN, lf, lft, lalt};
  };
  r.aggregate = [=](const std::vector<std::vector<double>>& raw, const std::vector<char>& ok) {
    std::vector<ReportRow> rows;
    const Eigen::MatrixXd C = inhomogeneous_covariance(sampler->op(), sampler->dgff());
    const double cerr = max_abs_diff(smoothing_covariance(C, t, c.N), C);
    rows.push_back({"smoothing-covariance", cerr, NA, NA, NA, "1e-12", verdict_of(cerr <= 1e-12)});
    const auto ks = ks_two_sample(col(raw, ok, 0), col(raw, ok, 1));
    rows.push_back({"smoothing-ks-pvalue", ks.pvalue, NA, NA, NA, "0.05", verdict_of(ks.accept(0.05))});
    rows.push_back({"smoothing-ks-distance", ks.D, NA, NA, NA, "", Verdict::info});
    const auto e1 = mean_estimate(col(raw, ok, 2)), e2 = mean_estimate(col(raw, ok, 3));
    const double diff = std::abs(e1.value - e2.value), ci = 1.96 * std::hypot(e1.se, e2.se);
    rows.push_back({"laplace-f", e1.value, e1.se, e1.lo, e1.hi, "", Verdict::info});
    rows.push_back({"laplace-ft", e2.value, e2.se, e2.lo, e2.hi, "", Verdict::info});
    rows.push_back({"laplace-invariance", diff, ci / 1.96, NA, NA, sfmt(slack) + " + CI", verdict_of(diff <= slack + ci)});
    // same check with the drift that leaves an exp(-2h) intensity invariant
    const auto e3 = mean_estimate(col(raw, ok, 4));
    rows.push_back({"laplace-invariance-drift-alt", std::abs(e1.value - e3.value), std::hypot(e1.se, e3.se), NA, NA,
                    "", Verdict::info});
    return rows;
  };
  return r;
}

inline Runner three_field_runner(const ExperimentConfig& c) {
  ThreeFieldParams p;
  p.N = c.N;
  p.K = int(c.get_int("K", 2));
  p.L = int(c.get_int("L", 2));
  p.Kp = int(c.get_int("Kp", 4));
  p.Lp = int(c.get_int("Lp", 4));
  const auto profile = c.profile();
  auto sampler = std::make_shared<InhomogeneousSampler>(GridSpec(c.N), profile, c.allow_degenerate);
  auto model = std::make_shared<ThreeFieldModel>(p, profile);
  auto cal = std::make_shared<Calibration>(calibrate_three_field(*model, *sampler));
  const double ks_bound = c.get_double("ks_bound", 0.2);
  const double mN = m_centering(c.N);
  Runner r;
  r.columns = {"max_psi", "max_S"};
  r.replica = [=](std::size_t, RngStream& s) {
    auto sp = s.derive("psi");
    const auto psi = sampler->sample(sp);
    const auto S = sample_three_field(*model, *cal, s.derive("S"));
    return std::vector<double>{psi.max() - mN, S.max() - mN - 4.0 * cal->alpha};
  };
  r.aggregate = [=](const std::vector<std::vector<double>>& raw, const std::vector<char>& ok) {
    std::vector<ReportRow> rows;
    rows.push_back({"three-field-calibration-residual", cal->max_abs_residual, NA, NA, NA, "1e-06",
                    verdict_of(cal->max_abs_residual <= 1e-6)});
    rows.push_back({"three-field-alpha", cal->alpha, NA, NA, NA, "", Verdict::info});
    const auto a = col(raw, ok, 0), b = col(raw, ok, 1);
    const double d = kolmogorov_distance(a, b);
    rows.push_back({"three-field-ks", d, NA, NA, NA, sfmt(ks_bound), verdict_of(d <= ks_bound)});
    // diagnostic: distance after removing the empirical mean gap
    std::vector<double> shifted(b);
    const double gap = mean_of(b) - mean_of(a);
    for (double& x : shifted) x -= gap;
    rows.push_back({"three-field-mean-gap", gap, NA, NA, NA, "", Verdict::info});
    rows.push_back({"three-field-ks-mean-aligned", kolmogorov_distance(a, shifted), NA, NA, NA, "", Verdict::info});
    return rows;
  };
  return r;
}

inline Runner coupling_runner(const ExperimentConfig& c) {
  CouplingParams p;
  p.K = int(c.get_int("K", 4));
  p.L = int(c.get_int("L", 4));
  p.gamma = c.get_double("gamma", 0.25);
  p.beta_star = c.get_double("beta_star", 1.0);
  p.sigma2_0 = c.get_double("sigma2_0", c.profile().sigma2_first());
  p.d_exponent = c.get_int("d_exponent", 1) == 2 ? DExponent::doubled : DExponent::single;
  auto model = std::make_shared<CouplingModel>(p);
  const double tol = c.get_double("tolerance", 0.1);
  // regions: vertical strips of equal width
  const int k = int(c.get_int("regions", 2));
  if (k < 1) throw ConfigError("coupling: regions must be >= 1");
  std::vector<std::vector<int>> T;
  for (int i = 0; i < k; ++i) T.push_back(boxes_in(p, {double(i) / k, double(i + 1) / k, 0.0, 1.0}));
  CouplingParams other = p;
  other.d_exponent = p.d_exponent == DExponent::single ? DExponent::doubled : DExponent::single;
  Runner r;
  for (int i = 0; i < k; ++i) r.columns.push_back("G" + std::to_string(i));
  for (int i = 0; i < k; ++i) r.columns.push_back("D" + std::to_string(i));
  for (int i = 0; i < k; ++i) r.columns.push_back("Dswitch" + std::to_string(i));
  r.replica = [=](std::size_t, RngStream& s) {
    const auto d = sample_coupling(*model, T, s);
    std::vector<double> out;
    for (auto& g : d.g) out.push_back(g ? *g : -std::numeric_limits<double>::infinity());
    for (double v : compute_D(d.z, T, p)) out.push_back(v);
    for (double v : compute_D(d.z, T, other)) out.push_back(v);
    return out;
  };
  r.aggregate = [=](const std::vector<std::vector<double>>& raw, const std::vector<char>& ok) {
    std::vector<std::vector<double>> good;
    for (std::size_t i = 0; i < raw.size(); ++i)
      if (ok[i]) good.push_back(raw[i]);
    std::vector<double> x;
    for (int i = 0; i < k; ++i) {
      std::vector<double> g;
      for (auto& row : good) g.push_back(row[std::size_t(i)]);
      std::sort(g.begin(), g.end());
      x.push_back(g[g.size() / 2]);
    }
    std::size_t hits = 0, missing = 0;
    std::vector<std::vector<double>> D, D2;
    for (auto& row : good) {
      bool all = true;
      for (int i = 0; i < k; ++i) {
        all = all && row[std::size_t(i)] <= x[std::size_t(i)];
        if (std::isinf(row[std::size_t(i)])) ++missing;
      }
      hits += all;
      D.emplace_back(row.begin() + k, row.begin() + 2 * k);
      D2.emplace_back(row.begin() + 2 * k, row.begin() + 3 * k);
    }
    const auto emp = wilson(hits, good.size());
    const double pred = laplace_prediction(D, p.beta_star, x);
    const double pred2 = laplace_prediction(D2, p.beta_star, x);
    std::vector<ReportRow> rows;
    rows.push_back({"coupling-empirical-cdf", emp.p, emp.se(), emp.lo, emp.hi, "", Verdict::info});
    rows.push_back({"coupling-prediction", pred, NA, NA, NA, "", Verdict::info});
    rows.push_back({"coupling-consistency", std::abs(pred - emp.p), emp.se(), NA, NA, sfmt(tol),
                    verdict_of(std::abs(pred - emp.p) <= tol)});
    rows.push_back({"coupling-prediction-switched-exponent", pred2, NA, NA, NA, "", Verdict::info});
    rows.push_back({"coupling-exponent-switch-effect", std::abs(pred - pred2), NA, NA, NA, "> 0",
                    verdict_of(std::abs(pred - pred2) > 0.0)});
    rows.push_back({"coupling-success-probability", p.success_probability(), NA, NA, NA, "(0,1]", Verdict::info});
    rows.push_back({"coupling-missing-maxima", double(missing), NA, NA, NA, "", Verdict::info});
    return rows;
  };
  return r;
}

inline Runner slepian_runner(const ExperimentConfig& c) {
  const auto points = std::size_t(c.get_int("points", 1 << 12));
  const int max_dim = int(c.get_int("max_dim", 3));
  if (max_dim < 2 || max_dim > comparison_max_dim) throw ConfigError("slepian-sweep: max_dim must lie in [2, 4]");
  Runner r;
  r.columns = {"dim", "sets", "lhs", "rhs", "se", "pass"};
  r.replica = [=](std::size_t, RngStream& s) {
    const auto inst = random_instance(s, max_dim);
    const auto rep = check_vector_slepian(inst, points, s.key());
    return std::vector<double>{double(inst.dim()), double(inst.sets.size()), rep.lhs[0], rep.rhs[0], rep.se[0],
                               rep.pass ? 1.0 : 0.0};
  };
  r.aggregate = [=](const std::vector<std::vector<double>>& raw, const std::vector<char>& ok) {
    std::size_t viol = 0, n = 0;
    for (std::size_t i = 0; i < raw.size(); ++i)
      if (ok[i]) {
        ++n;
        viol += raw[i][5] < 0.5;
      }
    // two coordinates, Y comonotone, X independent: Phi(x)^2 <= Phi(x)
    ComparisonInstance inst;
    inst.cov_x = Eigen::MatrixXd::Identity(2, 2);
    inst.cov_y = Eigen::MatrixXd::Ones(2, 2);
    inst.sets = {{0, 1}};
    const double x = c.get_double("analytic_x", 0.5);
    inst.x = {x};
    const auto rep = check_vector_slepian(inst, default_qmc_points, 1);
    const double phi = 0.5 * std::erfc(-x / std::sqrt(2.0));
    const double err = std::max(std::abs(rep.lhs[0] - phi * phi), std::abs(rep.rhs[0] - phi));
    return std::vector<ReportRow>{
        {"slepian-violations", double(viol), NA, NA, NA, "0", verdict_of(viol == 0)},
        {"slepian-instances", double(n), NA, NA, NA, "", Verdict::info},
        {"slepian-analytic-2d", err, NA, rep.lhs[0], rep.rhs[0], "1e-3", verdict_of(err <= 1e-3 && rep.pass)}};
  };
  return r;
}

}  // namespace detail

inline Runner make_runner(const ExperimentConfig& c) {
  switch (c.kind) {
    case ExperimentKind::covariance_check: return detail::covariance_runner(c);
    case ExperimentKind::tail: return detail::tail_runner(c);
    case ExperimentKind::separation: return detail::separation_runner(c);
    case ExperimentKind::localization: return detail::localization_runner(c);
    case ExperimentKind::cluster: return detail::cluster_runner(c);
    case ExperimentKind::invariance: return detail::invariance_runner(c);
    case ExperimentKind::three_field: return detail::three_field_runner(c);
    case ExperimentKind::coupling: return detail::coupling_runner(c);
    case ExperimentKind::slepian_sweep: return detail::slepian_runner(c);
  }
  throw InternalError("make_runner: unknown kind");
}

/// Runs all replicas and aggregates; writes nothing.
inline ExperimentResult execute_experiment(const ExperimentConfig& config) {
  config.validate();
  Runner runner = make_runner(config);
  ExperimentResult res;
  res.config = config;
  res.columns = runner.columns;
  const auto n = std::size_t(config.replicas);
  res.raw.assign(n, std::vector<double>(runner.columns.size(), NA));
  std::vector<char> ok(n, 0);
  std::vector<std::string> errors(n);
  const RngStream root(*config.seed, {to_string(config.kind)});
  unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = unsigned(std::min<std::size_t>(threads, n));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        auto s = root.derive(std::uint64_t(i));
        auto row = runner.replica(i, s);
        if (row.size() != runner.columns.size()) throw InternalError("replica row has the wrong width");
        res.raw[i] = std::move(row);
        ok[i] = 1;
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < n; ++i)
    if (!ok[i]) {
      res.failed.push_back(i);
      res.failure_messages.push_back(errors[i]);
    }
  if (res.failed.size() < n) res.report = runner.aggregate(res.raw, ok);
  return res;
}

inline std::string raw_csv(const ExperimentResult& r) {
  std::ostringstream os;
  os << "replica";
  for (auto& c : r.columns) os << ',' << c;
  os << '\n';
  for (std::size_t i = 0; i < r.raw.size(); ++i) {
    os << i;
    for (double v : r.raw[i]) os << ',' << fmt(v);
    os << '\n';
  }
  return os.str();
}

inline std::string report_csv(const ExperimentResult& r) {
  std::ostringstream os;
  os << "check,statistic,se,ci_lo,ci_hi,bound,verdict\n";
  for (auto& row : r.report)
    os << row.check << ',' << fmt(row.statistic) << ',' << fmt(row.se) << ',' << fmt(row.lo) << ',' << fmt(row.hi)
       << ",\"" << row.bound << "\"," << to_string(row.verdict) << '\n';
  return os.str();
}

inline nlohmann::json manifest_json(const ExperimentResult& r) {
  nlohmann::json j;
  const auto& c = r.config;
  j["kind"] = to_string(c.kind);
  char hash[20];
  std::snprintf(hash, sizeof hash, "%016llx", (unsigned long long)c.hash());
  j["config_hash"] = hash;
  j["config"] = c.canonical();
  j["seed"] = *c.seed;
  j["replicas"] = c.replicas;
  j["failed_replicas"] = r.failed;
  j["failure_messages"] = r.failure_messages;
  j["versions"] = {{"sigf", sigf_version},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"boost", BOOST_LIB_VERSION}};
  j["outputs"] = {"raw.csv", "report.csv"};
  j["all_pass"] = r.all_pass();
  return j;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ResourceError("cannot write " + p.string());
  os << s;
  if (!os) throw ResourceError("write failed: " + p.string());
}

inline void write_outputs(const ExperimentResult& r, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ResourceError("cannot create output directory " + dir + ": " + ec.message());
  const std::filesystem::path d(dir);
  write_text(d / "raw.csv", raw_csv(r));
  write_text(d / "report.csv", report_csv(r));
  write_text(d / "manifest.json", manifest_json(r).dump(2) + "\n");
}

/// Execute and write raw.csv, report.csv and manifest.json under config.output_dir.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  auto r = execute_experiment(config);
  write_outputs(r, config.output_dir);
  return r;
}

}  // namespace sigf
