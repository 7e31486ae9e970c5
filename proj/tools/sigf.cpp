// sigf: command-line front end.
//
//   sigf sample      draw one field and write it as a SIGF dump (and optionally CSV)
//   sigf experiment run CONFIG [--set section.key=value ...]
//   sigf calibrate   three-field alpha, a(vbar) and beta* as CSV
//   sigf check       quick analytic self-checks
//   sigf report      print a report.csv, exit 1 if any row FAILs
//
// Exit codes: 0 pass, 1 check failure, 2 configuration error, 3 resource error.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sigf/sigf.hpp"

using namespace sigf;

namespace {

constexpr int exit_ok = 0, exit_check = 1, exit_config = 2, exit_resource = 3;

struct ProfileArgs {
  std::vector<double> sigma2{0.5, 1.5};
  std::vector<double> breakpoints;
  bool allow_degenerate = false;

  void add(CLI::App* app) {
    app->add_option("--sigma2", sigma2, "piecewise sigma^2 values")->expected(1, -1);
    app->add_option("--breakpoints", breakpoints, "scale breakpoints, 0 .. 1 (default: equal pieces)")->expected(1, -1);
    app->add_flag("--allow-degenerate", allow_degenerate, "accept profiles violating I(x) < x");
  }
  VarianceProfile profile() const {
    ExperimentConfig c;
    c.sigma2 = sigma2;
    c.breakpoints = breakpoints;
    return c.profile();
  }
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  ExperimentConfig c;
  c.seed_from_environment();
  if (!c.seed) throw ConfigError(std::string("no root seed (use --seed or ") + seed_env_var + ")");
  return *c.seed;
}

void write_csv_field(const std::string& path, const FieldSample& f) {
  std::ofstream os(path);
  if (!os) throw ResourceError("cannot open " + path + " for writing");
  os << "x,y,height" << (f.has_underlying() ? ",phi" : "") << '\n';
  for (std::size_t i = 0; i < f.spec.size(); ++i) {
    const Vertex v = f.spec.vertex(i);
    os << v.x << ',' << v.y << ',' << fmt(f.heights(Eigen::Index(i)));
    if (f.has_underlying()) os << ',' << fmt((*f.underlying)(Eigen::Index(i)));
    os << '\n';
  }
  if (!os) throw ResourceError("write failed: " + path);
}

// ---------------------------------------------------------------- sample

struct SampleArgs {
  int N = 32;
  std::string kind = "inhomogeneous";
  ProfileArgs profile;
  std::optional<std::uint64_t> seed;
  std::uint64_t replica = 0;
  std::string out = "field.sigf";
  std::string csv;
  int K = 2, L = 2, Kp = 4, Lp = 4;
};

int run_sample(const SampleArgs& a) {
  const RngStream stream = RngStream(resolve_seed(a.seed), {"sample", a.kind}).derive(a.replica);
  FieldSample f;
  const GridSpec spec(a.N);
  if (a.kind == "dgff") {
    auto s = stream;
    f = sample_dgff(spec, s);
  } else if (a.kind == "inhomogeneous") {
    auto s = stream;
    f = sample_inhomogeneous(spec, a.profile.profile(), s, a.profile.allow_degenerate);
  } else if (a.kind == "three-field") {
    const auto p = a.profile.profile();
    ThreeFieldModel m({a.N, a.K, a.L, a.Kp, a.Lp}, p);
    InhomogeneousSampler psi(spec, p, a.profile.allow_degenerate);
    f = sample_three_field(m, calibrate_three_field(m, psi), stream);
  } else {
    throw ConfigError("sample: unknown kind '" + a.kind + "' (dgff, inhomogeneous, three-field)");
  }
  write_field(a.out, f);
  if (!a.csv.empty()) write_csv_field(a.csv, f);
  std::printf("wrote %s (N=%d, max=%.6f, centred max=%.6f)\n", a.out.c_str(), a.N, f.max(), f.max() - m_centering(a.N));
  return exit_ok;
}

// ---------------------------------------------------------------- experiment

struct ExperimentArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string output;
  unsigned threads = 0;
  bool quiet = false;
};

int run_experiment_cmd(const ExperimentArgs& a) {
  ExperimentConfig c = load_config(a.config);
  for (auto& o : a.overrides) c.apply_override(o);
  if (a.seed) c.seed = a.seed;
  c.seed_from_environment();
  if (!a.output.empty()) c.output_dir = a.output;
  if (a.threads) c.threads = a.threads;
  const auto r = run_experiment(c);
  if (!a.quiet) {
    std::printf("%-34s %14s %12s  %-22s %s\n", "check", "statistic", "se", "bound", "verdict");
    for (auto& row : r.report)
      std::printf("%-34s %14s %12s  %-22s %s\n", row.check.c_str(), sfmt(row.statistic).c_str(),
                  std::isnan(row.se) ? "NA" : sfmt(row.se).c_str(), row.bound.c_str(), to_string(row.verdict));
    if (!r.failed.empty()) std::printf("failed replicas: %zu (see manifest.json)\n", r.failed.size());
    std::printf("outputs in %s\n", c.output_dir.c_str());
  }
  return r.all_pass() ? exit_ok : exit_check;
}

// ---------------------------------------------------------------- calibrate

struct CalibrateArgs {
  int N = 64, K = 2, L = 2, Kp = 4, Lp = 4;
  ProfileArgs profile;
  std::optional<std::uint64_t> seed;
  long long replicas = 2000;
  std::vector<double> z_grid{1.0, 1.5, 2.0};
  std::string out = "calibration.csv";
};

int run_calibrate(const CalibrateArgs& a) {
  const auto p = a.profile.profile();
  p.require_admissible(a.profile.allow_degenerate);
  ThreeFieldModel m({a.N, a.K, a.L, a.Kp, a.Lp}, p);
  InhomogeneousSampler psi(GridSpec(a.N), p, a.profile.allow_degenerate);
  const Calibration cal = calibrate_three_field(m, psi);

  CouplingParams cp = CouplingParams::from_profile(a.K, a.L, p);
  const RngStream root(resolve_seed(a.seed), {"calibrate"});
  const int boxes = a.K * a.L;
  std::vector<double> maxima;
  for (long long i = 0; i < a.replicas; ++i) {
    const auto s = root.derive(std::uint64_t(i));
    maxima.push_back(fine_field_box_max(m, cal, s, int(i % boxes), int((i / boxes) % boxes)));
  }
  const auto beta = estimate_beta_star(maxima, beta_star_centre(m, cp), cp, a.z_grid);

  std::ofstream os(a.out);
  if (!os) throw ResourceError("cannot open " + a.out + " for writing");
  os << "quantity,i,j,value,se\n";
  os << "alpha,,," << fmt(cal.alpha) << ",NA\n";
  os << "max_abs_residual,,," << fmt(cal.max_abs_residual) << ",NA\n";
  for (Eigen::Index i = 0; i < cal.a.rows(); ++i)
    for (Eigen::Index j = 0; j < cal.a.cols(); ++j) os << "a," << i << ',' << j << ',' << fmt(cal.a(i, j)) << ",NA\n";
  os << "beta_star,,," << fmt(beta.value) << ',' << fmt(beta.se) << '\n';
  for (std::size_t k = 0; k < beta.z_grid.size(); ++k)
    os << "beta_star_z," << fmt(beta.z_grid[k]) << ",," << fmt(beta.per_z[k]) << ',' << fmt(beta.per_z_se[k]) << '\n';
  os << "beta_star_centre,,," << fmt(beta.centre) << ",NA\n";
  os << "beta_star_plateau,,," << (beta.plateau ? 1 : 0) << ",NA\n";
  if (!os) throw ResourceError("write failed: " + a.out);
  std::printf("alpha = %.6g, residual = %.3g, beta* = %.4g +- %.2g%s\nwrote %s\n", cal.alpha, cal.max_abs_residual,
              beta.value, beta.se, beta.plateau ? "" : " (no plateau across z)", a.out.c_str());
  return exit_ok;
}

// ---------------------------------------------------------------- check

int run_check() {
  struct Line {
    std::string name;
    double value, target, tol;
  };
  std::vector<Line> lines;
  {
    const GreenTable g = green_table(GridSpec(3));
    lines.push_back({"green-centre-V3", g.matrix(4, 4), 3.0 * std::numbers::pi / 4.0, 1e-9});
  }
  lines.push_back({"m-centering-16", m_centering(16), 5.2902, 5e-5});
  lines.push_back({"m-centering-256", m_centering(256), 10.6621, 5e-5});
  for (int N : {8, 16}) {
    const GridSpec spec(N);
    const auto m = inhomogeneous_operator(spec, VarianceProfile::homogeneous());
    lines.push_back({"homogeneous-reduction-" + std::to_string(N),
                     (m.covariance - green_table(spec).matrix).cwiseAbs().maxCoeff(), 0.0, 1e-8});
  }
  {
    const TestFunction lin = [](double, double, double h) { return h; };
    const auto ft = f_t_transform(lin, 1.0);
    double err = 0.0;
    for (double h : {-2.0, 0.0, 1.0, 3.0}) err = std::max(err, std::abs(ft(0.5, 0.5, h) - (h - 1.0)));
    lines.push_back({"f_t-linear", err, 0.0, 1e-10});
  }
  {
    const VarianceProfile p({0.0, 0.5, 1.0}, {0.5, 1.5});
    ThreeFieldModel m({64, 2, 2, 4, 4}, p);
    InhomogeneousSampler psi(GridSpec(64), p);
    lines.push_back({"three-field-residual", calibrate_three_field(m, psi).max_abs_residual, 0.0, 1e-6});
  }
  {
    lines.push_back({"potential-kernel-(1,0)", potential_kernel({1, 0}), std::numbers::pi / 2.0, 1e-4});
  }
  bool all = true;
  for (auto& l : lines) {
    const bool ok = std::abs(l.value - l.target) <= l.tol;
    all = all && ok;
    std::printf("%s %-28s %.12g (target %.12g, tol %.0e)\n", ok ? "PASS" : "FAIL", l.name.c_str(), l.value, l.target,
                l.tol);
  }
  return all ? exit_ok : exit_check;
}

// ---------------------------------------------------------------- report

int run_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ResourceError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("check,", 0) != 0) throw ResourceError(path + ": not a report.csv");
  int fails = 0, rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows;
    const auto comma = line.rfind(',');
    const std::string verdict = line.substr(comma + 1);
    if (verdict == "FAIL") ++fails;
    std::printf("%-6s %s\n", verdict.c_str(), line.substr(0, comma).c_str());
  }
  std::printf("%d rows, %d failing\n", rows, fails);
  return fails ? exit_check : exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sigf: scale-inhomogeneous Gaussian free field lab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", sigf_version);

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "draw one field");
  sample->add_option("-N,--side", sa.N, "grid side");
  sample->add_option("--kind", sa.kind, "dgff | inhomogeneous | three-field");
  sa.profile.add(sample);
  sample->add_option("--seed", sa.seed, "root seed (fallback: SIGF_SEED)");
  sample->add_option("--replica", sa.replica, "replica index under the root seed");
  sample->add_option("-o,--out", sa.out, "SIGF binary output");
  sample->add_option("--csv", sa.csv, "also write x,y,height[,phi] CSV");
  sample->add_option("--K", sa.K);
  sample->add_option("--L", sa.L);
  sample->add_option("--Kp", sa.Kp);
  sample->add_option("--Lp", sa.Lp);

  ExperimentArgs ea;
  auto* exp = app.add_subcommand("experiment", "configured experiments");
  exp->require_subcommand(1);
  auto* run = exp->add_subcommand("run", "run an experiment config");
  run->add_option("config", ea.config, "INI config file")->required();
  run->add_option("--set", ea.overrides, "override section.key=value")->allow_extra_args(false);
  run->add_option("--seed", ea.seed, "root seed (overrides the file; fallback: SIGF_SEED)");
  run->add_option("-o,--output", ea.output, "output directory");
  run->add_option("--threads", ea.threads, "worker threads (0: all cores)");
  run->add_flag("-q,--quiet", ea.quiet);

  CalibrateArgs ca;
  auto* calib = app.add_subcommand("calibrate", "three-field and beta* calibration");
  calib->add_option("-N,--side", ca.N);
  calib->add_option("--K", ca.K);
  calib->add_option("--L", ca.L);
  calib->add_option("--Kp", ca.Kp);
  calib->add_option("--Lp", ca.Lp);
  ca.profile.add(calib);
  calib->add_option("--seed", ca.seed);
  calib->add_option("--replicas", ca.replicas, "box-maximum samples for beta*");
  calib->add_option("--z", ca.z_grid, "z grid for beta*")->expected(1, -1);
  calib->add_option("-o,--out", ca.out);

  auto* check = app.add_subcommand("check", "quick analytic self-checks");

  std::string report_path;
  auto* report = app.add_subcommand("report", "summarize a report.csv");
  report->add_option("report", report_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config;
  }

  try {
    if (*sample) return run_sample(sa);
    if (*run) return run_experiment_cmd(ea);
    if (*calib) return run_calibrate(ca);
    if (*check) return run_check();
    if (*report) return run_report(report_path);
  } catch (const Error& e) {
    std::fprintf(stderr, "sigf: %s\n", e.what());
    switch (e.kind()) {
      case ErrorKind::configuration:
      case ErrorKind::domain: return exit_config;
      case ErrorKind::resource:
      case ErrorKind::parse: return exit_resource;
      default: return exit_check;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "sigf: %s\n", e.what());
    return exit_check;
  }
  return exit_ok;
}
