#pragma once

// Command implementations behind the fracdg executable. Each command reads a
// validated RunConfig, writes its files under cfg.out_dir and returns an exit
// code: 0 success, 1 usage/config error, 2 numerical failure, 3 expect-gate failure.

#include <nlohmann/json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fracdg/analysis.hpp"
#include "fracdg/config.hpp"
#include "fracdg/kernel.hpp"
#include "fracdg/stepper.hpp"

namespace fracdg {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNumerical = 2, kExitGate = 3 };

namespace detail {

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline std::filesystem::path prepare_dir(const RunConfig& cfg) {
  std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

inline nlohmann::json metadata_json(const ReportMetadata& meta, const std::string& command) {
  nlohmann::json j;
  j["command"] = command;
  j["alpha"] = meta.alpha;
  j["backend"] = meta.backend;
  j["m"] = meta.m;
  j["config_hash"] = meta.config_hash;
  if (!meta.timestamp.empty()) j["timestamp"] = meta.timestamp;
  return j;
}

// Writes one "x,y" file per curve and returns the manifest entries.
inline nlohmann::json write_curves(const std::filesystem::path& dir, const std::string& stem,
                                   const std::vector<Curve>& curves, const std::string& xlabel,
                                   const std::string& ylabel) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& c : curves) {
    const std::string file = stem + "_" + c.name + ".csv";
    std::ostringstream os;
    os << "x,y\n";
    for (std::size_t i = 0; i < c.x.size(); ++i)
      os << format_number(c.x[i], "%.10g") << ',' << format_number(c.y[i], "%.10e") << '\n';
    write_text(dir / file, os.str());
    list.push_back({{"name", c.name}, {"file", file}, {"x", xlabel}, {"y", ylabel}});
  }
  return list;
}

inline void stamp(ReportMetadata& meta, const RunConfig& cfg) {
  meta.config_hash = config_hash(cfg);
  meta.timestamp = cfg.timing ? utc_timestamp() : std::string();
}

struct GateLog {
  std::ostream& out;
  int failures = 0;
  void fail(const std::string& what) {
    ++failures;
    out << "expect FAILED: " << what << '\n';
  }
};

inline void check_errors(const ConvergenceReport& report, const ExpectGates& e, GateLog& log) {
  if (!e.max_error) return;
  for (const auto& r : report.rows)
    if (r.failure.empty() && r.error > *e.max_error)
      log.fail("error " + format_number(r.error) + " > max_error at N_or_L=" + std::to_string(r.N_or_L));
}

inline void check_rates(const ConvergenceReport& report, std::optional<double> lo, std::optional<double> hi,
                        const char* what, GateLog& log) {
  for (const auto& r : report.rows) {
    if (!r.rate_or_b) continue;
    const double v = *r.rate_or_b;
    const std::string where = " at gamma_or_delta=" + format_number(r.gamma_or_delta) +
                              ", p_or_mu=" + format_number(r.p_or_mu) + ", N_or_L=" + std::to_string(r.N_or_L);
    if (lo && v < *lo) log.fail(std::string(what) + " " + format_number(v) + " below " + format_number(*lo) + where);
    if (hi && v > *hi) log.fail(std::string(what) + " " + format_number(v) + " above " + format_number(*hi) + where);
  }
}

inline int finish(const ConvergenceReport& report, const GateLog& log, std::ostream& out) {
  if (report.failures() > 0) {
    for (const auto& r : report.rows)
      if (!r.failure.empty()) out << "cell failed (N_or_L=" << r.N_or_L << "): " << r.failure << '\n';
    return kExitNumerical;
  }
  return log.failures > 0 ? kExitGate : kExitOk;
}

inline int resolve_threads(const RunConfig& cfg) { return cfg.threads > 0 ? cfg.threads : default_thread_count(); }

}  // namespace detail

/// Solves one configuration; writes <stem>_summary.csv, <stem>_traces.csv,
/// optionally <stem>_stability.csv, and <stem>.json.
inline int cmd_solve(const RunConfig& cfg, std::ostream& out = std::cout) {
  const auto dir = detail::prepare_dir(cfg);
  const int threads = detail::resolve_threads(cfg);
  const auto start = std::chrono::steady_clock::now();
  const auto problem = build_problem(cfg);
  const auto mesh = build_mesh(cfg);
  const auto opts = build_study_options(cfg, threads);
  const FractionalOrder order(problem.alpha);
  const auto modes = opts.backend.build(problem);
  const auto probs = mode_problems(problem, modes);
  const MemoryTable table(mesh, order, opts.kernel, threads);
  const auto sol = solve(probs, table, threads);
  const double err = error_measure(sol, problem, modes, opts.error);
  const double seconds =
      cfg.timing ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() : 0.0;

  ConvergenceReport report;
  report.meta.alpha = problem.alpha;
  report.meta.backend = to_string(opts.backend.kind);
  report.meta.m = cfg.m;
  detail::stamp(report.meta, cfg);
  ConvergenceRow row;
  row.family = to_string(mesh.info().kind);
  row.alpha = problem.alpha;
  row.backend = report.meta.backend;
  row.gamma_or_delta = mesh.info().kind == MeshFamily::graded ? mesh.info().gamma
                       : mesh.info().kind == MeshFamily::geometric ? mesh.info().delta : 0.0;
  row.p_or_mu = mesh.info().kind == MeshFamily::geometric ? mesh.info().mu : mesh.max_degree();
  row.N_or_L = mesh.info().kind == MeshFamily::geometric ? mesh.info().levels : mesh.intervals();
  row.dofs = dof_count(mesh);
  row.error = err;
  row.seconds = seconds;
  report.rows.push_back(row);
  std::ostringstream summary;
  write_csv(report, summary);
  detail::write_text(dir / (cfg.stem + "_summary.csv"), summary.str());

  std::ostringstream traces;
  traces << "# config_hash=" << report.meta.config_hash << '\n' << "node,t,mode,u_minus,u_plus,jump\n";
  for (int n = 0; n <= mesh.intervals(); ++n)
    for (int m = 0; m < sol.modes(); ++m) {
      traces << n << ',' << format_number(mesh.node(n), "%.10g") << ',' << m << ','
             << format_number(sol.left_trace(m, n), "%.12e") << ',';
      if (n < mesh.intervals())
        traces << format_number(sol.right_trace(m, n), "%.12e") << ',' << format_number(sol.jump(m, n), "%.12e");
      else
        traces << "NA,NA";
      traces << '\n';
    }
  detail::write_text(dir / (cfg.stem + "_traces.csv"), traces.str());

  auto meta = detail::metadata_json(report.meta, "solve");
  meta["error"] = err;
  meta["dofs"] = row.dofs;
  meta["intervals"] = mesh.intervals();
  meta["modes"] = sol.modes();
  out << "error = " << format_number(err, "%.6e") << "  (dofs per mode " << row.dofs << ", intervals "
      << mesh.intervals() << ", modes " << sol.modes() << ")\n";

  int code = kExitOk;
  if (cfg.stability_report) {
    const auto rep = stability_report(sol, probs, table);
    std::ostringstream os;
    os << "# config_hash=" << report.meta.config_hash << '\n' << "node,t,lhs,rhs,violated\n";
    for (const auto& r : rep.rows)
      os << r.node << ',' << format_number(mesh.node(r.node), "%.10g") << ',' << format_number(r.lhs, "%.12e") << ','
         << format_number(r.rhs, "%.12e") << ',' << (r.violated ? 1 : 0) << '\n';
    detail::write_text(dir / (cfg.stem + "_stability.csv"), os.str());
    meta["stability_violations"] = rep.violations;
    meta["stability_min_relative_slack"] = rep.min_relative_slack;
    out << "stability: " << rep.violations << " violation(s), min relative slack "
        << format_number(rep.min_relative_slack) << '\n';
    if (rep.violations > 0) code = kExitNumerical;
  }
  if (cfg.coercivity_check) {
    int bad = 0;
    nlohmann::json rows = nlohmann::json::array();
    for (int m = 0; m < sol.modes(); ++m) {
      const auto c = coercivity_check(table, sol.coefficients(m));
      bad += !c.holds;
      rows.push_back({{"mode", m}, {"form", c.form}, {"lower_bound", c.lower}, {"holds", c.holds}});
    }
    meta["coercivity"] = rows;
    out << "coercivity: " << bad << " mode(s) below the lower bound\n";
    if (bad > 0) code = kExitNumerical;
  }
  detail::write_text(dir / (cfg.stem + ".json"), meta.dump(2) + "\n");

  detail::GateLog log{out};
  detail::check_errors(report, cfg.expect, log);
  if (code != kExitOk) return code;
  return log.failures ? kExitGate : kExitOk;
}

inline int cmd_h_study(const RunConfig& cfg, std::ostream& out = std::cout) {
  const auto dir = detail::prepare_dir(cfg);
  HStudyConfig h;
  h.problem = build_problem(cfg);
  h.gammas = cfg.gammas;
  h.ps = cfg.ps;
  h.Ns = cfg.Ns;
  h.first_interval = first_interval_rule(cfg);
  h.options = build_study_options(cfg, detail::resolve_threads(cfg));
  auto report = run_h_study(h);
  detail::stamp(report.meta, cfg);
  std::ostringstream csv;
  write_csv(report, csv);
  detail::write_text(dir / (cfg.stem + ".csv"), csv.str());
  out << csv.str();

  std::vector<Curve> curves;
  for (const auto& r : report.rows) {
    if (!r.failure.empty()) continue;
    const std::string name = "p" + format_number(r.p_or_mu) + "_gamma" + format_number(r.gamma_or_delta);
    if (curves.empty() || curves.back().name != name) curves.push_back({name, {}, {}});
    curves.back().x.push_back(r.N_or_L);
    curves.back().y.push_back(r.error);
  }
  auto meta = detail::metadata_json(report.meta, "h-study");
  meta["csv"] = cfg.stem + ".csv";
  meta["curves"] = detail::write_curves(dir, cfg.stem, curves, "N", "error");
  detail::write_text(dir / (cfg.stem + ".json"), meta.dump(2) + "\n");

  detail::GateLog log{out};
  detail::check_errors(report, cfg.expect, log);
  detail::check_rates(report, cfg.expect.min_rate, cfg.expect.max_rate, "rate", log);
  return detail::finish(report, log, out);
}

inline int cmd_hp_study(const RunConfig& cfg, std::ostream& out = std::cout) {
  const auto dir = detail::prepare_dir(cfg);
  HpStudyConfig h;
  h.problem = build_problem(cfg);
  h.deltas = cfg.deltas;
  h.Ls = cfg.Ls;
  h.mu = cfg.mu;
  h.T1 = cfg.T1;
  h.options = build_study_options(cfg, detail::resolve_threads(cfg));
  auto report = run_hp_study(h);
  detail::stamp(report.meta, cfg);
  std::ostringstream csv;
  write_csv(report, csv);
  detail::write_text(dir / (cfg.stem + ".csv"), csv.str());
  out << csv.str();

  const auto curves = hp_curves(report);
  auto meta = detail::metadata_json(report.meta, "hp-study");
  meta["csv"] = cfg.stem + ".csv";
  meta["curves"] = detail::write_curves(dir, cfg.stem, curves, "sqrt_dofs", "error");
  detail::GateLog log{out};
  nlohmann::json fits = nlohmann::json::object();
  for (const auto& c : curves) {
    if (c.x.size() < 2) continue;
    std::vector<double> ly;
    for (double y : c.y) ly.push_back(std::log(y));
    const auto fit = linear_fit(c.x, ly);
    fits[c.name] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2}};
    out << c.name << ": ln(error) vs sqrt(dofs) slope " << format_number(fit.slope) << ", R^2 "
        << format_number(fit.r2) << '\n';
    if (cfg.expect.r2_min && fit.r2 < *cfg.expect.r2_min)
      log.fail(c.name + " R^2 " + format_number(fit.r2) + " below " + format_number(*cfg.expect.r2_min));
  }
  meta["semilog_fits"] = fits;
  detail::write_text(dir / (cfg.stem + ".json"), meta.dump(2) + "\n");
  detail::check_errors(report, cfg.expect, log);
  detail::check_rates(report, cfg.expect.min_b, cfg.expect.max_b, "b", log);
  return detail::finish(report, log, out);
}

inline int cmd_delta_sweep(const RunConfig& cfg, std::ostream& out = std::cout) {
  const auto dir = detail::prepare_dir(cfg);
  DeltaSweepConfig d;
  d.alphas = cfg.alphas;
  d.deltas = cfg.deltas;
  d.L = cfg.L;
  d.mu = cfg.mu;
  d.T1 = cfg.T1;
  d.options = build_study_options(cfg, detail::resolve_threads(cfg));
  auto report = delta_sweep(d);
  detail::stamp(report.meta, cfg);
  std::ostringstream csv;
  write_csv(report, csv);
  detail::write_text(dir / (cfg.stem + ".csv"), csv.str());
  out << csv.str();

  auto meta = detail::metadata_json(report.meta, "delta-sweep");
  meta["csv"] = cfg.stem + ".csv";
  meta["curves"] = detail::write_curves(dir, cfg.stem, sweep_curves(report), "delta", "error");
  detail::GateLog log{out};
  nlohmann::json best = nlohmann::json::object();
  for (double a : cfg.alphas) {
    const double bd = best_delta(report, a);
    best[format_number(a)] = bd;
    out << "alpha " << format_number(a) << ": best delta " << format_number(bd) << '\n';
    if (cfg.expect.best_delta_low && !(bd >= *cfg.expect.best_delta_low))
      log.fail("best delta " + format_number(bd) + " below " + format_number(*cfg.expect.best_delta_low) +
               " for alpha " + format_number(a));
    if (cfg.expect.best_delta_high && !(bd <= *cfg.expect.best_delta_high))
      log.fail("best delta " + format_number(bd) + " above " + format_number(*cfg.expect.best_delta_high) +
               " for alpha " + format_number(a));
  }
  meta["best_delta"] = best;
  detail::write_text(dir / (cfg.stem + ".json"), meta.dump(2) + "\n");
  detail::check_errors(report, cfg.expect, log);
  return detail::finish(report, log, out);
}

struct RandomStabilityResult {
  double alpha = 0.0;
  int intervals = 0;
  int violations = 0;
  double min_relative_slack = 0.0;
};

/// One randomized stability run: random alpha, graded mesh, degrees, initial
/// data and smooth forcing on 1-3 sine modes.
inline RandomStabilityResult random_stability_run(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto uniform = [&](double a, double b) { return a + (b - a) * U(rng); };
  auto integer = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };
  const double alpha = uniform(-0.95, -0.05);
  const auto mesh = graded_mesh(1.0, integer(2, 12), uniform(1.0, 3.0), integer(1, 4), false);
  const int M = integer(1, 3);
  std::vector<ModeProblem> probs(M);
  for (int m = 0; m < M; ++m) {
    probs[m].lambda = (m + 1) * (m + 1) * std::numbers::pi * std::numbers::pi;
    probs[m].initial = uniform(-1.0, 1.0);
    const double a0 = uniform(-5.0, 5.0), a1 = uniform(-5.0, 5.0), w = uniform(0.5, 6.0), ph = uniform(0.0, 3.0);
    probs[m].forcing.smooth = [=](double t) { return a0 + a1 * std::sin(w * t + ph); };
  }
  const FractionalOrder order(alpha);
  const MemoryTable table(mesh, order);
  const auto sol = solve(probs, table);
  const auto rep = stability_report(sol, probs, table);
  return {alpha, mesh.intervals(), rep.violations, rep.min_relative_slack};
}

/// Built-in suite for selftest: the graded h-study, the hp study, the sweep, a
/// solve with diagnostics, and seeded random stability runs.
inline int run_selftest_suite(const RunConfig& base, const std::filesystem::path& dir, std::ostream& out) {
  std::ostringstream sink;
  int worst = kExitOk;
  auto track = [&](int code) { worst = std::max(worst, code == kExitGate ? kExitOk : code); };
  RunConfig c = base;
  c.out_dir = dir.string();
  c.timing = false;
  c.expect = {};
  c.alpha = -0.7;
  c.gammas = {1.0, 1.3, 1.6};
  c.ps = {1, 2};
  c.Ns = {18, 27, 36, 72};
  c.m = 10;
  c.stem = "h_study";
  track(cmd_h_study(c, sink));
  c.deltas = {0.21, 0.24, 0.27, 0.30};
  c.Ls = {3, 4, 5, 6, 7};
  c.m = 60;
  c.stem = "hp_study";
  track(cmd_hp_study(c, sink));
  c.deltas = {0.15, 0.18, 0.21, 0.24, 0.27, 0.30, 0.33, 0.36};
  c.alphas = {-0.3, -0.5, -0.7};
  c.L = 7;
  c.stem = "delta_sweep";
  track(cmd_delta_sweep(c, sink));
  c.family = "graded";
  c.gamma = 1.6;
  c.N = 18;
  c.p = 2;
  c.m = 10;
  c.stability_report = true;
  c.coercivity_check = true;
  c.stem = "solve";
  track(cmd_solve(c, sink));
  std::mt19937_64 rng(base.seed);
  std::ostringstream os;
  os << "run,alpha,intervals,violations,min_relative_slack\n";
  for (int i = 0; i < 20; ++i) {
    const auto r = random_stability_run(rng);
    os << i << ',' << format_number(r.alpha, "%.12g") << ',' << r.intervals << ',' << r.violations << ','
       << format_number(r.min_relative_slack, "%.12e") << '\n';
  }
  detail::write_text(dir / "random_stability.csv", os.str());
  (void)out;
  return worst;
}

/// Runs the built-in suite twice into separate directories and compares every
/// output file byte for byte.
inline int cmd_selftest(const RunConfig& cfg, std::ostream& out = std::cout) {
  namespace fs = std::filesystem;
  const fs::path root = fs::path(cfg.out_dir) / "selftest";
  fs::remove_all(root);
  const fs::path a = root / "run1", b = root / "run2";
  fs::create_directories(a);
  fs::create_directories(b);
  const int c1 = run_selftest_suite(cfg, a, out);
  const int c2 = run_selftest_suite(cfg, b, out);
  if (c1 != kExitOk || c2 != kExitOk) {
    out << "selftest: suite reported a numerical failure\n";
    return kExitNumerical;
  }
  auto slurp = [](const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), {});
  };
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(a)) files.push_back(e.path().filename());
  std::sort(files.begin(), files.end());
  int mismatches = 0;
  for (const auto& f : files) {
    const bool same = fs::exists(b / f) && slurp(a / f) == slurp(b / f);
    out << (same ? "identical " : "DIFFERS   ") << f.string() << '\n';
    mismatches += !same;
  }
  std::size_t count_b = 0;
  for (const auto& e : fs::directory_iterator(b)) (void)e, ++count_b;
  if (count_b != files.size()) {
    out << "selftest: runs produced different file sets\n";
    ++mismatches;
  }
  out << "selftest: " << files.size() << " files compared, " << mismatches << " mismatch(es)\n";
  return mismatches ? kExitGate : kExitOk;
}

/// Dispatches a command name; maps exceptions to exit codes.
inline int run_command(const std::string& command, const RunConfig& cfg, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  try {
    if (command == "solve") return cmd_solve(cfg, out);
    if (command == "h-study") return cmd_h_study(cfg, out);
    if (command == "hp-study") return cmd_hp_study(cfg, out);
    if (command == "delta-sweep") return cmd_delta_sweep(cfg, out);
    if (command == "selftest") return cmd_selftest(cfg, out);
    err << "unknown command '" << command << "'\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace fracdg
