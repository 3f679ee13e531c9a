#pragma once

// Error measurement on the fine grid, empirical orders, exponential-rate
// coefficients and the study drivers (graded h-version, geometric hp-version,
// refinement-factor sweeps).

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fracdg/error.hpp"
#include "fracdg/kernel.hpp"
#include "fracdg/mesh.hpp"
#include "fracdg/parallel.hpp"
#include "fracdg/problems.hpp"
#include "fracdg/spatial.hpp"
#include "fracdg/stepper.hpp"

namespace fracdg {

/// Spatial discretization choice. modes = 0 means "as many sine modes as the
/// problem has active wavenumbers".
struct BackendSpec {
  BackendKind kind = BackendKind::spectral;
  int modes = 0;
  int elements = 64;
  int degree = 2;

  ModeSystem build(const ManufacturedProblem& problem) const {
    if (kind == BackendKind::spectral)
      return spectral_backend(modes > 0 ? modes : problem.max_wavenumber(), problem.diffusivity);
    return fem_backend(elements, degree, problem.diffusivity);
  }
};

/// Per-mode scalar problems of a manufactured problem in a given backend.
/// FEM modes take their initial value from the Ritz projection of u0.
inline std::vector<ModeProblem> mode_problems(const ManufacturedProblem& problem, const ModeSystem& modes) {
  const int M = modes.size();
  std::vector<ModeProblem> out(M);
  const int K = problem.max_wavenumber();
  std::vector<Forcing> sine(K + 1);
  for (int k = 1; k <= K; ++k) sine[k] = problem.sine_forcing(k);
  if (modes.kind() == BackendKind::spectral) {
    for (int m = 0; m < M; ++m) {
      out[m].lambda = modes.eigenvalue(m);
      const int k = m + 1;
      if (k > K) continue;
      out[m].forcing = sine[k].scaled(1.0 / std::numbers::sqrt2);
      out[m].initial = problem.profile(k).value(0.0) / std::numbers::sqrt2;
    }
    return out;
  }
  for (int m = 0; m < M; ++m) out[m].lambda = modes.eigenvalue(m);
  for (int k = 1; k <= K; ++k) {
    if (problem.profile(k).terms.empty()) continue;
    const auto coupling = decompose(modes, [k](double x) { return std::sin(k * std::numbers::pi * x); });
    for (int m = 0; m < M; ++m) out[m].forcing.accumulate(sine[k], coupling[m]);
  }
  const auto init = initial_modes(modes, [&](double x) { return problem.u0(x); });
  for (int m = 0; m < M; ++m) out[m].initial = init[m];
  return out;
}

struct ErrorOptions {
  int m = 10;
  /// false: U is taken left-continuous at the grid points (U(0) = U_-^0).
  /// true: every interval's polynomial is also evaluated at its left end,
  /// so both one-sided limits count at interior nodes.
  bool two_sided = false;
};

/// max over the fine grid of ||U(t) - u(t)|| in L2(0,1).
inline double error_measure(const DgSolution& sol, const ManufacturedProblem& problem, const ModeSystem& modes,
                            const ErrorOptions& opts = {}) {
  if (opts.m < 1) throw DomainError("error_measure: m must be >= 1");
  const auto& mesh = sol.mesh();
  const int M = sol.modes();
  const int K = problem.max_wavenumber();
  std::vector<TimeProfile> profiles(K + 1);
  for (int k = 1; k <= K; ++k) profiles[k] = problem.profile(k);

  QuadratureRule rule;
  Eigen::MatrixXd shapes;  // quadrature point x mode
  Eigen::MatrixXd sines;   // quadrature point x wavenumber
  if (modes.kind() == BackendKind::fem) {
    rule = modes.norm_rule();
    const auto& space = modes.space();
    Eigen::MatrixXd nodal(rule.size(), space.unknowns());
    nodal.setZero();
    std::vector<double> v;
    const double h = space.mesh_width();
    const int r = space.degree();
    for (std::size_t q = 0; q < rule.size(); ++q) {
      int e = std::clamp(static_cast<int>(std::floor(rule.nodes[q] / h)), 0, space.elements() - 1);
      space.shape((rule.nodes[q] - e * h) / h, v);
      for (int a = 0; a <= r; ++a) {
        const int g = e * r + a;
        if (g == 0 || g == space.elements() * r) continue;
        nodal(q, g - 1) = v[a];
      }
    }
    shapes = nodal * modes.vectors().leftCols(M);
    sines.resize(rule.size(), K + 1);
    for (std::size_t q = 0; q < rule.size(); ++q)
      for (int k = 0; k <= K; ++k) sines(q, k) = std::sin(k * std::numbers::pi * rule.nodes[q]);
  }

  auto error_at = [&](auto&& mode_value, double t) {
    if (modes.kind() == BackendKind::spectral) {
      double s = 0.0;
      for (int m = 0; m < M; ++m) {
        const int k = m + 1;
        const double exact = k <= K ? profiles[k].value(t) / std::numbers::sqrt2 : 0.0;
        const double d = mode_value(m) - exact;
        s += d * d;
      }
      for (int k = M + 1; k <= K; ++k) {
        const double e = profiles[k].value(t);
        s += 0.5 * e * e;
      }
      return std::sqrt(s);
    }
    Eigen::VectorXd U(M);
    for (int m = 0; m < M; ++m) U(m) = mode_value(m);
    Eigen::VectorXd exact_amp(K + 1);
    exact_amp(0) = 0.0;
    for (int k = 1; k <= K; ++k) exact_amp(k) = profiles[k].value(t);
    const Eigen::VectorXd diff = shapes * U - sines * exact_amp;
    double s = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) s += rule.weights[q] * diff(q) * diff(q);
    return std::sqrt(s);
  };

  double worst = 0.0;
  if (opts.two_sided) {
    for (int n = 0; n < mesh.intervals(); ++n) {
      for (int i = 0; i <= opts.m; ++i) {
        const double t = i == opts.m ? mesh.right(n) : mesh.left(n) + i * mesh.step(n) / opts.m;
        worst = std::max(worst, error_at([&](int m) { return sol.evaluate_on(m, n, t); }, t));
      }
    }
  } else {
    for (double t : fine_grid(mesh, opts.m))
      worst = std::max(worst, error_at([&](int m) { return sol.evaluate(m, t); }, t));
  }
  return worst;
}

/// rate_i = log(e_{i-1}/e_i) / log(N_i/N_{i-1}); empty where undefined.
inline std::vector<std::optional<double>> eoc(std::span<const double> errors, std::span<const double> Ns) {
  if (errors.size() != Ns.size()) throw DomainError("eoc: size mismatch");
  std::vector<std::optional<double>> out(errors.size());
  for (std::size_t i = 1; i < errors.size(); ++i) {
    if (!(errors[i - 1] > 0.0) || !(errors[i] > 0.0) || !(Ns[i] > 0.0) || !(Ns[i - 1] > 0.0) || Ns[i] == Ns[i - 1])
      continue;
    out[i] = std::log(errors[i - 1] / errors[i]) / std::log(Ns[i] / Ns[i - 1]);
  }
  return out;
}

/// b_L = ln(e_{L-1}/e_L) / (sqrt(dofs_L) - sqrt(dofs_{L-1})); empty where undefined.
inline std::vector<std::optional<double>> exp_coefficient(std::span<const double> errors, std::span<const double> dofs) {
  if (errors.size() != dofs.size()) throw DomainError("exp_coefficient: size mismatch");
  std::vector<std::optional<double>> out(errors.size());
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const double dd = std::sqrt(dofs[i]) - std::sqrt(dofs[i - 1]);
    if (!(errors[i - 1] > 0.0) || !(errors[i] > 0.0) || dd == 0.0) continue;
    out[i] = std::log(errors[i - 1] / errors[i]) / dd;
  }
  return out;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least-squares line y = slope x + intercept with coefficient of determination.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("linear_fit: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return fit;
}

struct ConvergenceRow {
  std::string family;
  double alpha = 0.0;
  std::string backend;
  double gamma_or_delta = 0.0;
  double p_or_mu = 0.0;
  int N_or_L = 0;
  int dofs = 0;
  double error = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> rate_or_b;
  double seconds = 0.0;
  std::string failure;  // nonempty if the cell failed
};

struct ReportMetadata {
  double alpha = 0.0;
  std::string backend;
  int m = 10;
  std::string timestamp;
  std::string config_hash;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  ReportMetadata meta;

  int failures() const {
    int n = 0;
    for (const auto& r : rows) n += !r.failure.empty();
    return n;
  }
};

struct StudyOptions {
  BackendSpec backend;
  ErrorOptions error;
  KernelOptions kernel;
  int threads = 1;
  bool timing = true;
};

/// Solves one manufactured problem on one mesh and measures the error.
inline double solve_and_measure(const ManufacturedProblem& problem, const TimeMesh& mesh, const StudyOptions& opts) {
  const FractionalOrder order(problem.alpha);
  const ModeSystem modes = opts.backend.build(problem);
  const auto probs = mode_problems(problem, modes);
  MemoryTable table(mesh, order, opts.kernel, 1);
  const auto sol = solve(probs, table, 1);
  return error_measure(sol, problem, modes, opts.error);
}

namespace detail {

// Runs independent cells in parallel, then fills rows in order.
template <class MakeMesh>
void run_cells(std::vector<ConvergenceRow>& rows, const std::vector<ManufacturedProblem>& problems,
               MakeMesh&& make_mesh, const StudyOptions& opts) {
  parallel_for(static_cast<int>(rows.size()), opts.threads, [&](int i) {
    auto& row = rows[i];
    const auto start = std::chrono::steady_clock::now();
    try {
      const TimeMesh mesh = make_mesh(i);
      row.dofs = dof_count(mesh);
      row.error = solve_and_measure(problems[i], mesh, opts);
    } catch (const std::exception& e) {
      row.failure = e.what();
    }
    if (opts.timing)
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
}

template <class Rate>
void fill_rates(std::vector<ConvergenceRow>& rows, Rate&& rate_fn, bool use_dofs) {
  // rows are grouped by (family parameter, degree parameter, alpha) in increasing N_or_L
  std::size_t begin = 0;
  while (begin < rows.size()) {
    std::size_t end = begin + 1;
    while (end < rows.size() && rows[end].gamma_or_delta == rows[begin].gamma_or_delta &&
           rows[end].p_or_mu == rows[begin].p_or_mu && rows[end].alpha == rows[begin].alpha)
      ++end;
    std::vector<double> e, x;
    for (std::size_t i = begin; i < end; ++i) {
      e.push_back(rows[i].failure.empty() ? rows[i].error : std::numeric_limits<double>::quiet_NaN());
      x.push_back(use_dofs ? rows[i].dofs : rows[i].N_or_L);
    }
    const auto r = rate_fn(std::span<const double>(e), std::span<const double>(x));
    for (std::size_t i = begin; i < end; ++i) rows[i].rate_or_b = r[i - begin];
    begin = end;
  }
}

}  // namespace detail

enum class FirstIntervalRule { automatic, on, off };

/// automatic: linear first interval on strongly graded meshes (gamma >= 2).
inline bool first_interval_linear(FirstIntervalRule rule, double gamma) {
  switch (rule) {
    case FirstIntervalRule::on: return true;
    case FirstIntervalRule::off: return false;
    case FirstIntervalRule::automatic: return gamma >= 2.0;
  }
  return false;
}

struct HStudyConfig {
  ManufacturedProblem problem = paper_example(-0.7);
  std::vector<double> gammas{1.0};
  std::vector<int> ps{1};
  std::vector<int> Ns{18, 27, 36, 72};
  FirstIntervalRule first_interval = FirstIntervalRule::off;
  StudyOptions options;
};

inline ConvergenceReport run_h_study(const HStudyConfig& cfg) {
  ConvergenceReport report;
  report.meta.alpha = cfg.problem.alpha;
  report.meta.backend = to_string(cfg.options.backend.kind);
  report.meta.m = cfg.options.error.m;
  std::vector<ManufacturedProblem> problems;
  for (int p : cfg.ps)
    for (double g : cfg.gammas)
      for (int N : cfg.Ns) {
        ConvergenceRow row;
        row.family = "graded";
        row.alpha = cfg.problem.alpha;
        row.backend = report.meta.backend;
        row.gamma_or_delta = g;
        row.p_or_mu = p;
        row.N_or_L = N;
        report.rows.push_back(row);
        problems.push_back(cfg.problem);
      }
  detail::run_cells(
      report.rows, problems,
      [&](int i) {
        const auto& r = report.rows[i];
        return graded_mesh(cfg.problem.final_time, r.N_or_L, r.gamma_or_delta, static_cast<int>(r.p_or_mu),
                           first_interval_linear(cfg.first_interval, r.gamma_or_delta));
      },
      cfg.options);
  detail::fill_rates(report.rows, [](auto e, auto x) { return eoc(e, x); }, false);
  return report;
}

struct HpStudyConfig {
  ManufacturedProblem problem = paper_example(-0.7);
  std::vector<double> deltas{0.24};
  std::vector<int> Ls{3, 4, 5, 6, 7};
  double mu = 1.0;
  double T1 = 1.0;
  StudyOptions options = [] {
    StudyOptions o;
    o.error.m = 60;
    return o;
  }();
};

inline ConvergenceReport run_hp_study(const HpStudyConfig& cfg) {
  ConvergenceReport report;
  report.meta.alpha = cfg.problem.alpha;
  report.meta.backend = to_string(cfg.options.backend.kind);
  report.meta.m = cfg.options.error.m;
  std::vector<ManufacturedProblem> problems;
  for (double d : cfg.deltas)
    for (int L : cfg.Ls) {
      ConvergenceRow row;
      row.family = "geometric";
      row.alpha = cfg.problem.alpha;
      row.backend = report.meta.backend;
      row.gamma_or_delta = d;
      row.p_or_mu = cfg.mu;
      row.N_or_L = L;
      report.rows.push_back(row);
      problems.push_back(cfg.problem);
    }
  detail::run_cells(
      report.rows, problems,
      [&](int i) {
        const auto& r = report.rows[i];
        return geometric_mesh(cfg.problem.final_time, cfg.T1, r.gamma_or_delta, r.N_or_L, cfg.mu);
      },
      cfg.options);
  detail::fill_rates(report.rows, [](auto e, auto x) { return exp_coefficient(e, x); }, true);
  return report;
}

struct DeltaSweepConfig {
  std::vector<double> alphas{-0.3, -0.5, -0.7};
  std::vector<double> deltas{0.15, 0.18, 0.21, 0.24, 0.27, 0.30, 0.33, 0.36};
  /// Geometric levels; L = 7 with mu = 1 gives 44 degrees of freedom.
  int L = 7;
  double mu = 1.0;
  double T1 = 1.0;
  StudyOptions options = [] {
    StudyOptions o;
    o.error.m = 60;
    return o;
  }();
};

/// Rows ordered by alpha then delta; rate_or_b stays empty.
inline ConvergenceReport delta_sweep(const DeltaSweepConfig& cfg) {
  ConvergenceReport report;
  report.meta.alpha = cfg.alphas.empty() ? 0.0 : cfg.alphas.front();
  report.meta.backend = to_string(cfg.options.backend.kind);
  report.meta.m = cfg.options.error.m;
  std::vector<ManufacturedProblem> problems;
  for (double a : cfg.alphas)
    for (double d : cfg.deltas) {
      ConvergenceRow row;
      row.family = "geometric";
      row.alpha = a;
      row.backend = report.meta.backend;
      row.gamma_or_delta = d;
      row.p_or_mu = cfg.mu;
      row.N_or_L = cfg.L;
      report.rows.push_back(row);
      problems.push_back(paper_example(a));
    }
  detail::run_cells(
      report.rows, problems,
      [&](int i) { return geometric_mesh(1.0, cfg.T1, report.rows[i].gamma_or_delta, cfg.L, cfg.mu); },
      cfg.options);
  return report;
}

/// delta with the smallest error for the given alpha (NaN if none succeeded).
inline double best_delta(const ConvergenceReport& report, double alpha) {
  double best = std::numeric_limits<double>::quiet_NaN();
  double best_err = INFINITY;
  for (const auto& r : report.rows)
    if (r.alpha == alpha && r.failure.empty() && r.error < best_err) {
      best_err = r.error;
      best = r.gamma_or_delta;
    }
  return best;
}

inline std::string format_number(double v, const char* fmt = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

inline constexpr const char* kCsvHeader = "family,alpha,backend,gamma_or_delta,p_or_mu,N_or_L,dofs,error,rate_or_b,seconds";

/// CSV with a leading comment line carrying the config hash. Undefined rates
/// and failed cells print as NA.
inline void write_csv(const ConvergenceReport& report, std::ostream& os) {
  if (!report.meta.config_hash.empty()) os << "# config_hash=" << report.meta.config_hash << '\n';
  os << kCsvHeader << '\n';
  for (const auto& r : report.rows) {
    os << r.family << ',' << format_number(r.alpha) << ',' << r.backend << ',' << format_number(r.gamma_or_delta) << ','
       << format_number(r.p_or_mu) << ',' << r.N_or_L << ',' << r.dofs << ','
       << (r.failure.empty() ? format_number(r.error, "%.6e") : std::string("NA")) << ','
       << (r.rate_or_b ? format_number(*r.rate_or_b, "%.4f") : std::string("NA")) << ','
       << format_number(r.seconds, "%.3f") << '\n';
  }
}

struct Curve {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// hp-study curves: error against sqrt(dofs), one per delta.
inline std::vector<Curve> hp_curves(const ConvergenceReport& report) {
  std::vector<Curve> out;
  for (const auto& r : report.rows) {
    if (!r.failure.empty()) continue;
    const std::string name = "delta_" + format_number(r.gamma_or_delta);
    if (out.empty() || out.back().name != name) out.push_back({name, {}, {}});
    out.back().x.push_back(std::sqrt(static_cast<double>(r.dofs)));
    out.back().y.push_back(r.error);
  }
  return out;
}

/// delta-sweep curves: error against delta, one per alpha.
inline std::vector<Curve> sweep_curves(const ConvergenceReport& report) {
  std::vector<Curve> out;
  for (const auto& r : report.rows) {
    if (!r.failure.empty()) continue;
    const std::string name = "alpha_" + format_number(r.alpha);
    if (out.empty() || out.back().name != name) out.push_back({name, {}, {}});
    out.back().x.push_back(r.gamma_or_delta);
    out.back().y.push_back(r.error);
  }
  return out;
}

}  // namespace fracdg
