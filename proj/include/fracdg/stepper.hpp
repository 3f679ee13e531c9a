#pragma once

// DG time stepping per mode. On interval n with Legendre coefficients c_n the
// local equations read, for test functions w = P_i,
//   U_+^n w_+^n + int (U' w + lambda B_a U w) dt = U_-^n w_+^n + int f w dt,
// which gives (E + T + lambda B_nn) c_n = (-1)^i U_-^n + F_n - lambda sum_{j<n} B_jn c_j
// with E_il = (-1)^(i+l) and T_il = int P_l' P_i = 2 when l > i and l+i odd.

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fracdg/error.hpp"
#include "fracdg/kernel.hpp"
#include "fracdg/legendre.hpp"
#include "fracdg/mesh.hpp"
#include "fracdg/parallel.hpp"
#include "fracdg/problems.hpp"
#include "fracdg/quadrature.hpp"

namespace fracdg {

enum class Side { left, right };

/// Broken polynomial solution: per mode, Legendre coefficients of every
/// interval stored contiguously (TimeMesh::offset layout), plus U_-^0.
class DgSolution {
 public:
  DgSolution(TimeMesh mesh, int modes)
      : mesh_(std::move(mesh)),
        coeffs_(modes, std::vector<double>(dof_count(mesh_), 0.0)),
        initial_(modes, 0.0) {}

  const TimeMesh& mesh() const noexcept { return mesh_; }
  int modes() const noexcept { return static_cast<int>(coeffs_.size()); }

  std::span<double> coefficients(int m) { return coeffs_.at(m); }
  std::span<const double> coefficients(int m) const { return coeffs_.at(m); }
  std::span<double> coefficients(int m, int n) {
    return std::span<double>(coeffs_.at(m)).subspan(mesh_.offset(n), mesh_.degree(n) + 1);
  }
  std::span<const double> coefficients(int m, int n) const {
    return std::span<const double>(coeffs_.at(m)).subspan(mesh_.offset(n), mesh_.degree(n) + 1);
  }
  double& initial(int m) { return initial_.at(m); }
  double initial(int m) const { return initial_.at(m); }

  /// Value of interval n's polynomial at t (t may be an endpoint).
  double evaluate_on(int m, int n, double t) const {
    return legendre_series(coefficients(m, n), to_reference(t, mesh_.left(n), mesh_.right(n)));
  }

  /// U(t); at a node, Side::left gives the limit from the left (U_-) and
  /// Side::right the limit from the right (U_+). U(0^-) is U_-^0.
  double evaluate(int m, double t, Side side = Side::left) const {
    if (t < 0.0 || t > mesh_.final_time()) throw DomainError("evaluate: t outside [0,T]");
    if (t == 0.0 && side == Side::left) return initial(m);
    if (t == mesh_.final_time() && side == Side::right) throw DomainError("evaluate: no right limit at T");
    int n = mesh_.locate(t);
    if (side == Side::right && t == mesh_.right(n)) ++n;
    if (t == 0.0) n = 0;
    return evaluate_on(m, n, t);
  }

  /// U_-^n, n = 0..N.
  double left_trace(int m, int node) const {
    if (node == 0) return initial(m);
    return legendre_series(coefficients(m, node - 1), 1.0);
  }
  /// U_+^n, n = 0..N-1.
  double right_trace(int m, int node) const { return legendre_series(coefficients(m, node), -1.0); }
  /// [U]^n = U_+^n - U_-^n, n = 0..N-1.
  double jump(int m, int node) const { return right_trace(m, node) - left_trace(m, node); }

 private:
  TimeMesh mesh_;
  std::vector<std::vector<double>> coeffs_;
  std::vector<double> initial_;
};

struct StepperOptions {
  KernelOptions kernel;
  int threads = 1;
};

/// E + T: the upwind trace term plus int P_l' P_i.
inline Eigen::MatrixXd transport_matrix(int p) {
  Eigen::MatrixXd A(p + 1, p + 1);
  for (int i = 0; i <= p; ++i)
    for (int l = 0; l <= p; ++l) A(i, l) = (((i + l) % 2) ? -1.0 : 1.0) + ((l > i && (l + i) % 2 == 1) ? 2.0 : 0.0);
  return A;
}

struct LocalSystem {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd rhs;
};

/// Local system of interval n given the incoming trace U_-^n and the history
/// load sum_{j<n} B_jn c_j.
inline LocalSystem assemble_local_system(const ModeProblem& problem, const MemoryTable& table, int n,
                                         double incoming, const Eigen::VectorXd& history) {
  const auto& mesh = table.mesh();
  const int p = mesh.degree(n);
  LocalSystem sys;
  sys.matrix = transport_matrix(p) + problem.lambda * table.block(n, n).matrix;
  sys.rhs = problem.forcing.load(mesh.left(n), mesh.right(n), p);
  for (int i = 0; i <= p; ++i) sys.rhs(i) += ((i % 2) ? -1.0 : 1.0) * incoming;
  if (history.size() == p + 1) sys.rhs -= problem.lambda * history;
  return sys;
}

namespace detail {

inline void solve_mode(const ModeProblem& problem, const MemoryTable& table, DgSolution& sol, int m) {
  const auto& mesh = table.mesh();
  sol.initial(m) = problem.initial;
  double incoming = problem.initial;
  for (int n = 0; n < mesh.intervals(); ++n) {
    const int p = mesh.degree(n);
    Eigen::VectorXd history = Eigen::VectorXd::Zero(p + 1);
    if (problem.lambda != 0.0) {
      for (int j = 0; j < n; ++j) {
        auto cj = sol.coefficients(m, j);
        history.noalias() += table.block(j, n).matrix * Eigen::Map<const Eigen::VectorXd>(cj.data(), cj.size());
      }
    }
    const auto sys = assemble_local_system(problem, table, n, incoming, history);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys.matrix);
    const double det = std::abs(lu.determinant());
    if (!(det > 0.0) || !std::isfinite(det))
      throw NumericalError("singular local system on interval " + std::to_string(n) + ", mode " + std::to_string(m));
    const Eigen::VectorXd c = lu.solve(sys.rhs);
    if (!c.allFinite())
      throw NumericalError("non-finite solution on interval " + std::to_string(n) + ", mode " + std::to_string(m));
    auto dst = sol.coefficients(m, n);
    for (int i = 0; i <= p; ++i) dst[i] = c(i);
    incoming = sol.left_trace(m, n + 1);
  }
}

}  // namespace detail

/// Marches every mode over the mesh using a precomputed memory table.
inline DgSolution solve(const std::vector<ModeProblem>& problems, const MemoryTable& table, int threads = 1) {
  DgSolution sol(table.mesh(), static_cast<int>(problems.size()));
  parallel_for(static_cast<int>(problems.size()), threads,
               [&](int m) { detail::solve_mode(problems[m], table, sol, m); });
  return sol;
}

inline DgSolution solve(const std::vector<ModeProblem>& problems, const TimeMesh& mesh, const FractionalOrder& order,
                        const StepperOptions& options = {}) {
  MemoryTable table(mesh, order, options.kernel, options.threads);
  return solve(problems, table, options.threads);
}

/// Per-interval projection: Pi u(t_{n+1}^-) = u(t_{n+1}) and u - Pi u is
/// orthogonal to polynomials of degree p_n - 1 on the interval.
template <class F>
DgSolution pi_projection(F&& u, const TimeMesh& mesh) {
  DgSolution sol(mesh, 1);
  sol.initial(0) = u(0.0);
  for (int n = 0; n < mesh.intervals(); ++n) {
    const int p = mesh.degree(n);
    const double a = mesh.left(n), b = mesh.right(n);
    // u may have a weak singularity at t = 0
    const QuadratureRule rule = a == 0.0 ? left_graded_rule(a, b, p / 2 + 12, 40) : gauss_legendre_rule(p + 16, a, b);
    std::vector<double> vals(p + 1);
    std::vector<double> c(p + 1, 0.0);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      legendre_values(to_reference(rule.nodes[q], a, b), vals);
      const double w = rule.weights[q] * u(rule.nodes[q]);
      for (int k = 0; k < p; ++k) c[k] += w * vals[k];
    }
    double partial = 0.0;
    for (int k = 0; k < p; ++k) {
      c[k] *= (2.0 * k + 1.0) / (b - a);
      partial += c[k];
    }
    c[p] = u(b) - partial;
    auto dst = sol.coefficients(0, n);
    std::copy(c.begin(), c.end(), dst.begin());
  }
  return sol;
}

/// Integral of f(t) against omega_{-a}(t-s) = (t-s)^(-a-1)/Gamma(-a) over (0,t).
inline double frac_integral(const Forcing& f, double alpha, double t) {
  if (t <= 0.0) return 0.0;
  double s = 0.0;
  for (const auto& term : f.powers) s += frac_integral_of_power(term, alpha)(t);
  if (f.smooth) {
    const auto rule = jacobi_weighted_rule(24, 0.0, -alpha - 1.0, 0.0, t);
    s += rule.integrate(f.smooth) / std::tgamma(-alpha);
  }
  return s;
}

struct StabilityRow {
  int node = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool violated = false;
};

struct StabilityReport {
  std::vector<StabilityRow> rows;
  int violations = 0;
  /// min over nodes of (rhs - lhs) / max(rhs, tiny)
  double min_relative_slack = INFINITY;
};

/// Energy inequality per node n = 1..N:
///   ||U_-^n||^2 + ||U_+^{n-1}||^2 + 2 int_0^{t_n} A(B_a U, U) dt
///     <= 4 ||U_-^0||^2 + 4 d_a^2 int_0^{t_n} |<g, A^{-1} f>| dt,  g = I^{-a} f.
/// Norms are sums over modes (orthonormal mode shapes).
inline StabilityReport stability_report(const DgSolution& sol, const std::vector<ModeProblem>& problems,
                                        const MemoryTable& table, double relative_slack = 1e-8) {
  const auto& mesh = sol.mesh();
  const int M = sol.modes();
  const double alpha = table.order().alpha();
  const double d = table.order().d_alpha();
  StabilityReport report;
  std::vector<double> energy(M, 0.0);  // int_0^{t_n} B U_m U_m
  double initial_norm = 0.0;
  for (int m = 0; m < M; ++m) initial_norm += sol.initial(m) * sol.initial(m);
  double forcing_integral = 0.0;
  auto integrand = [&](double t) {
    double s = 0.0;
    for (int m = 0; m < M; ++m) {
      const auto& pr = problems[m];
      if (pr.lambda <= 0.0 || pr.forcing.zero()) continue;
      s += frac_integral(pr.forcing, alpha, t) * pr.forcing(t) / pr.lambda;
    }
    return std::abs(s);
  };
  for (int n = 0; n < mesh.intervals(); ++n) {
    for (int m = 0; m < M; ++m) {
      auto cn = sol.coefficients(m, n);
      Eigen::Map<const Eigen::VectorXd> vn(cn.data(), cn.size());
      for (int j = 0; j <= n; ++j) {
        auto cj = sol.coefficients(m, j);
        energy[m] += vn.dot(table.block(j, n).matrix * Eigen::Map<const Eigen::VectorXd>(cj.data(), cj.size()));
      }
    }
    const double a = mesh.left(n), b = mesh.right(n);
    const QuadratureRule rule = a == 0.0 ? left_graded_rule(a, b, 16, 40) : gauss_legendre_rule(24, a, b);
    forcing_integral += rule.integrate(integrand);
    StabilityRow row;
    row.node = n + 1;
    for (int m = 0; m < M; ++m) {
      const double um = sol.left_trace(m, n + 1);
      const double up = sol.right_trace(m, n);
      row.lhs += um * um + up * up + 2.0 * problems[m].lambda * energy[m];
    }
    row.rhs = 4.0 * initial_norm + 4.0 * d * d * forcing_integral;
    const double scale = std::max(std::abs(row.rhs), 1e-300);
    const double slack = (row.rhs - row.lhs) / scale;
    row.violated = row.lhs - row.rhs > relative_slack * scale && row.lhs > 1e-300;
    if (row.violated) ++report.violations;
    report.min_relative_slack = std::min(report.min_relative_slack, row.lhs == 0.0 && row.rhs == 0.0 ? 0.0 : slack);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace fracdg
