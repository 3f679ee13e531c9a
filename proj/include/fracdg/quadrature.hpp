#pragma once

// Gaussian quadrature rules used throughout the kernel: Gauss-Legendre,
// Gauss-Jacobi (Golub-Welsch), and composite rules graded toward a nearby
// singularity that lies outside the integration interval.

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>
#include <vector>

#include "fracdg/error.hpp"

namespace fracdg {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const noexcept { return nodes.size(); }

  template <class F>
  double integrate(F&& f) const {
    double sum = 0.0;
    for (std::size_t q = 0; q < nodes.size(); ++q) sum += weights[q] * f(nodes[q]);
    return sum;
  }

  void append(const QuadratureRule& other) {
    nodes.insert(nodes.end(), other.nodes.begin(), other.nodes.end());
    weights.insert(weights.end(), other.weights.begin(), other.weights.end());
  }
};

namespace detail {

inline QuadratureRule compute_gauss_legendre(int n) {
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = (n == 1) ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

// Golub-Welsch for the weight (1-x)^a (1+x)^b on [-1,1].
inline QuadratureRule compute_gauss_jacobi(int n, double a, double b) {
  Eigen::VectorXd diag(n);
  Eigen::VectorXd sub(n > 1 ? n - 1 : 0);
  const double ab = a + b;
  diag(0) = (b - a) / (ab + 2.0);
  for (int k = 1; k < n; ++k) {
    const double s = 2.0 * k + ab;
    diag(k) = (b * b - a * a) / (s * (s + 2.0));
    double beta;
    if (k == 1) {
      beta = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
    } else {
      beta = 4.0 * k * (k + a) * (k + b) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
    }
    sub(k - 1) = std::sqrt(beta);
  }
  const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) +
                              std::lgamma(b + 1.0) - std::lgamma(ab + 2.0));
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  if (n == 1) {
    rule.nodes[0] = diag(0);
    rule.weights[0] = mu0;
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw NumericalError("Gauss-Jacobi eigen-solve failed");
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = solver.eigenvalues()(i);
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

}  // namespace detail

/// n-point Gauss-Legendre rule on [-1,1]; cached, thread-safe.
inline const QuadratureRule& gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre: npoints must be >= 1");
  static std::mutex mutex;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, detail::compute_gauss_legendre(n)).first;
  return it->second;
}

/// n-point Gauss-Jacobi rule on [-1,1] for the weight (1-x)^a (1+x)^b, a,b > -1.
inline const QuadratureRule& gauss_jacobi(int n, double a, double b) {
  if (n < 1) throw DomainError("gauss_jacobi: npoints must be >= 1");
  if (!(a > -1.0) || !(b > -1.0)) throw DomainError("gauss_jacobi: exponents must exceed -1");
  static std::mutex mutex;
  static std::map<std::tuple<int, double, double>, QuadratureRule> cache;
  std::lock_guard lock(mutex);
  const auto key = std::make_tuple(n, a, b);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, detail::compute_gauss_jacobi(n, a, b)).first;
  return it->second;
}

/// Affine map of a [-1,1] rule onto [a,b] (weights scaled by the Jacobian only).
inline QuadratureRule map_rule(const QuadratureRule& ref, double a, double b) {
  QuadratureRule out;
  out.nodes.resize(ref.size());
  out.weights.resize(ref.size());
  const double half = 0.5 * (b - a);
  for (std::size_t q = 0; q < ref.size(); ++q) {
    out.nodes[q] = a + half * (ref.nodes[q] + 1.0);
    out.weights[q] = half * ref.weights[q];
  }
  return out;
}

/// Gauss-Legendre rule with npoints on [a,b].
inline QuadratureRule gauss_legendre_rule(int npoints, double a, double b) {
  return map_rule(gauss_legendre(npoints), a, b);
}

/// Rule integrating (t-a)^left * (b-t)^right * poly(t) over (a,b) exactly for
/// polynomials of degree <= 2*npoints-1.
inline QuadratureRule jacobi_weighted_rule(int npoints, double left, double right, double a, double b) {
  const auto& ref = gauss_jacobi(npoints, right, left);
  QuadratureRule out;
  out.nodes.resize(ref.size());
  out.weights.resize(ref.size());
  const double half = 0.5 * (b - a);
  const double scale = std::pow(half, left + right + 1.0);
  for (std::size_t q = 0; q < ref.size(); ++q) {
    out.nodes[q] = a + half * (ref.nodes[q] + 1.0);
    out.weights[q] = scale * ref.weights[q];
  }
  return out;
}

/// Gauss-Jacobi rule on (a,b) with weight (t-a)^exponent.
inline QuadratureRule gauss_jacobi_rule(int npoints, double exponent, double a, double b) {
  if (!(exponent > -1.0)) throw DomainError("gauss_jacobi_rule: exponent must exceed -1");
  if (npoints < 1) throw DomainError("gauss_jacobi_rule: npoints must be >= 1");
  if (!(b > a)) throw DomainError("gauss_jacobi_rule: empty interval");
  return jacobi_weighted_rule(npoints, exponent, 0.0, a, b);
}

/// Composite Gauss-Legendre rule on [a,b] for integrands that are analytic
/// except at `singular_point`, which must lie outside [a,b]. Panels grow
/// geometrically away from the singularity; every panel's length is at most
/// its distance to the singular point.
inline QuadratureRule graded_rule(double a, double b, double singular_point, int points_per_panel) {
  if (singular_point > a && singular_point < b)
    throw DomainError("graded_rule: singular point inside the interval");
  const bool mirrored = singular_point >= b;
  const double d = mirrored ? singular_point - b : a - singular_point;
  if (!(d > 0.0)) throw DomainError("graded_rule: singular point on the boundary");
  const double length = b - a;
  const auto& ref = gauss_legendre(points_per_panel);
  QuadratureRule out;
  // Panels are laid out in the local coordinate u = distance from the near end.
  double u0 = 0.0;
  while (u0 < length) {
    const double u1 = std::min(length, u0 + (u0 + d));
    const auto panel = map_rule(ref, u0, u1);
    for (std::size_t q = 0; q < panel.size(); ++q) {
      out.nodes.push_back(mirrored ? b - panel.nodes[q] : a + panel.nodes[q]);
      out.weights.push_back(panel.weights[q]);
    }
    u0 = u1;
  }
  return out;
}

/// Composite Gauss-Legendre rule on [a,b] refined geometrically toward the
/// left endpoint, for integrands with a weak endpoint singularity of unknown
/// form. The innermost panel has width (b-a)*2^-levels.
inline QuadratureRule left_graded_rule(double a, double b, int points_per_panel, int levels = 48) {
  const auto& ref = gauss_legendre(points_per_panel);
  QuadratureRule out;
  double lo = a + (b - a) * std::ldexp(1.0, -levels);
  out.append(map_rule(ref, a, lo));
  for (int l = levels; l > 0; --l) {
    const double hi = a + (b - a) * std::ldexp(1.0, -(l - 1));
    out.append(map_rule(ref, lo, hi));
    lo = hi;
  }
  return out;
}

}  // namespace fracdg
