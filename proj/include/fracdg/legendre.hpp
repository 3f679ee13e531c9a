#pragma once

// Legendre polynomials on [-1,1] and their images on an interval [a,b].

#include <cmath>
#include <span>
#include <vector>

#include "fracdg/error.hpp"

namespace fracdg {

/// Largest Legendre index supported by the moment tables.
inline constexpr int kMaxDegree = 40;

/// Fills values[k] = P_k(x) for k = 0..values.size()-1.
inline void legendre_values(double x, std::span<double> values) {
  if (values.empty()) return;
  values[0] = 1.0;
  if (values.size() == 1) return;
  values[1] = x;
  for (std::size_t k = 1; k + 1 < values.size(); ++k)
    values[k + 1] = ((2.0 * k + 1.0) * x * values[k] - k * values[k - 1]) / (k + 1.0);
}

/// Fills values[k] = P_k(x) and derivs[k] = P_k'(x).
inline void legendre_values_and_derivatives(double x, std::span<double> values, std::span<double> derivs) {
  legendre_values(x, values);
  if (derivs.empty()) return;
  derivs[0] = 0.0;
  if (derivs.size() > 1) derivs[1] = 1.0;
  // P'_{k+1} = P'_{k-1} + (2k+1) P_k
  for (std::size_t k = 1; k + 1 < derivs.size(); ++k)
    derivs[k + 1] = derivs[k - 1] + (2.0 * k + 1.0) * values[k];
}

inline std::vector<double> legendre_values(double x, int degree) {
  std::vector<double> v(static_cast<std::size_t>(degree) + 1);
  legendre_values(x, v);
  return v;
}

/// Maps t in [a,b] to x in [-1,1].
inline double to_reference(double t, double a, double b) { return (2.0 * t - a - b) / (b - a); }

/// Evaluates the Legendre series sum_k c_k P_k(x) by Clenshaw recurrence.
inline double legendre_series(std::span<const double> coeffs, double x) {
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 0;) {
    const double alpha = (2.0 * k + 1.0) / (k + 1.0) * x;
    const double beta = -(k + 1.0) / (k + 2.0);
    const double b0 = coeffs[k] + alpha * b1 + beta * b2;
    b2 = b1;
    b1 = b0;
  }
  return b1;
}

/// Legendre coefficients of d/dx of a Legendre series (on [-1,1]).
inline std::vector<double> legendre_derivative(std::span<const double> coeffs) {
  const std::size_t n = coeffs.size();
  std::vector<double> d(n > 1 ? n - 1 : 1, 0.0);
  if (n <= 1) return d;
  // d_m = (2m+1) * sum_{k>m, k-m odd} c_k, accumulated from the top.
  double odd = 0.0, even = 0.0;
  for (std::size_t k = n; k-- > 1;) {
    const std::size_t m = k - 1;
    // c_k contributes to every m = k-1, k-3, ...
    if ((k % 2) == 1) odd += coeffs[k]; else even += coeffs[k];
    d[m] = (2.0 * m + 1.0) * ((m % 2 == 0) ? odd : even);
  }
  return d;
}

/// Integral over [-1,1] of P_k^2.
inline double legendre_norm_squared(int k) { return 2.0 / (2.0 * k + 1.0); }

inline void check_degree(int k) {
  if (k < 0) throw DomainError("negative polynomial degree");
  if (k > kMaxDegree) throw CapacityError("polynomial degree " + std::to_string(k) + " exceeds kMaxDegree");
}

}  // namespace fracdg
