#pragma once

// Manufactured problems on (0,1) with A = -K d^2/dx^2 whose exact solutions
// are finite sine expansions with power-law time profiles,
//   u(x,t) = sum_k u_k(t) sin(k pi x),   u_k(t) = sum_i c_i t^(nu_i),
// so the forcing follows in closed form from
//   B_a t^nu = Gamma(nu+1)/Gamma(nu+1+a) t^(nu+a).

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracdg/error.hpp"
#include "fracdg/legendre.hpp"
#include "fracdg/quadrature.hpp"

namespace fracdg {

struct PowerTerm {
  double coef = 0.0;
  double exponent = 0.0;

  double operator()(double t) const {
    if (coef == 0.0) return 0.0;
    if (exponent == 0.0) return coef;
    return coef * std::pow(t, exponent);
  }
};

/// B_a (c t^nu) for nu >= 0.
inline PowerTerm frac_derivative_of_power(const PowerTerm& term, double alpha) {
  if (term.exponent < 0.0) throw DomainError("power identity needs a nonnegative exponent");
  const double nu = term.exponent;
  return {term.coef * std::tgamma(nu + 1.0) / std::tgamma(nu + 1.0 + alpha), nu + alpha};
}

/// I^{-a} (c t^beta) = c Gamma(beta+1)/Gamma(beta+1-a) t^(beta-a), beta > -1.
inline PowerTerm frac_integral_of_power(const PowerTerm& term, double alpha) {
  if (!(term.exponent > -1.0)) throw DomainError("fractional integral needs exponent > -1");
  const double b = term.exponent;
  return {term.coef * std::tgamma(b + 1.0) / std::tgamma(b + 1.0 - alpha), b - alpha};
}

/// Sum of power terms in t.
struct TimeProfile {
  std::vector<PowerTerm> terms;

  double value(double t) const {
    double s = 0.0;
    for (const auto& p : terms) s += p(t);
    return s;
  }
  double derivative(double t) const {
    double s = 0.0;
    for (const auto& p : derivative_terms()) s += p(t);
    return s;
  }
  std::vector<PowerTerm> derivative_terms() const {
    std::vector<PowerTerm> out;
    for (const auto& p : terms)
      if (p.exponent != 0.0 && p.coef != 0.0) out.push_back({p.coef * p.exponent, p.exponent - 1.0});
    return out;
  }
  std::vector<PowerTerm> frac_derivative_terms(double alpha) const {
    std::vector<PowerTerm> out;
    for (const auto& p : terms)
      if (p.coef != 0.0) out.push_back(frac_derivative_of_power(p, alpha));
    return out;
  }
  /// Smallest exponent, used as the regularity exponent at t = 0.
  double min_exponent() const {
    double e = INFINITY;
    for (const auto& p : terms)
      if (p.coef != 0.0) e = std::min(e, p.exponent);
    return e;
  }
};

/// Scalar forcing f(t) = sum of power terms + smooth part. Power terms may be
/// singular at t = 0 (exponent > -1); the smooth part must be analytic on [0,T].
struct Forcing {
  std::vector<PowerTerm> powers;
  std::function<double(double)> smooth;

  double operator()(double t) const {
    double s = smooth ? smooth(t) : 0.0;
    for (const auto& p : powers) s += p(t);
    return s;
  }

  bool zero() const {
    if (smooth) return false;
    for (const auto& p : powers)
      if (p.coef != 0.0) return false;
    return true;
  }

  Forcing scaled(double c) const {
    Forcing out;
    for (const auto& p : powers) out.powers.push_back({p.coef * c, p.exponent});
    if (smooth && c != 0.0) {
      auto g = smooth;
      out.smooth = [g, c](double t) { return c * g(t); };
    }
    return out;
  }

  /// Adds c * other.
  void accumulate(const Forcing& other, double c) {
    if (c == 0.0) return;
    for (const auto& p : other.powers) powers.push_back({p.coef * c, p.exponent});
    if (other.smooth) {
      auto g = other.smooth;
      if (smooth) {
        auto h = smooth;
        smooth = [g, h, c](double t) { return h(t) + c * g(t); };
      } else {
        smooth = [g, c](double t) { return c * g(t); };
      }
    }
  }

  /// int_a^b f(t) P_i(t) dt, i = 0..p, with P_i Legendre mapped to [a,b].
  Eigen::VectorXd load(double a, double b, int p) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(p + 1);
    std::vector<double> vals(p + 1);
    auto add_rule = [&](const QuadratureRule& rule, auto&& weight_fn) {
      for (std::size_t q = 0; q < rule.size(); ++q) {
        legendre_values(to_reference(rule.nodes[q], a, b), vals);
        const double w = rule.weights[q] * weight_fn(rule.nodes[q]);
        for (int i = 0; i <= p; ++i) out(i) += w * vals[i];
      }
    };
    for (const auto& term : powers) {
      if (term.coef == 0.0) continue;
      if (!(term.exponent > -1.0)) throw DomainError("forcing: power exponent must exceed -1");
      const bool integer_power = term.exponent >= 0.0 && term.exponent == std::floor(term.exponent);
      if (a == 0.0 && !integer_power) {
        const auto rule = gauss_jacobi_rule(p / 2 + 2, term.exponent, 0.0, b);
        add_rule(rule, [&](double) { return term.coef; });
      } else if (integer_power) {
        const auto rule = gauss_legendre_rule((p + static_cast<int>(term.exponent)) / 2 + 2, a, b);
        add_rule(rule, [&](double t) { return term(t); });
      } else {
        const auto rule = graded_rule(a, b, 0.0, 12 + (p + 1) / 2);
        add_rule(rule, [&](double t) { return term(t); });
      }
    }
    if (smooth) add_rule(gauss_legendre_rule(p + 6, a, b), smooth);
    return out;
  }
};

/// Scalar mode equation U' + lambda B_a U = f, U(0) = initial.
struct ModeProblem {
  double lambda = 0.0;
  Forcing forcing;
  double initial = 0.0;
};

/// One sine component sin(k pi x) of the exact solution.
struct SineComponent {
  int wavenumber = 1;
  TimeProfile profile;
};

struct ManufacturedProblem {
  std::string name;
  double alpha = -0.5;
  double diffusivity = 1.0;
  double final_time = 1.0;
  /// Regularity exponent sigma: ||u^(j)(t)|| <= M t^(sigma-j).
  double sigma = 1.0;
  std::vector<SineComponent> components;

  double eigenvalue(int k) const { return diffusivity * k * k * std::numbers::pi * std::numbers::pi; }

  double u(double x, double t) const {
    double s = 0.0;
    for (const auto& c : components) s += c.profile.value(t) * std::sin(c.wavenumber * std::numbers::pi * x);
    return s;
  }
  double u0(double x) const { return u(x, 0.0); }

  int max_wavenumber() const {
    int k = 0;
    for (const auto& c : components) k = std::max(k, c.wavenumber);
    return k;
  }

  /// Time profile multiplying sin(k pi x) (empty if absent).
  TimeProfile profile(int k) const {
    TimeProfile p;
    for (const auto& c : components)
      if (c.wavenumber == k) p.terms.insert(p.terms.end(), c.profile.terms.begin(), c.profile.terms.end());
    return p;
  }

  /// f_k(t) with f(x,t) = sum_k f_k(t) sin(k pi x).
  Forcing sine_forcing(int k) const {
    const auto p = profile(k);
    Forcing f;
    f.powers = p.derivative_terms();
    for (auto term : p.frac_derivative_terms(alpha)) {
      term.coef *= eigenvalue(k);
      f.powers.push_back(term);
    }
    return f;
  }

  /// Exact f(x,t), for residual checks.
  double f(double x, double t) const {
    double s = 0.0;
    for (int k = 1; k <= max_wavenumber(); ++k) s += sine_forcing(k)(t) * std::sin(k * std::numbers::pi * x);
    return s;
  }
};

/// u(x,t) = sin(pi x) - t^(a+2) sin(2 pi x) with K = 1 on (0,1), T = 1.
inline ManufacturedProblem paper_example(double alpha) {
  if (!(alpha > -1.0 && alpha < 0.0)) throw DomainError("paper_example: alpha must lie in (-1,0)");
  ManufacturedProblem p;
  p.name = "paper_example";
  p.alpha = alpha;
  p.sigma = alpha + 2.0;
  p.components.push_back({1, TimeProfile{{{1.0, 0.0}}}});
  p.components.push_back({2, TimeProfile{{{-1.0, alpha + 2.0}}}});
  return p;
}

/// Scalar mode problem with exact solution t^nu:
///   f = nu t^(nu-1) + lambda Gamma(nu+1)/Gamma(nu+1+a) t^(nu+a).
inline ModeProblem power_mode_problem(double lambda, double nu, double alpha) {
  if (nu < 0.0) throw DomainError("power_mode_problem: nu must be >= 0");
  if (!(nu + alpha > -1.0)) throw DomainError("power_mode_problem: forcing not integrable (nu + alpha <= -1)");
  ModeProblem mp;
  mp.lambda = lambda;
  mp.initial = nu == 0.0 ? 1.0 : 0.0;
  if (nu != 0.0) mp.forcing.powers.push_back({nu, nu - 1.0});
  if (lambda != 0.0) {
    auto term = frac_derivative_of_power({1.0, nu}, alpha);
    term.coef *= lambda;
    mp.forcing.powers.push_back(term);
  }
  return mp;
}

/// Single-component problem u = t^nu sin(k pi x).
inline ManufacturedProblem power_problem(double alpha, double nu, int k = 1, double diffusivity = 1.0) {
  if (!(alpha > -1.0 && alpha < 0.0)) throw DomainError("power_problem: alpha must lie in (-1,0)");
  if (nu < 0.0) throw DomainError("power_problem: nu must be >= 0");
  ManufacturedProblem p;
  p.name = "power";
  p.alpha = alpha;
  p.diffusivity = diffusivity;
  p.sigma = nu == 0.0 ? alpha + 2.0 : nu;
  p.components.push_back({k, TimeProfile{{{1.0, nu}}}});
  return p;
}

}  // namespace fracdg
