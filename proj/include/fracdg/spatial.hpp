#pragma once

// Spatial backends on (0,1) with homogeneous Dirichlet conditions. Each one
// diagonalizes A into independent modes so the time stepper works per mode:
// the exact sine eigensystem, or continuous Lagrange finite elements of
// degree r on a uniform mesh, reduced by the generalized eigenproblem
// S z = lambda M z with M-orthonormal z.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "fracdg/error.hpp"
#include "fracdg/quadrature.hpp"

namespace fracdg {

/// Uniform-mesh C0 Lagrange space of degree r on (0,1) with equispaced local
/// nodes. Global node g sits at x = g h / r; nodes 0 and elements*r are the
/// constrained boundary nodes, interior unknowns are numbered g - 1.
class FemSpace {
 public:
  FemSpace(int elements, int degree, double diffusivity)
      : elements_(elements), degree_(degree), diffusivity_(diffusivity) {
    if (elements < 2) throw DomainError("fem: need at least 2 elements");
    if (degree < 1) throw DomainError("fem: degree r must be >= 1");
    if (!(diffusivity > 0.0)) throw DomainError("fem: diffusivity must be positive");
    h_ = 1.0 / elements;
    assemble();
  }

  int elements() const noexcept { return elements_; }
  int degree() const noexcept { return degree_; }
  double mesh_width() const noexcept { return h_; }
  double diffusivity() const noexcept { return diffusivity_; }
  int unknowns() const noexcept { return elements_ * degree_ - 1; }
  double node(int g) const { return g * h_ / degree_; }
  /// K * int grad phi_i grad phi_j over interior unknowns.
  const Eigen::MatrixXd& stiffness() const noexcept { return stiffness_; }
  const Eigen::MatrixXd& mass() const noexcept { return mass_; }

  /// Lagrange basis on the reference element [0,1] at equispaced nodes.
  void shape(double xi, std::vector<double>& values, std::vector<double>* derivs = nullptr,
             std::vector<double>* second = nullptr) const {
    const int r = degree_;
    values.assign(r + 1, 0.0);
    if (derivs) derivs->assign(r + 1, 0.0);
    if (second) second->assign(r + 1, 0.0);
    for (int a = 0; a <= r; ++a) {
      const double xa = static_cast<double>(a) / r;
      double denom = 1.0;
      for (int b = 0; b <= r; ++b)
        if (b != a) denom *= xa - static_cast<double>(b) / r;
      // product of (xi - x_b), b != a, and its first two derivatives
      double p = 1.0, dp = 0.0, ddp = 0.0;
      for (int b = 0; b <= r; ++b) {
        if (b == a) continue;
        const double f = xi - static_cast<double>(b) / r;
        ddp = ddp * f + 2.0 * dp;
        dp = dp * f + p;
        p *= f;
      }
      values[a] = p / denom;
      if (derivs) (*derivs)[a] = dp / denom;
      if (second) (*second)[a] = ddp / denom;
    }
  }

  /// Value at x of a field given by interior nodal coefficients.
  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& interior, double x) const {
    int e = static_cast<int>(std::floor(x / h_));
    e = std::clamp(e, 0, elements_ - 1);
    const double xi = (x - e * h_) / h_;
    std::vector<double> v;
    shape(xi, v);
    double s = 0.0;
    for (int a = 0; a <= degree_; ++a) {
      const int g = e * degree_ + a;
      if (g == 0 || g == elements_ * degree_) continue;
      s += v[a] * interior(g - 1);
    }
    return s;
  }

  /// Composite Gauss rule with `points` nodes per element.
  QuadratureRule composite_rule(int points) const {
    QuadratureRule rule;
    for (int e = 0; e < elements_; ++e) rule.append(gauss_legendre_rule(points, e * h_, (e + 1) * h_));
    return rule;
  }

  /// int g(x) phi_i(x) dx for every interior unknown.
  Eigen::VectorXd load(const std::function<double(double)>& g, int points_per_element) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(unknowns());
    const auto& ref = gauss_legendre(points_per_element);
    std::vector<double> v;
    for (int e = 0; e < elements_; ++e) {
      for (std::size_t q = 0; q < ref.size(); ++q) {
        const double xi = 0.5 * (ref.nodes[q] + 1.0);
        const double w = 0.5 * h_ * ref.weights[q] * g(e * h_ + xi * h_);
        shape(xi, v);
        for (int a = 0; a <= degree_; ++a) {
          const int gidx = e * degree_ + a;
          if (gidx == 0 || gidx == elements_ * degree_) continue;
          out(gidx - 1) += w * v[a];
        }
      }
    }
    return out;
  }

 private:
  void assemble() {
    const int n = unknowns();
    stiffness_ = Eigen::MatrixXd::Zero(n, n);
    mass_ = Eigen::MatrixXd::Zero(n, n);
    const auto& ref = gauss_legendre(degree_ + 1);
    std::vector<double> v, dv;
    for (int e = 0; e < elements_; ++e) {
      for (std::size_t q = 0; q < ref.size(); ++q) {
        const double xi = 0.5 * (ref.nodes[q] + 1.0);
        const double w = 0.5 * ref.weights[q];
        shape(xi, v, &dv);
        for (int a = 0; a <= degree_; ++a) {
          const int ga = e * degree_ + a;
          if (ga == 0 || ga == elements_ * degree_) continue;
          for (int b = 0; b <= degree_; ++b) {
            const int gb = e * degree_ + b;
            if (gb == 0 || gb == elements_ * degree_) continue;
            mass_(ga - 1, gb - 1) += w * h_ * v[a] * v[b];
            stiffness_(ga - 1, gb - 1) += w * diffusivity_ * dv[a] * dv[b] / h_;
          }
        }
      }
    }
  }

  int elements_;
  int degree_;
  double diffusivity_;
  double h_ = 0.0;
  Eigen::MatrixXd stiffness_;
  Eigen::MatrixXd mass_;
};

enum class BackendKind { spectral, fem };

inline const char* to_string(BackendKind k) { return k == BackendKind::spectral ? "spectral" : "fem"; }

/// Modes of A: eigenvalues in nondecreasing order and the matching shapes.
class ModeSystem {
 public:
  BackendKind kind() const noexcept { return kind_; }
  int size() const noexcept { return static_cast<int>(eigenvalues_.size()); }
  double eigenvalue(int m) const { return eigenvalues_.at(m); }
  const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }
  double diffusivity() const noexcept { return diffusivity_; }
  /// Only for the FEM backend.
  const FemSpace& space() const {
    if (!space_) throw DomainError("mode system has no finite element space");
    return *space_;
  }
  /// Columns are M-orthonormal interior nodal vectors (FEM backend).
  const Eigen::MatrixXd& vectors() const noexcept { return vectors_; }

  /// Mode shape m at x. Modes are numbered from 0; spectral mode m is
  /// sqrt(2) sin((m+1) pi x).
  double shape(int m, double x) const {
    if (kind_ == BackendKind::spectral) return std::numbers::sqrt2 * std::sin((m + 1) * std::numbers::pi * x);
    return space_->evaluate(vectors_.col(m), x);
  }

  /// Quadrature rule for spatial norms: composite Gauss with r+1 points per
  /// element for FEM, and a rule exact for products of the modes otherwise.
  QuadratureRule norm_rule() const {
    if (kind_ == BackendKind::fem) return space_->composite_rule(space_->degree() + 1);
    return gauss_legendre_rule(size() + 24, 0.0, 1.0);
  }

  static ModeSystem spectral(int modes, double diffusivity) {
    if (modes < 1) throw DomainError("spectral backend: M must be >= 1");
    if (!(diffusivity > 0.0)) throw DomainError("spectral backend: diffusivity must be positive");
    ModeSystem s;
    s.kind_ = BackendKind::spectral;
    s.diffusivity_ = diffusivity;
    for (int m = 1; m <= modes; ++m) s.eigenvalues_.push_back(diffusivity * m * m * std::numbers::pi * std::numbers::pi);
    return s;
  }

  static ModeSystem fem(int elements, int degree, double diffusivity) {
    ModeSystem s;
    s.kind_ = BackendKind::fem;
    s.diffusivity_ = diffusivity;
    s.space_ = std::make_shared<const FemSpace>(elements, degree, diffusivity);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(s.space_->stiffness(), s.space_->mass());
    if (solver.info() != Eigen::Success) throw NumericalError("fem: generalized eigen-solve failed");
    s.vectors_ = solver.eigenvectors();
    s.eigenvalues_.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + solver.eigenvalues().size());
    return s;
  }

 private:
  BackendKind kind_ = BackendKind::spectral;
  double diffusivity_ = 1.0;
  std::vector<double> eigenvalues_;
  std::shared_ptr<const FemSpace> space_;
  Eigen::MatrixXd vectors_;
};

inline ModeSystem spectral_backend(int modes, double diffusivity = 1.0) {
  return ModeSystem::spectral(modes, diffusivity);
}

inline ModeSystem fem_backend(int elements, int degree, double diffusivity = 1.0) {
  return ModeSystem::fem(elements, degree, diffusivity);
}

struct RitzResult {
  Eigen::VectorXd coefficients;  // interior nodal values of R_h v
  std::string warning;           // nonempty if v violates the boundary conditions
};

/// R_h v: A(R_h v, chi) = A(v, chi) for chi in S_h. The load is formed
/// element by element as K([v chi'] - int v chi''), so only values of v are needed.
inline RitzResult ritz_projection(const FemSpace& space, const std::function<double(double)>& v) {
  RitzResult out;
  const double tol = 1e-12;
  if (std::abs(v(0.0)) > tol || std::abs(v(1.0)) > tol)
    out.warning = "ritz_projection: u0 does not vanish on the boundary";
  const int r = space.degree();
  const double h = space.mesh_width();
  const auto& ref = gauss_legendre(r + 8);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(space.unknowns());
  std::vector<double> s, ds, dds;
  for (int e = 0; e < space.elements(); ++e) {
    const double x0 = e * h;
    for (int a = 0; a <= r; ++a) {
      const int g = e * r + a;
      if (g == 0 || g == space.elements() * r) continue;
      double val = 0.0;
      space.shape(1.0, s, &ds);
      val += v(x0 + h) * ds[a] / h;
      space.shape(0.0, s, &ds);
      val -= v(x0) * ds[a] / h;
      for (std::size_t q = 0; q < ref.size(); ++q) {
        const double xi = 0.5 * (ref.nodes[q] + 1.0);
        space.shape(xi, s, &ds, &dds);
        val -= 0.5 * ref.weights[q] * h * v(x0 + xi * h) * dds[a] / (h * h);
      }
      rhs(g - 1) += space.diffusivity() * val;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(space.stiffness());
  if (llt.info() != Eigen::Success) throw NumericalError("ritz_projection: stiffness not positive definite");
  out.coefficients = llt.solve(rhs);
  return out;
}

/// <g, phi_m> for every mode.
inline std::vector<double> decompose(const ModeSystem& modes, const std::function<double(double)>& g) {
  std::vector<double> out(modes.size());
  if (modes.kind() == BackendKind::spectral) {
    // enough panels to resolve the highest mode
    const int panels = std::max(4, modes.size());
    QuadratureRule rule;
    for (int i = 0; i < panels; ++i) rule.append(gauss_legendre_rule(24, double(i) / panels, double(i + 1) / panels));
    for (int m = 0; m < modes.size(); ++m)
      out[m] = rule.integrate([&](double x) { return g(x) * modes.shape(m, x); });
  } else {
    const Eigen::VectorXd load = modes.space().load(g, modes.space().degree() + 8);
    const Eigen::VectorXd c = modes.vectors().transpose() * load;
    out.assign(c.data(), c.data() + c.size());
  }
  return out;
}

/// Coefficients of R_h u0 in the discrete modes (FEM), or <u0, phi_m> (spectral).
inline std::vector<double> initial_modes(const ModeSystem& modes, const std::function<double(double)>& u0,
                                         std::string* warning = nullptr) {
  if (modes.kind() == BackendKind::spectral) return decompose(modes, u0);
  auto ritz = ritz_projection(modes.space(), u0);
  if (warning) *warning = ritz.warning;
  const Eigen::VectorXd c = modes.vectors().transpose() * (modes.space().mass() * ritz.coefficients);
  return {c.data(), c.data() + c.size()};
}

/// sum_m values[m] phi_m(x) at each x.
inline std::vector<double> synthesize(const ModeSystem& modes, std::span<const double> values,
                                      std::span<const double> xs) {
  std::vector<double> out(xs.size(), 0.0);
  if (modes.kind() == BackendKind::fem) {
    Eigen::Map<const Eigen::VectorXd> v(values.data(), static_cast<Eigen::Index>(values.size()));
    const Eigen::VectorXd nodal = modes.vectors().leftCols(v.size()) * v;
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = modes.space().evaluate(nodal, xs[i]);
  } else {
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (std::size_t m = 0; m < values.size(); ++m) out[i] += values[m] * modes.shape(static_cast<int>(m), xs[i]);
  }
  return out;
}

}  // namespace fracdg
