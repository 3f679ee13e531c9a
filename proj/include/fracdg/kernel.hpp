#pragma once

// The fractional kernel omega_{a+1}(t) = t^a / Gamma(a+1), weakly singular
// moments against mapped Legendre polynomials, and the memory blocks that
// discretize  int_{I_n} B_a U(t) w(t) dt  for broken polynomials U.
//
// For a basis function phi = P_l on I_j (zero elsewhere) the Riemann-Liouville
// derivative B_a phi = d/dt (omega_{a+1} * phi) is, on the target I_n:
//   j = n :  omega(t - t_j) phi(t_j^+) + int_{t_j}^t omega(t-s) phi'(s) ds
//   j < n :  omega(t - t_j) phi(t_j^+) - omega(t - t_{j+1}) phi(t_{j+1}^-)
//            + int_{I_j} omega(t-s) phi'(s) ds
//          = int_{I_j} omega_a(t-s) phi(s) ds          (t outside I_j)
// Local and adjacent pairs use the first forms with singularity-exact rules;
// separated pairs use the smooth last form.

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "fracdg/error.hpp"
#include "fracdg/legendre.hpp"
#include "fracdg/mesh.hpp"
#include "fracdg/parallel.hpp"
#include "fracdg/quadrature.hpp"

namespace fracdg {

struct CoercivityConstants {
  double c_alpha;
  double d_alpha;
};

/// Coercivity and continuity constants of B_alpha:
///   c = cos(a pi/2) pi^-a |a|^-a / (1-a)^(1-a),   d = 1 / cos(a pi/2).
inline CoercivityConstants coercivity_constants(double alpha) {
  if (!(alpha > -1.0 && alpha < 0.0)) throw DomainError("alpha must lie in (-1,0)");
  const double cosine = std::cos(alpha * std::numbers::pi / 2.0);
  const double c = cosine * std::pow(std::numbers::pi, -alpha) * std::pow(-alpha, -alpha) /
                   std::pow(1.0 - alpha, 1.0 - alpha);
  return {c, 1.0 / cosine};
}

/// Order alpha in (-1,0) of the subdiffusion problem, with derived constants.
class FractionalOrder {
 public:
  explicit FractionalOrder(double alpha) : alpha_(alpha) {
    if (!(alpha > -1.0 && alpha < 0.0)) throw DomainError("FractionalOrder: alpha must lie in (-1,0)");
    const auto k = coercivity_constants(alpha);
    c_alpha_ = k.c_alpha;
    d_alpha_ = k.d_alpha;
    gamma1_ = std::tgamma(alpha + 1.0);
  }
  double alpha() const noexcept { return alpha_; }
  double c_alpha() const noexcept { return c_alpha_; }
  double d_alpha() const noexcept { return d_alpha_; }
  /// Gamma(alpha + 1).
  double gamma1() const noexcept { return gamma1_; }

 private:
  double alpha_;
  double c_alpha_;
  double d_alpha_;
  double gamma1_;
};

/// omega_{a+1+shift}(t) = t^(a+shift) / Gamma(a+1+shift), shift in {0,1}.
inline double omega_weight(const FractionalOrder& order, int beta_shift, double t) {
  if (!(t > 0.0)) throw DomainError("omega_weight: t must be positive");
  if (beta_shift != 0 && beta_shift != 1) throw DomainError("omega_weight: beta_shift must be 0 or 1");
  const double e = order.alpha() + beta_shift;
  return std::pow(t, e) / std::tgamma(e + 1.0);
}

enum class MomentBasis { legendre, monomial };

namespace detail {

inline void basis_values(MomentBasis basis, double s, double a, double b, std::span<double> out) {
  if (basis == MomentBasis::legendre) {
    legendre_values(to_reference(s, a, b), out);
  } else {
    const double y = (s - a) / (b - a);
    double v = 1.0;
    for (auto& o : out) {
      o = v;
      v *= y;
    }
  }
}

inline int moment_panel_points(int kmax) { return 14 + (kmax + 1) / 2; }

}  // namespace detail

/// mu_k(t) = int_a^min(b,t) (t-s)^alpha B_k(s) ds for k = 0..kmax, where B_k is
/// the Legendre polynomial mapped to [a,b] (or ((s-a)/(b-a))^k).
inline std::vector<double> frac_moments(double a, double b, double t, int kmax, double alpha,
                                        MomentBasis basis = MomentBasis::legendre) {
  if (!(b > a)) throw DomainError("frac_moments: empty interval");
  if (!(t > a)) throw DomainError("frac_moments: t must exceed the left endpoint");
  if (!(alpha > -1.0)) throw DomainError("frac_moments: alpha must exceed -1");
  check_degree(kmax);
  std::vector<double> mu(kmax + 1, 0.0);
  std::vector<double> vals(kmax + 1);
  QuadratureRule rule;
  bool weighted = true;
  if (t <= b) {
    rule = jacobi_weighted_rule(kmax / 2 + 2, 0.0, alpha, a, t);
  } else {
    rule = graded_rule(a, b, t, detail::moment_panel_points(kmax));
    weighted = false;
  }
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const double s = rule.nodes[q];
    double w = rule.weights[q];
    if (!weighted) w *= std::pow(t - s, alpha);
    detail::basis_values(basis, s, a, b, vals);
    for (int k = 0; k <= kmax; ++k) mu[k] += w * vals[k];
  }
  return mu;
}

inline double frac_moment(double a, double b, double t, int k, double alpha,
                          MomentBasis basis = MomentBasis::legendre) {
  return frac_moments(a, b, t, k, alpha, basis)[k];
}

/// Integrals int_a^b (t-c)^alpha P_k(t) dt, k = 0..kmax, for c <= a (mapped
/// Legendre on [a,b]); the reflection of frac_moments.
inline std::vector<double> reverse_moments(double a, double b, double c, int kmax, double alpha) {
  auto mu = frac_moments(a, b, a + b - c, kmax, alpha);
  for (int k = 1; k <= kmax; k += 2) mu[k] = -mu[k];
  return mu;
}

/// Tuning of the memory-block evaluation.
struct KernelOptions {
  /// Pairs with gap >= separation * max(k_n, k_j) count as far field.
  double separation = 2.0;
  /// Far-field tensor Gauss-Legendre uses max degree + far_padding points.
  int far_padding = 4;
  /// false: far-field blocks also use the graded (roundoff-accurate) rules.
  bool far_field_quadrature = true;
  /// Base points per panel for graded composite rules (plus half the degree).
  int graded_points = 12;
  /// Points per panel in the angular direction of the adjacent-pair split.
  int duffy_points = 16;
};

enum class BlockKind { local, adjacent, near, far };

/// Discretized memory interaction of source interval j with target interval n.
struct MemoryBlock {
  int source = 0;
  int target = 0;
  BlockKind kind = BlockKind::local;
  /// (p_n+1) x (p_j+1): entry (i,l) = int_{I_n} B_a[P_l on I_j](t) P_i(t) dt.
  Eigen::MatrixXd matrix;
  /// int_{I_n} omega_{a+1}(t - t_j) P_i(t) dt: response to a unit jump at
  /// the source's left node.
  Eigen::VectorXd jump_column;
};

/// Builds memory blocks for one fractional order. Thread-safe; reference
/// local blocks are cached per degree.
class KernelAssembler {
 public:
  explicit KernelAssembler(FractionalOrder order, KernelOptions options = {})
      : order_(order), options_(options) {}

  const FractionalOrder& order() const noexcept { return order_; }
  const KernelOptions& options() const noexcept { return options_; }

  /// Block for source [sa,sb] of degree pj and target [ta,tb] of degree pn;
  /// requires sb <= ta or identical intervals.
  MemoryBlock block(double sa, double sb, int pj, double ta, double tb, int pn) const {
    check_degree(pj);
    check_degree(pn);
    MemoryBlock out;
    if (sa == ta && sb == tb) {
      if (pj != pn) throw DomainError("memory block: local pair must share a degree");
      out.kind = BlockKind::local;
      local_block(ta, tb, pn, out);
    } else if (sb == ta) {
      out.kind = BlockKind::adjacent;
      adjacent_block(sa, sb, pj, ta, tb, pn, out);
    } else if (sb < ta) {
      const double gap = ta - sb;
      const bool far = options_.far_field_quadrature &&
                       gap >= options_.separation * std::max(tb - ta, sb - sa);
      out.kind = far ? BlockKind::far : BlockKind::near;
      separated_block(sa, sb, pj, ta, tb, pn, far, out);
    } else {
      throw DomainError("memory block: source must not lie after the target");
    }
    return out;
  }

  MemoryBlock block(const TimeMesh& mesh, int j, int n) const {
    if (j < 0 || n >= mesh.intervals() || j > n) throw DomainError("memory block: need 0 <= j <= n < N");
    auto b = block(mesh.left(j), mesh.right(j), mesh.degree(j), mesh.left(n), mesh.right(n), mesh.degree(n));
    b.source = j;
    b.target = n;
    return b;
  }

 private:
  double alpha() const noexcept { return order_.alpha(); }

  // Block on [0,1] for degree p; the block on an interval of length h is h^(a+1) times it.
  struct ReferenceLocal {
    Eigen::MatrixXd matrix;
    Eigen::VectorXd jump;
  };

  const ReferenceLocal& reference_local(int p) const {
    std::lock_guard lock(cache_mutex_);
    auto it = local_cache_.find(p);
    if (it != local_cache_.end()) return it->second;
    const double a = alpha();
    const double g1 = order_.gamma1();
    ReferenceLocal ref;
    ref.matrix = Eigen::MatrixXd::Zero(p + 1, p + 1);
    ref.jump = Eigen::VectorXd::Zero(p + 1);
    std::vector<double> vals(p + 1), ders(p + 1);
    // int_0^1 tau^a p_i(tau) dtau
    const auto jump_rule = jacobi_weighted_rule(p / 2 + 2, a, 0.0, 0.0, 1.0);
    for (std::size_t q = 0; q < jump_rule.size(); ++q) {
      legendre_values(2.0 * jump_rule.nodes[q] - 1.0, vals);
      for (int i = 0; i <= p; ++i) ref.jump(i) += jump_rule.weights[q] * vals[i];
    }
    // int_0^1 p_i(tau) tau^(a+1) int_0^1 (1-x)^a p_l'(tau x) dx dtau
    const auto inner = jacobi_weighted_rule(p / 2 + 2, 0.0, a, 0.0, 1.0);
    const auto outer = jacobi_weighted_rule(p + 2, a + 1.0, 0.0, 0.0, 1.0);
    Eigen::VectorXd g(p + 1);
    for (std::size_t qo = 0; qo < outer.size(); ++qo) {
      const double tau = outer.nodes[qo];
      g.setZero();
      for (std::size_t qi = 0; qi < inner.size(); ++qi) {
        legendre_values_and_derivatives(2.0 * tau * inner.nodes[qi] - 1.0, vals, ders);
        for (int l = 0; l <= p; ++l) g(l) += inner.weights[qi] * 2.0 * ders[l];
      }
      legendre_values(2.0 * tau - 1.0, vals);
      for (int i = 0; i <= p; ++i)
        for (int l = 0; l <= p; ++l) ref.matrix(i, l) += outer.weights[qo] * vals[i] * g(l);
    }
    for (int l = 0; l <= p; ++l) ref.matrix.col(l) += ((l % 2) ? -1.0 : 1.0) * ref.jump;
    ref.matrix /= g1;
    ref.jump /= g1;
    return local_cache_.emplace(p, std::move(ref)).first->second;
  }

  void local_block(double ta, double tb, int p, MemoryBlock& out) const {
    const auto& ref = reference_local(p);
    const double scale = std::pow(tb - ta, alpha() + 1.0);
    out.matrix = scale * ref.matrix;
    out.jump_column = scale * ref.jump;
  }

  Eigen::VectorXd target_moments(double ta, double tb, int pn, double c) const {
    // int_{ta}^{tb} (t-c)^a P_i(t) dt / Gamma(a+1), c < ta
    const auto rule = graded_rule(ta, tb, c, options_.graded_points + (pn + 1) / 2 + 2);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(pn + 1);
    std::vector<double> vals(pn + 1);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      legendre_values(to_reference(rule.nodes[q], ta, tb), vals);
      const double w = rule.weights[q] * std::pow(rule.nodes[q] - c, alpha());
      for (int i = 0; i <= pn; ++i) m(i) += w * vals[i];
    }
    return m / order_.gamma1();
  }

  void adjacent_block(double sa, double sb, int pj, double ta, double tb, int pn, MemoryBlock& out) const {
    const double a = alpha();
    const double hj = sb - sa;
    const double hn = tb - ta;
    const double corner = ta;
    // jump terms at the source's left node (t - sa) and at the shared node (t - ta)
    const Eigen::VectorXd left_jump = target_moments(ta, tb, pn, sa);
    const double scale = std::pow(hn, a + 1.0);
    Eigen::VectorXd shared_jump = reference_local(pn).jump * scale;
    out.jump_column = left_jump;
    out.matrix = Eigen::MatrixXd::Zero(pn + 1, pj + 1);
    for (int l = 0; l <= pj; ++l) {
      out.matrix.col(l) += ((l % 2) ? -1.0 : 1.0) * left_jump;
      out.matrix.col(l) -= shared_jump;
    }
    // derivative term: int_{I_n} P_i(t) int_{I_j} omega(t-s) P_l'(s) ds dt,
    // split along the diagonal u/hn = v/hj of the (u,v) = (t-ta, ta-s) rectangle.
    const auto xi_rule = jacobi_weighted_rule((pn + pj) / 2 + 2, a + 1.0, 0.0, 0.0, 1.0);
    const int eta_points = options_.duffy_points + (pn + pj + 1) / 2;
    const auto eta1 = graded_rule(0.0, 1.0, -hn / hj, eta_points);
    const auto eta2 = graded_rule(0.0, 1.0, -hj / hn, eta_points);
    std::vector<double> qv(pn + 1), rv(pj + 1), rd(pj + 1);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(pn + 1, pj + 1);
    auto accumulate = [&](double t, double s, double w) {
      legendre_values(to_reference(t, ta, tb), qv);
      legendre_values_and_derivatives(to_reference(s, sa, sb), rv, rd);
      for (int i = 0; i <= pn; ++i)
        for (int l = 0; l <= pj; ++l) acc(i, l) += w * qv[i] * rd[l];
    };
    for (std::size_t e = 0; e < eta1.size(); ++e) {
      const double eta = eta1.nodes[e];
      const double we = eta1.weights[e] * std::pow(hn + hj * eta, a);
      for (std::size_t x = 0; x < xi_rule.size(); ++x) {
        const double xi = xi_rule.nodes[x];
        accumulate(corner + hn * xi, corner - hj * xi * eta, we * xi_rule.weights[x]);
      }
    }
    for (std::size_t e = 0; e < eta2.size(); ++e) {
      const double eta = eta2.nodes[e];
      const double we = eta2.weights[e] * std::pow(hj + hn * eta, a);
      for (std::size_t x = 0; x < xi_rule.size(); ++x) {
        const double xi = xi_rule.nodes[x];
        accumulate(corner + hn * xi * eta, corner - hj * xi, we * xi_rule.weights[x]);
      }
    }
    // Jacobian hn*hj, derivative scale 2/hj, kernel 1/Gamma(a+1)
    out.matrix += acc * (hn * 2.0 / order_.gamma1());
  }

  void separated_block(double sa, double sb, int pj, double ta, double tb, int pn, bool far,
                       MemoryBlock& out) const {
    const double a = alpha();
    QuadratureRule trule, srule;
    if (far) {
      const int npts = std::max(pn, pj) + options_.far_padding;
      trule = gauss_legendre_rule(npts, ta, tb);
      srule = gauss_legendre_rule(npts, sa, sb);
    } else {
      const int npts = options_.graded_points + (std::max(pn, pj) + 1) / 2 + 2;
      trule = graded_rule(ta, tb, sb, npts);
      srule = graded_rule(sa, sb, ta, npts);
    }
    // omega_a(x) = x^(a-1) / Gamma(a)
    const double inv_gamma = 1.0 / std::tgamma(a);
    Eigen::MatrixXd tv(pn + 1, trule.size());
    Eigen::MatrixXd sv(pj + 1, srule.size());
    std::vector<double> vals(std::max(pn, pj) + 1);
    for (std::size_t q = 0; q < trule.size(); ++q) {
      legendre_values(to_reference(trule.nodes[q], ta, tb), std::span(vals).first(pn + 1));
      for (int i = 0; i <= pn; ++i) tv(i, q) = vals[i] * trule.weights[q];
    }
    for (std::size_t q = 0; q < srule.size(); ++q) {
      legendre_values(to_reference(srule.nodes[q], sa, sb), std::span(vals).first(pj + 1));
      for (int l = 0; l <= pj; ++l) sv(l, q) = vals[l] * srule.weights[q];
    }
    Eigen::MatrixXd kernel(trule.size(), srule.size());
    for (std::size_t p = 0; p < trule.size(); ++p)
      for (std::size_t q = 0; q < srule.size(); ++q)
        kernel(p, q) = std::pow(trule.nodes[p] - srule.nodes[q], a - 1.0) * inv_gamma;
    out.matrix = tv * kernel * sv.transpose();
    if (far) {
      out.jump_column = Eigen::VectorXd::Zero(pn + 1);
      for (std::size_t q = 0; q < trule.size(); ++q)
        out.jump_column += tv.col(q) * std::pow(trule.nodes[q] - sa, a) / order_.gamma1();
    } else {
      out.jump_column = target_moments(ta, tb, pn, sa);
    }
  }

  FractionalOrder order_;
  KernelOptions options_;
  mutable std::mutex cache_mutex_;
  mutable std::map<int, ReferenceLocal> local_cache_;
};

inline MemoryBlock memory_block(const TimeMesh& mesh, int j, int n, const FractionalOrder& order,
                                const KernelOptions& options = {}) {
  return KernelAssembler(order, options).block(mesh, j, n);
}

/// All blocks (j <= n) of a mesh, stored in lower-triangular order.
class MemoryTable {
 public:
  MemoryTable(const TimeMesh& mesh, const FractionalOrder& order, const KernelOptions& options = {},
              int threads = 1)
      : mesh_(mesh), order_(order) {
    const int N = mesh.intervals();
    blocks_.resize(static_cast<std::size_t>(N) * (N + 1) / 2);
    KernelAssembler assembler(order, options);
    parallel_for(static_cast<int>(blocks_.size()), threads, [&](int idx) {
      // invert idx = n(n+1)/2 + j
      int n = static_cast<int>((std::sqrt(8.0 * idx + 1.0) - 1.0) / 2.0);
      while (n * (n + 1) / 2 > idx) --n;
      while ((n + 1) * (n + 2) / 2 <= idx) ++n;
      const int j = idx - n * (n + 1) / 2;
      blocks_[idx] = assembler.block(mesh, j, n);
    });
  }

  const TimeMesh& mesh() const noexcept { return mesh_; }
  const FractionalOrder& order() const noexcept { return order_; }
  const MemoryBlock& block(int j, int n) const {
    return blocks_.at(static_cast<std::size_t>(n) * (n + 1) / 2 + j);
  }

  /// int_0^T B_a v(t) w(t) dt for broken polynomials given as flat Legendre
  /// coefficient arrays (layout of TimeMesh::offset).
  double form(std::span<const double> v, std::span<const double> w) const {
    double total = 0.0;
    for (int n = 0; n < mesh_.intervals(); ++n) {
      const int pn = mesh_.degree(n);
      Eigen::Map<const Eigen::VectorXd> wn(w.data() + mesh_.offset(n), pn + 1);
      for (int j = 0; j <= n; ++j) {
        Eigen::Map<const Eigen::VectorXd> vj(v.data() + mesh_.offset(j), mesh_.degree(j) + 1);
        total += wn.dot(block(j, n).matrix * vj);
      }
    }
    return total;
  }

 private:
  TimeMesh mesh_;
  FractionalOrder order_;
  std::vector<MemoryBlock> blocks_;
};

/// int_0^T v w dt for flat Legendre coefficient arrays.
inline double l2_inner(const TimeMesh& mesh, std::span<const double> v, std::span<const double> w) {
  double total = 0.0;
  for (int n = 0; n < mesh.intervals(); ++n) {
    const int off = mesh.offset(n);
    for (int k = 0; k <= mesh.degree(n); ++k)
      total += v[off + k] * w[off + k] * 0.5 * mesh.step(n) * legendre_norm_squared(k);
  }
  return total;
}

struct CoercivityCheck {
  double form = 0.0;   // int_0^T B_a v v dt
  double lower = 0.0;  // c_a T^a int_0^T v^2 dt
  bool holds = true;
};

/// Lower bound int B_a v v >= c_a T^a int v^2 for a broken polynomial v.
inline CoercivityCheck coercivity_check(const MemoryTable& table, std::span<const double> v, double relative_slack = 1e-10) {
  CoercivityCheck out;
  const auto& mesh = table.mesh();
  out.form = table.form(v, v);
  out.lower = table.order().c_alpha() * std::pow(mesh.final_time(), table.order().alpha()) * l2_inner(mesh, v, v);
  out.holds = out.form >= out.lower * (1.0 - relative_slack);
  return out;
}

struct ContinuityCheck {
  double cross = 0.0;  // int_0^T B_a v w dt
  double bound = 0.0;  // d_a sqrt(int B_a v v * int B_a w w)
  bool holds = true;
};

/// Upper bound |int B_a v w| <= d_a (int B_a v v)^(1/2) (int B_a w w)^(1/2).
inline ContinuityCheck continuity_check(const MemoryTable& table, std::span<const double> v, std::span<const double> w,
                                        double relative_slack = 1e-10) {
  ContinuityCheck out;
  out.cross = table.form(v, w);
  const double vv = table.form(v, v), ww = table.form(w, w);
  out.bound = table.order().d_alpha() * std::sqrt(std::max(vv, 0.0) * std::max(ww, 0.0));
  out.holds = std::abs(out.cross) <= out.bound * (1.0 + relative_slack) + 1e-300;
  return out;
}

/// Pointwise B_a v(t) for a broken polynomial v, via
///   omega(t) v(0+) + sum_{0<t_i<t} omega(t-t_i)[v]^i + int_0^t omega(t-s) v'(s) ds.
/// Requires t not equal to a node where v jumps.
inline double riemann_liouville_derivative(const TimeMesh& mesh, std::span<const double> coeffs,
                                           const FractionalOrder& order, double t) {
  if (!(t > 0.0) || t > mesh.final_time()) throw DomainError("riemann_liouville_derivative: t outside (0,T]");
  const double a = order.alpha();
  double total = 0.0;
  double left_trace = 0.0;
  for (int j = 0; j < mesh.intervals() && mesh.left(j) < t; ++j) {
    const int p = mesh.degree(j);
    std::span<const double> c = coeffs.subspan(mesh.offset(j), p + 1);
    const double right_trace_of_left = legendre_series(c, -1.0);
    total += std::pow(t - mesh.left(j), a) * (right_trace_of_left - left_trace);
    left_trace = legendre_series(c, 1.0);
    if (p == 0) continue;
    auto d = legendre_derivative(c);
    const double scale = 2.0 / mesh.step(j);
    const auto mu = frac_moments(mesh.left(j), mesh.right(j), t, p - 1, a);
    for (int k = 0; k < p; ++k) total += scale * d[k] * mu[k];
  }
  return total / order.gamma1();
}

}  // namespace fracdg
