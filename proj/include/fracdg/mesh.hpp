#pragma once

// Time partitions 0 = t_0 < ... < t_N = T with a polynomial degree per
// subinterval. Intervals are indexed from 0: interval n is [t_n, t_{n+1}].

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "fracdg/error.hpp"
#include "fracdg/legendre.hpp"

namespace fracdg {

enum class MeshFamily { graded, geometric, uniform, manual };

inline const char* to_string(MeshFamily f) {
  switch (f) {
    case MeshFamily::graded: return "graded";
    case MeshFamily::geometric: return "geometric";
    case MeshFamily::uniform: return "uniform";
    case MeshFamily::manual: return "manual";
  }
  return "?";
}

/// Construction parameters retained for reporting.
struct MeshFamilyInfo {
  MeshFamily kind = MeshFamily::manual;
  double gamma = 1.0;     // graded
  double delta = 0.0;     // geometric refinement factor
  int levels = 0;         // geometric L
  double first_coarse = 0.0;  // geometric T_1
  double mu = 0.0;        // geometric degree slope
  int coarse_count = 1;   // geometric K
};

class TimeMesh {
 public:
  TimeMesh(std::vector<double> nodes, std::vector<int> degrees, MeshFamilyInfo info = {},
           bool first_interval_linear = false)
      : nodes_(std::move(nodes)), degrees_(std::move(degrees)), info_(info),
        first_interval_linear_(first_interval_linear) {
    if (nodes_.size() < 2) throw DomainError("TimeMesh: need at least one interval");
    if (nodes_.front() != 0.0) throw DomainError("TimeMesh: first node must be 0");
    if (degrees_.size() + 1 != nodes_.size())
      throw DomainError("TimeMesh: degree vector length must equal the number of intervals");
    for (std::size_t n = 0; n + 1 < nodes_.size(); ++n) {
      if (!(nodes_[n + 1] > nodes_[n]))
        throw DomainError("TimeMesh: nodes must be strictly increasing (interval " + std::to_string(n) + ")");
    }
    for (int p : degrees_) check_degree(p);
  }

  int intervals() const noexcept { return static_cast<int>(degrees_.size()); }
  double final_time() const noexcept { return nodes_.back(); }
  double node(int n) const { return nodes_.at(n); }
  double left(int n) const { return nodes_.at(n); }
  double right(int n) const { return nodes_.at(n + 1); }
  double step(int n) const { return nodes_.at(n + 1) - nodes_.at(n); }
  int degree(int n) const { return degrees_.at(n); }
  int max_degree() const { return *std::max_element(degrees_.begin(), degrees_.end()); }
  std::span<const double> nodes() const noexcept { return nodes_; }
  std::span<const int> degrees() const noexcept { return degrees_; }
  const MeshFamilyInfo& info() const noexcept { return info_; }
  bool first_interval_linear() const noexcept { return first_interval_linear_; }

  /// Interval containing t; nodes belong to the interval on their left
  /// (t = 0 belongs to interval 0).
  int locate(double t) const {
    if (t < 0.0 || t > final_time()) throw DomainError("TimeMesh::locate: t outside [0,T]");
    auto it = std::lower_bound(nodes_.begin() + 1, nodes_.end(), t);
    return static_cast<int>(it - nodes_.begin()) - 1;
  }

  /// Offset of interval n in a flat per-interval coefficient array.
  int offset(int n) const {
    int off = 0;
    for (int i = 0; i < n; ++i) off += degrees_[i] + 1;
    return off;
  }

 private:
  std::vector<double> nodes_;
  std::vector<int> degrees_;
  MeshFamilyInfo info_;
  bool first_interval_linear_;
};

/// Graded mesh t_n = (n k)^gamma with k = T^(1/gamma)/N. With
/// first_interval_linear the degree vector is (1, p, ..., p).
inline TimeMesh graded_mesh(double T, int N, double gamma, int p, bool first_interval_linear) {
  if (!(T > 0.0)) throw DomainError("graded_mesh: T must be positive");
  if (N < 1) throw DomainError("graded_mesh: N must be >= 1");
  if (!(gamma >= 1.0)) throw DomainError("graded_mesh: gamma must be >= 1");
  if (p < 0) throw DomainError("graded_mesh: p must be >= 0");
  const double k = std::pow(T, 1.0 / gamma) / N;
  std::vector<double> nodes(N + 1);
  for (int n = 0; n <= N; ++n) nodes[n] = std::pow(n * k, gamma);
  nodes[N] = T;
  std::vector<int> degrees(N, p);
  if (first_interval_linear) degrees[0] = 1;
  MeshFamilyInfo info;
  info.kind = MeshFamily::graded;
  info.gamma = gamma;
  TimeMesh mesh(std::move(nodes), std::move(degrees), info, first_interval_linear);
  for (int n = 1; n < N; ++n) {
    // nondecreasing steps, required by the error analysis
    if (mesh.step(n) < mesh.step(n - 1) * (1.0 - 1e-12))
      throw NumericalError("graded_mesh: step sizes decreased");
  }
  return mesh;
}

inline TimeMesh uniform_mesh(double T, int N, int p) {
  if (!(T > 0.0)) throw DomainError("uniform_mesh: T must be positive");
  if (N < 1) throw DomainError("uniform_mesh: N must be >= 1");
  std::vector<double> nodes(N + 1);
  for (int n = 0; n <= N; ++n) nodes[n] = T * n / N;
  nodes[N] = T;
  MeshFamilyInfo info;
  info.kind = MeshFamily::uniform;
  return TimeMesh(std::move(nodes), std::vector<int>(N, p), info);
}

struct GeometricMeshOptions {
  bool degree_floor = true;  // raise floor(mu*n) to at least 1
};

/// Geometric mesh: the first coarse interval (0,T_1) is split at
/// t_n = delta^(L+1-n) T_1, n = 1..L+1, with degrees floor(mu n). Any
/// remainder (T_1,T) is cut into uniform coarse intervals of width <= T_1
/// carrying degree p_{L+1}.
inline TimeMesh geometric_mesh(double T, double T1, double delta, int L, double mu, int coarse_count = 1,
                               GeometricMeshOptions opts = {}) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("geometric_mesh: delta must lie in (0,1)");
  if (!(T1 > 0.0 && T1 <= T)) throw DomainError("geometric_mesh: need 0 < T_1 <= T");
  if (L < 0) throw DomainError("geometric_mesh: L must be >= 0");
  if (!(mu > 0.0)) throw DomainError("geometric_mesh: mu must be positive");
  if (coarse_count < 1) throw DomainError("geometric_mesh: coarse_count must be >= 1");
  std::vector<double> nodes{0.0};
  std::vector<int> degrees;
  auto degree_of = [&](int n) {
    int p = static_cast<int>(std::floor(mu * n));
    if (opts.degree_floor) p = std::max(p, 1);
    return p;
  };
  for (int n = 1; n <= L + 1; ++n) {
    nodes.push_back(std::pow(delta, L + 1 - n) * T1);
    degrees.push_back(degree_of(n));
  }
  nodes.back() = T1;
  int extra = 0;
  if (T1 < T) {
    extra = std::max(coarse_count - 1, static_cast<int>(std::ceil((T - T1) / T1 - 1e-12)));
    for (int i = 1; i <= extra; ++i) {
      nodes.push_back(T1 + (T - T1) * i / extra);
      degrees.push_back(degree_of(L + 1));
    }
    nodes.back() = T;
  }
  MeshFamilyInfo info;
  info.kind = MeshFamily::geometric;
  info.delta = delta;
  info.levels = L;
  info.first_coarse = T1;
  info.mu = mu;
  info.coarse_count = 1 + extra;
  return TimeMesh(std::move(nodes), std::move(degrees), info);
}

/// Geometric refinement ratio k_n / t_{n-1} = (1-delta)/delta.
inline double geometric_ratio(double delta) { return (1.0 - delta) / delta; }

/// Sorted unique evaluation points {t_{j-1} + n k_j / m}.
inline std::vector<double> fine_grid(const TimeMesh& mesh, int m) {
  if (m < 1) throw DomainError("fine_grid: m must be >= 1");
  std::vector<double> pts;
  pts.reserve(static_cast<std::size_t>(mesh.intervals()) * m + 1);
  for (int j = 0; j < mesh.intervals(); ++j) {
    for (int n = 0; n < m; ++n) pts.push_back(mesh.left(j) + n * mesh.step(j) / m);
  }
  pts.push_back(mesh.final_time());
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

/// Temporal degrees of freedom per mode: sum_n (p_n + 1).
inline int dof_count(const TimeMesh& mesh) {
  int total = 0;
  for (int p : mesh.degrees()) total += p + 1;
  return total;
}

}  // namespace fracdg
