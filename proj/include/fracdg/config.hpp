#pragma once

// Run configuration: INI-style text with [section] headers, `key = value`
// lines and whole-line comments starting with '#' or ';'. Lists are
// comma-separated. Every key is optional except problem.alpha; unknown
// sections or keys are rejected so typos do not pass silently.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fracdg/analysis.hpp"
#include "fracdg/error.hpp"
#include "fracdg/mesh.hpp"
#include "fracdg/problems.hpp"

namespace fracdg {

/// Bounds checked after a study; unset bounds are not checked.
struct ExpectGates {
  std::optional<double> min_rate, max_rate;
  std::optional<double> max_error;
  std::optional<double> min_b, max_b;
  std::optional<double> best_delta_low, best_delta_high;
  std::optional<double> r2_min;

  bool any() const {
    return min_rate || max_rate || max_error || min_b || max_b || best_delta_low || best_delta_high || r2_min;
  }
  bool operator==(const ExpectGates&) const = default;
};

struct RunConfig {
  // [problem]
  std::string problem = "paper_example";  // paper_example | power | custom
  std::optional<double> alpha;
  double nu = 1.0;
  int wavenumber = 1;
  std::string components;  // custom: "k:coef:exponent, ..."; exponent may be alpha+c
  double diffusivity = 1.0;
  double final_time = 1.0;

  // [mesh]
  std::string family = "graded";  // graded | geometric | uniform | manual
  int N = 18;
  double gamma = 1.0;
  int p = 1;
  std::string first_interval_linear = "false";  // auto | true | false
  double delta = 0.24;
  int L = 3;
  double mu = 1.0;
  double T1 = 1.0;
  int coarse_count = 1;
  bool degree_floor = true;
  std::vector<double> nodes;
  std::vector<int> degrees;

  // [study]
  std::vector<double> gammas{1.0};
  std::vector<int> ps{1};
  std::vector<int> Ns{18, 27, 36, 72};
  std::vector<double> deltas{0.24};
  std::vector<int> Ls{3, 4, 5, 6, 7};
  std::vector<double> alphas{-0.3, -0.5, -0.7};

  // [backend]
  std::string backend = "spectral";
  int modes = 0;
  int elements = 64;
  int r = 2;

  // [error]
  int m = 10;
  bool two_sided = false;

  // [kernel]
  double separation = 2.0;
  int far_padding = 4;
  bool far_field_quadrature = true;
  int graded_points = 12;
  int duffy_points = 16;

  // [diagnostics]
  bool stability_report = false;
  bool coercivity_check = false;

  // [output]
  std::string out_dir = "out";
  std::string stem = "run";
  bool timing = true;

  // [run]
  std::uint64_t seed = 1;
  int threads = 0;  // 0: FRACDG_THREADS or hardware concurrency

  ExpectGates expect;

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto t = trim(v);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) throw ConfigError(key, "not a number: '" + v + "'");
  return x;
}

inline long long parse_integer(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto t = trim(v);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) throw ConfigError(key, "not an integer: '" + v + "'");
  return x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  const auto t = trim(v);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key, "not a boolean: '" + v + "'");
}

// Shortest representation that reads back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_floating_point_v<T>) s += format_double(v[i]);
    else s += std::to_string(v[i]);
  }
  return s;
}

}  // namespace detail

inline void validate(const RunConfig& c);

/// Parses config text. `origin` is used in messages only.
inline RunConfig parse_config(const std::string& text, const std::string& origin = "<config>") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("syntax", origin + " line " + std::to_string(e.line()) + ": " + e.message());
  }
  using namespace detail;
  RunConfig c;
  static const std::map<std::string, std::set<std::string>> allowed{
      {"problem", {"name", "alpha", "nu", "wavenumber", "components", "diffusivity", "final_time"}},
      {"mesh", {"family", "N", "gamma", "p", "first_interval_linear", "delta", "L", "mu", "T1", "coarse_count",
                "degree_floor", "nodes", "degrees"}},
      {"study", {"gammas", "ps", "Ns", "deltas", "Ls", "alphas"}},
      {"backend", {"kind", "modes", "elements", "r"}},
      {"error", {"m", "two_sided"}},
      {"kernel", {"separation", "far_padding", "far_field_quadrature", "graded_points", "duffy_points"}},
      {"diagnostics", {"stability_report", "coercivity_check"}},
      {"output", {"dir", "stem", "timing"}},
      {"run", {"seed", "threads"}},
      {"expect", {"min_rate", "max_rate", "max_error", "min_b", "max_b", "best_delta_low", "best_delta_high", "r2_min"}},
  };
  for (const auto& [section, body] : tree) {
    auto it = allowed.find(section);
    if (it == allowed.end()) {
      if (!body.data().empty()) throw ConfigError(section, "key outside any section");
      throw ConfigError(section, "unknown section");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError(section + "." + key, "unknown key");
      const std::string full = section + "." + key;
      const std::string v = trim(value.data());
      auto dbl = [&] { return parse_double(full, v); };
      auto integer = [&] { return static_cast<int>(parse_integer(full, v)); };
      auto boolean = [&] { return parse_bool(full, v); };
      auto dlist = [&] {
        std::vector<double> out;
        for (const auto& s : split_list(v)) out.push_back(parse_double(full, s));
        return out;
      };
      auto ilist = [&] {
        std::vector<int> out;
        for (const auto& s : split_list(v)) out.push_back(static_cast<int>(parse_integer(full, s)));
        return out;
      };
      if (section == "problem") {
        if (key == "name") c.problem = v;
        else if (key == "alpha") c.alpha = dbl();
        else if (key == "nu") c.nu = dbl();
        else if (key == "wavenumber") c.wavenumber = integer();
        else if (key == "components") c.components = v;
        else if (key == "diffusivity") c.diffusivity = dbl();
        else if (key == "final_time") c.final_time = dbl();
      } else if (section == "mesh") {
        if (key == "family") c.family = v;
        else if (key == "N") c.N = integer();
        else if (key == "gamma") c.gamma = dbl();
        else if (key == "p") c.p = integer();
        else if (key == "first_interval_linear") c.first_interval_linear = v;
        else if (key == "delta") c.delta = dbl();
        else if (key == "L") c.L = integer();
        else if (key == "mu") c.mu = dbl();
        else if (key == "T1") c.T1 = dbl();
        else if (key == "coarse_count") c.coarse_count = integer();
        else if (key == "degree_floor") c.degree_floor = boolean();
        else if (key == "nodes") c.nodes = dlist();
        else if (key == "degrees") c.degrees = ilist();
      } else if (section == "study") {
        if (key == "gammas") c.gammas = dlist();
        else if (key == "ps") c.ps = ilist();
        else if (key == "Ns") c.Ns = ilist();
        else if (key == "deltas") c.deltas = dlist();
        else if (key == "Ls") c.Ls = ilist();
        else if (key == "alphas") c.alphas = dlist();
      } else if (section == "backend") {
        if (key == "kind") c.backend = v;
        else if (key == "modes") c.modes = integer();
        else if (key == "elements") c.elements = integer();
        else if (key == "r") c.r = integer();
      } else if (section == "error") {
        if (key == "m") c.m = integer();
        else if (key == "two_sided") c.two_sided = boolean();
      } else if (section == "kernel") {
        if (key == "separation") c.separation = dbl();
        else if (key == "far_padding") c.far_padding = integer();
        else if (key == "far_field_quadrature") c.far_field_quadrature = boolean();
        else if (key == "graded_points") c.graded_points = integer();
        else if (key == "duffy_points") c.duffy_points = integer();
      } else if (section == "diagnostics") {
        if (key == "stability_report") c.stability_report = boolean();
        else if (key == "coercivity_check") c.coercivity_check = boolean();
      } else if (section == "output") {
        if (key == "dir") c.out_dir = v;
        else if (key == "stem") c.stem = v;
        else if (key == "timing") c.timing = boolean();
      } else if (section == "run") {
        if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_integer(full, v));
        else if (key == "threads") c.threads = integer();
      } else if (section == "expect") {
        auto& e = c.expect;
        if (key == "min_rate") e.min_rate = dbl();
        else if (key == "max_rate") e.max_rate = dbl();
        else if (key == "max_error") e.max_error = dbl();
        else if (key == "min_b") e.min_b = dbl();
        else if (key == "max_b") e.max_b = dbl();
        else if (key == "best_delta_low") e.best_delta_low = dbl();
        else if (key == "best_delta_high") e.best_delta_high = dbl();
        else if (key == "r2_min") e.r2_min = dbl();
      }
    }
  }
  validate(c);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path, "cannot open config file");
  std::ostringstream os;
  os << is.rdbuf();
  return parse_config(os.str(), path);
}

/// Range checks; throws ConfigError naming the key.
inline void validate(const RunConfig& c) {
  auto in_alpha_range = [](double a) { return a > -1.0 && a < 0.0; };
  if (!c.alpha) throw ConfigError("problem.alpha", "missing required key");
  if (!in_alpha_range(*c.alpha)) throw ConfigError("problem.alpha", "must lie in (-1,0)");
  for (double a : c.alphas)
    if (!in_alpha_range(a)) throw ConfigError("study.alphas", "every alpha must lie in (-1,0)");
  if (c.problem != "paper_example" && c.problem != "power" && c.problem != "custom")
    throw ConfigError("problem.name", "expected paper_example, power or custom");
  if (c.problem == "power" && !(c.nu >= 0.0)) throw ConfigError("problem.nu", "must be >= 0");
  if (c.problem == "custom" && c.components.empty()) throw ConfigError("problem.components", "required for custom problems");
  if (c.wavenumber < 1) throw ConfigError("problem.wavenumber", "must be >= 1");
  if (!(c.diffusivity > 0.0)) throw ConfigError("problem.diffusivity", "must be positive");
  if (!(c.final_time > 0.0)) throw ConfigError("problem.final_time", "must be positive");
  if (c.family != "graded" && c.family != "geometric" && c.family != "uniform" && c.family != "manual")
    throw ConfigError("mesh.family", "expected graded, geometric, uniform or manual");
  if (c.N < 1) throw ConfigError("mesh.N", "must be >= 1");
  if (!(c.gamma >= 1.0)) throw ConfigError("mesh.gamma", "must be >= 1");
  if (c.p < 1 || c.p > kMaxDegree) throw ConfigError("mesh.p", "must lie in [1, " + std::to_string(kMaxDegree) + "]");
  if (c.first_interval_linear != "auto" && c.first_interval_linear != "true" && c.first_interval_linear != "false")
    throw ConfigError("mesh.first_interval_linear", "expected auto, true or false");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("mesh.delta", "must lie in (0,1)");
  if (c.L < 0) throw ConfigError("mesh.L", "must be >= 0");
  if (!(c.mu > 0.0)) throw ConfigError("mesh.mu", "must be positive");
  if (!(c.T1 > 0.0 && c.T1 <= c.final_time)) throw ConfigError("mesh.T1", "need 0 < T1 <= final_time");
  if (c.coarse_count < 1) throw ConfigError("mesh.coarse_count", "must be >= 1");
  if (c.family == "manual") {
    if (c.nodes.size() < 2) throw ConfigError("mesh.nodes", "manual meshes need at least two nodes");
    if (c.degrees.size() + 1 != c.nodes.size()) throw ConfigError("mesh.degrees", "need one degree per interval");
  }
  for (double g : c.gammas)
    if (!(g >= 1.0)) throw ConfigError("study.gammas", "every gamma must be >= 1");
  for (int p : c.ps)
    if (p < 1 || p > kMaxDegree) throw ConfigError("study.ps", "every p must lie in [1, " + std::to_string(kMaxDegree) + "]");
  for (int n : c.Ns)
    if (n < 1) throw ConfigError("study.Ns", "every N must be >= 1");
  for (double d : c.deltas)
    if (!(d > 0.0 && d < 1.0)) throw ConfigError("study.deltas", "every delta must lie in (0,1)");
  for (int L : c.Ls)
    if (L < 0) throw ConfigError("study.Ls", "every L must be >= 0");
  if (c.backend != "spectral" && c.backend != "fem") throw ConfigError("backend.kind", "expected spectral or fem");
  if (c.modes < 0) throw ConfigError("backend.modes", "must be >= 0");
  if (c.elements < 2) throw ConfigError("backend.elements", "must be >= 2");
  if (c.r < 1) throw ConfigError("backend.r", "must be >= 1");
  if (c.m < 1) throw ConfigError("error.m", "must be >= 1");
  if (!(c.separation > 0.0)) throw ConfigError("kernel.separation", "must be positive");
  if (c.far_padding < 0) throw ConfigError("kernel.far_padding", "must be >= 0");
  if (c.graded_points < 2) throw ConfigError("kernel.graded_points", "must be >= 2");
  if (c.duffy_points < 2) throw ConfigError("kernel.duffy_points", "must be >= 2");
  if (c.threads < 0) throw ConfigError("run.threads", "must be >= 0");
  if (c.stem.empty()) throw ConfigError("output.stem", "must not be empty");
}

/// Canonical text; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const RunConfig& c) {
  using detail::format_double;
  using detail::join;
  std::ostringstream os;
  auto b = [](bool v) { return v ? "true" : "false"; };
  os << "[problem]\n";
  os << "name = " << c.problem << '\n';
  if (c.alpha) os << "alpha = " << format_double(*c.alpha) << '\n';
  os << "nu = " << format_double(c.nu) << '\n';
  os << "wavenumber = " << c.wavenumber << '\n';
  if (!c.components.empty()) os << "components = " << c.components << '\n';
  os << "diffusivity = " << format_double(c.diffusivity) << '\n';
  os << "final_time = " << format_double(c.final_time) << '\n';
  os << "\n[mesh]\n";
  os << "family = " << c.family << '\n';
  os << "N = " << c.N << '\n';
  os << "gamma = " << format_double(c.gamma) << '\n';
  os << "p = " << c.p << '\n';
  os << "first_interval_linear = " << c.first_interval_linear << '\n';
  os << "delta = " << format_double(c.delta) << '\n';
  os << "L = " << c.L << '\n';
  os << "mu = " << format_double(c.mu) << '\n';
  os << "T1 = " << format_double(c.T1) << '\n';
  os << "coarse_count = " << c.coarse_count << '\n';
  os << "degree_floor = " << b(c.degree_floor) << '\n';
  if (!c.nodes.empty()) os << "nodes = " << join(c.nodes) << '\n';
  if (!c.degrees.empty()) os << "degrees = " << join(c.degrees) << '\n';
  os << "\n[study]\n";
  os << "gammas = " << join(c.gammas) << '\n';
  os << "ps = " << join(c.ps) << '\n';
  os << "Ns = " << join(c.Ns) << '\n';
  os << "deltas = " << join(c.deltas) << '\n';
  os << "Ls = " << join(c.Ls) << '\n';
  os << "alphas = " << join(c.alphas) << '\n';
  os << "\n[backend]\n";
  os << "kind = " << c.backend << '\n';
  os << "modes = " << c.modes << '\n';
  os << "elements = " << c.elements << '\n';
  os << "r = " << c.r << '\n';
  os << "\n[error]\n";
  os << "m = " << c.m << '\n';
  os << "two_sided = " << b(c.two_sided) << '\n';
  os << "\n[kernel]\n";
  os << "separation = " << format_double(c.separation) << '\n';
  os << "far_padding = " << c.far_padding << '\n';
  os << "far_field_quadrature = " << b(c.far_field_quadrature) << '\n';
  os << "graded_points = " << c.graded_points << '\n';
  os << "duffy_points = " << c.duffy_points << '\n';
  os << "\n[diagnostics]\n";
  os << "stability_report = " << b(c.stability_report) << '\n';
  os << "coercivity_check = " << b(c.coercivity_check) << '\n';
  os << "\n[output]\n";
  os << "dir = " << c.out_dir << '\n';
  os << "stem = " << c.stem << '\n';
  os << "timing = " << b(c.timing) << '\n';
  os << "\n[run]\n";
  os << "seed = " << c.seed << '\n';
  os << "threads = " << c.threads << '\n';
  const auto& e = c.expect;
  if (e.any()) {
    os << "\n[expect]\n";
    auto put = [&](const char* k, const std::optional<double>& v) {
      if (v) os << k << " = " << format_double(*v) << '\n';
    };
    put("min_rate", e.min_rate);
    put("max_rate", e.max_rate);
    put("max_error", e.max_error);
    put("min_b", e.min_b);
    put("max_b", e.max_b);
    put("best_delta_low", e.best_delta_low);
    put("best_delta_high", e.best_delta_high);
    put("r2_min", e.r2_min);
  }
  return os.str();
}

/// 64-bit FNV-1a of the canonical serialization, as 16 hex digits. The
/// output directory and thread count do not change results and are left out.
inline std::string config_hash(const RunConfig& c) {
  RunConfig key = c;
  key.out_dir.clear();
  key.threads = 0;
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : serialize_config(key)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Exponent token: a number, "alpha", or "alpha+c" / "alpha-c".
inline double parse_exponent(const std::string& token, double alpha) {
  const auto t = detail::trim(token);
  if (t.rfind("alpha", 0) == 0) {
    const auto rest = detail::trim(t.substr(5));
    if (rest.empty()) return alpha;
    if (rest[0] == '+') return alpha + detail::parse_double("problem.components", rest.substr(1));
    if (rest[0] == '-') return alpha - detail::parse_double("problem.components", rest.substr(1));
    throw ConfigError("problem.components", "bad exponent '" + token + "'");
  }
  return detail::parse_double("problem.components", t);
}

inline ManufacturedProblem build_problem(const RunConfig& c, std::optional<double> alpha_override = {}) {
  const double alpha = alpha_override ? *alpha_override : *c.alpha;
  ManufacturedProblem p;
  if (c.problem == "paper_example") {
    p = paper_example(alpha);
  } else if (c.problem == "power") {
    p = power_problem(alpha, c.nu, c.wavenumber, c.diffusivity);
  } else {
    p.name = "custom";
    p.alpha = alpha;
    double sigma = INFINITY;
    for (const auto& item : detail::split_list(c.components)) {
      const auto parts = detail::split_list(item, ':');
      if (parts.size() != 3) throw ConfigError("problem.components", "expected k:coef:exponent, got '" + item + "'");
      const int k = static_cast<int>(detail::parse_integer("problem.components", parts[0]));
      if (k < 1) throw ConfigError("problem.components", "wavenumber must be >= 1");
      const double coef = detail::parse_double("problem.components", parts[1]);
      const double e = parse_exponent(parts[2], alpha);
      if (e < 0.0) throw ConfigError("problem.components", "exponents must be >= 0");
      if (e > 0.0) sigma = std::min(sigma, e);
      p.components.push_back({k, TimeProfile{{{coef, e}}}});
    }
    p.sigma = std::isfinite(sigma) ? sigma : alpha + 2.0;
  }
  p.diffusivity = c.diffusivity;
  p.final_time = c.final_time;
  return p;
}

inline FirstIntervalRule first_interval_rule(const RunConfig& c) {
  if (c.first_interval_linear == "auto") return FirstIntervalRule::automatic;
  return c.first_interval_linear == "true" ? FirstIntervalRule::on : FirstIntervalRule::off;
}

inline TimeMesh build_mesh(const RunConfig& c) {
  if (c.family == "graded")
    return graded_mesh(c.final_time, c.N, c.gamma, c.p, first_interval_linear(first_interval_rule(c), c.gamma));
  if (c.family == "geometric") {
    GeometricMeshOptions opts;
    opts.degree_floor = c.degree_floor;
    return geometric_mesh(c.final_time, c.T1, c.delta, c.L, c.mu, c.coarse_count, opts);
  }
  if (c.family == "uniform") return uniform_mesh(c.final_time, c.N, c.p);
  MeshFamilyInfo info;
  info.kind = MeshFamily::manual;
  return TimeMesh(c.nodes, c.degrees, info);
}

inline StudyOptions build_study_options(const RunConfig& c, int threads) {
  StudyOptions o;
  o.backend.kind = c.backend == "fem" ? BackendKind::fem : BackendKind::spectral;
  o.backend.modes = c.modes;
  o.backend.elements = c.elements;
  o.backend.degree = c.r;
  o.error.m = c.m;
  o.error.two_sided = c.two_sided;
  o.kernel.separation = c.separation;
  o.kernel.far_padding = c.far_padding;
  o.kernel.far_field_quadrature = c.far_field_quadrature;
  o.kernel.graded_points = c.graded_points;
  o.kernel.duffy_points = c.duffy_points;
  o.threads = threads;
  o.timing = c.timing;
  return o;
}

}  // namespace fracdg
