#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fracdg/config.hpp"

using namespace fracdg;

namespace {

std::string key_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

}  // namespace

TEST(Config, MinimalDefaults) {
  const auto c = parse_config("[problem]\nalpha = -0.7\n");
  EXPECT_DOUBLE_EQ(*c.alpha, -0.7);
  EXPECT_EQ(c.problem, "paper_example");
  EXPECT_EQ(c.family, "graded");
  EXPECT_EQ(c.backend, "spectral");
  EXPECT_EQ(c.m, 10);
  EXPECT_FALSE(c.two_sided);
}

TEST(Config, Lists) {
  const auto c = parse_config(
      "[problem]\nalpha = -0.5\n[study]\ngammas = 1, 1.3,1.6\nps = 1,2\nNs = 18, 27\n[expect]\nmin_rate = 1.2\n");
  EXPECT_EQ(c.gammas, (std::vector<double>{1.0, 1.3, 1.6}));
  EXPECT_EQ(c.ps, (std::vector<int>{1, 2}));
  EXPECT_EQ(c.Ns, (std::vector<int>{18, 27}));
  EXPECT_DOUBLE_EQ(*c.expect.min_rate, 1.2);
  EXPECT_FALSE(c.expect.max_rate.has_value());
}

TEST(Config, RoundTrip) {
  RunConfig c;
  c.alpha = -0.3;
  c.family = "manual";
  c.nodes = {0.0, 0.1, 0.35, 1.0};
  c.degrees = {1, 2, 3};
  c.gammas = {1.0, 2.3};
  c.deltas = {0.21, 0.3};
  c.Ls = {3, 4};
  c.alphas = {-0.3, -0.7};
  c.backend = "fem";
  c.two_sided = true;
  c.timing = false;
  c.seed = 1234567;
  c.expect.r2_min = 0.97;
  c.expect.best_delta_low = 0.18;
  const auto back = parse_config(serialize_config(c));
  EXPECT_EQ(back, c);
  EXPECT_EQ(serialize_config(back), serialize_config(c));
}

TEST(Config, MissingAlphaNamesKey) { EXPECT_EQ(key_of("[mesh]\nN = 4\n"), "problem.alpha"); }

TEST(Config, RangeErrorsNameKey) {
  const std::string a = "[problem]\nalpha = -0.5\n";
  EXPECT_EQ(key_of("[problem]\nalpha = 0\n"), "problem.alpha");
  EXPECT_EQ(key_of("[problem]\nalpha = -1\n"), "problem.alpha");
  EXPECT_EQ(key_of(a + "[mesh]\ngamma = 0.9\n"), "mesh.gamma");
  EXPECT_EQ(key_of(a + "[mesh]\ndelta = 1\n"), "mesh.delta");
  EXPECT_EQ(key_of(a + "[mesh]\ndelta = 0\n"), "mesh.delta");
  EXPECT_EQ(key_of(a + "[mesh]\np = 0\n"), "mesh.p");
  EXPECT_EQ(key_of(a + "[error]\nm = 0\n"), "error.m");
  EXPECT_EQ(key_of(a + "[study]\nalphas = -0.5, 0.2\n"), "study.alphas");
  EXPECT_EQ(key_of(a + "[study]\ndeltas = 0.2, 1.5\n"), "study.deltas");
  EXPECT_EQ(key_of(a + "[mesh]\nfamily = manual\nnodes = 0, 1\n"), "mesh.degrees");
}

TEST(Config, UnknownKeysAndSyntax) {
  const std::string a = "[problem]\nalpha = -0.5\n";
  EXPECT_EQ(key_of(a + "[mesh]\ngama = 1.2\n"), "mesh.gama");
  EXPECT_EQ(key_of(a + "[meshes]\nN = 3\n"), "meshes");
  EXPECT_EQ(key_of(a + "[mesh]\nN = three\n"), "mesh.N");
  EXPECT_EQ(key_of(a + "[mesh]\nN = 3.5\n"), "mesh.N");
  EXPECT_EQ(key_of(a + "[error]\ntwo_sided = maybe\n"), "error.two_sided");
  EXPECT_THROW(load_config("/nonexistent/run.cfg"), ConfigError);
}

TEST(Config, HashSeparatesRunsButIgnoresPlacement) {
  auto c = parse_config("[problem]\nalpha = -0.5\n");
  auto d = c;
  d.gamma = 1.6;
  EXPECT_NE(config_hash(c), config_hash(d));
  EXPECT_EQ(config_hash(c).size(), 16u);
  d = c;
  d.out_dir = "elsewhere";
  d.threads = 3;
  EXPECT_EQ(config_hash(c), config_hash(d));
}

TEST(Config, ParseExponent) {
  EXPECT_DOUBLE_EQ(parse_exponent("alpha", -0.4), -0.4);
  EXPECT_DOUBLE_EQ(parse_exponent("alpha+2", -0.4), 1.6);
  EXPECT_DOUBLE_EQ(parse_exponent(" alpha - 0.5 ", -0.4), -0.9);
  EXPECT_DOUBLE_EQ(parse_exponent("3", -0.4), 3.0);
  EXPECT_THROW(parse_exponent("alpha*2", -0.4), ConfigError);
}

TEST(Config, BuildCustomProblem) {
  const auto c = parse_config("[problem]\nalpha = -0.4\nname = custom\ncomponents = 1:2:alpha+2, 3:-1:1.5\n");
  const auto p = build_problem(c);
  ASSERT_EQ(p.components.size(), 2u);
  EXPECT_NEAR(p.sigma, 1.5, 1e-15);
  const double x = 0.3, t = 0.7;
  const double ref = 2.0 * std::pow(t, 1.6) * std::sin(std::numbers::pi * x) -
                     std::pow(t, 1.5) * std::sin(3.0 * std::numbers::pi * x);
  EXPECT_NEAR(p.u(x, t), ref, 1e-12);
  EXPECT_THROW(build_problem(parse_config("[problem]\nalpha = -0.4\nname = custom\ncomponents = 1:2\n")),
               ConfigError);
}

TEST(Config, BuildMeshFamilies) {
  auto c = parse_config("[problem]\nalpha = -0.5\n[mesh]\nN = 5\ngamma = 2\np = 2\n");
  auto m = build_mesh(c);
  EXPECT_EQ(m.intervals(), 5);
  EXPECT_NEAR(m.node(1), 1.0 / 25.0, 1e-15);
  c = parse_config("[problem]\nalpha = -0.5\n[mesh]\nfamily = geometric\nL = 3\ndelta = 0.24\n");
  m = build_mesh(c);
  EXPECT_EQ(m.intervals(), 4);
  c = parse_config("[problem]\nalpha = -0.5\n[mesh]\nfamily = manual\nnodes = 0, 0.5, 1\ndegrees = 1, 3\n");
  m = build_mesh(c);
  EXPECT_EQ(m.max_degree(), 3);
}
