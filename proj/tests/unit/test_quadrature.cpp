#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fracdg/legendre.hpp"
#include "fracdg/quadrature.hpp"
#include "oracle.hpp"

using namespace fracdg;

TEST(GaussJacobi, TwoPointLegendreNodes) {
  const auto r = gauss_jacobi_rule(2, 0.0, -1.0, 1.0);
  ASSERT_EQ(r.size(), 2u);
  const double x = 1.0 / std::sqrt(3.0);
  EXPECT_NEAR(std::min(r.nodes[0], r.nodes[1]), -x, 1e-15);
  EXPECT_NEAR(std::max(r.nodes[0], r.nodes[1]), x, 1e-15);
  EXPECT_NEAR(r.weights[0], 1.0, 1e-15);
  EXPECT_NEAR(r.weights[1], 1.0, 1e-15);
}

TEST(GaussJacobi, WeightSumIsPowerIntegral) {
  const auto r = gauss_jacobi_rule(5, -0.5, 0.0, 1.0);
  EXPECT_NEAR(r.integrate([](double) { return 1.0; }), 2.0, 1e-14);
}

TEST(GaussJacobi, QuadraticMoment) {
  const auto r = gauss_jacobi_rule(3, -0.7, 0.0, 1.0);
  EXPECT_NEAR(r.integrate([](double t) { return t * t; }), 1.0 / 2.3, 1e-14);
}

TEST(GaussJacobi, ExactUpToDegree2nMinus1) {
  const int n = 6;
  const double e = -0.35, a = 0.5, b = 2.0;
  const auto r = gauss_jacobi_rule(n, e, a, b);
  for (int k = 0; k <= 2 * n - 1; ++k) {
    // int_a^b (t-a)^e (t-a)^k dt
    const double exact = std::pow(b - a, e + k + 1) / (e + k + 1);
    EXPECT_NEAR(r.integrate([&](double t) { return std::pow(t - a, k); }), exact, 1e-13 * exact) << k;
  }
}

TEST(GaussJacobi, RejectsExponentAtMinusOne) {
  EXPECT_THROW(gauss_jacobi_rule(3, -1.0, 0.0, 1.0), DomainError);
  EXPECT_THROW(gauss_jacobi_rule(0, 0.0, 0.0, 1.0), DomainError);
}

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
  const auto r = gauss_legendre_rule(8, -0.3, 1.7);
  for (int k = 0; k < 16; ++k) {
    const double exact = (std::pow(1.7, k + 1) - std::pow(-0.3, k + 1)) / (k + 1);
    EXPECT_NEAR(r.integrate([&](double t) { return std::pow(t, k); }), exact, 1e-13 * std::max(1.0, std::abs(exact)));
  }
}

TEST(GradedRule, HandlesEndpointSingularity) {
  const auto r = left_graded_rule(0.0, 1.0, 12);
  EXPECT_NEAR(r.integrate([](double t) { return std::pow(t, -0.3); }), 1.0 / 0.7, 1e-10);
  EXPECT_NEAR(r.integrate([](double t) { return std::pow(t, 1.3); }), 1.0 / 2.3, 1e-14);
  const auto g = graded_rule(0.0, 1.0, 1.0 + 1e-6, 12);
  const double exact = (std::pow(1.0 + 1e-6, 0.3) - std::pow(1e-6, 0.3)) / 0.3;
  EXPECT_NEAR(g.integrate([](double s) { return std::pow(1.0 + 1e-6 - s, -0.7); }), exact, 1e-11 * exact);
}

TEST(Legendre, MatchesBoost) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> v(kMaxDegree + 1), d(kMaxDegree + 1);
  for (int trial = 0; trial < 50; ++trial) {
    const double x = U(rng);
    legendre_values_and_derivatives(x, v, d);
    for (int k = 0; k <= kMaxDegree; ++k) {
      EXPECT_NEAR(v[k], oracle::legendre(k, x), 1e-13);
      EXPECT_NEAR(d[k], oracle::legendre_prime(k, x), 1e-10 * (1 + k * k));
    }
  }
}

TEST(Legendre, SeriesAgreesWithDirectSum) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> c(9);
    for (auto& x : c) x = U(rng);
    const double x = U(rng);
    double direct = 0.0;
    for (int k = 0; k < 9; ++k) direct += c[k] * oracle::legendre(k, x);
    EXPECT_NEAR(legendre_series(c, x), direct, 1e-14);
    const auto dc = legendre_derivative(c);
    double dd = 0.0;
    for (int k = 0; k < 9; ++k) dd += c[k] * oracle::legendre_prime(k, x);
    EXPECT_NEAR(legendre_series(dc, x), dd, 1e-12);
  }
}

TEST(Legendre, DegreeLimit) {
  EXPECT_NO_THROW(check_degree(kMaxDegree));
  EXPECT_THROW(check_degree(kMaxDegree + 1), CapacityError);
  EXPECT_THROW(check_degree(-1), DomainError);
}
