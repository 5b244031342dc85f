#include "gpwc/comparison.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace gpwc;

TEST(PhiFunction, RejectsNonpositiveAndDecreasing) {
  EXPECT_THROW(PhiFunction(1, [](double s) { return s - 2; }), HypothesisViolated);
  EXPECT_THROW(PhiFunction(1, [](double s) { return 1.0 / s; }), HypothesisViolated);
  EXPECT_NO_THROW(PhiFunction(1, [](double) { return 3.0; }));
  const PhiFunction p(1, [](double s) { return s; });
  EXPECT_EQ(p.certificate().samples, 400);
  EXPECT_DOUBLE_EQ(p.certificate().phi_min, 1.0);
}

TEST(Divergence, Examples) {
  const auto lin = check_divergence(PhiFunction(1, [](double s) { return s; }));
  EXPECT_EQ(lin.kind, DivergenceKind::Diverges);

  const auto sq = check_divergence(PhiFunction(1, [](double s) { return s * s; }));
  ASSERT_EQ(sq.kind, DivergenceKind::Converges);
  EXPECT_NEAR(sq.estimate, 1.0, 1e-9);

  const auto slog = check_divergence(PhiFunction(1, [](double s) { return s * std::log(s + 1); }));
  EXPECT_EQ(slog.kind, DivergenceKind::Diverges);
}

TEST(Divergence, SlowLogTailMatchesQuadratureOracle) {
  // int_1^R ds / (s log(s+1)): 3.5638 at R = 1e6, 4.2570 at R = 1e12
  const PhiFunction phi(1, [](double s) { return s * std::log(s + 1); });
  EXPECT_NEAR(detail::reciprocal_integral(phi, 1, 1e6), 3.5638, 5e-4);
  EXPECT_NEAR(detail::reciprocal_integral(phi, 1, 1e12), 4.2570, 5e-4);
}

TEST(Divergence, BorderlineIsNotCalledConvergent) {
  // s^1.01 converges to 100 but far beyond any sampled range
  const auto v = check_divergence(PhiFunction(1, [](double s) { return std::pow(s, 1.01); }));
  EXPECT_NE(v.kind, DivergenceKind::Converges);
  EXPECT_EQ(v.kind, DivergenceKind::Inconclusive);
}

TEST(Dominating, Exponential) {
  const auto v0 = solve_dominating(PhiFunction(1, [](double s) { return s; }), 1.0, 10.0);
  for (int i = 0; i <= 100; ++i) {
    const double t = 0.1 * i;
    EXPECT_NEAR(v0(t), std::exp(t), 1e-8) << t;
  }
}

TEST(Dominating, ConstantAndSquareRoot) {
  const auto lin = solve_dominating(PhiFunction(2, [](double) { return 1.0; }), 2.0, 5.0);
  const auto sq = solve_dominating(PhiFunction(1, [](double s) { return 2 * std::sqrt(s); }), 1.0, 5.0);
  for (int i = 0; i <= 50; ++i) {
    const double t = 0.1 * i;
    EXPECT_NEAR(lin(t), 2 + t, 1e-12);
    EXPECT_NEAR(sq(t), (1 + t) * (1 + t), 1e-8);
  }
}

TEST(Dominating, Errors) {
  EXPECT_THROW(solve_dominating(PhiFunction(1, [](double s) { return s * s; }), 1.0, 1.0),
               HypothesisViolated);
  EXPECT_THROW(solve_dominating(PhiFunction(1, [](double s) { return s; }), 0.5, 1.0), HypothesisViolated);
  const auto v0 = solve_dominating(PhiFunction(1, [](double s) { return s; }), 1.0, 1.0);
  EXPECT_THROW(v0(2.0), OutOfRange);
  EXPECT_THROW(v0(-0.1), OutOfRange);
}

TEST(Dominating, RoundTripResidualAndMonotone) {
  const auto v0 = solve_dominating(PhiFunction(0.5, [](double s) { return s * std::log(s + 1); }), 0.7, 3.0);
  double prev = 0;
  for (int i = 0; i <= 60; ++i) {
    const double t = 0.05 * i;
    const double w = v0(t);
    EXPECT_NEAR(v0.time_to(w), t, 1e-9);
    if (i > 0) EXPECT_GT(w, prev);
    prev = w;
    if (t > 0.01 && t < 2.99) {
      const double h = 1e-4;
      const double deriv = (v0(t + h) - v0(t - h)) / (2 * h);
      const double phi = v0.phi()(w);
      EXPECT_LT(std::abs(deriv - phi) / phi, 1e-7) << t;
    }
  }
}

TEST(Envelope, EqualityCase) {
  const auto v0 = solve_dominating(PhiFunction(1, [](double s) { return s; }), 1.0, 2.0);
  std::vector<EnvelopeSample> s;
  for (int i = 0; i <= 2000; ++i) s.push_back({i * 1e-3, v0(i * 1e-3)});
  const auto r = verify_envelope(s, v0);
  EXPECT_TRUE(r.hypotheses_hold);
  EXPECT_TRUE(r.conclusion_holds);
  EXPECT_NEAR(r.worst_margin, 0.0, 1e-9);
}

TEST(Envelope, ConstantUnderExponential) {
  const auto v0 = solve_dominating(PhiFunction(1, [](double s) { return s; }), 1.0, 3.0);
  std::vector<EnvelopeSample> s;
  for (int i = 0; i <= 300; ++i) s.push_back({i * 0.01, 1.0});
  const auto r = verify_envelope(s, v0);
  EXPECT_TRUE(r.hypotheses_hold);
  EXPECT_TRUE(r.conclusion_holds);
  EXPECT_EQ(r.worst_margin, 0.0);
  EXPECT_EQ(r.worst_margin_t, 0.0);
}

TEST(Envelope, ReportsViolations) {
  const auto v0 = solve_dominating(PhiFunction(1, [](double s) { return s; }), 1.0, 1.0);
  std::vector<EnvelopeSample> s;
  for (int i = 0; i <= 100; ++i) s.push_back({i * 0.01, std::exp(2 * i * 0.01)});
  const auto r = verify_envelope(s, v0);
  EXPECT_FALSE(r.integral_bound_holds);
  EXPECT_TRUE(r.hypothesis_violation_t.has_value());
  EXPECT_FALSE(r.conclusion_holds);
  EXPECT_LT(r.worst_margin, 0.0);
  EXPECT_DOUBLE_EQ(r.worst_margin_t, 1.0);
}

TEST(Envelope, PropertySoundOnConstructedSubsolutions) {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> U(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = 0.5 + U(rng);
    const double c0 = 0.2 + U(rng), c1 = U(rng), p = U(rng);
    const PhiFunction phi(a, [=](double s) { return c0 + c1 * std::pow(s - a + 1, p) * (1 + 0.5 * std::log1p(s - a)); });
    const double v_init = a + 2 * U(rng);
    const double T = 2.0;
    const auto v0 = solve_dominating(phi, v_init + 0.1 * U(rng), T);
    // v' = phi(w), w = max(a, theta(t) v) <= v
    const double ph = 3 * U(rng);
    auto rhs = [&](double t, double v) {
      const double theta = 0.6 + 0.4 * std::pow(std::sin(3 * t + ph), 2);
      return phi(std::max(a, theta * v));
    };
    std::vector<EnvelopeSample> s{{0.0, v_init}};
    double v = v_init;
    const int n = 2000;
    const double h = T / n;
    for (int i = 0; i < n; ++i) {
      const double t = i * h;
      const double k1 = rhs(t, v), k2 = rhs(t + h / 2, v + h / 2 * k1);
      const double k3 = rhs(t + h / 2, v + h / 2 * k2), k4 = rhs(t + h, v + h * k3);
      v += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      s.push_back({(i + 1) * h, v});
    }
    const auto r = verify_envelope(s, v0);
    EXPECT_TRUE(r.hypotheses_hold) << trial;
    EXPECT_TRUE(r.conclusion_holds) << trial;
    EXPECT_GE(r.worst_margin, 0.0) << trial;
  }
}
