#include "gpwc/gpw.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace gpwc;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

TimeFn c(double k) {
  return [k](double) { return k; };
}

std::shared_ptr<const GpwSpacetime> plane_wave(TimeFn f1, TimeFn f2, TimeFn f) {
  const auto p = plane_wave_H(std::move(f1), std::move(f2), std::move(f));
  return std::make_shared<const GpwSpacetime>(euclidean(2), p.H, v2(1, 0.5), 0.0, p.dHdx, p.dHdu);
}

GpwSpacetime quartic_wave(double sign) {
  return GpwSpacetime(
      euclidean(2), [sign](const Vec& x, double) { return sign * x.squaredNorm() * x.squaredNorm(); }, v2(1, 0), 0.0,
      [sign](const Vec& x, double) { return Vec(sign * 4.0 * x.squaredNorm() * x); },
      [](const Vec&, double) { return 0.0; });
}

IntegratorConfig horizon(double T) {
  IntegratorConfig cfg;
  cfg.horizon = T;
  return cfg;
}

double oracle_energy(const GpwSpacetime& st, const StepRecord& r) {
  return r.xdot.dot(st.full_metric(r.x.head(2), r.x[2]) * r.xdot);
}

}  // namespace

TEST(PlaneWave, Examples) {
  auto p = plane_wave_H(c(1), c(1), c(0));
  EXPECT_EQ(p.H(v2(1, 1), 0.3), 0.0);
  EXPECT_TRUE(p.gravitational_wave);
  p = plane_wave_H(c(1), c(0), c(0));
  EXPECT_EQ(p.H(v2(2, 5), -1.0), 4.0);
  EXPECT_FALSE(p.gravitational_wave);
  p = plane_wave_H(c(0), c(0), c(1));
  EXPECT_EQ(p.H(v2(1, 2), 2.0), 4.0);
}

TEST(PlaneWave, UDerivative) {
  const auto p = plane_wave_H([](double u) { return std::sin(u); }, [](double u) { return u * u; }, c(0.5));
  const Vec x = v2(0.7, -1.3);
  const double u = 0.4;
  EXPECT_NEAR(p.dHdu(x, u), std::cos(u) * 0.49 - 2 * u * 1.69, 1e-9);
}

TEST(GpwSpacetime, RejectsZeroWitness) {
  EXPECT_THROW(GpwSpacetime(euclidean(2), [](const Vec&, double) { return 0.0; }, v2(0, 0), 0.0), ValidationError);
  EXPECT_THROW(GpwSpacetime(hyperbolic_half_plane(), [](const Vec&, double) { return 1.0; }, v2(0, -1), 0.0),
               OutOfChart);
}

TEST(Reduce, PlaneWaveClosedForms) {
  const auto st = plane_wave(c(1), c(1), c(0));
  auto g = reduce_geodesic(st, {v2(1, 0), v2(0, 0), 0, 1, 0, 0}, horizon(1));
  ASSERT_EQ(g.outcome().kind, OutcomeKind::HorizonReached);
  EXPECT_NEAR(g.base_trajectory().back().x[0], std::cosh(1.0), 1e-8);
  EXPECT_NEAR(g.base_trajectory().back().x[1], 0.0, 1e-12);

  g = reduce_geodesic(st, {v2(0, 1), v2(0, 0), 0, 1, 0, 0}, horizon(std::numbers::pi));
  EXPECT_NEAR(g.base_trajectory().back().x[1], -1.0, 1e-8);
  EXPECT_NEAR(g.u(2.0), 2.0, 0);
}

TEST(Reduce, NullDeltaIsGeodesicWithLinearV) {
  const auto st = plane_wave(c(1), c(1), c(0));
  const auto g = reduce_geodesic(st, {v2(1, 2), v2(0.5, -1), 3, 0, 1, 2}, horizon(2));
  const auto& b = g.base_trajectory().back();
  EXPECT_NEAR(b.x[0], 2.0, 1e-12);
  EXPECT_NEAR(b.x[1], 0.0, 1e-12);
  EXPECT_EQ(g.u(1.5), 3.0);
  EXPECT_DOUBLE_EQ(g.v(1.5), 4.0);
}

TEST(Reduce, EnergyReproducedFromReconstruction) {
  const auto st = plane_wave([](double u) { return 1 + 0.3 * std::sin(u); }, c(0.5), c(0.2));
  const auto g = reduce_geodesic(st, {v2(0.3, -0.4), v2(0.2, 0.1), 0.1, 1.3, 0.2, -0.7}, horizon(2));
  for (double t = 0; t <= 2.0; t += 0.125) {
    const auto f = g.reconstruct(t);
    const double E = gpw_energy(*st, f.x, f.xdot, f.u, f.udot, f.vdot);
    EXPECT_NEAR(E, g.E_const(), 1e-6 * std::max(1.0, std::abs(g.E_const())));
  }
}

TEST(Oracle, MatchesReductionAndConservesInvariants) {
  struct Case {
    std::shared_ptr<const GpwSpacetime> st;
    GeodesicInitialData init;
  };
  const std::vector<Case> cases = {
      {plane_wave(c(1), c(1), c(0)), {v2(1, 0), v2(0, 0), 0, 1, 0, 0}},
      {plane_wave([](double u) { return std::cos(u); }, c(0.5), [](double u) { return 0.3 * u; }),
       {v2(0.4, -0.2), v2(0.3, 0.5), 0.2, -0.8, 1.0, 0.4}},
      {std::make_shared<const GpwSpacetime>(quartic_wave(-1)), {v2(0.5, 0.3), v2(-0.2, 0.1), 0, 1.1, 0, 0.3}},
  };
  for (const auto& cs : cases) {
    const auto split = reduce_geodesic(cs.st, cs.init, horizon(1));
    const auto full = full_geodesic_oracle(*cs.st, cs.init, horizon(1));
    ASSERT_EQ(full.outcome().kind, OutcomeKind::HorizonReached);
    const double E0 = oracle_energy(*cs.st, full.front());
    double worst = 0.0, drift_u = 0.0, drift_E = 0.0;
    for (const auto& r : full.steps()) {
      const auto f = split.reconstruct(r.t);
      worst = std::max({worst, (f.x - r.x.head(2)).cwiseAbs().maxCoeff(), std::abs(f.u - r.x[2]),
                        std::abs(f.v - r.x[3])});
      drift_u = std::max({drift_u, std::abs(r.x[2] - cs.init.u0 - cs.init.delta * r.t),
                          std::abs(r.xdot[2] - cs.init.delta)});
      drift_E = std::max(drift_E, std::abs(oracle_energy(*cs.st, r) - E0));
    }
    EXPECT_LT(worst, 1e-5);
    EXPECT_LT(drift_u, 1e-9);
    EXPECT_LT(drift_E, 1e-8 * std::max(1.0, std::abs(E0)));
  }
}

TEST(Oracle, NullGeodesicStaysNull) {
  const auto st = plane_wave(c(1), c(2), c(0.5));
  // vdot chosen so that g(gamma', gamma') = 0
  GeodesicInitialData init{v2(0.5, -0.5), v2(0.3, 0.2), 0, 1.0, 0, 0};
  init.vdot0 = -(init.xdot0.squaredNorm() + st->H(init.x0, 0)) / 2.0;
  const auto full = full_geodesic_oracle(*st, init, horizon(1));
  for (const auto& r : full.steps()) EXPECT_NEAR(oracle_energy(*st, r), 0.0, 1e-8);
  const auto split = reduce_geodesic(st, init, horizon(1));
  EXPECT_NEAR(split.E_const(), 0.0, 1e-15);
}

TEST(Reduce, AffineReparametrisation) {
  const auto st = plane_wave([](double u) { return 1 + 0.5 * u; }, c(0.8), c(0.1));
  const auto a = reduce_geodesic(st, {v2(0.2, 0.4), v2(0.1, -0.3), 0, 1.0, 0, 0}, horizon(1));
  const auto b = reduce_geodesic(st, {v2(0.2, 0.4), v2(0.2, -0.6), 0, 2.0, 0, 0}, horizon(0.5));
  EXPECT_NEAR(a.u(1.0), b.u(0.5), 1e-15);
  for (double t = 0; t <= 1.0; t += 0.05)
    EXPECT_LT((a.base_trajectory().sample(t).x - b.base_trajectory().sample(t / 2).x).norm(), 1e-5);
}

TEST(Reduce, CausalCharacterPreserved) {
  const auto st = plane_wave(c(1), c(1), c(0));
  for (double vd : {-2.0, 0.0, 3.0}) {
    const GeodesicInitialData init{v2(0.3, 0.1), v2(0.2, 0), 0, 1.0, 0, vd};
    const auto full = full_geodesic_oracle(*st, init, horizon(1));
    const double E0 = oracle_energy(*st, full.front());
    for (const auto& r : full.steps()) {
      const double E = oracle_energy(*st, r);
      if (std::abs(E0) > 1e-6) EXPECT_EQ(std::signbit(E), std::signbit(E0));
    }
  }
}

TEST(Reduce, WriteCsv) {
  const auto st = plane_wave(c(1), c(1), c(0));
  const auto g = reduce_geodesic(st, {v2(1, 0), v2(0, 0), 0, 1, 0, 0}, horizon(0.1));
  std::ostringstream os;
  g.write_csv(os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "t,u,v,x1,x2,xdot1,xdot2");
  std::getline(is, line);
  EXPECT_EQ(line, "0,0,0,1,0,0,0");
}

TEST(Classify, Examples) {
  const auto grid = SampleGrid::box(v2(-3, -3), v2(3, 3), {13, 13});
  const auto us = symmetric_times(2, 5);
  const GpwBounds zero_bounds{c(0), c(0), grid, us, v2(0, 0)};

  const auto plane = plane_wave([](double u) { return std::sin(u); }, c(1), [](double u) { return u; });
  auto r = classify_gpw_completeness(*plane, zero_bounds);
  EXPECT_EQ(r.certificate.verdict, Verdict::CompleteByCorollary3);
  EXPECT_TRUE(r.reduction_equivalent);

  r = classify_gpw_completeness(quartic_wave(-1), zero_bounds);
  EXPECT_EQ(r.certificate.verdict, Verdict::CompleteByCorollary2);
  EXPECT_TRUE(r.reduction_equivalent);
  ASSERT_TRUE(r.certificate.growth.has_value());
  EXPECT_FALSE(r.certificate.growth->pass);

  r = classify_gpw_completeness(quartic_wave(1), zero_bounds);
  EXPECT_EQ(r.certificate.verdict, Verdict::Inconclusive);
  EXPECT_TRUE(r.reduction_equivalent);
  EXPECT_EQ(r.certificate.caveat, "premises verified on sampled domain only");
}

TEST(Classify, IncompleteBaseBlocksVerdict) {
  const auto grid = SampleGrid::box(v2(-1, -1), v2(1, 1), {11, 11});
  const ChartManifold open("open", 2, [](const Vec&) -> Mat { return Mat::Identity(2, 2); }, false);
  const GpwSpacetime st(open, [](const Vec& x, double) { return -x.squaredNorm() - 1; }, v2(0, 0), 0.0);
  const auto r = classify_gpw_completeness(st, {c(0), c(0), grid, symmetric_times(1, 3), v2(0, 0)});
  EXPECT_EQ(r.certificate.verdict, Verdict::Inconclusive);
  EXPECT_FALSE(r.certificate.passing.empty());
}

TEST(CompletenessMap, DeterministicAcrossThreadCounts) {
  const auto st = std::make_shared<const GpwSpacetime>(quartic_wave(1));
  const auto inits = map_initial_data(SampleGrid::box(v2(-1, -1), v2(1, 1), {3, 3}), {v2(0, 0), v2(0.5, 0)},
                                      {0.0, 1.0, 2.0});
  const auto a = completeness_map(st, inits, horizon(2), 1);
  const auto b = completeness_map(st, inits, horizon(2), 4);
  std::ostringstream sa, sb;
  write_map_csv(sa, a, 2);
  write_map_csv(sb, b, 2);
  EXPECT_EQ(sa.str(), sb.str());
  bool blow = false;
  for (const auto& e : a) blow = blow || e.outcome.kind == OutcomeKind::BlowUpSuspected;
  EXPECT_TRUE(blow);
}
