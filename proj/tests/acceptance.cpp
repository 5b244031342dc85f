// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fail.

#include "gpwc/gpwc.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

using namespace gpwc;

namespace {

const std::string kDir = GPWC_SCENARIO_DIR;

struct Check {
  bool ok = true;
  std::string detail;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Vec vec(std::initializer_list<double> l) {
  Vec v(static_cast<Eigen::Index>(l.size()));
  Eigen::Index i = 0;
  for (double x : l) v[i++] = x;
  return v;
}

Json bundled(const std::string& name) { return load_scenario_file(kDir + "/" + name + ".scn"); }
Json results_of(const Json& doc) { return run_scenario(build_scenario(doc)).report["results"]; }

Check harmonic_fidelity() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const ForceSystem fs([](const Vec& x, double) { return 0.5 * x.squaredNorm(); },
                       [](const Vec& x, double) { return Vec(x); }, [](const Vec&, double) { return 0.0; });
  IntegratorConfig cfg;
  cfg.horizon = 20;
  const auto traj = integrate(euclidean(2), fs, {vec({1, 0}), vec({0, 0})}, cfg);
  double worst = 0;
  for (const auto& s : traj.steps()) worst = std::max(worst, std::abs(s.x[0] - std::cos(s.t)));
  for (double t = 0; t <= 20; t += 0.01) worst = std::max(worst, std::abs(traj.sample(t).x[0] - std::cos(t)));
  const double secs = seconds_since(t0);
  c.require(traj.outcome().kind == OutcomeKind::HorizonReached, "horizon not reached");
  c.require(worst < 1e-6, "max |x1 - cos t| = " + fmt(worst));
  c.require(secs < 1.0, "runtime " + fmt(secs) + " s");
  c.detail += (c.detail.empty() ? "" : "; ") + std::string("max error ") + fmt(worst) + ", " + fmt(secs) + " s";
  return c;
}

Check closed_form_blowup() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const ForceSystem fs([](const Vec& x, double) { return -std::pow(x[0], 4); },
                       [](const Vec& x, double) { return Vec(Vec::Constant(1, -4 * std::pow(x[0], 3))); },
                       [](const Vec&, double) { return 0.0; });
  IntegratorConfig cfg;
  cfg.horizon = 2;
  const TangentVector init{vec({1}), vec({std::sqrt(2.0)})};
  const auto traj = integrate(euclidean(1), fs, init, cfg);
  c.require(traj.outcome().kind == OutcomeKind::BlowUpSuspected, std::string("outcome ") + to_string(traj.outcome().kind));
  double err = INFINITY;
  if (traj.outcome().kind == OutcomeKind::BlowUpSuspected) {
    const auto b = refine_blowup(euclidean(1), fs, init, cfg, traj);
    err = std::abs(b.t_cross - 1 / std::sqrt(2.0));
  }
  const double secs = seconds_since(t0);
  c.require(err < 1e-3, "|t_star - 1/sqrt 2| = " + fmt(err));
  c.require(secs < 5.0, "runtime " + fmt(secs) + " s");
  c.detail += (c.detail.empty() ? "" : "; ") + std::string("t_star error ") + fmt(err) + ", " + fmt(secs) + " s";
  return c;
}

Check comparison_solver() {
  Check c;
  const auto lin = solve_dominating(PhiFunction(1, [](double s) { return s; }), 1, 10);
  const auto root = solve_dominating(PhiFunction(1, [](double s) { return 2 * std::sqrt(s); }), 1, 10);
  double e1 = 0, e2 = 0;
  for (int i = 0; i <= 1000; ++i) {
    const double t = 0.01 * i;
    e1 = std::max(e1, std::abs(lin(t) - std::exp(t)));
    e2 = std::max(e2, std::abs(root(t) - (1 + t) * (1 + t)));
  }
  const auto sq = check_divergence(PhiFunction(1, [](double s) { return s * s; }));
  bool rejected = false;
  try {
    solve_dominating(PhiFunction(1, [](double s) { return s * s; }), 1, 10);
  } catch (const HypothesisViolated&) {
    rejected = true;
  }
  c.require(e1 < 1e-8, "|v - e^t| = " + fmt(e1));
  c.require(e2 < 1e-8, "|v - (1+t)^2| = " + fmt(e2));
  c.require(sq.kind == DivergenceKind::Converges, std::string("s^2 classified ") + to_string(sq.kind));
  c.require(rejected, "s^2 not rejected by the solver");
  c.detail += (c.detail.empty() ? "" : "; ") + std::string("errors ") + fmt(e1) + ", " + fmt(e2) + "; s^2 " + to_string(sq.kind);
  return c;
}

Check gronwall_envelope() {
  Check c;
  Json d = bundled("growing-oscillator-envelope");
  apply_override(d, "envelope.directions=[\"forward\"]");
  apply_override(d, "random_initial.count=20");
  apply_override(d, "random_initial.radius=2");
  const Json r = results_of(d);
  const Json& s = r["summary"];
  c.require(r["frame"]["A_T_star"].get<double>() == 1.0, "A* = " + fmt(r["frame"]["A_T_star"].get<double>()));
  c.require(s["runs"].get<int>() == 20, "runs " + std::to_string(s["runs"].get<int>()));
  c.require(s["worst_envelope_margin"].get<double>() >= 0.0, "margin " + fmt(s["worst_envelope_margin"].get<double>()));
  c.require(s["all_pass"].get<bool>(), "a trajectory failed to reach T or violated the envelope");
  c.require(s["worst_identity_fd_rel_error"].get<double>() < 1e-4,
            "identity error " + fmt(s["worst_identity_fd_rel_error"].get<double>()));
  for (const auto& run : r["runs"]) {
    double n0 = 0, n1 = 0;
    for (const auto& v : run["x0"]) n0 += v.get<double>() * v.get<double>();
    for (const auto& v : run["xdot0"]) n1 += v.get<double>() * v.get<double>();
    c.require(n0 <= 4 + 1e-12 && n1 <= 4 + 1e-12, "initial condition outside the radius-2 ball");
  }
  c.detail += (c.detail.empty() ? "" : "; ") + std::string("worst margin ") +
              fmt(s["worst_envelope_margin"].get<double>()) + ", identity error " +
              fmt(s["worst_identity_fd_rel_error"].get<double>());
  return c;
}

Check certificates() {
  Check c;
  const std::pair<const char*, const char*> expected[] = {
      {"harmonic-certify", "CompleteByTheoremG01"},
      {"growing-oscillator-certify", "CompleteByTheoremG01"},
      {"quartic-certify", "Inconclusive"},
      {"quartic-wave-attractive-certify", "CompleteByCorollary2"},
      {"plane-wave-certify", "CompleteByCorollary3"},
  };
  for (const auto& [name, verdict] : expected) {
    const Json r = results_of(bundled(name));
    const std::string got = r["certificate"]["verdict"].get<std::string>();
    c.require(got == verdict, std::string(name) + " gave " + got);
    if (std::string(name) == "quartic-certify")
      c.require(r["independent_integration"]["outcome"]["kind"] == "BlowUpSuspected",
                "quartic trajectory did not blow up");
  }
  // further classical plane waves with polynomial profiles
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(-1, 1);
  auto poly = [&] { return fmt(U(rng)) + "+(" + fmt(U(rng)) + ")*u+(" + fmt(U(rng)) + ")*u^2"; };
  for (int k = 0; k < 5; ++k) {
    Json d = bundled("plane-wave-certify");
    d["gpw"]["profile"]["plane_wave"] = Json{{"f1", poly()}, {"f2", poly()}, {"f", poly()}};
    const std::string got = results_of(d)["certificate"]["verdict"].get<std::string>();
    c.require(got == "CompleteByCorollary3", "random plane wave " + std::to_string(k) + " gave " + got);
  }
  c.detail += (c.detail.empty() ? "" : "; ") + std::string("5 bundled verdicts, 5 random plane waves");
  return c;
}

Check gpw_reduction() {
  Check c;
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> U(-1, 1);
  double worst = 0, du = 0, dE = 0;
  for (int k = 0; k < 10; ++k) {
    auto coeffs = [&] { return fmt(U(rng)) + "+(" + fmt(U(rng)) + ")*u+(" + fmt(U(rng)) + ")*u^2"; };
    Json d = bundled("plane-wave-geodesic");
    d["gpw"]["profile"]["plane_wave"] = Json{{"f1", coeffs()}, {"f2", coeffs()}, {"f", coeffs()}};
    d["gpw"]["initial"] = Json{{"x0", {U(rng), U(rng)}},
                               {"xdot0", {U(rng), U(rng)}},
                               {"u0", U(rng)},
                               {"delta", k % 3 == 0 ? 0.0 : 2 * U(rng)},
                               {"v0", U(rng)},
                               {"vdot0", U(rng)}};
    d["integrator"]["horizon"] = 1;
    const Json r = results_of(d);
    c.require(r["outcome"]["kind"] == "HorizonReached", "wave " + std::to_string(k) + " did not reach the horizon");
    const Json& o = r["oracle"];
    worst = std::max(worst, o["max_coordinate_discrepancy"].get<double>());
    du = std::max(du, o["udot_drift"].get<double>());
    dE = std::max(dE, o["energy_drift_relative"].get<double>());
  }
  c.require(worst < 1e-5, "discrepancy " + fmt(worst));
  c.require(du < 1e-8, "u' drift " + fmt(du));
  c.require(dE < 1e-8, "g(y',y') drift " + fmt(dE));
  c.detail += (c.detail.empty() ? "" : "; ") + std::string("discrepancy ") + fmt(worst) + ", u' drift " + fmt(du) +
              ", energy drift " + fmt(dE);
  return c;
}

Check hyperbolic_invariants() {
  Check c;
  const ChartManifold m = hyperbolic_half_plane();
  IntegratorConfig cfg;
  cfg.horizon = 10;
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> U(-1, 1);
  double worst = 0;
  for (int k = 0; k < 10; ++k) {
    const Vec x = vec({U(rng), 1 + 0.5 * U(rng)});
    const Vec v = vec({U(rng), U(rng)});
    const auto traj = integrate(m, ForceSystem::free(), {x, v}, cfg);
    c.require(traj.outcome().kind == OutcomeKind::HorizonReached, "geodesic " + std::to_string(k) + " stopped early");
    const double e0 = norm_sq(m, x, v);
    for (const auto& s : traj.steps()) {
      const double rate = std::abs(norm_sq(m, s.x, s.xdot) - e0) / e0 / std::max(1.0, std::abs(s.t));
      worst = std::max(worst, rate);
    }
  }
  c.require(worst < 1e-8, "drift per unit time " + fmt(worst));
  c.detail += (c.detail.empty() ? "" : "; ") + std::string("relative drift per unit time ") + fmt(worst);
  return c;
}

Check determinism() {
  Check c;
  int count = 0;
  for (const auto& e : std::filesystem::directory_iterator(kDir)) {
    if (e.path().extension() != ".scn") continue;
    ++count;
    const Json d = load_scenario_file(e.path().string());
    const auto a = run_scenario(build_scenario(d), {1});
    const auto b = run_scenario(build_scenario(d), {4});
    const std::string name = e.path().filename().string();
    c.require(render_machine(a.report) == render_machine(b.report), name + " machine report differs");
    c.require(render_human(a.report) == render_human(b.report), name + " text report differs");
    bool same = a.artifacts.size() == b.artifacts.size();
    for (std::size_t i = 0; same && i < a.artifacts.size(); ++i)
      same = a.artifacts[i].file == b.artifacts[i].file && a.artifacts[i].content == b.artifacts[i].content;
    c.require(same, name + " artifacts differ");
  }
  c.require(count > 0, "no bundled scenarios");
  c.detail += (c.detail.empty() ? "" : "; ") + std::to_string(count) + " scenarios";
  return c;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Check()>> criteria[] = {
      {"AC1 harmonic oscillator fidelity", harmonic_fidelity},
      {"AC2 closed-form blow-up time", closed_form_blowup},
      {"AC3 comparison solver", comparison_solver},
      {"AC4 energy envelope", gronwall_envelope},
      {"AC5 certificates on bundled scenarios", certificates},
      {"AC6 wave reduction against full geodesic", gpw_reduction},
      {"AC7 curved-base geodesic invariants", hyperbolic_invariants},
      {"AC8 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Check c;
    try {
      c = fn();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail = std::string("exception: ") + e.what();
    }
    failed += !c.ok;
    std::printf("%s %s (%s)\n", c.ok ? "PASS" : "FAIL", name, c.detail.c_str());
  }
  return failed ? 1 : 0;
}
