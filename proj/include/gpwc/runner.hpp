#pragma once

// Executes one scenario task and assembles the report. Reports carry no
// timing, so identical inputs give byte-identical output.

#include "gpwc/scenario.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace gpwc {

inline constexpr const char* kToolName = "gpwc";
inline constexpr const char* kToolVersion = "0.1.0";

struct RunOptions {
  int jobs = 1;  // worker threads inside a task (completeness maps)
};

struct Artifact {
  std::string file;
  std::string content;
};

struct RunResult {
  Json report;
  std::vector<Artifact> artifacts;
};

// ---------------------------------------------------------------------------
// JSON helpers

inline Json to_json(const Vec& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Json to_json(const Outcome& o) {
  return Json{{"kind", to_string(o.kind)}, {"code", outcome_code(o.kind)}, {"time", o.time}};
}

inline Json to_json(const MarginReport& r) {
  Json j{{"premise", r.premise}, {"pass", r.pass}, {"worst_margin", r.worst_margin}};
  j["worst_x"] = r.worst_x.size() ? to_json(r.worst_x) : Json(nullptr);
  j["worst_t"] = r.worst_t;
  j["samples"] = r.samples;
  j["dependent_failure"] = r.dependent_failure;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline Json to_json(const SBoundsReport& s) {
  return Json{{"N_two_sided", s.N_two_sided}, {"N_upper", s.N_upper},   {"N_lower", s.N_lower},
              {"worst_t", s.worst_t_two_sided}, {"finite", s.finite}, {"samples", s.samples},
              {"tensor_present", s.tensor_present}};
}

inline Json to_json(const GrowthReport& g) {
  return Json{{"pass", g.pass},
              {"max_ratio", g.max_ratio},
              {"median_decile_ratio", g.median_decile_ratio},
              {"farthest_decile_ratio", g.farthest_decile_ratio},
              {"worst_u", g.worst_t},
              {"samples", g.samples},
              {"criterion", g.criterion}};
}

inline Json to_json(const CompletenessCertificate& c) {
  Json j{{"verdict", to_string(c.verdict)}};
  Json passing = Json::array();
  for (Verdict v : c.passing) passing.push_back(to_string(v));
  j["passing"] = passing;
  j["base_complete"] = c.base_complete;
  Json ev = Json::array();
  for (const auto& r : c.evidence) ev.push_back(to_json(r));
  j["evidence"] = ev;
  if (c.s_bounds) j["operator_bounds"] = to_json(*c.s_bounds);
  if (c.growth) j["linear_growth"] = to_json(*c.growth);
  j["notes"] = c.notes;
  j["caveat"] = c.caveat;
  return j;
}

inline Json to_json(const DivergenceVerdict& d) {
  return Json{{"kind", to_string(d.kind)}, {"estimate", d.estimate}, {"last_R", d.last_R}, {"doublings", d.doublings}};
}

// "path = value" lines, one per leaf, in document order.
inline void flatten(const Json& j, const std::string& path, std::string& out) {
  if (j.is_object()) {
    if (j.empty()) out += path + " = {}\n";
    for (auto it = j.begin(); it != j.end(); ++it) flatten(it.value(), path.empty() ? it.key() : path + "." + it.key(), out);
  } else if (j.is_array()) {
    if (j.empty()) out += path + " = []\n";
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], path + "[" + std::to_string(i) + "]", out);
  } else {
    out += path + " = " + j.dump() + "\n";
  }
}

inline std::string render_human(const Json& report) {
  std::string out;
  flatten(report, "", out);
  return out;
}

inline std::string render_machine(const Json& report) { return report.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Tasks

namespace detail {

inline double max_energy_drift(const ChartManifold& m, const ForceSystem& fs, const Trajectory& traj) {
  const auto& st = traj.steps();
  auto E = [&](const StepRecord& r) { return 0.5 * norm_sq(m, r.x, r.xdot) + fs.potential(r.x, r.t); };
  const double E0 = E(st.front());
  double worst = 0.0;
  for (const auto& r : st) worst = std::max(worst, std::abs(E(r) - E0));
  return worst / std::max(1.0, std::abs(E0));
}

inline std::string csv_of(const Trajectory& t) {
  std::ostringstream os;
  t.write_csv(os);
  return os.str();
}

inline Json integrate_one(const Scenario& sc, const InitialSpec& in, RunResult* res) {
  const ChartManifold& m = *sc.manifold;
  const TangentVector init{in.x, in.xdot};
  const Trajectory traj = integrate(m, sc.force, init, sc.integrator, in.direction);
  Json j;
  j["direction"] = to_string(in.direction);
  j["outcome"] = to_json(traj.outcome());
  j["steps"] = traj.steps().size();
  j["t_final"] = traj.back().t;
  j["x_final"] = to_json(traj.back().x);
  j["xdot_final"] = to_json(traj.back().xdot);
  if (sc.potential_autonomous && !sc.force.has_tensor() && traj.outcome().kind == OutcomeKind::HorizonReached)
    j["energy_drift_relative"] = max_energy_drift(m, sc.force, traj);
  if (traj.outcome().kind == OutcomeKind::BlowUpSuspected) {
    j["t_star"] = traj.outcome().time;
    if (in.refine_blowup) {
      try {
        const auto b = refine_blowup(m, sc.force, init, sc.integrator, traj);
        j["blowup"] = Json{{"t_lo", b.t_lo}, {"t_hi", b.t_hi}, {"t_cross", b.t_cross}, {"levels", b.levels}};
        j["t_star"] = b.t_cross;
      } catch (const NotABlowup& e) {
        j["blowup"] = Json{{"refinement", e.detail()}};
      }
    }
  }
  if (res) res->artifacts.push_back({sc.prefix + ".csv", csv_of(traj)});
  return j;
}

inline Json run_integrate(const Scenario& sc, RunResult& res) {
  Json r;
  r["manifold"] = sc.manifold->name();
  Json one = integrate_one(sc, *sc.initial, &res);
  for (auto it = one.begin(); it != one.end(); ++it) r[it.key()] = it.value();
  return r;
}

inline Json run_certify(const Scenario& sc, const RunOptions&) {
  Json r;
  r["manifold"] = sc.manifold->name();
  r["target"] = sc.certify_target;
  if (sc.gpw) {
    const BoundsSpec& b = *sc.bounds;
    const GpwBounds gb{b.alpha0, b.beta0, b.grid, b.times(),
                       b.anchor.value_or(Vec(Vec::Zero(sc.manifold->dim())))};
    const GpwTarget target = sc.certify_target == "corollary2"   ? GpwTarget::Corollary2
                             : sc.certify_target == "corollary3" ? GpwTarget::Corollary3
                                                                 : GpwTarget::All;
    const auto c = classify_gpw_completeness(*sc.gpw->spacetime, gb, target);
    r["wave"] = sc.gpw->profile_kind;
    if (sc.gpw->gravitational_wave) r["gravitational_wave"] = *sc.gpw->gravitational_wave;
    r["certificate"] = to_json(c.certificate);
    r["reduction_equivalent"] = c.reduction_equivalent;
    if (sc.gpw->initial) {
      const auto split = reduce_geodesic(sc.gpw->spacetime, *sc.gpw->initial, sc.integrator);
      r["independent_geodesic"] = Json{{"outcome", to_json(split.outcome())}};
    }
    return r;
  }
  const CertifyTarget target = sc.certify_target == "theorem"    ? CertifyTarget::TheoremG01
                               : sc.certify_target == "forward"  ? CertifyTarget::Forward
                               : sc.certify_target == "backward" ? CertifyTarget::Backward
                                                                 : CertifyTarget::All;
  const auto c = certify(*sc.manifold, sc.force, sc.bounds->data(), target);
  r["certificate"] = to_json(c);
  if (sc.initial) r["independent_integration"] = integrate_one(sc, *sc.initial, nullptr);
  return r;
}

inline std::vector<InitialSpec> envelope_initials(const Scenario& sc) {
  std::vector<InitialSpec> out;
  if (sc.initial) out.push_back(*sc.initial);
  if (sc.random_initial) {
    const int n = sc.manifold->dim();
    std::mt19937 rng(sc.random_initial->seed);
    std::normal_distribution<double> N(0.0, 1.0);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto ball = [&] {
      Vec d(n);
      for (int i = 0; i < n; ++i) d[i] = N(rng);
      const double norm = d.norm();
      const double r = sc.random_initial->radius * std::pow(U(rng), 1.0 / n);
      return Vec(norm > 0 ? Vec(d * (r / norm)) : Vec(Vec::Zero(n)));
    };
    for (int k = 0; k < sc.random_initial->count; ++k) {
      InitialSpec in;
      in.x = ball();
      in.xdot = ball();
      if (!sc.manifold->in_chart(in.x)) throw ValidationError("random initial point left the chart");
      out.push_back(in);
    }
  }
  return out;
}

// Energy envelope along trajectories: v(t) <= v(0) exp(A* |t|) at every
// accepted step, the same bound through the comparison solver, and the
// finite difference of v against the derivative identity.
inline Json run_envelope(const Scenario& sc) {
  const ChartManifold& m = *sc.manifold;
  const BoundsSpec& b = *sc.bounds;
  const BoundData bd = b.data();
  const SBoundsReport sb = check_S_bounds(m, sc.force, bd.t_grid, bd.grid);
  const EnergyFrame frame = make_energy_frame(b.T, b.alpha0, b.beta0, bd.t_grid, sb.N_two_sided);
  const MarginReport bb = check_bounded_below(sc.force, bd);
  const MarginReport rate = check_dVdt_bound(sc.force, bd, Sided::TwoSided, bb.pass);
  Json r;
  r["manifold"] = m.name();
  r["frame"] = Json{{"T", frame.horizon}, {"A_T", frame.A_T}, {"B_T", frame.B_T}, {"N_T", frame.N_T},
                    {"A_T_star", frame.A_T_star}};
  r["premises"] = Json::array({to_json(bb), to_json(rate)});
  r["operator_bounds"] = to_json(sb);

  IntegratorConfig cfg = sc.integrator;
  cfg.horizon = b.T;
  std::optional<DominatingSolution> dom_unit;
  if (frame.A_T_star > 0.0) {
    // v0(t) = v(0) e^{A* t} from phi(s) = A* s, scaled per trajectory
    const double A = frame.A_T_star;
    dom_unit.emplace(solve_dominating(PhiFunction(1.0, [A](double s) { return A * s; }), 1.0, b.T));
  }
  double worst_margin = std::numeric_limits<double>::infinity();
  double worst_fd = 0.0;
  bool all_pass = true;
  bool all_lemma = true;
  Json runs = Json::array();
  const auto inits = envelope_initials(sc);
  for (std::size_t k = 0; k < inits.size(); ++k) {
    for (Direction dir : sc.envelope_directions) {
      const Trajectory traj = integrate(m, sc.force, {inits[k].x, inits[k].xdot}, cfg, dir);
      const auto& st = traj.steps();
      const PhaseState s0{st.front().x, st.front().xdot, st.front().t};
      const double v0 = energy_v(m, sc.force, frame, s0);
      double margin = std::numeric_limits<double>::infinity();
      std::vector<EnvelopeSample> samples;
      for (const auto& rec : st) {
        const double v = energy_v(m, sc.force, frame, {rec.x, rec.xdot, rec.t});
        const double tau = std::abs(rec.t - st.front().t);
        const double bound = v0 * std::exp(frame.A_T_star * tau);
        margin = std::min(margin, bound - v);
        samples.push_back({tau, v / v0});
      }
      bool lemma_ok = true;
      double lemma_margin = 0.0;
      if (dom_unit) {
        // normalised by v(0) so one dominating solution serves every run
        const auto rep = verify_envelope(samples, *dom_unit);
        lemma_ok = rep.conclusion_holds;
        lemma_margin = rep.worst_margin * v0;
      } else {
        for (const auto& s : samples) lemma_margin = std::min(lemma_margin, 1.0 - s.v);
        lemma_ok = lemma_margin >= -1e-12;
        lemma_margin *= v0;
      }
      double fd = 0.0;
      for (std::size_t i = 1; i + 1 < st.size(); ++i) {
        const double dt = 1e-3 * std::min(std::abs(st[i].t - st[i - 1].t), std::abs(st[i + 1].t - st[i].t));
        const double vp = energy_v(m, sc.force, frame, traj.sample(st[i].t + dt));
        const double vm = energy_v(m, sc.force, frame, traj.sample(st[i].t - dt));
        const PhaseState here{st[i].x, st[i].xdot, st[i].t};
        const double id = energy_derivative_identity(m, sc.force, here);
        const double scale = std::max(std::abs(id), energy_v(m, sc.force, frame, here));
        fd = std::max(fd, std::abs((vp - vm) / (2 * dt) - id) / scale);
      }
      const bool pass = margin >= 0.0 && traj.outcome().kind == OutcomeKind::HorizonReached;
      all_pass = all_pass && pass;
      all_lemma = all_lemma && lemma_ok;
      worst_margin = std::min(worst_margin, margin);
      worst_fd = std::max(worst_fd, fd);
      runs.push_back(Json{{"index", k},
                          {"direction", to_string(dir)},
                          {"x0", to_json(inits[k].x)},
                          {"xdot0", to_json(inits[k].xdot)},
                          {"outcome", to_json(traj.outcome())},
                          {"steps", st.size()},
                          {"v0", v0},
                          {"envelope_margin", margin},
                          {"comparison_margin", lemma_margin},
                          {"comparison_pass", lemma_ok},
                          {"identity_fd_rel_error", fd},
                          {"pass", pass}});
    }
  }
  r["summary"] = Json{{"runs", runs.size()},
                      {"all_pass", all_pass},
                      {"comparison_all_pass", all_lemma},
                      {"worst_envelope_margin", worst_margin},
                      {"worst_identity_fd_rel_error", worst_fd}};
  r["runs"] = runs;
  return r;
}

inline Json run_gpw_geodesic(const Scenario& sc, RunResult& res) {
  const GpwSpec& g = *sc.gpw;
  const auto split = reduce_geodesic(g.spacetime, *g.initial, sc.integrator);
  Json r;
  r["base"] = sc.manifold->name();
  r["wave"] = g.profile_kind;
  if (g.gravitational_wave) r["gravitational_wave"] = *g.gravitational_wave;
  r["outcome"] = to_json(split.outcome());
  r["steps"] = split.base_trajectory().steps().size();
  r["E_const"] = split.E_const();
  const double E = split.E_const();
  r["causal_character"] = E < 0 ? "timelike" : E > 0 ? "spacelike" : "null";
  const double tf = split.base_trajectory().back().t;
  const FullState f = split.reconstruct(tf);
  r["final"] = Json{{"t", tf}, {"x", to_json(f.x)}, {"u", f.u}, {"v", f.v}};
  if (g.oracle) {
    const Trajectory full = full_geodesic_oracle(*g.spacetime, *g.initial, sc.integrator);
    const int n = sc.manifold->dim();
    double worst = 0.0, du = 0.0, dE = 0.0;
    const double E0 = full.front().xdot.dot(
        g.spacetime->full_metric(full.front().x.head(n), full.front().x[n]) * full.front().xdot);
    const double t_end = std::min(full.t_max(), split.base_trajectory().t_max());
    for (const auto& rec : full.steps()) {
      const double Ek = rec.xdot.dot(g.spacetime->full_metric(rec.x.head(n), rec.x[n]) * rec.xdot);
      dE = std::max(dE, std::abs(Ek - E0));
      du = std::max(du, std::abs(rec.xdot[n] - g.initial->delta));
      if (rec.t > t_end) continue;
      const FullState s = split.reconstruct(rec.t);
      worst = std::max({worst, (s.x - rec.x.head(n)).cwiseAbs().maxCoeff(), std::abs(s.u - rec.x[n]),
                        std::abs(s.v - rec.x[n + 1])});
    }
    r["oracle"] = Json{{"outcome", to_json(full.outcome())},
                       {"steps", full.steps().size()},
                       {"max_coordinate_discrepancy", worst},
                       {"udot_drift", du},
                       {"energy_drift_relative", dE / std::max(1.0, std::abs(E0))}};
  }
  std::ostringstream os;
  split.write_csv(os);
  res.artifacts.push_back({sc.prefix + ".csv", os.str()});
  return r;
}

inline Json run_gpw_map(const Scenario& sc, const RunOptions& opt, RunResult& res) {
  const GpwSpec& g = *sc.gpw;
  const auto inits = map_initial_data(g.map->x0, g.map->xdot0, g.map->deltas);
  const auto entries = completeness_map(g.spacetime, inits, sc.integrator, opt.jobs);
  Json counts = Json::object();
  for (auto k : {OutcomeKind::HorizonReached, OutcomeKind::BlowUpSuspected, OutcomeKind::ChartExit,
                 OutcomeKind::ToleranceFailure})
    counts[to_string(k)] = 0;
  for (const auto& e : entries) counts[to_string(e.outcome.kind)] = counts[to_string(e.outcome.kind)].get<int>() + 1;
  Json r;
  r["base"] = sc.manifold->name();
  r["wave"] = g.profile_kind;
  if (g.gravitational_wave) r["gravitational_wave"] = *g.gravitational_wave;
  r["entries"] = entries.size();
  r["outcomes"] = counts;
  std::ostringstream os;
  write_map_csv(os, entries, sc.manifold->dim());
  res.artifacts.push_back({sc.prefix + ".map.csv", os.str()});
  return r;
}

inline Json run_compare(const Scenario& sc, RunResult& res) {
  const CompareSpec& c = *sc.compare;
  const Expr phi_expr = c.phi;
  const PhiFunction phi(c.a, [phi_expr](double s) { return phi_expr.eval({{}, 0.0, 0.0, s}); });
  const DivergenceVerdict d = check_divergence(phi);
  Json r;
  r["phi"] = c.phi_text;
  r["a"] = c.a;
  r["monotone_certificate"] = Json{{"samples", phi.certificate().samples},
                                   {"s_min", phi.certificate().s_min},
                                   {"s_max", phi.certificate().s_max},
                                   {"phi_min", phi.certificate().phi_min},
                                   {"stamp", phi.certificate().stamp}};
  r["divergence"] = to_json(d);
  if (d.kind != DivergenceKind::Diverges) {
    r["dominating_solution"] = nullptr;
    r["note"] = "integral of 1/phi not shown to diverge; dominating solution not constructed";
    return r;
  }
  const DominatingSolution dom = solve_dominating(phi, c.v0, c.t_max);
  double round_trip = 0.0, ref_err = 0.0;
  std::ostringstream csv;
  csv << "t,v0";
  if (c.reference) csv << ",reference";
  csv << '\n';
  double last = c.v0;
  bool monotone = true;
  for (int i = 0; i < c.samples; ++i) {
    const double t = c.t_max * i / (c.samples - 1);
    const double w = dom(t);
    if (i > 0 && !(w > last)) monotone = false;
    last = w;
    round_trip = std::max(round_trip, std::abs(dom.time_to(w) - t));
    csv << format_double(t) << ',' << format_double(w);
    if (c.reference) {
      const double ref = c.reference->eval({{}, t});
      ref_err = std::max(ref_err, std::abs(w - ref));
      csv << ',' << format_double(ref);
    }
    csv << '\n';
  }
  r["dominating_solution"] = Json{{"v0_init", c.v0},
                                  {"t_max", c.t_max},
                                  {"samples", c.samples},
                                  {"value_at_t_max", dom(c.t_max)},
                                  {"strictly_increasing", monotone},
                                  {"round_trip_max_error", round_trip}};
  if (c.reference) r["dominating_solution"]["reference_max_abs_error"] = ref_err;
  res.artifacts.push_back({sc.prefix + ".csv", csv.str()});
  return r;
}

}  // namespace detail

inline RunResult run_scenario(const Scenario& sc, const RunOptions& opt = {}) {
  RunResult res;
  Json& rep = res.report;
  rep["tool"] = Json{{"name", kToolName}, {"version", kToolVersion}};
  rep["scenario"] = sc.name;
  rep["task"] = sc.task;
  Json results;
  try {
    if (sc.task == "integrate") results = detail::run_integrate(sc, res);
    else if (sc.task == "certify") results = detail::run_certify(sc, opt);
    else if (sc.task == "envelope") results = detail::run_envelope(sc);
    else if (sc.task == "gpw-geodesic") results = detail::run_gpw_geodesic(sc, res);
    else if (sc.task == "gpw-map") results = detail::run_gpw_map(sc, opt, res);
    else if (sc.task == "compare-lemma") results = detail::run_compare(sc, res);
  } catch (const Error& e) {
    throw Error(e.kind(), "scenario '" + sc.name + "' (" + sc.task + "): " + e.detail());
  }
  rep["results"] = results;
  Json files = Json::array();
  for (const auto& a : res.artifacts) files.push_back(a.file);
  rep["artifacts"] = files;
  rep["config"] = sc.config;
  return res;
}

}  // namespace gpwc
