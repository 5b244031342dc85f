#pragma once

// Generalized plane waves g = g0 + 2 du dv + H(x,u) du^2 on M0 x R^2:
// geodesic reduction to a forced trajectory on the base, reconstruction,
// a direct full-dimensional oracle and completeness classification.

#include "gpwc/hypotheses.hpp"
#include "gpwc/integrate.hpp"
#include "gpwc/quadrature.hpp"

#include <atomic>
#include <cmath>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace gpwc {

using ScalarFnXU = std::function<double(const Vec&, double)>;

class GpwSpacetime {
 public:
  // witness_x, witness_u: a point with H != 0.
  GpwSpacetime(ChartManifold base, ScalarFnXU H, Vec witness_x, double witness_u, CovectorFnXU dHdx = {},
               ScalarFnXU dHdu = {})
      : base_(std::make_shared<const ChartManifold>(std::move(base))),
        H_(std::move(H)),
        dHdx_(std::move(dHdx)),
        dHdu_(std::move(dHdu)),
        witness_x_(std::move(witness_x)),
        witness_u_(witness_u) {
    if (!H_) throw ValidationError("wave profile H is missing");
    require_in_chart(*base_, witness_x_);
    if (!(H_(witness_x_, witness_u_) != 0.0))
      throw ValidationError("wave profile must be nonzero at the witness point");
  }

  const ChartManifold& base() const { return *base_; }
  std::shared_ptr<const ChartManifold> base_ptr() const { return base_; }
  int base_dim() const { return base_->dim(); }
  const Vec& witness_x() const { return witness_x_; }
  double witness_u() const { return witness_u_; }

  double H(const Vec& x, double u) const { return H_(x, u); }

  Vec dH_dx(const Vec& x, double u) const {
    if (dHdx_) return dHdx_(x, u);
    Vec g(x.size());
    for (int i = 0; i < x.size(); ++i) {
      Vec xp = x, xm = x;
      const double h = fd_step(x[i]);
      xp[i] += h;
      xm[i] -= h;
      g[i] = (H_(xp, u) - H_(xm, u)) / (xp[i] - xm[i]);
    }
    return g;
  }

  double dH_du(const Vec& x, double u) const {
    if (dHdu_) return dHdu_(x, u);
    const double h = fd_step(u);
    const double up = u + h, um = u - h;
    return (H_(x, up) - H_(x, um)) / (up - um);
  }

  // (n+2)x(n+2) metric in coordinates (x, u, v).
  Mat full_metric(const Vec& x, double u) const {
    const int n = base_dim();
    Mat g = Mat::Zero(n + 2, n + 2);
    g.topLeftCorner(n, n) = metric_at(*base_, x);
    g(n, n) = H_(x, u);
    g(n, n + 1) = g(n + 1, n) = 1.0;
    return g;
  }

 private:
  std::shared_ptr<const ChartManifold> base_;
  ScalarFnXU H_;
  CovectorFnXU dHdx_;
  ScalarFnXU dHdu_;
  Vec witness_x_;
  double witness_u_;
};

struct PlaneWaveProfile {
  ScalarFnXU H;
  CovectorFnXU dHdx;
  ScalarFnXU dHdu;
  bool gravitational_wave = false;  // f1 == f2 on the sampled u values
};

// H(x, y, u) = f1(u) x^2 - f2(u) y^2 + 2 f(u) x y. Derivatives in u use
// central differences of the coefficient functions.
inline PlaneWaveProfile plane_wave_H(TimeFn f1, TimeFn f2, TimeFn f, double sample_T = 10.0,
                                     int sample_count = 201) {
  PlaneWaveProfile p;
  p.H = [=](const Vec& x, double u) {
    return f1(u) * x[0] * x[0] - f2(u) * x[1] * x[1] + 2.0 * f(u) * x[0] * x[1];
  };
  p.dHdx = [=](const Vec& x, double u) {
    Vec g(2);
    g[0] = 2.0 * f1(u) * x[0] + 2.0 * f(u) * x[1];
    g[1] = -2.0 * f2(u) * x[1] + 2.0 * f(u) * x[0];
    return g;
  };
  auto d = [](const TimeFn& fn, double u) {
    const double h = fd_step(u), up = u + h, um = u - h;
    return (fn(up) - fn(um)) / (up - um);
  };
  p.dHdu = [=](const Vec& x, double u) {
    return d(f1, u) * x[0] * x[0] - d(f2, u) * x[1] * x[1] + 2.0 * d(f, u) * x[0] * x[1];
  };
  p.gravitational_wave = true;
  for (double u : symmetric_times(sample_T, sample_count)) {
    const double a = f1(u), b = f2(u);
    if (std::abs(a - b) > 1e-12 * std::max({1.0, std::abs(a), std::abs(b)})) {
      p.gravitational_wave = false;
      break;
    }
  }
  return p;
}

struct GeodesicInitialData {
  Vec x0;
  Vec xdot0;
  double u0 = 0.0;
  double delta = 0.0;  // udot, conserved
  double v0 = 0.0;
  double vdot0 = 0.0;
};

// g(gamma', gamma') = g0(xdot, xdot) + 2 udot vdot + H udot^2
inline double gpw_energy(const GpwSpacetime& st, const Vec& x, const Vec& xdot, double u, double udot,
                         double vdot) {
  return norm_sq(st.base(), x, xdot) + 2.0 * udot * vdot + st.H(x, u) * udot * udot;
}

struct FullState {
  double t = 0.0;
  Vec x;
  double u = 0.0;
  double v = 0.0;
  Vec xdot;
  double udot = 0.0;
  double vdot = 0.0;
};

class SplitGeodesic {
 public:
  SplitGeodesic(std::shared_ptr<const GpwSpacetime> st, Trajectory base, GeodesicInitialData init, double E,
                std::vector<double> v_nodes)
      : st_(std::move(st)), base_(std::move(base)), init_(std::move(init)), E_(E), v_nodes_(std::move(v_nodes)) {}

  const Trajectory& base_trajectory() const { return base_; }
  const Outcome& outcome() const { return base_.outcome(); }
  double u0() const { return init_.u0; }
  double delta() const { return init_.delta; }
  double E_const() const { return E_; }
  const GeodesicInitialData& initial_data() const { return init_; }
  const std::vector<double>& v_nodes() const { return v_nodes_; }

  double u(double t) const { return init_.u0 + init_.delta * t; }

  // v' from conservation of g(gamma', gamma')
  double vdot(const PhaseState& s) const {
    if (init_.delta == 0.0) return init_.vdot0;
    const double d = init_.delta;
    return (E_ - norm_sq(st_->base(), s.x, s.xdot) - st_->H(s.x, u(s.t)) * d * d) / (2.0 * d);
  }

  double v(double t) const {
    if (init_.delta == 0.0) {
      base_.sample(t);  // range check
      return init_.v0 + init_.vdot0 * t;
    }
    const auto& st = base_.steps();
    if (!(t >= base_.t_min() && t <= base_.t_max())) base_.sample(t);
    std::size_t i = 0;
    while (i + 1 < st.size() && st[i + 1].t <= t) ++i;
    if (st[i].t == t) return v_nodes_[i];
    return v_nodes_[i] + gauss_legendre5([&](double s) { return vdot(base_.sample(s)); }, st[i].t, t);
  }

  FullState reconstruct(double t) const {
    const PhaseState s = base_.sample(t);
    FullState f;
    f.t = t;
    f.x = s.x;
    f.xdot = s.xdot;
    f.u = u(t);
    f.udot = init_.delta;
    f.v = v(t);
    f.vdot = vdot(s);
    return f;
  }

  void write_csv(std::ostream& os) const {
    const int n = base_.dim();
    os << "t,u,v";
    for (int i = 1; i <= n; ++i) os << ",x" << i;
    for (int i = 1; i <= n; ++i) os << ",xdot" << i;
    os << '\n';
    const auto& st = base_.steps();
    for (std::size_t k = 0; k < st.size(); ++k) {
      const auto& r = st[k];
      os << format_double(r.t) << ',' << format_double(u(r.t)) << ',' << format_double(v_at_node(k));
      for (int i = 0; i < n; ++i) os << ',' << format_double(r.x[i]);
      for (int i = 0; i < n; ++i) os << ',' << format_double(r.xdot[i]);
      os << '\n';
    }
  }

  double v_at_node(std::size_t k) const {
    if (init_.delta == 0.0) return init_.v0 + init_.vdot0 * base_.steps()[k].t;
    return v_nodes_[k];
  }

 private:
  std::shared_ptr<const GpwSpacetime> st_;
  Trajectory base_;
  GeodesicInitialData init_;
  double E_;
  std::vector<double> v_nodes_;
};

// Base forcing for the x-part in the affine parameter:
// V(x, t) = -(delta^2 / 2) H(x, u0 + delta t).
inline ForceSystem reduced_force(const std::shared_ptr<const GpwSpacetime>& st, double u0, double delta) {
  if (delta == 0.0) return ForceSystem::free();
  const double c = 0.5 * delta * delta;
  return ForceSystem([st, u0, delta, c](const Vec& x, double t) { return -c * st->H(x, u0 + delta * t); },
                     [st, u0, delta, c](const Vec& x, double t) { return Vec(-c * st->dH_dx(x, u0 + delta * t)); },
                     [st, u0, delta, c](const Vec& x, double t) { return -c * delta * st->dH_du(x, u0 + delta * t); });
}

inline void validate_initial_data(const GpwSpacetime& st, const GeodesicInitialData& init) {
  if (!st.base().in_chart(init.x0)) throw InvalidInit("initial point outside the base chart");
  if (init.xdot0.size() != st.base_dim() || !init.xdot0.allFinite())
    throw InvalidInit("initial base velocity must be finite with the base dimension");
  if (!std::isfinite(init.u0) || !std::isfinite(init.delta) || !std::isfinite(init.v0) ||
      !std::isfinite(init.vdot0))
    throw InvalidInit("initial (u, udot, v, vdot) must be finite");
}

inline SplitGeodesic reduce_geodesic(const std::shared_ptr<const GpwSpacetime>& st, const GeodesicInitialData& init,
                                     const IntegratorConfig& cfg) {
  validate_initial_data(*st, init);
  const double E = gpw_energy(*st, init.x0, init.xdot0, init.u0, init.delta, init.vdot0);
  const ForceSystem fs = reduced_force(st, init.u0, init.delta);
  Trajectory traj = integrate(st->base(), fs, {init.x0, init.xdot0}, cfg);
  std::vector<double> nodes;
  if (init.delta != 0.0) {
    SplitGeodesic probe(st, traj, init, E, {});
    const auto& steps = traj.steps();
    nodes.reserve(steps.size());
    nodes.push_back(init.v0);
    for (std::size_t i = 1; i < steps.size(); ++i)
      nodes.push_back(nodes.back() + gauss_legendre5([&](double s) { return probe.vdot(traj.sample(s)); },
                                                     steps[i - 1].t, steps[i].t));
  }
  return SplitGeodesic(st, std::move(traj), init, E, std::move(nodes));
}

inline SplitGeodesic reduce_geodesic(const GpwSpacetime& st, const GeodesicInitialData& init,
                                     const IntegratorConfig& cfg) {
  return reduce_geodesic(std::make_shared<const GpwSpacetime>(st), init, cfg);
}

// Geodesics of the full metric in (x, u, v) with finite-difference
// Christoffel symbols; an independent check on the reduction.
inline Trajectory full_geodesic_oracle(const GpwSpacetime& st, const GeodesicInitialData& init,
                                       const IntegratorConfig& cfg) {
  validate_initial_data(st, init);
  const int n = st.base_dim();
  const int N = n + 2;
  auto stp = std::make_shared<const GpwSpacetime>(st);
  SecondOrderSystem sys;
  sys.dim = N;
  sys.in_chart = [stp, n](const Vec& y) { return y.allFinite() && stp->base().in_chart(y.head(n)); };
  sys.speed = [](const Vec&, const Vec& v) { return v.norm(); };
  sys.accel = [stp, n, N](double, const Vec& y, const Vec& yd) -> Vec {
    const Mat g = stp->full_metric(y.head(n), y[n]);
    std::vector<Mat> dG(static_cast<std::size_t>(N), Mat::Zero(N, N));
    for (int l = 0; l < n + 1; ++l) {  // metric does not depend on v
      Vec yp = y, ym = y;
      const double h = fd_step(y[l]);
      yp[l] += h;
      ym[l] -= h;
      if (!stp->base().in_chart(yp.head(n)) || !stp->base().in_chart(ym.head(n)))
        throw OutOfChart("finite-difference stencil leaves the base chart");
      dG[static_cast<std::size_t>(l)] =
          (stp->full_metric(yp.head(n), yp[n]) - stp->full_metric(ym.head(n), ym[n])) / (yp[l] - ym[l]);
    }
    const auto gamma = christoffel_from_derivatives(g.inverse(), dG);
    return -gamma.contract(yd, yd);
  };
  Vec y0(N), yd0(N);
  y0 << init.x0, init.u0, init.v0;
  yd0 << init.xdot0, init.delta, init.vdot0;
  return integrate_second_order(sys, y0, yd0, cfg, Direction::Forward);
}

struct GpwBounds {
  TimeFn alpha0;  // in u
  TimeFn beta0;   // upper bound for H in u
  SampleGrid grid;
  std::vector<double> u_grid;
  Vec anchor;
};

enum class GpwTarget { All, Corollary2, Corollary3 };

struct GpwCertificate {
  CompletenessCertificate certificate;
  bool reduction_equivalent = true;  // corollary checks agree with the potential form V = -H/2
};

// Premises of the two plane-wave corollaries: H <= beta0(u) together with
// |dH/du| <= alpha0(u)(beta0(u) - H), or at most linear growth of grad H.
inline GpwCertificate classify_gpw_completeness(const GpwSpacetime& st, const GpwBounds& b,
                                                GpwTarget target = GpwTarget::All) {
  const ChartManifold& m = st.base();
  if (!b.alpha0 || !b.beta0) throw ValidationError("bound data needs alpha0 and beta0");
  if (b.grid.empty() || b.u_grid.empty()) throw ValidationError("sample grids must be nonempty");
  for (const Vec& p : b.grid.points()) require_in_chart(m, p);
  GpwCertificate out;
  CompletenessCertificate& c = out.certificate;
  c.base_complete = m.complete_flag();
  c.notes.push_back("smoothness of metric and wave profile is assumed, not verified");
  std::vector<Verdict> ok;

  if (target != GpwTarget::Corollary3) {
    MarginReport upper, rate;
    upper.premise = "H_bounded_above";
    rate.premise = "dHdu_bound";
    for (double u : b.u_grid) {
      const double a = b.alpha0(u), beta = b.beta0(u);
      for (const Vec& p : b.grid.points()) {
        const double h = st.H(p, u);
        detail::record(upper, beta - h, p, u);
        detail::record(rate, a * (beta - h) - std::abs(st.dH_du(p, u)), p, u);
      }
    }
    detail::finish(upper);
    detail::finish(rate);
    if (!upper.pass) {
      rate.dependent_failure = true;
      rate.note = "upper bound premise failed; right-hand side may be negative";
    }

    // same premises through the potential V = -H/2, beta0^V = -beta0^H / 2
    const ForceSystem fs([&st](const Vec& x, double u) { return -0.5 * st.H(x, u); }, {},
                         [&st](const Vec& x, double u) { return -0.5 * st.dH_du(x, u); });
    const TimeFn beta = b.beta0;
    const BoundData bd{b.alpha0, [beta](double u) { return -0.5 * beta(u); }, b.grid, b.u_grid};
    MarginReport vb = check_bounded_below(fs, bd);
    MarginReport vr = check_dVdt_bound(fs, bd, Sided::TwoSided, vb.pass);
    auto agree = [](const MarginReport& h, const MarginReport& v) {
      if (h.pass != v.pass) return false;
      if (std::isinf(h.worst_margin) || std::isinf(v.worst_margin)) return h.worst_margin == 2.0 * v.worst_margin;
      return std::abs(0.5 * h.worst_margin - v.worst_margin) <= 1e-12 * std::max(1.0, std::abs(h.worst_margin));
    };
    out.reduction_equivalent = agree(upper, vb) && agree(rate, vr);
    vb.premise = "potential_form_bounded_below";
    vr.premise = "potential_form_dVdt_bound_two_sided";
    c.evidence.push_back(upper);
    c.evidence.push_back(rate);
    c.evidence.push_back(vb);
    c.evidence.push_back(vr);
    if (!out.reduction_equivalent) c.notes.push_back("corollary and potential-form checks disagree");
    if (upper.pass && rate.pass) ok.push_back(Verdict::CompleteByCorollary2);
  }

  if (target != GpwTarget::Corollary2) {
    const Vec anchor = b.anchor.size() == m.dim() ? b.anchor : Vec(Vec::Zero(m.dim()));
    c.growth = check_linear_growth_gradH(
        m, [&st](const Vec& x, double u) { return st.dH_dx(x, u); }, b.u_grid, b.grid, anchor);
    if (c.growth->pass) ok.push_back(Verdict::CompleteByCorollary3);
  }
  detail::settle(c, std::move(ok));
  return out;
}

struct MapEntry {
  GeodesicInitialData init;
  Outcome outcome;
};

// Runs reduce_geodesic for every initial datum on `jobs` threads. Results are
// stored by index, so the output does not depend on scheduling.
inline std::vector<MapEntry> completeness_map(const std::shared_ptr<const GpwSpacetime>& st,
                                              const std::vector<GeodesicInitialData>& inits,
                                              const IntegratorConfig& cfg, int jobs = 1) {
  std::vector<MapEntry> out(inits.size());
  std::vector<std::string> errors(inits.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < inits.size(); i = next++) {
      out[i].init = inits[i];
      try {
        out[i].outcome = reduce_geodesic(st, inits[i], cfg).outcome();
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(inits.size())));
  std::vector<std::thread> pool;
  for (int k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (!e.empty()) throw ValidationError("completeness map entry failed: " + e);
  return out;
}

// x0 from a grid, combined with every base velocity and every delta.
inline std::vector<GeodesicInitialData> map_initial_data(const SampleGrid& x0s, const std::vector<Vec>& xdots,
                                                         const std::vector<double>& deltas, double u0 = 0.0,
                                                         double v0 = 0.0, double vdot0 = 0.0) {
  std::vector<GeodesicInitialData> out;
  for (const Vec& x : x0s.points())
    for (const Vec& xd : xdots)
      for (double d : deltas) out.push_back({x, xd, u0, d, v0, vdot0});
  return out;
}

inline void write_map_csv(std::ostream& os, const std::vector<MapEntry>& entries, int n) {
  for (int i = 1; i <= n; ++i) os << "x0_" << i << ',';
  for (int i = 1; i <= n; ++i) os << "xdot0_" << i << ',';
  os << "delta,outcome,outcome_code,t_star\n";
  for (const auto& e : entries) {
    for (int i = 0; i < n; ++i) os << format_double(e.init.x0[i]) << ',';
    for (int i = 0; i < n; ++i) os << format_double(e.init.xdot0[i]) << ',';
    os << format_double(e.init.delta) << ',' << to_string(e.outcome.kind) << ',' << outcome_code(e.outcome.kind)
       << ',';
    if (e.outcome.kind == OutcomeKind::BlowUpSuspected) os << format_double(e.outcome.time);
    os << '\n';
  }
}

}  // namespace gpwc
