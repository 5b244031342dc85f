#pragma once

// Adaptive Dormand-Prince 5(4) integration of second-order systems with PI
// step control, and the outcome classifier that separates horizon arrival,
// suspected finite-time blow-up, chart exit and plain tolerance failure.

#include "gpwc/dynamics.hpp"
#include "gpwc/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>

namespace gpwc {

struct IntegratorConfig {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double max_step = 0.0;  // 0 means the horizon
  double horizon = 1.0;
  double speed_ceiling = 1e12;
  double min_step_fraction = 1e-14;
  long max_steps = 2'000'000;

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw ValidationError("tolerances must be positive");
    if (!(horizon > 0.0)) throw ValidationError("horizon must be positive");
    if (!(speed_ceiling > 0.0)) throw ValidationError("speed_ceiling must be positive");
    if (!(min_step_fraction > 0.0)) throw ValidationError("min_step_fraction must be positive");
    if (max_step < 0.0) throw ValidationError("max_step must be nonnegative");
  }
};

// x'' = accel(t, x, x') on a chart, with the norm used for blow-up detection.
struct SecondOrderSystem {
  int dim = 0;
  std::function<Vec(double, const Vec&, const Vec&)> accel;
  std::function<double(const Vec&, const Vec&)> speed;
  std::function<bool(const Vec&)> in_chart;
};

namespace detail {

struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

// Hairer's PI controller constants for DOPRI5.
struct PiControl {
  static constexpr double beta = 0.04;
  static constexpr double expo1 = 0.2 - beta * 0.75;
  static constexpr double safe = 0.9;
  static constexpr double fac_shrink = 5.0;   // 1 / fac1
  static constexpr double fac_grow = 0.1;     // 1 / fac2
};

struct StageFailure {
  bool outside_chart = false;
};

}  // namespace detail

inline Trajectory integrate_second_order(const SecondOrderSystem& sys, const Vec& x0, const Vec& v0,
                                         const IntegratorConfig& cfg, Direction dir) {
  cfg.validate();
  using detail::Dopri5;
  using detail::PiControl;
  const int n = sys.dim;
  const double sigma = dir == Direction::Forward ? 1.0 : -1.0;
  const double H = cfg.horizon;
  const double h_max = cfg.max_step > 0.0 ? std::min(cfg.max_step, H) : H;
  const double h_min = cfg.min_step_fraction * H;

  // s runs over [0, H]; physical time is sigma * s.
  auto f = [&](double s, const Vec& Y) -> Vec {
    const Vec x = Y.head(n), v = Y.tail(n);
    if (!Y.allFinite()) throw detail::StageFailure{false};
    if (!sys.in_chart(x)) throw detail::StageFailure{true};
    Vec out(2 * n);
    out.head(n) = sigma * v;
    out.tail(n) = sigma * sys.accel(sigma * s, x, v);
    if (!out.allFinite()) throw detail::StageFailure{false};
    return out;
  };
  auto err_norm = [&](const Vec& y, const Vec& ynew, const Vec& e) {
    double acc = 0.0;
    for (int i = 0; i < 2 * n; ++i) {
      const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      acc += (e[i] / sc) * (e[i] / sc);
    }
    return std::sqrt(acc / (2 * n));
  };

  Trajectory traj(n, dir);
  Vec Y(2 * n);
  Y << x0, v0;
  Vec K1;
  try {
    K1 = f(0.0, Y);
  } catch (const detail::StageFailure&) {
    throw InvalidInit("initial state is outside the chart or not finite");
  } catch (const OutOfChart& e) {
    throw InvalidInit(e.what());
  }
  traj.push({0.0, x0, v0, sigma * K1.tail(n)});

  // Hairer's starting step heuristic.
  double h;
  {
    Vec sc(2 * n);
    for (int i = 0; i < 2 * n; ++i) sc[i] = cfg.abs_tol + cfg.rel_tol * std::abs(Y[i]);
    const double d0 = (Y.cwiseQuotient(sc)).norm() / std::sqrt(2.0 * n);
    const double d1 = (K1.cwiseQuotient(sc)).norm() / std::sqrt(2.0 * n);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, h_max);
    double h1 = h0;
    try {
      const Vec K2 = f(h0, Y + h0 * K1);
      const double d2 = ((K2 - K1).cwiseQuotient(sc)).norm() / std::sqrt(2.0 * n) / h0;
      const double dm = std::max(d1, d2);
      h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    } catch (const detail::StageFailure&) {
    } catch (const OutOfChart&) {
    }
    h = std::min({100.0 * h0, h1, h_max});
  }

  double s = 0.0;
  double facold = 1e-4;
  bool last_rejected = false;
  long accepted = 0;
  std::deque<double> speeds{sys.speed(x0, v0)};

  auto speed_increasing = [&] {
    if (speeds.size() < 11) return false;
    for (std::size_t i = speeds.size() - 10; i < speeds.size(); ++i)
      if (!(speeds[i] > speeds[i - 1])) return false;
    return true;
  };
  auto collapse = [&](bool chart_trouble) {
    const double t = sigma * s;
    if (chart_trouble) return Outcome{OutcomeKind::ChartExit, t};
    if (speed_increasing()) return Outcome{OutcomeKind::BlowUpSuspected, t};
    return Outcome{OutcomeKind::ToleranceFailure, t};
  };

  for (;;) {
    if (accepted >= cfg.max_steps) {
      traj.set_outcome({OutcomeKind::ToleranceFailure, sigma * s});
      return traj;
    }
    bool last = false;
    if (s + h >= H) {
      h = H - s;
      last = true;
    }
    Vec Ynew, K7;
    double err = 0.0;
    bool chart_trouble = false;
    bool stage_failed = false;
    try {
      const Vec K2 = f(s + Dopri5::c2 * h, Y + h * Dopri5::a21 * K1);
      const Vec K3 = f(s + Dopri5::c3 * h, Y + h * (Dopri5::a31 * K1 + Dopri5::a32 * K2));
      const Vec K4 = f(s + Dopri5::c4 * h,
                       Y + h * (Dopri5::a41 * K1 + Dopri5::a42 * K2 + Dopri5::a43 * K3));
      const Vec K5 = f(s + Dopri5::c5 * h, Y + h * (Dopri5::a51 * K1 + Dopri5::a52 * K2 +
                                                    Dopri5::a53 * K3 + Dopri5::a54 * K4));
      const Vec K6 = f(s + h, Y + h * (Dopri5::a61 * K1 + Dopri5::a62 * K2 + Dopri5::a63 * K3 +
                                       Dopri5::a64 * K4 + Dopri5::a65 * K5));
      Ynew = Y + h * (Dopri5::a71 * K1 + Dopri5::a73 * K3 + Dopri5::a74 * K4 + Dopri5::a75 * K5 +
                      Dopri5::a76 * K6);
      K7 = f(s + h, Ynew);
      const Vec E = h * (Dopri5::e1 * K1 + Dopri5::e3 * K3 + Dopri5::e4 * K4 + Dopri5::e5 * K5 +
                         Dopri5::e6 * K6 + Dopri5::e7 * K7);
      err = err_norm(Y, Ynew, E);
      if (!std::isfinite(err)) stage_failed = true;
    } catch (const detail::StageFailure& e) {
      stage_failed = true;
      chart_trouble = e.outside_chart;
    } catch (const OutOfChart&) {
      stage_failed = true;
      chart_trouble = true;
    }

    if (!stage_failed && err <= 1.0) {
      const double fac11 = std::pow(err, PiControl::expo1);
      double fac = fac11 / std::pow(facold, PiControl::beta);
      fac = std::clamp(fac / PiControl::safe, PiControl::fac_grow, PiControl::fac_shrink);
      facold = std::max(err, 1e-4);
      s = last ? H : s + h;
      Y = Ynew;
      K1 = K7;
      ++accepted;
      const Vec x = Y.head(n), v = Y.tail(n);
      traj.push({sigma * s, x, v, sigma * K7.tail(n)});
      speeds.push_back(sys.speed(x, v));
      if (speeds.size() > 12) speeds.pop_front();
      if (!(speeds.back() <= cfg.speed_ceiling)) {
        traj.set_outcome({OutcomeKind::BlowUpSuspected, sigma * s});
        return traj;
      }
      if (last) {
        traj.set_outcome({OutcomeKind::HorizonReached, sigma * s});
        return traj;
      }
      double hnew = h / fac;
      if (last_rejected) hnew = std::min(hnew, h);
      last_rejected = false;
      h = std::min(hnew, h_max);
    } else {
      last_rejected = true;
      if (stage_failed) {
        h *= 0.25;
      } else {
        const double fac11 = std::pow(err, PiControl::expo1);
        h /= std::min(PiControl::fac_shrink, fac11 / PiControl::safe);
      }
      if (h < h_min) {
        traj.set_outcome(collapse(chart_trouble));
        return traj;
      }
    }
  }
}

// Second-order system of the forced trajectory equation on a chart.
inline SecondOrderSystem trajectory_system(const ChartManifold& m, const ForceSystem& fs) {
  SecondOrderSystem sys;
  sys.dim = m.dim();
  sys.accel = [&m, fs](double t, const Vec& x, const Vec& v) { return acceleration(m, fs, x, v, t); };
  sys.speed = [&m](const Vec& x, const Vec& v) { return std::sqrt(std::max(0.0, norm_sq(m, x, v))); };
  sys.in_chart = [&m](const Vec& x) { return m.in_chart(x); };
  return sys;
}

inline Trajectory integrate(const ChartManifold& m, const ForceSystem& fs, const TangentVector& init,
                            const IntegratorConfig& cfg, Direction dir = Direction::Forward) {
  if (!m.in_chart(init.base)) throw InvalidInit("initial point outside the chart of '" + m.name() + "'");
  if (init.components.size() != m.dim() || !init.components.allFinite())
    throw InvalidInit("initial velocity must be finite with dimension " + std::to_string(m.dim()));
  return integrate_second_order(trajectory_system(m, fs), init.base, init.components, cfg, dir);
}

struct BlowupInterval {
  double t_lo = 0.0;
  double t_hi = 0.0;
  double t_cross = 0.0;  // bisected ceiling crossing on the dense output
  int levels = 0;
  double width() const { return t_hi - t_lo; }
};

// Brackets the ceiling-crossing time by re-integrating with tolerances
// tightened tenfold per level until the bracket is narrower than 1e-3 |t_hi|.
// Brackets of successive levels are intersected, so they never widen.
inline BlowupInterval refine_blowup(const ChartManifold& m, const ForceSystem& fs,
                                    const TangentVector& init, const IntegratorConfig& cfg,
                                    const Trajectory& coarse, int max_levels = 6) {
  if (coarse.outcome().kind != OutcomeKind::BlowUpSuspected)
    throw NotABlowup(std::string("coarse trajectory ended with ") + to_string(coarse.outcome().kind));
  const Direction dir = coarse.direction();
  BlowupInterval best;
  bool have = false;
  IntegratorConfig level_cfg = cfg;
  for (int level = 0; level <= max_levels; ++level) {
    const Trajectory traj = level == 0 ? coarse : integrate(m, fs, init, level_cfg, dir);
    if (traj.outcome().kind != OutcomeKind::BlowUpSuspected)
      throw NotABlowup(std::string("refinement at level ") + std::to_string(level) + " ended with " +
                       to_string(traj.outcome().kind));
    const auto& st = traj.steps();
    const double ta = st.size() >= 2 ? st[st.size() - 2].t : st.back().t;
    const double tb = st.back().t;
    BlowupInterval cur{std::min(ta, tb), std::max(ta, tb), tb, level};
    if (have && cur.t_hi >= best.t_lo && cur.t_lo <= best.t_hi) {
      cur.t_lo = std::max(cur.t_lo, best.t_lo);
      cur.t_hi = std::min(cur.t_hi, best.t_hi);
    }
    // bisect the interpolated speed for the crossing inside the bracket
    if (st.size() >= 2 && cur.t_hi > cur.t_lo) {
      double lo = cur.t_lo, hi = cur.t_hi;
      const auto speed_at = [&](double t) {
        const auto ps = traj.sample(std::clamp(t, traj.t_min(), traj.t_max()));
        return std::sqrt(std::max(0.0, norm_sq(m, ps.x, ps.xdot)));
      };
      const bool fwd = dir == Direction::Forward;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        double sp = 0.0;
        try {
          sp = speed_at(mid);
        } catch (const Error&) {
          break;
        }
        if ((sp > cfg.speed_ceiling) == fwd) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      cur.t_cross = 0.5 * (lo + hi);
    }
    best = cur;
    have = true;
    if (level >= 1 && best.width() <= 1e-3 * std::abs(best.t_hi)) return best;
    level_cfg.rel_tol = std::max(level_cfg.rel_tol * 0.1, 1e-14);
    level_cfg.abs_tol = std::max(level_cfg.abs_tol * 0.1, 1e-16);
  }
  return best;
}

}  // namespace gpwc
