#pragma once

// Right-hand side of the forced trajectory equation
//
//   D xdot / dt = F(x, t) xdot - grad V(x, t)
//
// together with the self-adjoint part of F, its sampled spectral bounds and
// the shifted energy used by the Gronwall argument.

#include "gpwc/geometry.hpp"
#include "gpwc/sampling.hpp"

#include <algorithm>
#include <functional>
#include <span>

namespace gpwc {

class ForceSystem {
 public:
  using ScalarFn = std::function<double(const Vec&, double)>;
  using CovectorFn = std::function<Vec(const Vec&, double)>;
  using TensorFn = std::function<Mat(const Vec&, double)>;

  explicit ForceSystem(ScalarFn potential, CovectorFn potential_dx = {}, ScalarFn potential_dt = {},
                       TensorFn tensor = {})
      : V_(std::move(potential)),
        dVdx_(std::move(potential_dx)),
        dVdt_(std::move(potential_dt)),
        F_(std::move(tensor)) {
    if (!V_) throw ValidationError("force system needs a potential");
  }

  static ForceSystem free() {
    return ForceSystem([](const Vec&, double) { return 0.0; },
                       [](const Vec& x, double) { return Vec(Vec::Zero(x.size())); },
                       [](const Vec&, double) { return 0.0; });
  }

  ForceSystem with_tensor(TensorFn F) const {
    ForceSystem out = *this;
    out.F_ = std::move(F);
    return out;
  }

  double potential(const Vec& x, double t) const { return V_(x, t); }

  Vec potential_dx(const Vec& x, double t) const {
    return dVdx_ ? dVdx_(x, t) : potential_dx_fd(x, t);
  }
  double potential_dt(const Vec& x, double t) const {
    return dVdt_ ? dVdt_(x, t) : potential_dt_fd(x, t);
  }

  Vec potential_dx_fd(const Vec& x, double t, double scale = 1.0) const {
    Vec out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Vec xp = x, xm = x;
      const double h = fd_step(x[i]) * scale;
      xp[i] += h;
      xm[i] -= h;
      out[i] = (V_(xp, t) - V_(xm, t)) / (xp[i] - xm[i]);
    }
    return out;
  }
  double potential_dt_fd(const Vec& x, double t, double scale = 1.0) const {
    const double h = fd_step(t) * scale;
    const double tp = t + h, tm = t - h;
    return (V_(x, tp) - V_(x, tm)) / (tp - tm);
  }

  bool has_tensor() const { return static_cast<bool>(F_); }
  Mat tensor(const Vec& x, double t) const {
    return F_ ? F_(x, t) : Mat(Mat::Zero(x.size(), x.size()));
  }

 private:
  ScalarFn V_;
  CovectorFn dVdx_;
  ScalarFn dVdt_;
  TensorFn F_;
};

struct PhaseState {
  Vec x;
  Vec xdot;
  double t = 0.0;
};

struct PhaseVelocity {
  Vec xdot;
  Vec xddot;
};

// xddot^k = -Gamma^k_ij xdot^i xdot^j + (F xdot)^k - (grad V)^k
inline Vec acceleration(const ChartManifold& m, const ForceSystem& fs, const Vec& x, const Vec& xdot,
                        double t) {
  Vec a = -christoffel_at(m, x).contract(xdot, xdot);
  if (fs.has_tensor()) a += fs.tensor(x, t) * xdot;
  a -= gradient(m, x, fs.potential_dx(x, t));
  return a;
}

inline PhaseVelocity rhs_E(const ChartManifold& m, const ForceSystem& fs, const PhaseState& s) {
  return {s.xdot, acceleration(m, fs, s.x, s.xdot, s.t)};
}

// g-self-adjoint part S = (F + G^-1 F^T G) / 2.
inline Mat self_adjoint_part(const ChartManifold& m, const ForceSystem& fs, const Vec& x, double t) {
  const Mat g = metric_at(m, x);
  const Mat F = fs.tensor(x, t);
  return 0.5 * (F + g.llt().solve(F.transpose() * g));
}

struct SpectralRange {
  double s_inf = 0.0;
  double s_sup = 0.0;
};

// Extreme Rayleigh quotients g(v, S v) / g(v, v) at one point.
inline SpectralRange pointwise_spectrum(const ChartManifold& m, const ForceSystem& fs, const Vec& x,
                                        double t) {
  if (!fs.has_tensor()) return {};
  const Mat g = metric_at(m, x);
  const Mat F = fs.tensor(x, t);
  const Mat A = 0.5 * (g * F + F.transpose() * g);
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(0.5 * (A + A.transpose()), g,
                                                   Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw EigFailure("generalized eigenproblem failed");
  const Vec& ev = es.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

// (S_inf(t), S_sup(t)) as exact extremes over the sample grid.
inline SpectralRange operator_bounds(const ChartManifold& m, const ForceSystem& fs,
                                     const SampleGrid& grid, double t) {
  if (grid.empty()) throw ValidationError("operator_bounds needs a nonempty grid");
  SpectralRange out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Vec& p : grid.points()) {
    const auto r = pointwise_spectrum(m, fs, p, t);
    out.s_inf = std::min(out.s_inf, r.s_inf);
    out.s_sup = std::max(out.s_sup, r.s_sup);
  }
  return out;
}

// S_inf(t), S_sup(t) as functions of time over a fixed grid.
class OperatorBounds {
 public:
  OperatorBounds(const ChartManifold& m, ForceSystem fs, SampleGrid grid)
      : m_(&m), fs_(std::move(fs)), grid_(std::move(grid)) {}
  double s_inf(double t) const { return operator_bounds(*m_, fs_, grid_, t).s_inf; }
  double s_sup(double t) const { return operator_bounds(*m_, fs_, grid_, t).s_sup; }
  const SampleGrid& sample_spec() const { return grid_; }

 private:
  const ChartManifold* m_;
  ForceSystem fs_;
  SampleGrid grid_;
};

// Constants of the energy argument on [-T, T]:
//   A_T >= max alpha0, B_T <= min beta0 - 1, N_T bounds the relevant S side,
//   A_T_star = 2 N_T + A_T so that dv/dt <= A_T_star v.
struct EnergyFrame {
  double horizon = 0.0;
  double A_T = 0.0;
  double B_T = 0.0;
  double N_T = 0.0;
  double A_T_star = 0.0;
};

inline EnergyFrame make_energy_frame(double T, const std::function<double(double)>& alpha0,
                                     const std::function<double(double)>& beta0,
                                     std::span<const double> t_grid, double N_T) {
  if (!(T > 0.0)) throw ValidationError("energy frame horizon must be positive");
  if (t_grid.empty()) throw ValidationError("energy frame needs time samples");
  double amax = 0.0;
  double bmin = std::numeric_limits<double>::infinity();
  for (double t : t_grid) {
    amax = std::max(amax, alpha0(t));
    bmin = std::min(bmin, beta0(t));
  }
  EnergyFrame f;
  f.horizon = T;
  f.A_T = amax;
  f.B_T = bmin - 1.0;
  f.N_T = std::max(0.0, N_T);
  f.A_T_star = 2.0 * f.N_T + f.A_T;
  return f;
}

// v = u/2 + V(x, t) - B_T with u = g(xdot, xdot).
inline double energy_v(const ChartManifold& m, const ForceSystem& fs, const EnergyFrame& frame,
                       const PhaseState& s) {
  return 0.5 * norm_sq(m, s.x, s.xdot) + fs.potential(s.x, s.t) - frame.B_T;
}

// Exact dv/dt along solutions: g(S xdot, xdot) + dV/dt.
inline double energy_derivative_identity(const ChartManifold& m, const ForceSystem& fs,
                                         const PhaseState& s) {
  double rate = fs.potential_dt(s.x, s.t);
  if (fs.has_tensor()) {
    const Mat g = metric_at(m, s.x);
    rate += s.xdot.dot(g * self_adjoint_part(m, fs, s.x, s.t) * s.xdot);
  }
  return rate;
}

}  // namespace gpwc
