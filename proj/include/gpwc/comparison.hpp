#pragma once

// Scalar comparison: phi validation, divergence of int ds/phi, the
// dominating solution v0' = phi(v0) and envelope verification.

#include "gpwc/core.hpp"
#include "gpwc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gpwc {

struct MonotoneCertificate {
  int samples = 0;
  double s_min = 0.0;
  double s_max = 0.0;
  double phi_min = 0.0;
  std::string stamp = "phi checked positive and nondecreasing on samples only";
};

class PhiFunction {
 public:
  using Fn = std::function<double(double)>;

  // Samples phi geometrically on [a, a + span] and rejects nonpositive or
  // decreasing values.
  PhiFunction(double a, Fn eval, int samples = 400, double span = 1e12)
      : a_(a), eval_(std::move(eval)) {
    if (!std::isfinite(a_)) throw ValidationError("phi left endpoint must be finite");
    if (!eval_) throw ValidationError("phi has no evaluator");
    if (samples < 2) throw ValidationError("phi needs at least two samples");
    cert_.samples = samples;
    cert_.s_min = a_;
    cert_.s_max = a_ + span;
    double prev = 0.0;
    for (int k = 0; k < samples; ++k) {
      const double s = a_ + std::expm1(std::log1p(span) * k / (samples - 1));
      const double p = eval_(s);
      if (!(p > 0.0) || !std::isfinite(p))
        throw HypothesisViolated("phi(" + format(s) + ") = " + format(p) + " is not positive");
      if (k > 0 && p < prev * (1.0 - 4.0 * kMachineEps))
        throw HypothesisViolated("phi decreases near s = " + format(s));
      cert_.phi_min = k == 0 ? p : std::min(cert_.phi_min, p);
      prev = p;
    }
  }

  double a() const { return a_; }
  double operator()(double s) const { return eval_(s); }
  const MonotoneCertificate& certificate() const { return cert_; }

 private:
  static std::string format(double v) { return std::to_string(v); }
  double a_;
  Fn eval_;
  MonotoneCertificate cert_;
};

enum class DivergenceKind { Diverges, Converges, Inconclusive };

inline const char* to_string(DivergenceKind k) {
  switch (k) {
    case DivergenceKind::Diverges: return "Diverges";
    case DivergenceKind::Converges: return "Converges";
    case DivergenceKind::Inconclusive: return "Inconclusive";
  }
  return "?";
}

struct DivergenceVerdict {
  DivergenceKind kind = DivergenceKind::Inconclusive;
  double estimate = 0.0;  // limit estimate for Converges, last partial integral otherwise
  double last_R = 0.0;
  int doublings = 0;
};

struct DivergenceOptions {
  int max_doublings = 1000;
  double saturation = 1e-10;
  double blowup_threshold = 1e12;
  double raabe_ceiling = 1.2;
  double raabe_drift = 0.1;
};

namespace detail {

// int_lo^hi ds/phi with relative error budget.
inline double reciprocal_integral(const PhiFunction& phi, double lo, double hi, double rel = 1e-13) {
  auto f = [&](double s) { return 1.0 / phi(s); };
  const double coarse = gauss_legendre5(f, lo, hi);
  const double eps = std::max(rel * std::abs(coarse), 1e-300);
  return adaptive_simpson(f, lo, hi, eps);
}

}  // namespace detail

// Partial integrals on R_k = a + L 2^k with increments d_k. Saturation gives
// Converges; unbounded growth, or harmonic-like increments over the last half
// window, gives Diverges.
inline DivergenceVerdict check_divergence(const PhiFunction& phi, const DivergenceOptions& opt = {}) {
  const double a = phi.a();
  const double L = std::max(1.0, std::abs(a));
  DivergenceVerdict out;
  double R = a + L;
  double total = detail::reciprocal_integral(phi, a, R);
  std::vector<double> d;
  double prev_d = 0.0;
  for (int k = 1; k <= opt.max_doublings; ++k) {
    const double next = a + std::ldexp(L, k);
    const double dk = detail::reciprocal_integral(phi, R, next);
    R = next;
    total += dk;
    d.push_back(dk);
    out.doublings = k;
    out.last_R = R;
    if (!std::isfinite(total) || total > opt.blowup_threshold) {
      out.kind = DivergenceKind::Diverges;
      out.estimate = total;
      return out;
    }
    if (dk < opt.saturation) {
      double tail = 0.0;
      if (prev_d > 0.0 && dk < prev_d) {
        const double r = dk / prev_d;
        tail = dk * r / (1.0 - r);
      }
      out.kind = DivergenceKind::Converges;
      out.estimate = total + tail;
      return out;
    }
    prev_d = dk;
  }
  out.estimate = total;
  // Raabe statistic r_k = k (1 - d_k / d_{k-1}): bounded near or below 1
  // without upward drift for harmonic-like or growing increments, growing
  // linearly for geometric decay.
  const std::size_t n = d.size();
  bool harmonic_like = n >= 4;
  double r_mid = 0.0, r_end = 0.0;
  for (std::size_t i = n / 2; i < n && harmonic_like; ++i) {
    const double k = static_cast<double>(i + 1);
    const double r = k * (1.0 - d[i] / d[i - 1]);
    if (r > opt.raabe_ceiling) harmonic_like = false;
    if (i == n / 2) r_mid = r;
    r_end = r;
  }
  if (harmonic_like && r_end - r_mid > opt.raabe_drift) harmonic_like = false;
  out.kind = harmonic_like ? DivergenceKind::Diverges : DivergenceKind::Inconclusive;
  return out;
}

// v0(t) for v0' = phi(v0), v0(0) = v0_init, as the inverse of
// t(w) = int_{v0_init}^w ds/phi(s). Immutable after construction.
class DominatingSolution {
 public:
  DominatingSolution(PhiFunction phi, double v0_init, double t_max, DivergenceVerdict verdict)
      : phi_(std::make_shared<const PhiFunction>(std::move(phi))),
        v0_(v0_init),
        t_max_(t_max),
        verdict_(verdict) {}

  double v0_init() const { return v0_; }
  double t_max() const { return t_max_; }
  const PhiFunction& phi() const { return *phi_; }
  const DivergenceVerdict& divergence() const { return verdict_; }

  // t(w) = int_{v0_init}^w ds/phi
  double time_to(double w) const {
    if (w < v0_) throw OutOfRange("dominating solution queried below its initial value");
    return integral(v0_, w);
  }

  double value(double t) const {
    if (!(t >= 0.0) || t > t_max_ * (1.0 + 1e-12))
      throw OutOfRange("dominating solution queried outside [0, t_max]");
    if (t == 0.0) return v0_;
    const PhiFunction& phi = *phi_;
    // phi nondecreasing: t(v0 + phi(v0) t) <= t
    double lo = v0_ + phi(v0_) * t;
    double t_lo = integral(v0_, lo);
    double gap = std::max(lo - v0_, 1e-300);
    double hi = lo + gap;
    double t_hi = t_lo + integral(lo, hi);
    while (t_hi < t) {
      lo = hi;
      t_lo = t_hi;
      gap *= 2.0;
      hi = lo + gap;
      if (!std::isfinite(hi)) throw HypothesisViolated("dominating solution escapes to infinity");
      t_hi = t_lo + integral(lo, hi);
    }
    // bisection to a narrow bracket, then Newton from the lower end
    while (hi - lo > 1e-3 * std::max(1.0, std::abs(lo))) {
      const double mid = 0.5 * (lo + hi);
      const double t_mid = t_lo + integral(lo, mid);
      if (t_mid < t) {
        lo = mid;
        t_lo = t_mid;
      } else {
        hi = mid;
      }
    }
    double w = lo;
    for (int it = 0; it < 60; ++it) {
      const double tw = t_lo + integral(lo, w);
      double next = w - (tw - t) * phi(w);
      next = std::clamp(next, lo, hi);
      const bool done = std::abs(next - w) <= 2.0 * kMachineEps * std::abs(w);
      w = next;
      if (done) break;
    }
    return w;
  }

  double operator()(double t) const { return value(t); }

 private:
  double integral(double lo, double hi) const {
    if (hi == lo) return 0.0;
    return detail::reciprocal_integral(*phi_, lo, hi, 1e-15);
  }

  std::shared_ptr<const PhiFunction> phi_;
  double v0_;
  double t_max_;
  DivergenceVerdict verdict_;
};

inline DominatingSolution solve_dominating(const PhiFunction& phi, double v0_init, double t_max) {
  if (!(v0_init >= phi.a()))
    throw HypothesisViolated("initial value lies below the left endpoint of phi");
  if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw ValidationError("t_max must be finite and nonnegative");
  const auto verdict = check_divergence(phi);
  if (verdict.kind != DivergenceKind::Diverges)
    throw HypothesisViolated(std::string("integral of 1/phi is not shown to diverge (") +
                             to_string(verdict.kind) + ")");
  return DominatingSolution(phi, v0_init, t_max, verdict);
}

struct EnvelopeSample {
  double t;
  double v;
};

struct EnvelopeTolerance {
  double hypothesis_rel = 1e-6;
  double conclusion_rel = 1e-10;
};

struct EnvelopeReport {
  std::size_t samples = 0;
  bool lower_bound_holds = true;   // a <= v(t)
  bool integral_bound_holds = true;  // v(t) <= v(0) + int_0^t phi(v)
  bool initial_ordered = true;     // v(0) <= v0(0)
  bool hypotheses_hold = true;
  bool conclusion_holds = true;
  double worst_hypothesis_margin = 0.0;
  std::optional<double> hypothesis_violation_t;
  double worst_margin = 0.0;  // min over samples of v0(t) - v(t)
  double worst_margin_t = 0.0;
  std::vector<double> conclusion_violations;
  std::string stamp;
};

// Samples must be ordered in t and start at t = 0. The integral in the
// hypothesis uses the trapezoid rule on the samples.
inline EnvelopeReport verify_envelope(std::span<const EnvelopeSample> v, const DominatingSolution& v0,
                                      const EnvelopeTolerance& tol = {}) {
  if (v.empty()) throw ValidationError("envelope check needs samples");
  if (v.front().t != 0.0) throw ValidationError("envelope samples must start at t = 0");
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i].t > v[i - 1].t)) throw ValidationError("envelope sample times must increase");
  const PhiFunction& phi = v0.phi();
  EnvelopeReport rep;
  rep.samples = v.size();
  rep.stamp = phi.certificate().stamp;
  rep.initial_ordered = v.front().v <= v0.v0_init();
  double integral = 0.0;
  double phi_prev = phi(std::max(v.front().v, phi.a()));
  rep.worst_hypothesis_margin = std::numeric_limits<double>::infinity();
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto [t, val] = v[i];
    if (i > 0) {
      const double p = phi(std::max(val, phi.a()));
      integral += 0.5 * (t - v[i - 1].t) * (phi_prev + p);
      phi_prev = p;
    }
    const double bound = v.front().v + integral;
    const double slack = tol.hypothesis_rel * std::max({1.0, std::abs(bound), std::abs(val)});
    const double hyp_margin = std::min(bound - val, val - phi.a());
    if (val < phi.a() - slack) rep.lower_bound_holds = false;
    if (val > bound + slack) rep.integral_bound_holds = false;
    if (hyp_margin < rep.worst_hypothesis_margin) rep.worst_hypothesis_margin = hyp_margin;
    if (hyp_margin < -slack && !rep.hypothesis_violation_t) rep.hypothesis_violation_t = t;

    const double dom = v0.value(std::min(t, v0.t_max()));
    const double margin = dom - val;
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_margin_t = t;
    }
    if (margin < -tol.conclusion_rel * std::max(1.0, std::abs(dom))) rep.conclusion_violations.push_back(t);
  }
  rep.hypotheses_hold = rep.lower_bound_holds && rep.integral_bound_holds && rep.initial_ordered;
  rep.conclusion_holds = rep.conclusion_violations.empty();
  return rep;
}

}  // namespace gpwc
