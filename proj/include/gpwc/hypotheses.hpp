#pragma once

// Sampled premise checks for the completeness results and certificate
// assembly. Every margin is a minimum over the samples.

#include "gpwc/dynamics.hpp"
#include "gpwc/geometry.hpp"
#include "gpwc/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace gpwc {

using TimeFn = std::function<double(double)>;

struct BoundData {
  TimeFn alpha0;
  TimeFn beta0;
  SampleGrid grid;
  std::vector<double> t_grid;

  void validate(const ChartManifold& m) const {
    if (!alpha0 || !beta0) throw ValidationError("bound data needs alpha0 and beta0");
    if (grid.empty()) throw ValidationError("spatial sample grid is empty");
    if (t_grid.empty()) throw ValidationError("time sample grid is empty");
    for (const Vec& p : grid.points()) require_in_chart(m, p);
  }
};

struct MarginReport {
  std::string premise;
  bool pass = false;
  double worst_margin = std::numeric_limits<double>::infinity();
  Vec worst_x;
  double worst_t = 0.0;
  std::size_t samples = 0;
  bool dependent_failure = false;
  std::string note;
};

namespace detail {

inline void record(MarginReport& r, double margin, const Vec& x, double t) {
  ++r.samples;
  // NaN margins count as failures at the first place they occur
  if (std::isnan(margin)) margin = -std::numeric_limits<double>::infinity();
  if (margin < r.worst_margin) {
    r.worst_margin = margin;
    r.worst_x = x;
    r.worst_t = t;
  }
}

inline void finish(MarginReport& r) { r.pass = r.samples > 0 && r.worst_margin >= 0.0; }

}  // namespace detail

// min of V(p,t) - beta0(t)
inline MarginReport check_bounded_below(const ForceSystem& fs, const BoundData& bd) {
  MarginReport r;
  r.premise = "bounded_below";
  for (double t : bd.t_grid) {
    const double b = bd.beta0(t);
    for (const Vec& p : bd.grid.points()) detail::record(r, fs.potential(p, t) - b, p, t);
  }
  detail::finish(r);
  return r;
}

struct SBoundsReport {
  double N_two_sided = 0.0;  // max |S_inf|, |S_sup|
  double N_upper = 0.0;      // max S_sup, floored at 0
  double N_lower = 0.0;      // max -S_inf, floored at 0
  double worst_t_two_sided = 0.0;
  bool finite = true;
  std::size_t samples = 0;
  bool tensor_present = false;
};

inline SBoundsReport check_S_bounds(const ChartManifold& m, const ForceSystem& fs,
                                    const std::vector<double>& t_grid, const SampleGrid& grid) {
  SBoundsReport r;
  r.tensor_present = fs.has_tensor();
  for (double t : t_grid) {
    const SpectralRange s = operator_bounds(m, fs, grid, t);
    r.samples += grid.size();
    const double two = std::max(std::abs(s.s_inf), std::abs(s.s_sup));
    if (!std::isfinite(two)) r.finite = false;
    if (two > r.N_two_sided) {
      r.N_two_sided = two;
      r.worst_t_two_sided = t;
    }
    r.N_upper = std::max(r.N_upper, s.s_sup);
    r.N_lower = std::max(r.N_lower, -s.s_inf);
  }
  return r;
}

inline SBoundsReport check_S_bounds(const ChartManifold& m, const ForceSystem& fs, double T,
                                    const SampleGrid& grid, int time_samples = 41) {
  if (!(T > 0.0)) throw ValidationError("horizon must be positive");
  return check_S_bounds(m, fs, symmetric_times(T, time_samples), grid);
}

enum class Sided { TwoSided, Forward, Backward };

inline const char* to_string(Sided s) {
  switch (s) {
    case Sided::TwoSided: return "two_sided";
    case Sided::Forward: return "forward";
    case Sided::Backward: return "backward";
  }
  return "?";
}

// min of alpha0(t) (V - beta0) - q with q = |dV/dt|, dV/dt or -dV/dt.
inline MarginReport check_dVdt_bound(const ForceSystem& fs, const BoundData& bd, Sided side,
                                     bool bounded_below_passed = true) {
  MarginReport r;
  r.premise = std::string("dVdt_bound_") + to_string(side);
  for (double t : bd.t_grid) {
    const double a = bd.alpha0(t), b = bd.beta0(t);
    for (const Vec& p : bd.grid.points()) {
      const double dt = fs.potential_dt(p, t);
      const double q = side == Sided::TwoSided ? std::abs(dt) : side == Sided::Forward ? dt : -dt;
      detail::record(r, a * (fs.potential(p, t) - b) - q, p, t);
    }
  }
  detail::finish(r);
  if (!bounded_below_passed) {
    r.dependent_failure = true;
    r.note = "lower bound premise failed; right-hand side may be negative";
  }
  return r;
}

struct GrowthReport {
  bool pass = false;
  double max_ratio = 0.0;
  double median_decile_ratio = 0.0;
  double farthest_decile_ratio = 0.0;
  double worst_t = 0.0;
  std::size_t samples = 0;
  std::string criterion = "median ratio of farthest decile <= 2 x median ratio of median decile, ratio = |grad H| / (1 + d)";
};

using CovectorFnXU = std::function<Vec(const Vec&, double)>;

// Ratio |grad H|_g / (1 + |x - anchor|) sorted by coordinate distance. Per
// time slice the median ratio in the farthest tenth of the points must not
// exceed twice the median ratio in the tenth around the median distance.
inline GrowthReport check_linear_growth_gradH(const ChartManifold& m, const CovectorFnXU& dHdx,
                                              const std::vector<double>& t_grid, const SampleGrid& grid,
                                              const Vec& anchor) {
  GrowthReport r;
  const std::size_t n = grid.size();
  if (n < 10 || t_grid.empty()) return r;
  struct Entry {
    double d, ratio;
  };
  auto median_ratio = [](auto first, std::size_t count) {
    std::vector<double> r;
    for (std::size_t i = 0; i < count; ++i) r.push_back(first[static_cast<std::ptrdiff_t>(i)].ratio);
    std::sort(r.begin(), r.end());
    return count % 2 ? r[count / 2] : 0.5 * (r[count / 2 - 1] + r[count / 2]);
  };
  r.pass = true;
  double worst_excess = -std::numeric_limits<double>::infinity();
  for (double t : t_grid) {
    std::vector<Entry> es;
    es.reserve(n);
    for (const Vec& p : grid.points()) {
      const Vec dH = dHdx(p, t);
      const double norm = std::sqrt(std::max(0.0, dH.dot(gradient(m, p, dH))));
      es.push_back({(p - anchor).norm(), norm / (1.0 + (p - anchor).norm())});
      r.max_ratio = std::max(r.max_ratio, es.back().ratio);
    }
    r.samples += n;
    std::stable_sort(es.begin(), es.end(), [](const Entry& a, const Entry& b) { return a.d < b.d; });
    const std::size_t w = std::max<std::size_t>(1, n / 10);
    const std::size_t mid_lo = n / 2 - std::min(n / 2, w / 2);
    const double mid = median_ratio(es.begin() + static_cast<std::ptrdiff_t>(mid_lo), w);
    const double far = median_ratio(es.end() - static_cast<std::ptrdiff_t>(w), w);
    const double excess = far - 2.0 * mid;
    if (!std::isfinite(far) || !std::isfinite(mid) || excess > 0.0) r.pass = false;
    if (excess > worst_excess) {
      worst_excess = excess;
      r.median_decile_ratio = mid;
      r.farthest_decile_ratio = far;
      r.worst_t = t;
    }
  }
  return r;
}

enum class Verdict {
  CompleteByTheoremG01,
  ForwardCompleteByProp,
  BackwardCompleteByProp,
  CompleteByCorollary2,
  CompleteByCorollary3,
  Inconclusive
};

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::CompleteByTheoremG01: return "CompleteByTheoremG01";
    case Verdict::ForwardCompleteByProp: return "ForwardCompleteByProp";
    case Verdict::BackwardCompleteByProp: return "BackwardCompleteByProp";
    case Verdict::CompleteByCorollary2: return "CompleteByCorollary2";
    case Verdict::CompleteByCorollary3: return "CompleteByCorollary3";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

// Strongest first.
inline int verdict_rank(Verdict v) {
  switch (v) {
    case Verdict::CompleteByTheoremG01: return 0;
    case Verdict::CompleteByCorollary2: return 1;
    case Verdict::CompleteByCorollary3: return 2;
    case Verdict::ForwardCompleteByProp: return 3;
    case Verdict::BackwardCompleteByProp: return 4;
    case Verdict::Inconclusive: return 5;
  }
  return 5;
}

inline constexpr const char* kSampledCaveat = "premises verified on sampled domain only";

struct CompletenessCertificate {
  Verdict verdict = Verdict::Inconclusive;
  std::vector<Verdict> passing;  // every path whose premises passed, strongest first
  std::vector<MarginReport> evidence;
  std::optional<SBoundsReport> s_bounds;
  std::optional<GrowthReport> growth;
  std::vector<std::string> notes;
  bool base_complete = false;
  std::string caveat = kSampledCaveat;
};

namespace detail {

inline void settle(CompletenessCertificate& c, std::vector<Verdict> candidates) {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](Verdict a, Verdict b) { return verdict_rank(a) < verdict_rank(b); });
  c.passing = candidates;
  if (!c.base_complete) {
    c.notes.push_back("manifold not declared complete; no completeness verdict issued");
    c.verdict = Verdict::Inconclusive;
    return;
  }
  c.verdict = candidates.empty() ? Verdict::Inconclusive : candidates.front();
}

}  // namespace detail

enum class CertifyTarget { All, TheoremG01, Forward, Backward };

// Premises of the non-autonomous result and its one-sided variants. Sampled
// S bounds are always finite numbers; a non-finite spectrum fails them.
inline CompletenessCertificate certify(const ChartManifold& m, const ForceSystem& fs, const BoundData& bd,
                                       CertifyTarget target = CertifyTarget::All) {
  bd.validate(m);
  CompletenessCertificate c;
  c.base_complete = m.complete_flag();
  const MarginReport bb = check_bounded_below(fs, bd);
  c.evidence.push_back(bb);
  const SBoundsReport sb = check_S_bounds(m, fs, bd.t_grid, bd.grid);
  c.s_bounds = sb;
  if (sb.tensor_present)
    c.notes.push_back("operator bound taken as the supremum over the sample grid; weakest premise when F is nonzero");
  c.notes.push_back("smoothness of metric, tensor and potential is assumed, not verified");

  std::vector<Verdict> ok;
  auto want = [&](CertifyTarget t) { return target == CertifyTarget::All || target == t; };
  if (want(CertifyTarget::TheoremG01)) {
    const MarginReport two = check_dVdt_bound(fs, bd, Sided::TwoSided, bb.pass);
    c.evidence.push_back(two);
    if (bb.pass && sb.finite && two.pass) ok.push_back(Verdict::CompleteByTheoremG01);
  }
  if (want(CertifyTarget::Forward)) {
    const MarginReport fw = check_dVdt_bound(fs, bd, Sided::Forward, bb.pass);
    c.evidence.push_back(fw);
    if (bb.pass && std::isfinite(sb.N_upper) && fw.pass) ok.push_back(Verdict::ForwardCompleteByProp);
  }
  if (want(CertifyTarget::Backward)) {
    const MarginReport bw = check_dVdt_bound(fs, bd, Sided::Backward, bb.pass);
    c.evidence.push_back(bw);
    if (bb.pass && std::isfinite(sb.N_lower) && bw.pass) ok.push_back(Verdict::BackwardCompleteByProp);
  }
  detail::settle(c, std::move(ok));
  return c;
}

}  // namespace gpwc
