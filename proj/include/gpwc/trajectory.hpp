#pragma once

#include "gpwc/core.hpp"
#include "gpwc/dynamics.hpp"

#include <charconv>
#include <ostream>
#include <string>
#include <vector>

namespace gpwc {

// Shortest round-trip decimal, independent of the C locale.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

enum class Direction { Forward, Backward };

inline const char* to_string(Direction d) { return d == Direction::Forward ? "forward" : "backward"; }

enum class OutcomeKind { HorizonReached, BlowUpSuspected, ChartExit, ToleranceFailure };

inline const char* to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::HorizonReached: return "HorizonReached";
    case OutcomeKind::BlowUpSuspected: return "BlowUpSuspected";
    case OutcomeKind::ChartExit: return "ChartExit";
    case OutcomeKind::ToleranceFailure: return "ToleranceFailure";
  }
  return "?";
}

// Numeric code used in completeness-map CSVs.
inline int outcome_code(OutcomeKind k) { return static_cast<int>(k); }

struct Outcome {
  OutcomeKind kind = OutcomeKind::HorizonReached;
  // t_star estimate for BlowUpSuspected, exit time for ChartExit, last
  // reached time otherwise.
  double time = 0.0;
};

struct StepRecord {
  double t = 0.0;
  Vec x;
  Vec xdot;
  Vec xddot;
};

class Trajectory {
 public:
  Trajectory(int dim, Direction dir) : dim_(dim), dir_(dir) {}

  int dim() const { return dim_; }
  Direction direction() const { return dir_; }
  const std::vector<StepRecord>& steps() const { return steps_; }
  const Outcome& outcome() const { return outcome_; }
  const StepRecord& front() const { return steps_.front(); }
  const StepRecord& back() const { return steps_.back(); }

  void push(StepRecord r) { steps_.push_back(std::move(r)); }
  void set_outcome(Outcome o) { outcome_ = o; }

  double t_min() const { return std::min(steps_.front().t, steps_.back().t); }
  double t_max() const { return std::max(steps_.front().t, steps_.back().t); }

  // Cubic Hermite on the bracketing accepted pair: position from (x, xdot),
  // velocity from (xdot, xddot).
  PhaseState sample(double t) const {
    if (steps_.empty() || !(t >= t_min() && t <= t_max()))
      throw OutOfRange("t = " + format_double(t) + " outside trajectory interval [" +
                       format_double(t_min()) + ", " + format_double(t_max()) + "]");
    const bool fwd = dir_ == Direction::Forward;
    std::size_t lo = 0, hi = steps_.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if ((steps_[mid].t <= t) == fwd) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const StepRecord& a = steps_[lo];
    if (t == a.t) return {a.x, a.xdot, t};
    const StepRecord& b = steps_[hi];
    if (t == b.t) return {b.x, b.xdot, t};
    const double h = b.t - a.t;
    const double th = (t - a.t) / h;
    const double h00 = (2 * th - 3) * th * th + 1;
    const double h10 = ((th - 2) * th + 1) * th;
    const double h01 = (3 - 2 * th) * th * th;
    const double h11 = (th - 1) * th * th;
    PhaseState s;
    s.t = t;
    s.x = h00 * a.x + h10 * h * a.xdot + h01 * b.x + h11 * h * b.xdot;
    s.xdot = h00 * a.xdot + h10 * h * a.xddot + h01 * b.xdot + h11 * h * b.xddot;
    return s;
  }

  void write_csv(std::ostream& os) const {
    os << "t";
    for (int i = 1; i <= dim_; ++i) os << ",x" << i;
    for (int i = 1; i <= dim_; ++i) os << ",xdot" << i;
    os << '\n';
    for (const auto& r : steps_) {
      os << format_double(r.t);
      for (int i = 0; i < dim_; ++i) os << ',' << format_double(r.x[i]);
      for (int i = 0; i < dim_; ++i) os << ',' << format_double(r.xdot[i]);
      os << '\n';
    }
  }

 private:
  int dim_;
  Direction dir_;
  std::vector<StepRecord> steps_;
  Outcome outcome_;
};

}  // namespace gpwc
