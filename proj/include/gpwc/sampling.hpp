#pragma once

#include "gpwc/core.hpp"

#include <vector>

namespace gpwc {

// Finite set of chart points standing in for a (possibly non-compact)
// manifold when a global supremum or infimum is needed.
class SampleGrid {
 public:
  SampleGrid() = default;
  explicit SampleGrid(std::vector<Vec> points) : points_(std::move(points)) {}

  // Tensor-product uniform grid. counts[i] == 1 places the axis at the
  // midpoint. Refining k -> 2k-1 keeps every old node.
  static SampleGrid box(const Vec& lower, const Vec& upper, const std::vector<int>& counts) {
    const auto n = static_cast<std::size_t>(lower.size());
    if (upper.size() != lower.size() || counts.size() != n)
      throw ValidationError("grid bounds and counts disagree in dimension");
    for (int c : counts)
      if (c < 1) throw ValidationError("grid counts must be positive");
    std::vector<Vec> pts;
    std::vector<int> idx(n, 0);
    for (;;) {
      Vec p(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        p[ii] = counts[i] == 1 ? 0.5 * (lower[ii] + upper[ii])
                               : lower[ii] + (upper[ii] - lower[ii]) * idx[i] / (counts[i] - 1);
      }
      pts.push_back(std::move(p));
      std::size_t d = 0;
      while (d < n && ++idx[d] == counts[d]) idx[d++] = 0;
      if (d == n) break;
    }
    return SampleGrid(std::move(pts));
  }

  const std::vector<Vec>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

 private:
  std::vector<Vec> points_;
};

// count uniform samples of [-T, T], endpoints included.
inline std::vector<double> symmetric_times(double T, int count) {
  if (count < 2) return {0.0};
  std::vector<double> ts(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) ts[static_cast<std::size_t>(i)] = -T + 2.0 * T * i / (count - 1);
  return ts;
}

}  // namespace gpwc
