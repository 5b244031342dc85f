#pragma once

// Riemannian manifolds presented in a single coordinate chart.

#include "gpwc/core.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace gpwc {

// Gamma^k_ij stored densely, symmetric in (i, j) by construction.
class ChristoffelSymbols {
 public:
  explicit ChristoffelSymbols(int n) : n_(n), data_(static_cast<std::size_t>(n * n * n), 0.0) {}

  int dim() const { return n_; }
  double operator()(int k, int i, int j) const { return data_[index(k, i, j)]; }

  // Writes both (i, j) and (j, i).
  void set(int k, int i, int j, double value) {
    data_[index(k, i, j)] = value;
    data_[index(k, j, i)] = value;
  }

  // Gamma^k_ij a^i b^j
  Vec contract(const Vec& a, const Vec& b) const {
    Vec out = Vec::Zero(n_);
    for (int k = 0; k < n_; ++k) {
      double acc = 0.0;
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) acc += (*this)(k, i, j) * a[i] * b[j];
      out[k] = acc;
    }
    return out;
  }

  double max_abs_diff(const ChristoffelSymbols& other) const {
    double m = 0.0;
    for (std::size_t i = 0; i < data_.size(); ++i) m = std::max(m, std::abs(data_[i] - other.data_[i]));
    return m;
  }

 private:
  std::size_t index(int k, int i, int j) const {
    return static_cast<std::size_t>((k * n_ + i) * n_ + j);
  }
  int n_;
  std::vector<double> data_;
};

// Levi-Civita symbols from the inverse metric and the coordinate derivatives
// dG[l] = d G / d x^l. No definiteness assumption, so the Lorentzian code
// reuses it.
inline ChristoffelSymbols christoffel_from_derivatives(const Mat& g_inv, const std::vector<Mat>& dG) {
  const int n = static_cast<int>(g_inv.rows());
  ChristoffelSymbols out(n);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        double acc = 0.0;
        for (int l = 0; l < n; ++l) acc += g_inv(k, l) * (dG[i](j, l) + dG[j](i, l) - dG[l](i, j));
        out.set(k, i, j, 0.5 * acc);
      }
    }
  }
  return out;
}

class ChartManifold {
 public:
  using MetricFn = std::function<Mat(const Vec&)>;
  using ChristoffelFn = std::function<ChristoffelSymbols(const Vec&)>;
  using Guard = std::function<bool(const Vec&)>;

  ChartManifold(std::string name, int dim, MetricFn metric, bool complete,
                ChristoffelFn christoffel = {}, Guard guard = {})
      : name_(std::move(name)),
        dim_(dim),
        metric_(std::move(metric)),
        christoffel_(std::move(christoffel)),
        guard_(std::move(guard)),
        complete_(complete) {
    if (dim_ <= 0) throw ValidationError("manifold dimension must be positive");
    if (!metric_) throw ValidationError("manifold '" + name_ + "' has no metric");
  }

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  bool complete_flag() const { return complete_; }
  bool has_analytic_christoffel() const { return static_cast<bool>(christoffel_); }

  bool in_chart(const Vec& x) const {
    if (x.size() != dim_ || !x.allFinite()) return false;
    return !guard_ || guard_(x);
  }

  // Raw user metric, no checks.
  Mat raw_metric(const Vec& x) const { return metric_(x); }
  const ChristoffelFn& analytic_christoffel() const { return christoffel_; }

 private:
  std::string name_;
  int dim_;
  MetricFn metric_;
  ChristoffelFn christoffel_;
  Guard guard_;
  bool complete_;
};

struct TangentVector {
  Vec base;
  Vec components;
};

inline void require_in_chart(const ChartManifold& m, const Vec& x) {
  if (!m.in_chart(x)) {
    std::string coords;
    for (int i = 0; i < x.size(); ++i) coords += (i ? ", " : "") + std::to_string(x[i]);
    throw OutOfChart("point (" + coords + ") outside chart of '" + m.name() + "'");
  }
}

// Symmetrised, positive-definite metric matrix.
inline Mat metric_at(const ChartManifold& m, const Vec& x) {
  require_in_chart(m, x);
  Mat g = m.raw_metric(x);
  if (g.rows() != m.dim() || g.cols() != m.dim())
    throw ValidationError("metric of '" + m.name() + "' has wrong shape");
  g = (0.5 * (g + g.transpose())).eval();
  if (!g.allFinite()) throw NotPositiveDefinite("metric of '" + m.name() + "' is not finite");
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("metric of '" + m.name() + "' is not positive definite");
  return g;
}

inline Mat metric_inverse(const Mat& g) {
  return g.llt().solve(Mat::Identity(g.rows(), g.cols()));
}

// Central differences of the metric with per-axis step fd_step(x_l) * scale.
inline ChristoffelSymbols christoffel_fd(const ChartManifold& m, const Vec& x, double scale = 1.0) {
  const int n = m.dim();
  const Mat g = metric_at(m, x);
  std::vector<Mat> dG(static_cast<std::size_t>(n));
  for (int l = 0; l < n; ++l) {
    const double h = fd_step(x[l]) * scale;
    Vec xp = x, xm = x;
    xp[l] += h;
    xm[l] -= h;
    if (!m.in_chart(xp) || !m.in_chart(xm))
      throw OutOfChart("finite-difference stencil leaves the chart of '" + m.name() + "'");
    dG[static_cast<std::size_t>(l)] = (metric_at(m, xp) - metric_at(m, xm)) / (xp[l] - xm[l]);
  }
  return christoffel_from_derivatives(metric_inverse(g), dG);
}

inline ChristoffelSymbols christoffel_at(const ChartManifold& m, const Vec& x) {
  if (m.has_analytic_christoffel()) {
    require_in_chart(m, x);
    return m.analytic_christoffel()(x);
  }
  return christoffel_fd(m, x);
}

// Metric-raised differential: G(x)^-1 dV.
inline Vec gradient(const ChartManifold& m, const Vec& x, const Vec& dV) {
  if (dV.size() != m.dim()) throw ValidationError("covector has wrong dimension");
  return metric_at(m, x).llt().solve(dV);
}

inline double norm_sq(const ChartManifold& m, const Vec& x, const Vec& v) {
  return v.dot(metric_at(m, x) * v);
}

inline double norm_sq(const ChartManifold& m, const TangentVector& v) {
  return norm_sq(m, v.base, v.components);
}

// ---------------------------------------------------------------------------
// Built-in metrics

inline ChartManifold euclidean(int n) {
  return ChartManifold(
      "euclidean(" + std::to_string(n) + ")", n, [n](const Vec&) { return Mat::Identity(n, n); },
      true, [n](const Vec&) { return ChristoffelSymbols(n); });
}

// Upper half plane x2 > 0 with G = I / x2^2. The chart covers the whole
// hyperbolic plane, so it is complete.
inline ChartManifold hyperbolic_half_plane() {
  auto metric = [](const Vec& x) -> Mat { return Mat::Identity(2, 2) / (x[1] * x[1]); };
  auto christoffel = [](const Vec& x) {
    ChristoffelSymbols g(2);
    const double y = x[1];
    g.set(0, 0, 1, -1.0 / y);
    g.set(1, 0, 0, 1.0 / y);
    g.set(1, 1, 1, -1.0 / y);
    return g;
  };
  auto guard = [](const Vec& x) { return x[1] > 0.0; };
  return ChartManifold("hyperbolic_half_plane", 2, metric, true, christoffel, guard);
}

// G = diag(exp(2 sigma_1(x)), ..., exp(2 sigma_n(x))). dsigma(x)(i, l) is
// d sigma_i / d x^l. Equal sigma_i gives a conformally flat metric.
inline ChartManifold diagonal_conformal(int n, std::function<Vec(const Vec&)> sigma,
                                        std::function<Mat(const Vec&)> dsigma, bool complete,
                                        ChartManifold::Guard guard = {}) {
  auto metric = [sigma](const Vec& x) -> Mat {
    return (2.0 * sigma(x).array()).exp().matrix().asDiagonal();
  };
  auto christoffel = [n, sigma, dsigma](const Vec& x) {
    const Vec diag = (2.0 * sigma(x).array()).exp().matrix();
    const Mat ds = dsigma(x);
    std::vector<Mat> dG(static_cast<std::size_t>(n), Mat::Zero(n, n));
    for (int l = 0; l < n; ++l)
      for (int i = 0; i < n; ++i) dG[static_cast<std::size_t>(l)](i, i) = 2.0 * diag[i] * ds(i, l);
    return christoffel_from_derivatives(diag.cwiseInverse().asDiagonal().toDenseMatrix(), dG);
  };
  return ChartManifold("diagonal_conformal", n, metric, complete, christoffel, std::move(guard));
}

}  // namespace gpwc
