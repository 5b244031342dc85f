#pragma once

// Built-in manifolds, potentials, tensors and wave families addressable
// from scenario files. Potentials and tensors are expression generators so
// that they share the symbolic derivative path with user expressions.

#include "gpwc/core.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace gpwc {

struct CatalogEntry {
  std::string kind;  // manifold, potential, tensor, wave, phi
  std::string signature;
  std::string description;
};

inline std::vector<CatalogEntry> catalog_entries() {
  std::vector<CatalogEntry> e = {
      {"manifold", "euclidean(n)", "flat R^n, G = I, complete"},
      {"manifold", "hyperbolic_half_plane", "x2 > 0, G = I / x2^2, complete"},
      {"manifold", "conformal(n,sigma,complete)", "G = exp(2 sigma(x)) I, sigma an expression in x1..xn"},
      {"manifold", "metric(entries,guard,complete)", "expression matrix in x1..xn, optional guard expression > 0"},
      {"potential", "free", "V = 0"},
      {"potential", "harmonic(k)", "V = k |x|^2 / 2"},
      {"potential", "quartic_well", "V = -x1^4, unbounded below"},
      {"potential", "growing_oscillator", "V = exp(t) (1 + |x|^2)"},
      {"tensor", "damping(c)", "F = -c(t) I"},
      {"tensor", "rotation(omega)", "F = omega [[0,1],[-1,0]] on a 2-dimensional base"},
      {"wave", "plane_wave(f1,f2,f)", "H = f1(u) x^2 - f2(u) y^2 + 2 f(u) x y over euclidean(2)"},
      {"wave", "profile(H)", "H(x,u) any expression over the scenario base"},
      {"phi", "phi(s)", "comparison function, expression in s"},
  };
  std::stable_sort(e.begin(), e.end(), [](const CatalogEntry& a, const CatalogEntry& b) {
    return a.kind != b.kind ? a.kind < b.kind : a.signature < b.signature;
  });
  return e;
}

inline std::string list_catalog() {
  std::string out;
  std::string kind;
  for (const auto& e : catalog_entries()) {
    if (e.kind != kind) {
      kind = e.kind;
      out += kind + ":\n";
    }
    out += "  " + e.signature;
    out.append(e.signature.size() < 34 ? 34 - e.signature.size() : 1, ' ');
    out += e.description + "\n";
  }
  return out;
}

inline std::string squared_norm_expression(int n) {
  std::string s;
  for (int i = 1; i <= n; ++i) s += (i > 1 ? "+" : "") + std::string("x") + std::to_string(i) + "^2";
  return "(" + s + ")";
}

inline std::string plane_wave_expression(const std::string& f1, const std::string& f2, const std::string& f) {
  return "(" + f1 + ")*x1^2-(" + f2 + ")*x2^2+2*(" + f + ")*x1*x2";
}

}  // namespace gpwc
