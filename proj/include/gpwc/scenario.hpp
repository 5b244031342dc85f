#pragma once

// Scenario files: JSON documents with a strict schema. A scenario is parsed
// and validated completely before any computation starts.

#include "gpwc/catalog.hpp"
#include "gpwc/comparison.hpp"
#include "gpwc/expr.hpp"
#include "gpwc/gpw.hpp"
#include "gpwc/hypotheses.hpp"
#include "gpwc/integrate.hpp"

#include <json.hpp>

#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace gpwc {

using Json = nlohmann::ordered_json;

inline const std::vector<std::string>& known_tasks() {
  static const std::vector<std::string> t = {"certify", "compare-lemma", "envelope", "gpw-geodesic", "gpw-map",
                                             "integrate"};
  return t;
}

// ---------------------------------------------------------------------------
// Reading

inline Json parse_scenario_text(const std::string& text, const std::string& source = "scenario") {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    if (const auto p = msg.find("parse error"); p != std::string::npos) msg = msg.substr(p);
    throw ParseError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
  }
}

inline Json load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open scenario file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str(), path);
}

// key.path=value; the value is read as JSON when it parses, as a string
// otherwise.
inline void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    value = text;
  }
  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ValidationError("override key '" + key + "' has an empty component");
    if (!node->is_object()) throw ValidationError("override key '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = Json::object();
    start = dot + 1;
  }
}

// Object reader that records consumed keys; finish() rejects the rest.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) throw ValidationError("'" + path_ + "' must be an object");
  }

  const std::string& path() const { return path_; }
  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_->contains(key); }

  const Json& at(const std::string& key) {
    if (!j_->contains(key)) throw ValidationError("missing required key '" + key_path(key) + "'");
    used_.insert(key);
    return (*j_)[key];
  }

  Section sub(const std::string& key) { return Section(at(key), key_path(key)); }

  double number(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_number()) throw ValidationError("'" + key_path(key) + "' must be a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  long long integer(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_number_integer()) throw ValidationError("'" + key_path(key) + "' must be an integer");
    return v.get<long long>();
  }
  long long integer(const std::string& key, long long fallback) { return has(key) ? integer(key) : fallback; }

  bool boolean(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_boolean()) throw ValidationError("'" + key_path(key) + "' must be true or false");
    return v.get<bool>();
  }
  bool boolean(const std::string& key, bool fallback) { return has(key) ? boolean(key) : fallback; }

  std::string string(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_string()) throw ValidationError("'" + key_path(key) + "' must be a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : fallback;
  }

  // number or expression string
  std::string expression(const std::string& key) { return expression_text(at(key), key_path(key)); }

  Vec vector(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_array()) throw ValidationError("'" + key_path(key) + "' must be an array of numbers");
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ValidationError("'" + key_path(key) + "' must be an array of numbers");
      out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    return out;
  }

  void finish() const {
    for (auto it = j_->begin(); it != j_->end(); ++it)
      if (!used_.count(it.key())) throw ValidationError("unknown key '" + key_path(it.key()) + "'");
  }

  static std::string expression_text(const Json& v, const std::string& path) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) return format_double(v.get<double>());
    throw ValidationError("'" + path + "' must be a number or an expression string");
  }

 private:
  const Json* j_;
  std::string path_;
  std::set<std::string> used_;
};

inline Expr compile(const std::string& text, const VarSpace& vars, const std::string& path) {
  try {
    return Expr::parse(text, vars);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.detail());
  }
}

inline std::span<const double> span_of(const Vec& x) { return {x.data(), static_cast<std::size_t>(x.size())}; }

inline TimeFn time_function(const Expr& e, bool in_u) {
  if (in_u) return [e](double u) { return e.eval({{}, 0.0, u, 0.0}); };
  return [e](double t) { return e.eval({{}, t, 0.0, 0.0}); };
}

// ---------------------------------------------------------------------------
// Model

struct BoundsSpec {
  std::string alpha0_text, beta0_text;
  TimeFn alpha0, beta0;
  SampleGrid grid;
  double T = 1.0;
  int time_samples = 41;
  std::optional<Vec> anchor;

  std::vector<double> times() const { return symmetric_times(T, time_samples); }
  BoundData data() const { return {alpha0, beta0, grid, times()}; }
};

struct InitialSpec {
  Vec x, xdot;
  Direction direction = Direction::Forward;
  bool refine_blowup = true;
};

struct RandomInitSpec {
  int count = 20;
  unsigned seed = 1;
  double radius = 2.0;
};

struct MapSpec {
  SampleGrid x0;
  std::vector<Vec> xdot0;
  std::vector<double> deltas;
};

struct GpwSpec {
  std::shared_ptr<const GpwSpacetime> spacetime;
  std::string profile_kind;  // plane_wave or profile
  std::optional<bool> gravitational_wave;
  std::optional<GeodesicInitialData> initial;
  bool oracle = true;
  std::optional<MapSpec> map;
};

struct CompareSpec {
  std::string phi_text;
  Expr phi;
  double a = 0.0, v0 = 0.0, t_max = 1.0;
  int samples = 101;
  std::optional<Expr> reference;  // closed form v0(t) if known
};

struct Scenario {
  std::string name;
  std::string task;
  Json config;  // document after overrides
  std::shared_ptr<const ChartManifold> manifold;
  ForceSystem force = ForceSystem::free();
  bool potential_autonomous = true;
  std::optional<BoundsSpec> bounds;
  IntegratorConfig integrator;
  std::optional<InitialSpec> initial;
  std::optional<RandomInitSpec> random_initial;
  std::optional<GpwSpec> gpw;
  std::optional<CompareSpec> compare;
  std::string certify_target = "all";
  std::vector<Direction> envelope_directions{Direction::Forward};
  std::string prefix;  // output file stem
};

namespace detail {

inline std::shared_ptr<const ChartManifold> build_manifold(Section s) {
  const std::string kind = s.string("catalog");
  std::shared_ptr<const ChartManifold> out;
  if (kind == "euclidean") {
    const long long n = s.integer("dim");
    if (n < 1 || n > 64) throw ValidationError("'" + s.key_path("dim") + "' must be in 1..64");
    out = std::make_shared<const ChartManifold>(euclidean(static_cast<int>(n)));
  } else if (kind == "hyperbolic_half_plane") {
    out = std::make_shared<const ChartManifold>(hyperbolic_half_plane());
  } else if (kind == "conformal") {
    const long long n = s.integer("dim");
    if (n < 1 || n > 64) throw ValidationError("'" + s.key_path("dim") + "' must be in 1..64");
    const int dim = static_cast<int>(n);
    const VarSpace vars{dim};
    const Expr sigma = compile(s.expression("sigma"), vars, s.key_path("sigma"));
    std::vector<Expr> ds;
    for (int l = 0; l < dim; ++l) ds.push_back(sigma.diff(VarRef::x(l)));
    const bool complete = s.boolean("complete");
    out = std::make_shared<const ChartManifold>(diagonal_conformal(
        dim, [sigma, dim](const Vec& x) { return Vec(Vec::Constant(dim, sigma.eval({span_of(x)}))); },
        [ds, dim](const Vec& x) {
          Mat j(dim, dim);
          for (int l = 0; l < dim; ++l) j.col(l).setConstant(ds[static_cast<std::size_t>(l)].eval({span_of(x)}));
          return j;
        },
        complete));
  } else if (kind == "metric") {
    const Json& rows = s.at("entries");
    const std::string path = s.key_path("entries");
    if (!rows.is_array() || rows.empty()) throw ValidationError("'" + path + "' must be a square array of expressions");
    const int n = static_cast<int>(rows.size());
    const VarSpace vars{n};
    std::vector<Expr> entries;
    for (int i = 0; i < n; ++i) {
      if (!rows[static_cast<std::size_t>(i)].is_array() || static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != n)
        throw ValidationError("'" + path + "' must be a square array of expressions");
      for (int j = 0; j < n; ++j) {
        const std::string p = path + "[" + std::to_string(i) + "][" + std::to_string(j) + "]";
        entries.push_back(compile(Section::expression_text(rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], p), vars, p));
      }
    }
    ChartManifold::Guard guard;
    if (s.has("guard")) {
      const Expr g = compile(s.expression("guard"), vars, s.key_path("guard"));
      guard = [g](const Vec& x) { return g.eval({span_of(x)}) > 0.0; };
    }
    const bool complete = s.boolean("complete");
    out = std::make_shared<const ChartManifold>(
        s.string("name", "metric"), n,
        [entries, n](const Vec& x) {
          Mat g(n, n);
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) g(i, j) = entries[static_cast<std::size_t>(i * n + j)].eval({span_of(x)});
          return g;
        },
        complete, ChartManifold::ChristoffelFn{}, guard);
  } else {
    throw ValidationError("unknown manifold '" + kind + "' in '" + s.key_path("catalog") + "'");
  }
  s.finish();
  return out;
}

inline std::string potential_text(const Json& j, const std::string& path, int n) {
  if (!j.is_object()) return Section::expression_text(j, path);
  Section s(j, path);
  const std::string kind = s.string("catalog");
  std::string text;
  if (kind == "free") {
    text = "0";
  } else if (kind == "harmonic") {
    text = "0.5*(" + s.expression("k") + ")*" + squared_norm_expression(n);
  } else if (kind == "quartic_well") {
    text = "-x1^4";
  } else if (kind == "growing_oscillator") {
    text = "exp(t)*(1+" + squared_norm_expression(n) + ")";
  } else {
    throw ValidationError("unknown potential '" + kind + "' in '" + s.key_path("catalog") + "'");
  }
  s.finish();
  return text;
}

inline ForceSystem::TensorFn build_tensor(const Json& j, const std::string& path, int n) {
  const VarSpace vars{n, true};
  std::vector<Expr> entries;
  if (j.is_object()) {
    Section s(j, path);
    const std::string kind = s.string("catalog");
    if (kind == "damping") {
      const Expr c = compile(s.expression("c"), vars, s.key_path("c"));
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) entries.push_back(i == k ? c : Expr::constant(0.0));
      s.finish();
      return [entries, n](const Vec& x, double t) {
        Mat F(n, n);
        for (int i = 0; i < n; ++i)
          for (int k = 0; k < n; ++k) F(i, k) = -entries[static_cast<std::size_t>(i * n + k)].eval({span_of(x), t});
        return F;
      };
    }
    if (kind == "rotation") {
      if (n != 2) throw ValidationError("'" + path + "': rotation needs a 2-dimensional base");
      const Expr w = compile(s.expression("omega"), vars, s.key_path("omega"));
      s.finish();
      return [w](const Vec& x, double t) {
        const double om = w.eval({span_of(x), t});
        Mat F(2, 2);
        F << 0.0, om, -om, 0.0;
        return F;
      };
    }
    throw ValidationError("unknown tensor '" + kind + "' in '" + s.key_path("catalog") + "'");
  }
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    throw ValidationError("'" + path + "' must be an n x n array of expressions or a catalog object");
  for (int i = 0; i < n; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      throw ValidationError("'" + path + "' must be an n x n array of expressions");
    for (int k = 0; k < n; ++k) {
      const std::string p = path + "[" + std::to_string(i) + "][" + std::to_string(k) + "]";
      entries.push_back(compile(Section::expression_text(row[static_cast<std::size_t>(k)], p), vars, p));
    }
  }
  return [entries, n](const Vec& x, double t) {
    Mat F(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) F(i, k) = entries[static_cast<std::size_t>(i * n + k)].eval({span_of(x), t});
    return F;
  };
}

inline ForceSystem build_force(Section s, int n, bool& autonomous) {
  const VarSpace vars{n, true};
  ForceSystem fs = ForceSystem::free();
  autonomous = true;
  if (s.has("potential")) {
    const std::string text = potential_text(s.at("potential"), s.key_path("potential"), n);
    const Expr V = compile(text, vars, s.key_path("potential"));
    std::vector<Expr> dV;
    for (int i = 0; i < n; ++i) dV.push_back(V.diff(VarRef::x(i)));
    const Expr dVdt = V.diff(VarRef::t());
    autonomous = !V.depends_on(VarRef::t());
    fs = ForceSystem([V](const Vec& x, double t) { return V.eval({span_of(x), t}); },
                     [dV, n](const Vec& x, double t) {
                       Vec g(n);
                       for (int i = 0; i < n; ++i) g[i] = dV[static_cast<std::size_t>(i)].eval({span_of(x), t});
                       return g;
                     },
                     [dVdt](const Vec& x, double t) { return dVdt.eval({span_of(x), t}); });
  }
  if (s.has("tensor")) fs = fs.with_tensor(build_tensor(s.at("tensor"), s.key_path("tensor"), n));
  s.finish();
  return fs;
}

inline SampleGrid build_grid(Section s, int n) {
  const Vec lo = s.vector("lower"), hi = s.vector("upper");
  const Json& c = s.at("counts");
  if (!c.is_array()) throw ValidationError("'" + s.key_path("counts") + "' must be an array of integers");
  std::vector<int> counts;
  for (const auto& v : c) {
    if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 100000)
      throw ValidationError("'" + s.key_path("counts") + "' entries must be positive integers");
    counts.push_back(v.get<int>());
  }
  if (lo.size() != n || hi.size() != n || static_cast<int>(counts.size()) != n)
    throw ValidationError("'" + s.path() + "' lower, upper and counts need " + std::to_string(n) + " entries");
  for (int i = 0; i < n; ++i)
    if (!(lo[i] <= hi[i])) throw ValidationError("'" + s.path() + "' needs lower <= upper");
  s.finish();
  return SampleGrid::box(lo, hi, counts);
}

inline BoundsSpec build_bounds(Section s, int n, bool in_u, const ChartManifold& m) {
  const VarSpace vars{0, !in_u, in_u};
  BoundsSpec b;
  b.alpha0_text = s.expression("alpha0");
  b.beta0_text = s.expression("beta0");
  b.alpha0 = time_function(compile(b.alpha0_text, vars, s.key_path("alpha0")), in_u);
  b.beta0 = time_function(compile(b.beta0_text, vars, s.key_path("beta0")), in_u);
  b.grid = build_grid(s.sub("grid"), n);
  b.T = s.number("T");
  if (!(b.T > 0.0) || !std::isfinite(b.T)) throw ValidationError("'" + s.key_path("T") + "' must be positive");
  const long long ts = s.integer("time_samples", 41);
  if (ts < 1 || ts > 100000) throw ValidationError("'" + s.key_path("time_samples") + "' must be in 1..100000");
  b.time_samples = static_cast<int>(ts);
  if (s.has("anchor")) {
    b.anchor = s.vector("anchor");
    if (b.anchor->size() != n) throw ValidationError("'" + s.key_path("anchor") + "' has the wrong dimension");
  }
  s.finish();
  for (const Vec& p : b.grid.points())
    if (!m.in_chart(p)) throw ValidationError("'" + s.key_path("grid") + "' leaves the chart of '" + m.name() + "'");
  return b;
}

inline IntegratorConfig build_integrator(Section s) {
  IntegratorConfig c;
  c.rel_tol = s.number("rel_tol", c.rel_tol);
  c.abs_tol = s.number("abs_tol", c.abs_tol);
  c.horizon = s.number("horizon", c.horizon);
  c.max_step = s.number("max_step", c.max_step);
  c.speed_ceiling = s.number("speed_ceiling", c.speed_ceiling);
  c.min_step_fraction = s.number("min_step_fraction", c.min_step_fraction);
  c.max_steps = s.integer("max_steps", c.max_steps);
  s.finish();
  try {
    c.validate();
  } catch (const ValidationError& e) {
    throw ValidationError("'" + s.path() + "': " + e.detail());
  }
  return c;
}

inline Direction parse_direction(const std::string& d, const std::string& path) {
  if (d == "forward") return Direction::Forward;
  if (d == "backward") return Direction::Backward;
  throw ValidationError("'" + path + "' must be \"forward\" or \"backward\"");
}

inline InitialSpec build_initial(Section s, int n) {
  InitialSpec in;
  in.x = s.vector("x");
  in.xdot = s.vector("xdot");
  if (in.x.size() != n || in.xdot.size() != n)
    throw ValidationError("'" + s.path() + "' x and xdot need " + std::to_string(n) + " entries");
  in.direction = parse_direction(s.string("direction", "forward"), s.key_path("direction"));
  in.refine_blowup = s.boolean("refine_blowup", true);
  s.finish();
  return in;
}

inline GeodesicInitialData build_geodesic_initial(Section s, int n) {
  GeodesicInitialData g;
  g.x0 = s.vector("x0");
  g.xdot0 = s.vector("xdot0");
  if (g.x0.size() != n || g.xdot0.size() != n)
    throw ValidationError("'" + s.path() + "' x0 and xdot0 need " + std::to_string(n) + " entries");
  g.u0 = s.number("u0", 0.0);
  g.delta = s.number("delta");
  g.v0 = s.number("v0", 0.0);
  g.vdot0 = s.number("vdot0", 0.0);
  s.finish();
  return g;
}

inline GpwSpec build_gpw(Section s, const std::shared_ptr<const ChartManifold>& base) {
  const int n = base->dim();
  GpwSpec g;
  Section prof = s.sub("profile");
  std::string text;
  if (prof.has("plane_wave")) {
    if (n != 2) throw ValidationError("'" + prof.key_path("plane_wave") + "' needs a 2-dimensional base");
    Section pw = prof.sub("plane_wave");
    const VarSpace uvars{0, false, true};
    std::string f[3];
    TimeFn fn[3];
    const char* keys[3] = {"f1", "f2", "f"};
    for (int i = 0; i < 3; ++i) {
      f[i] = pw.expression(keys[i]);
      fn[i] = time_function(compile(f[i], uvars, pw.key_path(keys[i])), true);
    }
    pw.finish();
    g.profile_kind = "plane_wave";
    g.gravitational_wave = plane_wave_H(fn[0], fn[1], fn[2]).gravitational_wave;
    text = plane_wave_expression(f[0], f[1], f[2]);
  } else if (prof.has("H")) {
    text = prof.expression("H");
    g.profile_kind = "profile";
  } else {
    throw ValidationError("'" + prof.path() + "' needs 'plane_wave' or 'H'");
  }
  prof.finish();
  const VarSpace vars{n, false, true};
  const Expr H = compile(text, vars, prof.path());
  std::vector<Expr> dH;
  for (int i = 0; i < n; ++i) dH.push_back(H.diff(VarRef::x(i)));
  const Expr dHdu = H.diff(VarRef::u());
  auto Hf = [H](const Vec& x, double u) { return H.eval({span_of(x), 0.0, u}); };

  Vec wx;
  double wu = 0.0;
  if (s.has("witness")) {
    Section w = s.sub("witness");
    wx = w.vector("x");
    wu = w.number("u", 0.0);
    w.finish();
    if (wx.size() != n) throw ValidationError("'" + s.key_path("witness") + "' has the wrong dimension");
  } else {
    // first candidate among unit vectors and their sum, u in {0, 1}
    std::vector<Vec> cand;
    for (int i = 0; i < n; ++i) cand.push_back(Vec::Unit(n, i));
    cand.push_back(Vec::Ones(n));
    bool found = false;
    for (double u : {0.0, 1.0}) {
      for (const Vec& c : cand) {
        if (base->in_chart(c) && Hf(c, u) != 0.0) {
          wx = c;
          wu = u;
          found = true;
          break;
        }
      }
      if (found) break;
    }
    if (!found) throw ValidationError("'" + s.path() + "': no point with H != 0 found; supply 'witness'");
  }
  g.spacetime = std::make_shared<const GpwSpacetime>(
      *base, Hf, wx, wu,
      [dH, n](const Vec& x, double u) {
        Vec v(n);
        for (int i = 0; i < n; ++i) v[i] = dH[static_cast<std::size_t>(i)].eval({span_of(x), 0.0, u});
        return v;
      },
      [dHdu](const Vec& x, double u) { return dHdu.eval({span_of(x), 0.0, u}); });
  if (s.has("initial")) g.initial = build_geodesic_initial(s.sub("initial"), n);
  g.oracle = s.boolean("oracle", true);
  if (s.has("map")) {
    Section m = s.sub("map");
    MapSpec ms;
    ms.x0 = build_grid(m.sub("x0"), n);
    const Json& xd = m.at("xdot0");
    if (!xd.is_array() || xd.empty()) throw ValidationError("'" + m.key_path("xdot0") + "' must be a nonempty array");
    for (std::size_t i = 0; i < xd.size(); ++i) {
      if (!xd[i].is_array() || static_cast<int>(xd[i].size()) != n)
        throw ValidationError("'" + m.key_path("xdot0") + "' entries need " + std::to_string(n) + " numbers");
      Vec v(n);
      for (int k = 0; k < n; ++k) {
        if (!xd[i][static_cast<std::size_t>(k)].is_number())
          throw ValidationError("'" + m.key_path("xdot0") + "' entries must be numbers");
        v[k] = xd[i][static_cast<std::size_t>(k)].get<double>();
      }
      ms.xdot0.push_back(v);
    }
    const Vec d = m.vector("deltas");
    if (d.size() == 0) throw ValidationError("'" + m.key_path("deltas") + "' must be nonempty");
    ms.deltas.assign(d.data(), d.data() + d.size());
    m.finish();
    for (const Vec& p : ms.x0.points())
      if (!base->in_chart(p)) throw ValidationError("'" + m.key_path("x0") + "' leaves the base chart");
    g.map = ms;
  }
  s.finish();
  return g;
}

inline CompareSpec build_compare(Section s) {
  CompareSpec c;
  const VarSpace svars{0, false, false, true};
  c.phi_text = s.expression("phi");
  c.phi = compile(c.phi_text, svars, s.key_path("phi"));
  c.a = s.number("a");
  c.v0 = s.number("v0");
  c.t_max = s.number("t_max");
  if (!(c.t_max > 0.0) || !std::isfinite(c.t_max)) throw ValidationError("'" + s.key_path("t_max") + "' must be positive");
  const long long n = s.integer("samples", 101);
  if (n < 2 || n > 1000000) throw ValidationError("'" + s.key_path("samples") + "' must be in 2..1000000");
  c.samples = static_cast<int>(n);
  if (s.has("reference"))
    c.reference = compile(s.expression("reference"), VarSpace{0, true}, s.key_path("reference"));
  s.finish();
  return c;
}

}  // namespace detail

// Validates the whole document and builds every model object.
inline Scenario build_scenario(const Json& doc) {
  Section top(doc, "");
  Scenario sc;
  sc.config = doc;
  sc.name = top.string("name");
  if (sc.name.empty() || sc.name.find_first_of("/\\") != std::string::npos)
    throw ValidationError("'name' must be a nonempty file-name-safe string");
  sc.task = top.string("task");
  const auto& tasks = known_tasks();
  if (std::find(tasks.begin(), tasks.end(), sc.task) == tasks.end())
    throw ValidationError("unknown task '" + sc.task + "'");
  top.string("description", "");
  sc.prefix = sc.name;
  if (top.has("outputs")) {
    Section o = top.sub("outputs");
    sc.prefix = o.string("prefix", sc.name);
    o.finish();
    if (sc.prefix.empty() || sc.prefix.find_first_of("/\\") != std::string::npos)
      throw ValidationError("'outputs.prefix' must be a nonempty file-name-safe string");
  }

  const bool gpw_task = sc.task == "gpw-geodesic" || sc.task == "gpw-map" || top.has("gpw");
  if (top.has("manifold")) {
    sc.manifold = detail::build_manifold(top.sub("manifold"));
  } else if (gpw_task) {
    sc.manifold = std::make_shared<const ChartManifold>(euclidean(2));
  } else if (sc.task != "compare-lemma") {
    throw ValidationError("missing required key 'manifold'");
  }
  const int n = sc.manifold ? sc.manifold->dim() : 0;
  if (top.has("force")) {
    if (!sc.manifold) throw ValidationError("'force' needs a manifold");
    sc.force = detail::build_force(top.sub("force"), n, sc.potential_autonomous);
  }
  if (top.has("integrator")) sc.integrator = detail::build_integrator(top.sub("integrator"));
  if (top.has("gpw")) sc.gpw = detail::build_gpw(top.sub("gpw"), sc.manifold);
  if (top.has("bounds")) sc.bounds = detail::build_bounds(top.sub("bounds"), n, sc.gpw.has_value(), *sc.manifold);
  if (top.has("initial")) sc.initial = detail::build_initial(top.sub("initial"), n);
  if (top.has("random_initial")) {
    Section r = top.sub("random_initial");
    RandomInitSpec ri;
    ri.count = static_cast<int>(r.integer("count", 20));
    ri.seed = static_cast<unsigned>(r.integer("seed", 1));
    ri.radius = r.number("radius", 2.0);
    r.finish();
    if (ri.count < 1 || ri.count > 100000) throw ValidationError("'random_initial.count' must be in 1..100000");
    sc.random_initial = ri;
  }
  if (top.has("compare")) sc.compare = detail::build_compare(top.sub("compare"));
  if (top.has("certify")) {
    Section c = top.sub("certify");
    sc.certify_target = c.string("target", "all");
    c.finish();
    static const std::set<std::string> targets = {"all", "theorem", "forward", "backward", "corollary2",
                                                  "corollary3"};
    if (!targets.count(sc.certify_target)) throw ValidationError("unknown certify target '" + sc.certify_target + "'");
  }
  if (top.has("envelope")) {
    Section e = top.sub("envelope");
    const Json& d = e.at("directions");
    if (!d.is_array() || d.empty()) throw ValidationError("'envelope.directions' must be a nonempty array");
    sc.envelope_directions.clear();
    for (const auto& x : d) {
      if (!x.is_string()) throw ValidationError("'envelope.directions' entries must be strings");
      sc.envelope_directions.push_back(detail::parse_direction(x.get<std::string>(), "envelope.directions"));
    }
    e.finish();
  }
  top.finish();

  // task requirements
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) throw ValidationError("task '" + sc.task + "' needs " + what);
  };
  if (sc.task == "integrate") need(sc.initial.has_value(), "'initial'");
  if (sc.task == "certify") need(sc.bounds.has_value(), "'bounds'");
  if (sc.task == "envelope") {
    need(sc.bounds.has_value(), "'bounds'");
    need(sc.initial.has_value() || sc.random_initial.has_value(), "'initial' or 'random_initial'");
  }
  if (sc.task == "gpw-geodesic") need(sc.gpw && sc.gpw->initial, "'gpw.initial'");
  if (sc.task == "gpw-map") need(sc.gpw && sc.gpw->map, "'gpw.map'");
  if (sc.task == "compare-lemma") need(sc.compare.has_value(), "'compare'");
  if (sc.gpw && sc.certify_target != "all" && sc.certify_target != "corollary2" && sc.certify_target != "corollary3")
    throw ValidationError("certify target '" + sc.certify_target + "' does not apply to a wave scenario");
  if (!sc.gpw && (sc.certify_target == "corollary2" || sc.certify_target == "corollary3"))
    throw ValidationError("certify target '" + sc.certify_target + "' needs a 'gpw' section");
  return sc;
}

}  // namespace gpwc
