#pragma once

// JSON run configuration for the command-line front end.
//
// Parsing collects every problem it finds instead of stopping at the first,
// so `--check` can report them all. Fields not given keep the defaults below.

#include "pqlap/core.hpp"
#include "pqlap/eigensolver.hpp"
#include "pqlap/mesh.hpp"
#include "pqlap/nonlinearity.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace pqlap {

using json = nlohmann::json;

inline const std::set<std::string> kCommands{"eigen1", "eigen2", "picone", "classify", "resonant", "sweep", "isolation"};

struct MeshSpec {
  std::string domain = "interval";  // or "rect"
  double lx = 1.0, ly = 1.0;
  int nx = 256, ny = 0;             // ny = 0 means ny = nx
};

struct ParamSpec {
  double p = 2.0, q = 2.0, alpha = 0.0;
  std::optional<double> beta;  // coupled when absent
  bool relaxed = false;
};

/// A closed-form nodal field: constant, polynomial in x, sine mode, bump,
/// or a multiple of a first-eigenpair component.
struct FieldSpec {
  std::string kind = "constant";
  double value = 0.0;            // constant value, or scale for the other kinds
  std::vector<double> coeffs;    // polynomial coefficients in x, lowest first
  int kx = 1, ky = 1;            // sine mode
  std::string component = "u";   // eigenfunction component
  double lift = 0.0;             // added at interior vertices
};

struct RunConfig {
  std::string command;
  MeshSpec mesh;
  ParamSpec params;
  SolverOptions solver;
  std::uint64_t seed = 1;

  std::string family = "arctan_sum";  // "zero" or "arctan_sum"
  double a = -1.0, b = -1.0;
  FieldSpec h1, h2;
  std::string resonant_mode = "auto";  // auto, coercive, saddle
  std::optional<double> theta_big;

  double picone_r = 2.0;
  double picone_tol = 1e-10;
  FieldSpec picone_u{"bump", 1.0}, picone_v{"bump", 1.0};

  std::vector<double> sweep_p, sweep_q, sweep_alpha;

  int isolation_grid = 24;
  double isolation_delta = 0.5;

  bool simplicity = false;

  std::string out_dir = "out";
  bool debug_mesh = false;

  json raw;  // effective document after overrides
};

namespace detail {

inline const json* find_path(const json& doc, const std::string& path) {
  const json* cur = &doc;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!cur->is_object() || !cur->contains(key)) return nullptr;
    cur = &(*cur)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return cur;
}

class Reader {
 public:
  Reader(const json& doc, std::vector<std::string>& diags) : doc_(doc), diags_(diags) {}

  template <class T>
  void get(const std::string& path, T& out) {
    const json* v = find_path(doc_, path);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, int>) {
        if (!v->is_number_integer()) throw std::invalid_argument("expected an integer");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v->is_number()) throw std::invalid_argument("expected a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw std::invalid_argument("expected true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) throw std::invalid_argument("expected a string");
      }
      out = v->get<T>();
    } catch (const std::exception& e) {
      diags_.push_back(path + ": " + e.what());
    }
  }

  void get_list(const std::string& path, std::vector<double>& out) {
    const json* v = find_path(doc_, path);
    if (!v) return;
    if (!v->is_array()) {
      diags_.push_back(path + ": expected a list of numbers");
      return;
    }
    out.clear();
    for (const auto& e : *v) {
      if (!e.is_number()) {
        diags_.push_back(path + ": expected a list of numbers");
        return;
      }
      out.push_back(e.get<double>());
    }
  }

  void get_field(const std::string& path, FieldSpec& f) {
    const json* v = find_path(doc_, path);
    if (!v) return;
    if (v->is_number()) {  // shorthand for a constant
      f = FieldSpec{"constant", v->get<double>()};
      return;
    }
    if (!v->is_object()) {
      diags_.push_back(path + ": expected a number or a field object");
      return;
    }
    get(path + ".kind", f.kind);
    get(path + ".value", f.value);
    get_list(path + ".coeffs", f.coeffs);
    get(path + ".kx", f.kx);
    get(path + ".ky", f.ky);
    get(path + ".component", f.component);
    get(path + ".lift", f.lift);
    static const std::set<std::string> kinds{"constant", "polynomial", "sine", "bump", "eigenfunction"};
    if (!kinds.count(f.kind)) diags_.push_back(path + ".kind: unknown field kind '" + f.kind + "'");
    if (f.kind == "eigenfunction" && f.component != "u" && f.component != "v")
      diags_.push_back(path + ".component: must be \"u\" or \"v\"");
  }

 private:
  const json& doc_;
  std::vector<std::string>& diags_;
};

inline json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return json(text);
  }
}

}  // namespace detail

/// Applies "a.b.c=value" to the document; value is JSON if it parses, else a string.
inline void apply_override(json& doc, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ParameterError("override '" + assignment + "' is not key=value");
  const std::string path = assignment.substr(0, eq);
  json* cur = &doc;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ParameterError("override path '" + path + "' has an empty component");
    if (!cur->is_object()) *cur = json::object();
    cur = &(*cur)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *cur = detail::parse_override_value(assignment.substr(eq + 1));
}

inline ExponentPolicy policy_of(const ParamSpec& s) {
  return s.relaxed ? ExponentPolicy::Relaxed : ExponentPolicy::Strict;
}

inline Params make_params(const ParamSpec& s) {
  if (s.beta) return Params(s.p, s.q, s.alpha, *s.beta, policy_of(s));
  return Params::with_coupled_beta(s.p, s.q, s.alpha, policy_of(s));
}

/// Reads the document into a RunConfig; diagnostics name the offending field.
inline RunConfig parse_config(const json& doc, std::vector<std::string>& diags) {
  RunConfig c;
  c.raw = doc;
  if (!doc.is_object()) {
    diags.push_back("config: expected a JSON object");
    return c;
  }
  detail::Reader r(doc, diags);
  r.get("command", c.command);
  if (!kCommands.count(c.command)) diags.push_back("command: unknown or missing command '" + c.command + "'");

  r.get("mesh.domain", c.mesh.domain);
  r.get("mesh.lx", c.mesh.lx);
  r.get("mesh.ly", c.mesh.ly);
  r.get("mesh.nx", c.mesh.nx);
  r.get("mesh.ny", c.mesh.ny);
  if (c.mesh.domain != "interval" && c.mesh.domain != "rect")
    diags.push_back("mesh.domain: must be \"interval\" or \"rect\"");
  if (!(c.mesh.lx > 0.0) || !(c.mesh.ly > 0.0)) diags.push_back("mesh.lx/ly: lengths must be positive");
  if (c.mesh.nx < 2 || c.mesh.ny < 0) diags.push_back("mesh.nx: at least 2 cells required");

  r.get("params.p", c.params.p);
  r.get("params.q", c.params.q);
  r.get("params.alpha", c.params.alpha);
  if (const json* b = detail::find_path(doc, "params.beta"); b && !b->is_null()) {
    double beta = 0.0;
    r.get("params.beta", beta);
    c.params.beta = beta;
  }
  r.get("params.relaxed", c.params.relaxed);

  auto& s = c.solver;
  r.get("solver.tol_residual", s.tol_residual);
  r.get("solver.tol_q_rel", s.tol_q_rel);
  r.get("solver.max_iters", s.max_iters);
  r.get("solver.step_init", s.step_init);
  r.get("solver.armijo_c", s.armijo_c);
  r.get("solver.backtrack_factor", s.backtrack_factor);
  r.get("solver.epsilon_reg", s.epsilon_reg);
  r.get("solver.n_starts", s.n_starts);
  r.get("solver.loop_samples", s.loop_samples);
  r.get("solver.loop_step", s.loop_step);
  r.get("solver.reparam_every", s.reparam_every);
  int seed = 1;
  r.get("seed", seed);
  if (seed < 0) diags.push_back("seed: must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  s.seed = c.seed;
  try {
    s.validate();
  } catch (const Error& e) {
    diags.push_back(std::string("solver: ") + e.what());
  }

  r.get("nonlinearity.family", c.family);
  r.get("nonlinearity.a", c.a);
  r.get("nonlinearity.b", c.b);
  if (c.family != "zero" && c.family != "arctan_sum")
    diags.push_back("nonlinearity.family: must be \"zero\" or \"arctan_sum\"");
  r.get_field("forcing.h1", c.h1);
  r.get_field("forcing.h2", c.h2);
  r.get("resonant.mode", c.resonant_mode);
  if (c.resonant_mode != "auto" && c.resonant_mode != "coercive" && c.resonant_mode != "saddle")
    diags.push_back("resonant.mode: must be auto, coercive or saddle");
  if (const json* t = detail::find_path(doc, "resonant.theta_big"); t && !t->is_null()) {
    double theta = 0.0;
    r.get("resonant.theta_big", theta);
    if (!(theta > 0.0)) diags.push_back("resonant.theta_big: must be positive");
    c.theta_big = theta;
  }

  r.get("picone.r", c.picone_r);
  r.get("picone.tol", c.picone_tol);
  r.get_field("picone.u", c.picone_u);
  r.get_field("picone.v", c.picone_v);
  if (!(c.picone_r > 1.0)) diags.push_back("picone.r: must exceed 1");

  r.get_list("sweep.p", c.sweep_p);
  r.get_list("sweep.q", c.sweep_q);
  r.get_list("sweep.alpha", c.sweep_alpha);
  if (c.command == "sweep" && c.sweep_p.empty()) diags.push_back("sweep.p: sweep needs a non-empty list of p values");

  r.get("isolation.n_grid", c.isolation_grid);
  r.get("isolation.delta", c.isolation_delta);
  if (c.isolation_grid < 1) diags.push_back("isolation.n_grid: must be at least 1");
  if (!(c.isolation_delta > 0.0)) diags.push_back("isolation.delta: must be positive");

  r.get("simplicity", c.simplicity);
  r.get("output.dir", c.out_dir);
  r.get("output.debug_mesh", c.debug_mesh);

  // exponent checks, reported with the reason rather than as an exception
  const ParamSpec& ps = c.params;
  if (!(ps.p > 1.0) || !(ps.q > 1.0)) diags.push_back("params.p/q: exponents must exceed 1");
  else {
    const double beta = ps.beta ? *ps.beta : ps.q * (1.0 - (ps.alpha + 1.0) / ps.p) - 1.0;
    const double defect = (ps.alpha + 1.0) / ps.p + (beta + 1.0) / ps.q - 1.0;
    if (std::abs(defect) > kCouplingTolerance)
      diags.push_back("params: coupling identity (alpha+1)/p + (beta+1)/q = 1 violated by " + std::to_string(defect));
    const double lower = ps.relaxed ? -1.0 : 0.0;
    if (!(ps.alpha > lower))
      diags.push_back(ps.relaxed ? "params.alpha: must exceed -1"
                                 : "params.alpha: must be > 0 (set params.relaxed = true to allow alpha > -1)");
    if (!(beta > lower))
      diags.push_back(ps.relaxed ? "params.beta: must exceed -1"
                                 : "params.beta: must be > 0 (set params.relaxed = true to allow beta > -1)");
  }
  return c;
}

/// All problems with the document; empty means runnable.
inline std::vector<std::string> validate(const json& doc) {
  std::vector<std::string> diags;
  parse_config(doc, diags);
  return diags;
}

inline Mesh make_mesh(const MeshSpec& m) {
  if (m.domain == "rect") return build_rect_mesh(m.lx, m.ly, m.nx, m.ny > 0 ? m.ny : m.nx);
  return build_interval_mesh(m.lx, m.nx);
}

inline NonlinearitySpec make_nonlinearity(const RunConfig& c) {
  if (c.family == "zero") return zero_nonlinearity();
  return arctan_sum(c.a, c.b);
}

/// Samples a FieldSpec at the vertices. `eigen` is needed for the
/// eigenfunction kind.
inline Vector make_field(const Mesh& mesh, const FieldSpec& f, const StateVector* eigen = nullptr) {
  Vector w;
  if (f.kind == "constant") {
    w = Vector::Constant(static_cast<Eigen::Index>(mesh.num_vertices()), f.value);
  } else if (f.kind == "polynomial") {
    w = mesh.interpolate([&](const Point& x) {
      double s = 0.0;
      for (auto it = f.coeffs.rbegin(); it != f.coeffs.rend(); ++it) s = s * x[0] + *it;
      return f.value * s;
    });
    if (f.coeffs.empty()) w.setZero();
  } else if (f.kind == "sine") {
    w = f.value * sine_mode(mesh, f.kx, f.ky);
  } else if (f.kind == "bump") {
    w = f.value * bump_field(mesh);
  } else if (f.kind == "eigenfunction") {
    if (!eigen) throw StateError("field kind 'eigenfunction' needs a first eigenpair");
    w = f.value * (f.component == "u" ? eigen->u : eigen->v);
  } else {
    throw ParameterError("unknown field kind '" + f.kind + "'");
  }
  if (f.lift != 0.0)
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i)
      if (!mesh.boundary_mask[i]) w[static_cast<Eigen::Index>(i)] += f.lift;
  return w;
}

}  // namespace pqlap
