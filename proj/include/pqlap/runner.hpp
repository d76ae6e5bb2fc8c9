#pragma once

// Pipelines behind the command-line commands and the files they write.

#include "pqlap/config.hpp"
#include "pqlap/eigensolver.hpp"
#include "pqlap/picone.hpp"
#include "pqlap/resonance.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace pqlap {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNotConverged = 2;

struct RunOutcome {
  int status = kExitOk;
  json result;
};

namespace detail {

/// %.17g, so CSV values round-trip exactly.
inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot write " + path.string());
  out << text;
}

inline void write_history(const fs::path& path, const std::vector<IterationRecord>& h) {
  std::string s = "iter,q_value,residual\n";
  for (const auto& r : h) s += std::to_string(r.iteration) + "," + num(r.q_value) + "," + num(r.residual) + "\n";
  write_text(path, s);
}

inline void write_history(const fs::path& path, const std::vector<ResonantIterate>& h) {
  // J takes the place of the quotient for the resonant solvers
  std::string s = "iter,q_value,residual\n";
  for (const auto& r : h) s += std::to_string(r.iteration) + "," + num(r.j) + "," + num(r.residual) + "\n";
  write_text(path, s);
}

inline void write_nodal(const fs::path& path, const Mesh& mesh, const StateVector& z) {
  std::string s = mesh.dim == 1 ? "vertex_index,x,u,v\n" : "vertex_index,x,y,u,v\n";
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    s += std::to_string(i) + "," + num(mesh.vertices[i][0]) + ",";
    if (mesh.dim == 2) s += num(mesh.vertices[i][1]) + ",";
    s += num(z.u[k]) + "," + num(z.v[k]) + "\n";
  }
  write_text(path, s);
}

inline json mesh_json(const Mesh& mesh) {
  json v = json::array(), e = json::array(), b = json::array();
  for (const auto& p : mesh.vertices) v.push_back(mesh.dim == 1 ? json::array({p[0]}) : json::array({p[0], p[1]}));
  for (const auto& el : mesh.elements) {
    json row = json::array();
    for (int a = 0; a < mesh.vertices_per_element(); ++a) row.push_back(el[a]);
    e.push_back(row);
  }
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i)
    if (mesh.boundary_mask[i]) b.push_back(i);
  return {{"vertices", v}, {"elements", e}, {"boundary", b}};
}

inline json params_json(const Params& p) {
  return {{"p", p.p()}, {"q", p.q()}, {"alpha", p.alpha()}, {"beta", p.beta()}};
}

inline json eigen_json(const EigenResult& r) {
  return {{"lambda", r.lambda},   {"residual", r.residual},   {"iterations", r.iterations},
          {"converged", r.converged}, {"message", r.message}};
}

inline json signs_json(const Mesh& mesh, const StateVector& z) {
  const SignStructure s = check_sign_structure(mesh, z);
  return {{"u_pos", s.u_pos}, {"u_neg", s.u_neg}, {"v_pos", s.v_pos}, {"v_neg", s.v_neg},
          {"both_change_sign", s.u_pos > 0 && s.u_neg > 0 && s.v_pos > 0 && s.v_neg > 0}};
}

inline json ll_json(const LLReport& rep) {
  json fs = json::object(), ft = json::object();
  for (Quadrant q : {Quadrant::PP, Quadrant::PM, Quadrant::MP, Quadrant::MM}) {
    fs[quadrant_name(q)] = rep.fs_phi[static_cast<int>(q)];
    ft[quadrant_name(q)] = rep.ft_psi[static_cast<int>(q)];
  }
  return {{"fs_phi", fs},
          {"ft_psi", ft},
          {"h1_phi", rep.h1_phi},
          {"h2_psi", rep.h2_psi},
          {"holds", rep.holds},
          {"case", case_name(rep.exponent_case)},
          {"regime", regime_name(rep.regime)},
          {"margin", rep.margin},
          {"near_boundary", rep.near_boundary},
          {"warning", rep.warning}};
}

struct Context {
  const RunConfig& cfg;
  fs::path dir;
  Mesh mesh;
  Params params;
  json& out;
};

inline int run_eigen(Context& c, bool second) {
  const EigenResult r1 = solve_lambda1(c.mesh, c.params, c.cfg.solver);
  c.out["lambda1"] = r1.lambda;
  c.out["residual1"] = r1.residual;
  c.out["eigen1"] = eigen_json(r1);
  c.out["signs1"] = signs_json(c.mesh, r1.z);
  int status = r1.converged ? kExitOk : kExitNotConverged;
  if (c.cfg.simplicity) {
    const SimplicityReport s = simplicity_check(c.mesh, c.params, c.cfg.solver);
    c.out["simplicity"] = {{"max_deviation", s.max_deviation}, {"lambda_spread", s.lambda_spread},
                           {"runs", s.runs},                   {"failures", s.failures},
                           {"lambdas", s.lambdas}};
    if (s.failures > 0) status = kExitNotConverged;
  }
  if (!second) {
    write_history(c.dir / "history.csv", r1.history);
    write_nodal(c.dir / "eigenfunction.csv", c.mesh, r1.z);
    return status;
  }
  if (!r1.converged) {
    c.out["lambda2"] = nullptr;
    c.out["residual2"] = nullptr;
    write_history(c.dir / "history.csv", r1.history);
    return kExitNotConverged;
  }
  const EigenResult r2 = solve_lambda2(c.mesh, c.params, c.cfg.solver, r1);
  c.out["lambda2"] = r2.lambda;
  c.out["residual2"] = r2.residual;
  c.out["eigen2"] = eigen_json(r2);
  c.out["signs2"] = signs_json(c.mesh, r2.z);
  write_history(c.dir / "history.csv", r2.history);
  write_nodal(c.dir / "eigenfunction.csv", c.mesh, r2.z);
  return r2.converged ? status : kExitNotConverged;
}

inline int run_picone(Context& c) {
  std::optional<StateVector> e1;
  const bool needs_eigen = c.cfg.picone_u.kind == "eigenfunction" || c.cfg.picone_v.kind == "eigenfunction";
  if (needs_eigen) {
    const EigenResult r1 = solve_lambda1(c.mesh, c.params, c.cfg.solver);
    c.out["lambda1"] = r1.lambda;
    if (!r1.converged) return kExitNotConverged;
    e1 = canonical_first_branch(c.mesh, r1.z);
  }
  const Vector u = make_field(c.mesh, c.cfg.picone_u, e1 ? &*e1 : nullptr);
  const Vector v = make_field(c.mesh, c.cfg.picone_v, e1 ? &*e1 : nullptr);
  const PiconeCheck chk = verify_picone(c.mesh, c.cfg.picone_r, u, v, c.cfg.picone_tol);
  c.out["r"] = c.cfg.picone_r;
  c.out["identity_gap"] = chk.identity_gap;
  c.out["min_l"] = chk.min_l;
  c.out["pass"] = chk.pass;
  return kExitOk;
}

struct ResonantSetup {
  EigenResult eig1;
  StateVector e1;
  ResonantData data;
  LLReport report;
};

inline std::optional<ResonantSetup> resonant_setup(Context& c) {
  ResonantSetup s;
  s.eig1 = solve_lambda1(c.mesh, c.params, c.cfg.solver);
  c.out["lambda1"] = s.eig1.lambda;
  c.out["residual1"] = s.eig1.residual;
  if (!s.eig1.converged) return std::nullopt;
  s.e1 = normalize_eigenpair_unitnorm(c.mesh, c.params, s.eig1);
  s.data.nonlinearity = make_nonlinearity(c.cfg);
  s.data.h1 = make_field(c.mesh, c.cfg.h1, &s.e1);
  s.data.h2 = make_field(c.mesh, c.cfg.h2, &s.e1);
  s.data.lambda1 = s.eig1.lambda;
  s.report = ll_classify(c.mesh, c.params, s.data.nonlinearity, s.data.h1, s.data.h2, s.e1);
  c.out["classification"] = ll_json(s.report);
  const SpotCheck sc = spot_check(s.data.nonlinearity, c.mesh, static_cast<unsigned>(c.cfg.seed));
  c.out["spot_check"] = {{"bound_ok", sc.bound_ok},
                         {"limits_ok", sc.limits_ok},
                         {"max_derivative", sc.max_derivative},
                         {"max_limit_gap", sc.max_limit_gap}};
  return s;
}

inline int run_classify(Context& c) {
  return resonant_setup(c) ? kExitOk : kExitNotConverged;
}

inline int run_resonant(Context& c) {
  auto s = resonant_setup(c);
  if (!s) return kExitNotConverged;
  std::string mode = c.cfg.resonant_mode;
  if (mode == "auto") {
    mode = s->report.regime == Regime::Saddle ? "saddle" : "coercive";
    if (s->report.regime == Regime::None)
      c.out["warning"] = "no Landesman-Lazer alternative holds; running the coercive descent anyway";
  }
  c.out["mode"] = mode;
  if (mode == "coercive") {
    const ResonantSolution r = solve_coercive(c.mesh, c.params, s->data, s->eig1, c.cfg.solver);
    c.out["solution"] = {{"j", r.j},           {"residual", r.residual}, {"iterations", r.iterations},
                         {"converged", r.converged}, {"start", r.start},       {"ps_flag", r.ps_flag},
                         {"message", r.message}};
    write_history(c.dir / "history.csv", r.history);
    write_nodal(c.dir / "solution.csv", c.mesh, r.z);
    return r.converged ? kExitOk : kExitNotConverged;
  }
  const EigenResult eig2 = solve_lambda2(c.mesh, c.params, c.cfg.solver, s->eig1);
  c.out["lambda2"] = eig2.lambda;
  c.out["residual2"] = eig2.residual;
  if (!eig2.converged) return kExitNotConverged;
  const SaddleSolution r = solve_saddle(c.mesh, c.params, s->data, s->eig1, eig2, c.cfg.solver, c.cfg.theta_big);
  json samples = json::array();
  for (const auto& b : r.branch_samples)
    samples.push_back({{"branch", static_cast<int>(b.branch)}, {"theta", b.theta}, {"j", b.j}});
  c.out["solution"] = {{"j", r.j},
                       {"residual", r.residual},
                       {"iterations", r.iterations},
                       {"converged", r.converged},
                       {"theta", r.theta},
                       {"branches_decreasing", r.branches_decreasing},
                       {"gamma", r.gamma},
                       {"lambda2_crossing", r.lambda2_crossing},
                       {"branch_samples", samples},
                       {"message", r.message}};
  write_history(c.dir / "history.csv", r.history);
  write_nodal(c.dir / "solution.csv", c.mesh, r.z);
  return r.converged ? kExitOk : kExitNotConverged;
}

inline int run_isolation(Context& c) {
  const EigenResult r1 = solve_lambda1(c.mesh, c.params, c.cfg.solver);
  c.out["lambda1"] = r1.lambda;
  c.out["residual1"] = r1.residual;
  if (!r1.converged) return kExitNotConverged;
  const EigenResult r2 = solve_lambda2(c.mesh, c.params, c.cfg.solver, r1);
  c.out["lambda2"] = r2.lambda;
  c.out["residual2"] = r2.residual;
  if (!r2.converged) return kExitNotConverged;
  const double d = c.cfg.isolation_delta;
  if (!(r2.lambda - d > r1.lambda + d)) throw ParameterError("isolation.delta leaves an empty interval");
  const auto starts = isolation_starts(c.mesh, c.cfg.solver, {r1.z, r2.z});
  const auto pts =
      isolation_scan(c.mesh, c.params, c.cfg.solver, r1.lambda + d, r2.lambda - d, c.cfg.isolation_grid, starts);
  json arr = json::array();
  double floor = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) {
    arr.push_back({{"lambda", p.lambda}, {"min_residual", p.min_residual}});
    floor = std::min(floor, p.min_residual);
  }
  const double attained = std::max(r1.residual, r2.residual);
  c.out["scan"] = arr;
  c.out["floor"] = floor;
  c.out["attained_residual"] = attained;
  c.out["floor_ratio"] = floor / attained;
  return kExitOk;
}

inline json sweep_cell(const RunConfig& cfg, const Mesh& mesh, double p, double q, std::optional<double> alpha,
                       const fs::path& dir) {
  json row = {{"p", p}, {"q", q}};
  try {
    ParamSpec ps = cfg.params;
    ps.p = p;
    ps.q = q;
    ps.alpha = alpha ? *alpha : p / 2.0 - 1.0;  // (alpha+1)/p = 1/2 by default
    ps.beta.reset();
    const Params params = make_params(ps);
    row["alpha"] = params.alpha();
    row["beta"] = params.beta();
    const EigenResult r1 = solve_lambda1(mesh, params, cfg.solver);
    row["lambda1"] = r1.lambda;
    row["residual1"] = r1.residual;
    row["lambda2"] = nullptr;
    row["residual2"] = nullptr;
    bool ok = r1.converged;
    if (r1.converged) {
      const EigenResult r2 = solve_lambda2(mesh, params, cfg.solver, r1);
      row["lambda2"] = r2.lambda;
      row["residual2"] = r2.residual;
      ok = r2.converged;
    }
    row["status"] = ok ? "converged" : "not_converged";
  } catch (const Error& e) {
    row["status"] = "error";
    row["message"] = e.what();
  }
  fs::create_directories(dir);
  write_text(dir / "result.json", row.dump(2) + "\n");
  return row;
}

inline int run_sweep(Context& c, int jobs) {
  struct Cell {
    double p, q;
    std::optional<double> alpha;
  };
  std::vector<Cell> cells;
  for (double p : c.cfg.sweep_p) {
    const std::vector<double> qs = c.cfg.sweep_q.empty() ? std::vector<double>{p} : c.cfg.sweep_q;
    for (double q : qs) {
      if (c.cfg.sweep_alpha.empty()) cells.push_back({p, q, std::nullopt});
      for (double a : c.cfg.sweep_alpha) cells.push_back({p, q, a});
    }
  }
  std::vector<json> rows(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next++) < cells.size();) {
      char name[32];
      std::snprintf(name, sizeof name, "cell_%03zu", k);
      rows[k] = sweep_cell(c.cfg, c.mesh, cells[k].p, cells[k].q, cells[k].alpha, c.dir / name);
    }
  };
  const int n_threads = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(cells.size(), 1)));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  auto field = [](const json& row, const char* key) -> std::string {
    if (!row.contains(key) || row[key].is_null()) return "nan";
    return row[key].is_string() ? row[key].get<std::string>() : num(row[key].get<double>());
  };
  std::string csv = "p,q,alpha,beta,lambda1,lambda2,residual1,residual2,status\n";
  bool all_ok = true;
  for (const auto& row : rows) {
    csv += field(row, "p") + "," + field(row, "q") + "," + field(row, "alpha") + "," + field(row, "beta") + "," +
           field(row, "lambda1") + "," + field(row, "lambda2") + "," + field(row, "residual1") + "," +
           field(row, "residual2") + "," + row["status"].get<std::string>() + "\n";
    all_ok = all_ok && row["status"] == "converged";
  }
  write_text(c.dir / "sweep.csv", csv);
  c.out["cells"] = rows;
  return all_ok ? kExitOk : kExitNotConverged;
}

}  // namespace detail

/// Runs one configuration and writes its artifacts into out_dir.
/// Library errors from bad input become status 1 with the message in
/// result.json; non-convergence is status 2.
inline RunOutcome run(const RunConfig& cfg, const fs::path& out_dir, int jobs = 1) {
  fs::create_directories(out_dir);
  RunOutcome o;
  json echoed = cfg.raw;
  if (echoed.is_object()) echoed.erase("output");  // where the files go is not part of the result
  o.result = {{"command", cfg.command}, {"config", echoed}};
  try {
    const Params params = make_params(cfg.params);
    detail::Context ctx{cfg, out_dir, make_mesh(cfg.mesh), params, o.result};
    o.result["params"] = detail::params_json(params);
    o.result["mesh"] = {{"domain", cfg.mesh.domain},
                        {"vertices", ctx.mesh.num_vertices()},
                        {"elements", ctx.mesh.num_elements()}};
    if (cfg.debug_mesh) detail::write_text(out_dir / "mesh.json", detail::mesh_json(ctx.mesh).dump() + "\n");
    const std::string& cmd = cfg.command;
    if (cmd == "eigen1") o.status = detail::run_eigen(ctx, false);
    else if (cmd == "eigen2") o.status = detail::run_eigen(ctx, true);
    else if (cmd == "picone") o.status = detail::run_picone(ctx);
    else if (cmd == "classify") o.status = detail::run_classify(ctx);
    else if (cmd == "resonant") o.status = detail::run_resonant(ctx);
    else if (cmd == "isolation") o.status = detail::run_isolation(ctx);
    else if (cmd == "sweep") o.status = detail::run_sweep(ctx, jobs);
    else throw ParameterError("unknown command '" + cmd + "'");
  } catch (const Error& e) {
    o.status = kExitConfig;
    o.result["error"] = e.what();
  }
  o.result["status"] = o.status == kExitOk ? "ok" : (o.status == kExitNotConverged ? "not_converged" : "error");
  o.result["timestamp"] = detail::utc_timestamp();
  detail::write_text(out_dir / "result.json", o.result.dump(2) + "\n");
  return o;
}

}  // namespace pqlap
