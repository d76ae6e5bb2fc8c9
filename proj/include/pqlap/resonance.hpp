#pragma once

// Resonance at lambda1: Landesman-Lazer classification and solvers for
//
//   J(z) = Phi(z) - lambda1 Psi(z) - int F(x,u,v) + int h1 u + int h2 v.
//
// Coercive regime: Armijo descent of J with the K^{-1} gradient.
// Saddle regime: a string of paths joining -E and E on the first eigenvalue
// branch; the highest node climbs, the others descend, and the string is
// redistributed at equal energy-norm arclength after each step.

#include "pqlap/core.hpp"
#include "pqlap/eigensolver.hpp"
#include "pqlap/functionals.hpp"
#include "pqlap/mesh.hpp"
#include "pqlap/nonlinearity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace pqlap {

/// Scales z along its (p,q)-orbit so int |grad u|^p + int |grad v|^q = 1.
inline StateVector normalize_eigenpair_unitnorm(const Mesh& mesh, const Params& params, const StateVector& z) {
  check_shape(mesh, z);
  if (z.is_zero()) throw DomainError("cannot normalize the zero state");
  const double a = detail::gradient_energy(mesh, z.u, params.p(), 0.0);
  const double b = detail::gradient_energy(mesh, z.v, params.q(), 0.0);
  if (!(a + b > 0.0)) throw DomainError("state has zero gradient energy");
  return homogeneous_scale(z, 1.0 / (a + b), params);
}

inline StateVector normalize_eigenpair_unitnorm(const Mesh& mesh, const Params& params, const EigenResult& eig) {
  if (!eig.converged) throw PreconditionError("eigenpair normalization needs a converged eigen result");
  return normalize_eigenpair_unitnorm(mesh, params, eig.z);
}

enum class Regime { Coercive, Saddle, None };
enum class ExponentCase { PLessQ, PEqualQ, PGreaterQ };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Coercive: return "coercive";
    case Regime::Saddle: return "saddle";
    case Regime::None: return "none";
  }
  return "?";
}

inline const char* case_name(ExponentCase c) {
  switch (c) {
    case ExponentCase::PLessQ: return "p<q";
    case ExponentCase::PEqualQ: return "p=q";
    case ExponentCase::PGreaterQ: return "p>q";
  }
  return "?";
}

struct LLReport {
  std::array<double, 4> fs_phi{};  // int F_s^Q phi1, indexed by Quadrant
  std::array<double, 4> ft_psi{};  // int F_t^Q psi1
  double h1_phi = 0.0;
  double h2_psi = 0.0;
  // The two alternatives of each exponent case, in the order
  // p<q coercive, p<q saddle, p=q coercive, p=q saddle, p>q coercive, p>q saddle.
  // Only the pair of the actual case can be true.
  std::array<bool, 6> holds{};
  ExponentCase exponent_case = ExponentCase::PEqualQ;
  Regime regime = Regime::None;
  double margin = 0.0;         // smallest slack of the satisfied alternative
  bool near_boundary = false;  // an alternative holds only within rounding of equality
  std::string warning;
};

namespace detail {

// a < x < b, and the smaller of the two slacks.
struct Strict {
  bool ok;
  double slack;
};

inline Strict between(double a, double x, double b) { return {a < x && x < b, std::min(x - a, b - x)}; }

inline Strict both(Strict s1, Strict s2) { return {s1.ok && s2.ok, std::min(s1.slack, s2.slack)}; }

}  // namespace detail

/// Evaluates the limit integrals against the unit-normalized first eigenpair
/// and the strict Landesman-Lazer inequalities of the applicable case.
inline LLReport ll_classify(const Mesh& mesh, const Params& params, const NonlinearitySpec& spec, const Vector& h1,
                            const Vector& h2, const StateVector& eigenpair) {
  check_shape(mesh, eigenpair);
  const Vector& phi1 = eigenpair.u;
  const Vector& psi1 = eigenpair.v;
  LLReport rep;
  double scale = 0.0;
  for (Quadrant q : {Quadrant::PP, Quadrant::PM, Quadrant::MP, Quadrant::MM}) {
    Vector fs(phi1.size()), ft(psi1.size());
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      fs[k] = spec.fs_lim(q, mesh.vertices[i]) * phi1[k];
      ft[k] = spec.ft_lim(q, mesh.vertices[i]) * psi1[k];
    }
    rep.fs_phi[static_cast<int>(q)] = mesh.integrate_nodal(fs);
    rep.ft_psi[static_cast<int>(q)] = mesh.integrate_nodal(ft);
    scale = std::max({scale, std::abs(rep.fs_phi[static_cast<int>(q)]), std::abs(rep.ft_psi[static_cast<int>(q)])});
  }
  rep.h1_phi = mesh.integrate_nodal(Vector(h1.cwiseProduct(phi1)));
  rep.h2_psi = mesh.integrate_nodal(Vector(h2.cwiseProduct(psi1)));
  scale = std::max({scale, std::abs(rep.h1_phi), std::abs(rep.h2_psi)});

  auto S = [&](Quadrant q) { return rep.fs_phi[static_cast<int>(q)]; };
  auto T = [&](Quadrant q) { return rep.ft_psi[static_cast<int>(q)]; };
  using Q = Quadrant;
  using detail::between;
  using detail::both;

  detail::Strict coercive{false, 0.0}, saddle{false, 0.0};
  int offset = 0;
  if (params.p() < params.q()) {
    rep.exponent_case = ExponentCase::PLessQ;
    const double h = rep.h1_phi;
    coercive = both(between(S(Q::PP), h, S(Q::MM)), between(S(Q::PM), h, S(Q::MP)));
    saddle = both(between(S(Q::MM), h, S(Q::PP)), between(S(Q::MP), h, S(Q::PM)));
  } else if (params.p() == params.q()) {
    rep.exponent_case = ExponentCase::PEqualQ;
    offset = 2;
    const double hp = rep.h1_phi + rep.h2_psi, hm = rep.h1_phi - rep.h2_psi;
    auto plus = [&](Q q) { return S(q) + T(q); };
    auto minus = [&](Q q) { return S(q) - T(q); };
    coercive = both(between(plus(Q::PP), hp, plus(Q::MM)), between(minus(Q::PM), hm, minus(Q::MP)));
    saddle = both(between(plus(Q::MM), hp, plus(Q::PP)), between(minus(Q::MP), hm, minus(Q::PM)));
  } else {
    rep.exponent_case = ExponentCase::PGreaterQ;
    offset = 4;
    const double h = rep.h2_psi;
    coercive = both(between(T(Q::PP), h, T(Q::MM)), between(T(Q::MP), h, T(Q::PM)));
    saddle = both(between(T(Q::MM), h, T(Q::PP)), between(T(Q::PM), h, T(Q::MP)));
  }
  rep.holds[offset] = coercive.ok;
  rep.holds[offset + 1] = saddle.ok;
  if (coercive.ok) {
    rep.regime = Regime::Coercive;
    rep.margin = coercive.slack;
  } else if (saddle.ok) {
    rep.regime = Regime::Saddle;
    rep.margin = saddle.slack;
  }
  // equality up to quadrature rounding is not a strict inequality we can trust
  if (rep.regime != Regime::None && rep.margin <= 1e-10 * std::max(scale, 1e-300)) {
    rep.near_boundary = true;
    rep.warning = std::string("the ") + regime_name(rep.regime) +
                  " conditions hold only within rounding of equality; reported as none";
    rep.regime = Regime::None;
  }
  return rep;
}

struct ResonantIterate {
  int iteration = 0;
  double j = 0.0;
  double residual = 0.0;
};

struct ResonantSolution {
  StateVector z;
  double j = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  std::string start;                     // which start produced z
  std::vector<ResonantIterate> history;  // of the returned run
  bool ps_flag = false;                  // residual stalled while J stayed bounded
  std::string message;
};

namespace detail {

inline ResonantSolution descend_j(const Mesh& mesh, const Params& params, const ResonantData& data,
                                  const SolverOptions& opts, StateVector z, double eps) {
  const auto& K = mesh.K();
  ResonantSolution out;
  double j = j_value(mesh, params, z, data, eps);
  Covector g = grad_j(mesh, params, z, data, eps);
  StateVector d = -K.riesz(g);
  double slope = -pair(g, d);
  double step = opts.step_init;
  int stalled = 0;
  int it = 0;
  for (;; ++it) {
    if (!std::isfinite(j)) {
      out.message = "J is not finite along the descent";
      break;
    }
    const double residual = std::sqrt(std::max(slope, 0.0));
    out.history.push_back({it, j, residual});
    if (residual <= opts.tol_residual) {
      out.converged = true;
      break;
    }
    if (it >= opts.max_iters) {
      out.message = "iteration cap reached";
      break;
    }
    bool accepted = false;
    bool first_try = true;
    while (step > 1e-14 * opts.step_init) {
      const StateVector trial = z + step * d;
      const double jt = j_value(mesh, params, trial, data, eps);
      const bool armijo = jt <= j - opts.armijo_c * step * slope;
      // below rounding the Armijo gain is invisible; fall back to
      // "J does not increase and the residual drops"
      bool fallback = false;
      Covector gt;
      if (!armijo && jt <= j && step * slope < 1e-13 * std::max(std::abs(j), 1.0)) {
        gt = grad_j(mesh, params, trial, data, eps);
        fallback = dual_norm(mesh, gt) < residual;
      }
      if (armijo || fallback) {
        z = trial;
        j = jt;
        g = fallback ? std::move(gt) : grad_j(mesh, params, z, data, eps);
        accepted = true;
        break;
      }
      step *= opts.backtrack_factor;
      first_try = false;
    }
    if (!accepted) {
      out.message = "line search failed";
      break;
    }
    if (first_try) step = std::min(step / opts.backtrack_factor, 1024.0 * opts.step_init);
    d = -K.riesz(g);
    const double new_slope = -pair(g, d);
    stalled = new_slope >= 0.99 * slope ? stalled + 1 : 0;
    slope = new_slope;
  }
  out.z = std::move(z);
  out.j = j;
  out.residual = out.history.back().residual;
  out.iterations = it;
  out.ps_flag = !out.converged && stalled >= 50;
  return out;
}

}  // namespace detail

/// Best of three Armijo descents of J, started at 0 and at +- the
/// unit-normalized first eigenpair. Lowest J among converged runs wins.
inline ResonantSolution solve_coercive(const Mesh& mesh, const Params& params, const ResonantData& data,
                                       const EigenResult& lambda1_result, const SolverOptions& opts) {
  opts.validate();
  check_shape(mesh, data);
  data.require_lambda1();
  const StateVector e1 = normalize_eigenpair_unitnorm(mesh, params, lambda1_result);
  const double eps = detail::regularization_scale(mesh, e1, opts.epsilon_reg);
  const std::array<std::pair<const char*, StateVector>, 3> starts{
      {{"zero", StateVector::zeros(e1.size())}, {"+eigenpair", e1}, {"-eigenpair", -e1}}};
  std::optional<ResonantSolution> best;
  for (const auto& [label, z0] : starts) {
    ResonantSolution r = detail::descend_j(mesh, params, data, opts, z0, eps);
    r.start = label;
    const bool better = !best || (r.converged && !best->converged) ||
                        (r.converged == best->converged && (r.j < best->j || (r.j == best->j && r.residual < best->residual)));
    if (better) best = std::move(r);
  }
  return *best;
}

struct BranchSample {
  Branch branch = Branch::Same;
  double theta = 0.0;  // signed
  double j = 0.0;
};

struct SaddleSolution {
  StateVector z;
  double j = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  double theta = 0.0;
  std::vector<BranchSample> branch_samples;
  bool branches_decreasing = false;  // J falls with |theta| on all four branches
  double gamma = 0.0;                // max of J over the sampled endpoint set
  double lambda2_crossing = 0.0;     // max over path nodes of Phi - lambda2 Psi
  std::vector<ResonantIterate> history;
  std::vector<StateVector> path;
  std::string message;
};

inline constexpr int kPathNodes = 33;

namespace detail {

inline std::vector<BranchSample> sample_branches(const Mesh& mesh, const Params& params, const ResonantData& data,
                                                 const StateVector& e1, double theta, double eps) {
  std::vector<BranchSample> out;
  for (Branch b : {Branch::Same, Branch::Mirrored})
    for (double sign : {1.0, -1.0})
      for (double mult : {1.0, 2.0, 4.0}) {
        const double t = sign * mult * theta;
        out.push_back({b, t, j_value(mesh, params, sign_branch(e1, t, params, b), data, eps)});
      }
  return out;
}

/// Equal energy-norm arclength with the node `keep` pinned; it is moved to
/// the index matching its arclength fraction.
inline std::size_t redistribute_path(const Mesh& mesh, std::vector<StateVector>& path, std::size_t keep) {
  const auto& K = mesh.K();
  const std::size_t n = path.size();
  std::vector<double> s(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) s[i] = s[i - 1] + K.norm(path[i] - path[i - 1]);
  const double total = s[n - 1];
  if (!(total > 0.0)) return keep;
  std::size_t c = static_cast<std::size_t>(std::lround(static_cast<double>(n - 1) * s[keep] / total));
  c = std::clamp<std::size_t>(c, 1, n - 2);
  auto sample = [&](double target) {
    std::size_t j = 0;
    while (j + 2 < n && s[j + 1] < target) ++j;
    const double len = s[j + 1] - s[j];
    const double t = len > 0.0 ? std::clamp((target - s[j]) / len, 0.0, 1.0) : 0.0;
    return StateVector((1.0 - t) * path[j] + t * path[j + 1]);
  };
  std::vector<StateVector> out(n);
  out.front() = path.front();
  out.back() = path.back();
  out[c] = path[keep];
  for (std::size_t i = 1; i < c; ++i) out[i] = sample(s[keep] * static_cast<double>(i) / static_cast<double>(c));
  for (std::size_t i = c + 1; i + 1 < n; ++i)
    out[i] = sample(s[keep] + (total - s[keep]) * static_cast<double>(i - c) / static_cast<double>(n - 1 - c));
  path = std::move(out);
  return c;
}

}  // namespace detail

/// Path minimax for the saddle regime.
///
/// theta_big fixes the endpoint scale; without it the smallest power of two
/// with J below J(0) - 1 on all four branches is used.
inline SaddleSolution solve_saddle(const Mesh& mesh, const Params& params, const ResonantData& data,
                                   const EigenResult& eig1, const EigenResult& eig2, const SolverOptions& opts,
                                   std::optional<double> theta_big = std::nullopt) {
  opts.validate();
  check_shape(mesh, data);
  data.require_lambda1();
  if (!eig1.converged || !eig2.converged) throw PreconditionError("saddle solve needs converged lambda1 and lambda2");
  if (!(eig2.lambda - eig1.lambda > 1e-6 * eig1.lambda))
    throw PreconditionError("lambda2 - lambda1 is too small to separate the endpoint set from {Phi >= lambda2 Psi}");
  const auto& K = mesh.K();
  const StateVector e1 = normalize_eigenpair_unitnorm(mesh, params, eig1);
  const double eps = detail::regularization_scale(mesh, e1, opts.epsilon_reg);
  const double j0 = j_value(mesh, params, StateVector::zeros(e1.size()), data, eps);

  SaddleSolution out;
  if (theta_big) {
    if (!(*theta_big > 0.0)) throw ParameterError("theta_big must be positive");
    out.theta = *theta_big;
  } else {
    double theta = 1.0;
    for (;; theta *= 2.0) {
      if (theta > std::ldexp(1.0, 20))
        throw PreconditionError("J does not drop below J(0) - 1 on all branches up to theta = 2^20");
      bool low = true;
      for (Branch b : {Branch::Same, Branch::Mirrored})
        for (double sign : {1.0, -1.0})
          low = low && j_value(mesh, params, sign_branch(e1, sign * theta, params, b), data, eps) < j0 - 1.0;
      if (low) break;
    }
    out.theta = theta;
  }
  out.branch_samples = detail::sample_branches(mesh, params, data, e1, out.theta, eps);
  out.branches_decreasing = true;
  out.gamma = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < out.branch_samples.size(); k += 3) {
    const auto* s = &out.branch_samples[k];
    out.branches_decreasing = out.branches_decreasing && s[0].j > s[1].j && s[1].j > s[2].j;
    out.gamma = std::max(out.gamma, s[0].j);  // the largest sample sits at |theta| = Theta
  }

  // straight segment through 0, bent toward the second eigenfunction so that
  // the start is not already critical
  const StateVector end = sign_branch(e1, out.theta, params, Branch::Same);
  const StateVector bend = (0.5 * K.norm(end) / K.norm(eig2.z)) * eig2.z;
  std::vector<StateVector> path(kPathNodes);
  for (int i = 0; i < kPathNodes; ++i) {
    const double t = -1.0 + 2.0 * i / (kPathNodes - 1);
    path[i] = t * end + (1.0 - t * t) * bend;
  }
  const double cap = 0.1 * K.norm(end);

  std::size_t climber = 0;
  double gain = 1.0, prev_residual = std::numeric_limits<double>::infinity();
  int degenerate = 0;
  int it = 0;
  for (;; ++it) {
    std::vector<double> js(kPathNodes);
    for (int i = 0; i < kPathNodes; ++i) js[i] = j_value(mesh, params, path[i], data, eps);
    climber = static_cast<std::size_t>(std::max_element(js.begin() + 1, js.end() - 1) - js.begin());
    std::vector<Covector> gs(kPathNodes);
    for (int i = 1; i + 1 < kPathNodes; ++i) gs[i] = grad_j(mesh, params, path[i], data, eps);
    const double residual = dual_norm(mesh, gs[climber]);
    out.history.push_back({it, js[climber], residual});
    if (residual <= opts.tol_residual) {
      out.converged = true;
      break;
    }
    if (it >= opts.max_iters) {
      out.message = "iteration cap reached";
      break;
    }
    gain = residual > prev_residual ? std::max(0.5 * gain, 1e-4) : std::min(1.1 * gain, 1.0);
    prev_residual = residual;

    StateVector tangent = path[climber + 1] - path[climber - 1];
    const double tn = K.norm(tangent);
    if (tn > 0.0) tangent *= 1.0 / tn;
    for (int i = 1; i + 1 < kPathNodes; ++i) {
      StateVector d = -K.riesz(gs[i]);
      if (static_cast<std::size_t>(i) == climber && tn > 0.0) d -= (2.0 * K.inner(d, tangent)) * tangent;
      double h = gain * opts.step_init;
      const double move = h * K.norm(d);
      if (move > cap) h *= cap / move;
      path[i] += h * d;
    }
    double shortest = std::numeric_limits<double>::infinity(), total = 0.0;
    for (int i = 1; i < kPathNodes; ++i) {
      const double l = K.norm(path[i] - path[i - 1]);
      shortest = std::min(shortest, l);
      total += l;
    }
    if (shortest < 1e-3 * total / (kPathNodes - 1) && ++degenerate > 50) {
      out.message = "path degenerated repeatedly";
      break;
    }
    climber = detail::redistribute_path(mesh, path, climber);
  }
  out.iterations = it;
  out.z = path[climber];
  out.j = j_value(mesh, params, out.z, data, eps);
  out.residual = out.history.back().residual;
  out.lambda2_crossing = -std::numeric_limits<double>::infinity();
  for (const auto& z : path)
    out.lambda2_crossing = std::max(out.lambda2_crossing, phi(mesh, params, z, eps) - eig2.lambda * psi(mesh, params, z));
  out.path = std::move(path);
  return out;
}

}  // namespace pqlap
