#pragma once

// First and second eigenvalues of the coupled (p,q)-Laplacian system.
//
// lambda1 = 1 / max{Psi(z) : Phi(z) = 1}: Riemannian ascent of Psi on the
// level set M = {Phi = 1} with the K^{-1} (Sobolev) gradient of
// Q' = Psi' - Psi Phi', Armijo backtracking, and retraction by exact
// (p,q)-homogeneous rescaling.
//
// lambda2 = 1 / sup over odd loops in M of min Psi: a closed antipodal string
// of 2m points evolves by the same ascent flow; the point of minimal Psi
// climbs (its component along the loop tangent is reversed) and the string is
// periodically redistributed at equal energy-norm arclength.

#include "pqlap/core.hpp"
#include "pqlap/fields.hpp"
#include "pqlap/functionals.hpp"
#include "pqlap/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace pqlap {

struct SolverOptions {
  double tol_residual = 1e-8;
  double tol_q_rel = 1e-15;
  int max_iters = 2000;
  double step_init = 1.0;  // in units of 1/Psi; 1 is inverse iteration for p = q = 2
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  double epsilon_reg = 1e-8;  // relative to the mean gradient magnitude of the start
  std::uint64_t seed = 1;
  int n_starts = 8;
  int loop_samples = 16;
  double loop_step = 0.3;
  int reparam_every = 10;

  void validate() const {
    if (!(tol_residual > 0.0) || !(tol_q_rel >= 0.0)) throw ParameterError("tolerances must be positive");
    if (max_iters < 1) throw ParameterError("max_iters must be at least 1");
    if (!(step_init > 0.0) || !(loop_step > 0.0)) throw ParameterError("steps must be positive");
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw ParameterError("armijo_c must lie in (0,1)");
    if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0))
      throw ParameterError("backtrack_factor must lie in (0,1)");
    if (!(epsilon_reg >= 0.0)) throw ParameterError("epsilon_reg must be non-negative");
    if (n_starts < 1) throw ParameterError("n_starts must be at least 1");
    if (loop_samples < 3) throw ParameterError("loop_samples must be at least 3");
    if (reparam_every < 1) throw ParameterError("reparam_every must be at least 1");
  }
};

struct IterationRecord {
  int iteration = 0;
  double q_value = 0.0;
  double residual = 0.0;
};

struct EigenResult {
  double lambda = 0.0;
  StateVector z;  // Phi(z) = 1
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::vector<IterationRecord> history;
  bool converged = false;
  std::string message;
};

/// Odd loop in M stored as its first half; point(i + m) = -point(i).
struct LoopState {
  std::vector<StateVector> points;
  std::size_t min_index = 0;

  std::size_t half() const { return points.size(); }
  std::size_t size() const { return 2 * points.size(); }
  StateVector point(std::size_t i) const {
    const std::size_t m = points.size();
    i %= 2 * m;
    return i < m ? points[i] : -points[i - m];
  }
};

/// homogeneous_scale(z, 1/Phi(z)), so Phi of the result is 1.
inline StateVector normalize_to_manifold(const Mesh& mesh, const Params& params, const StateVector& z) {
  const double f = phi(mesh, params, z);
  if (z.is_zero() || !(f > 0.0)) throw DomainError("cannot normalize the zero state onto Phi = 1");
  return homogeneous_scale(z, 1.0 / f, params);
}

/// Flips u and v independently so both nodal integrals are non-negative.
inline StateVector canonical_first_branch(const Mesh& mesh, const StateVector& z) {
  StateVector c = z;
  if (mesh.integrate_nodal(c.u) < 0.0) c.u = -c.u;
  if (mesh.integrate_nodal(c.v) < 0.0) c.v = -c.v;
  return c;
}

/// (u, v) -> (-u, -v) when int u < 0, or int u = 0 and int v < 0.
inline StateVector tie_break_sign(const Mesh& mesh, const StateVector& z) {
  const double iu = mesh.integrate_nodal(z.u);
  const double iv = mesh.integrate_nodal(z.v);
  if (iu < 0.0 || (iu == 0.0 && iv < 0.0)) return -z;
  return z;
}

namespace detail {

// Relative Psi increase below which an Armijo comparison is rounding noise.
inline constexpr double kUnresolvedGain = 1e-13;

/// Quantities of Q restricted to M evaluated at one point.
struct ManifoldPoint {
  double psi = 0.0;
  Covector q_prime;    // Psi' - Psi Phi'
  StateVector ascent;  // K^{-1} q_prime
  double slope = 0.0;  // <q_prime, ascent>
  double residual = 0.0;
};

inline double regularization_scale(const Mesh& mesh, const StateVector& z, double rel) {
  if (rel <= 0.0) return 0.0;
  const auto gu = gradient_field(mesh, z.u);
  const auto gv = gradient_field(mesh, z.v);
  double s = 0.0;
  for (std::size_t e = 0; e < gu.size(); ++e)
    s += std::hypot(gu[e][0], gu[e][1]) + std::hypot(gv[e][0], gv[e][1]);
  return rel * s / (2.0 * static_cast<double>(gu.size()));
}

inline ManifoldPoint evaluate_on_manifold(const Mesh& mesh, const Params& params, const StateVector& z,
                                          double eps) {
  ManifoldPoint mp;
  mp.psi = psi(mesh, params, z);
  const Covector gphi = grad_phi(mesh, params, z, eps);
  mp.q_prime = grad_psi(mesh, params, z) - mp.psi * gphi;
  mp.ascent = mesh.K().riesz(mp.q_prime);
  mp.slope = pair(mp.q_prime, mp.ascent);
  // ||Phi' - Psi'/Psi||_* = ||Q'||_* / Psi on M
  mp.residual = mp.psi > 0.0 ? std::sqrt(std::max(mp.slope, 0.0)) / mp.psi : std::numeric_limits<double>::infinity();
  return mp;
}

}  // namespace detail

/// lambda1 by projected ascent of Psi on {Phi = 1}.
///
/// Never throws on non-convergence: the best iterate is returned with
/// converged = false.
inline EigenResult solve_lambda1(const Mesh& mesh, const Params& params, const SolverOptions& opts,
                                 const std::optional<StateVector>& z0 = std::nullopt) {
  opts.validate();
  StateVector start;
  if (z0) {
    check_shape(mesh, *z0);
    start = *z0;
    mesh.apply_dirichlet(start);
  } else {
    const Vector b = bump_field(mesh);
    start = StateVector(b, b);
  }
  if (!(psi(mesh, params, start) > 0.0))
    throw StartError("start has Psi = 0 (u v vanishes at every vertex); pick a start with u v != 0");

  StateVector z = normalize_to_manifold(mesh, params, start);
  const double eps = detail::regularization_scale(mesh, z, opts.epsilon_reg);

  EigenResult res;
  auto mp = detail::evaluate_on_manifold(mesh, params, z, eps);
  double step = opts.step_init / mp.psi;
  const double step_max = 4.0 * opts.step_init / mp.psi;
  int stalled = 0;
  int it = 0;
  for (;; ++it) {
    res.history.push_back({it, mp.psi, mp.residual});
    if (mp.residual <= opts.tol_residual) {
      res.converged = true;
      break;
    }
    if (it >= opts.max_iters) {
      res.message = "iteration cap reached";
      break;
    }
    bool accepted = false;
    bool first_try = true;
    StateVector trial;
    double trial_psi = 0.0;
    detail::ManifoldPoint trial_mp;
    bool have_trial_mp = false;
    while (step > 1e-14 * opts.step_init / mp.psi) {
      have_trial_mp = false;
      trial = normalize_to_manifold(mesh, params, z + step * mp.ascent);
      trial_psi = psi(mesh, params, trial);
      if (trial_psi >= mp.psi + opts.armijo_c * step * mp.slope) {
        accepted = true;
        break;
      }
      // Near convergence the predicted gain drops below the rounding level of
      // Psi; the Armijo test is then decided by noise, so the residual decides.
      // Psi may then move down by rounding noise only.
      if (step * mp.slope < detail::kUnresolvedGain * mp.psi) {
        trial_mp = detail::evaluate_on_manifold(mesh, params, trial, eps);
        have_trial_mp = true;
        if (trial_mp.residual < mp.residual) {
          accepted = true;
          break;
        }
      }
      step *= opts.backtrack_factor;
      first_try = false;
    }
    if (!accepted) {
      res.message = "line search failed (no ascent direction at working precision)";
      break;
    }
    const double gain = (trial_psi - mp.psi) / mp.psi;
    const double prev_residual = mp.residual;
    z = std::move(trial);
    mp = have_trial_mp ? std::move(trial_mp) : detail::evaluate_on_manifold(mesh, params, z, eps);
    // a step that still lowers the residual is progress even when Q cannot see it
    stalled = gain <= opts.tol_q_rel && mp.residual >= prev_residual ? stalled + 1 : 0;
    if (first_try) step = std::min(step / opts.backtrack_factor, step_max);
    if (stalled >= 20) {
      res.history.push_back({it + 1, mp.psi, mp.residual});
      ++it;
      res.converged = mp.residual <= opts.tol_residual;
      if (!res.converged) res.message = "Q stagnated above the residual tolerance";
      break;
    }
  }
  res.iterations = it;
  res.z = canonical_first_branch(mesh, z);
  res.lambda = 1.0 / psi(mesh, params, res.z);
  res.residual = mp.residual;
  return res;
}

/// Interior nodal sign counts per component.
struct SignStructure {
  int u_pos = 0, u_neg = 0, v_pos = 0, v_neg = 0;
  bool u_changes_sign() const { return u_pos > 0 && u_neg > 0; }
  bool v_changes_sign() const { return v_pos > 0 && v_neg > 0; }
};

inline SignStructure check_sign_structure(const Mesh& mesh, const StateVector& z) {
  check_shape(mesh, z);
  SignStructure s;
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    if (mesh.boundary_mask[i]) continue;
    const auto k = static_cast<Eigen::Index>(i);
    s.u_pos += z.u[k] > 0.0;
    s.u_neg += z.u[k] < 0.0;
    s.v_pos += z.v[k] > 0.0;
    s.v_neg += z.v[k] < 0.0;
  }
  return s;
}

namespace detail {

/// Antipodal loop through +-z1, bent towards an energy-orthogonal sine mode.
inline LoopState initial_loop(const Mesh& mesh, const Params& params, const StateVector& z1, int m) {
  const auto& K = mesh.K();
  StateVector w;
  for (int k = 2; k <= 4; ++k) {
    // a pure mode would already be a critical point at p = 2
    const Vector s = sine_mode(mesh, k, 1) + 0.3 * sine_mode(mesh, k + 1, 1);
    w = StateVector(s, s);
    w -= (K.inner(w, z1) / K.inner(z1, z1)) * z1;
    if (K.norm(w) > 1e-8 * K.norm(z1)) break;
  }
  w *= K.norm(z1) / K.norm(w);
  LoopState loop;
  for (int i = 0; i < m; ++i) {
    const double t = std::numbers::pi * i / m;
    loop.points.push_back(normalize_to_manifold(mesh, params, std::cos(t) * z1 + std::sin(t) * w));
  }
  return loop;
}

/// Redistributes points 1..m-1 at equal energy-norm arclength along the
/// polygon z_0, ..., z_{m-1}, -z_0; z_0 stays fixed.
inline void reparametrize(const Mesh& mesh, const Params& params, LoopState& loop) {
  const auto& K = mesh.K();
  const std::size_t m = loop.half();
  std::vector<StateVector> poly(loop.points);
  poly.push_back(-loop.points.front());
  std::vector<double> s(m + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) s[i + 1] = s[i] + K.norm(poly[i + 1] - poly[i]);
  const double total = s[m];
  std::vector<StateVector> out{loop.points.front()};
  std::size_t j = 0;
  for (std::size_t k = 1; k < m; ++k) {
    const double target = total * static_cast<double>(k) / static_cast<double>(m);
    while (j + 1 < m && s[j + 1] < target) ++j;
    const double len = s[j + 1] - s[j];
    const double t = len > 0.0 ? (target - s[j]) / len : 0.0;
    out.push_back(normalize_to_manifold(mesh, params, (1.0 - t) * poly[j] + t * poly[j + 1]));
  }
  loop.points = std::move(out);
}

/// Cyclic shift so that point k becomes the first one.
inline void rotate_loop(LoopState& loop, std::size_t k) {
  if (k == 0) return;
  std::vector<StateVector> out;
  const std::size_t m = loop.half();
  for (std::size_t i = 0; i < m; ++i) out.push_back(loop.point(k + i));
  loop.points = std::move(out);
  loop.min_index = 0;
}

/// Doubles the loop resolution by inserting retracted midpoints.
inline void refine_loop(const Mesh& mesh, const Params& params, LoopState& loop) {
  std::vector<StateVector> out;
  const std::size_t m = loop.half();
  for (std::size_t i = 0; i < m; ++i) {
    out.push_back(loop.points[i]);
    out.push_back(normalize_to_manifold(mesh, params, 0.5 * (loop.point(i) + loop.point(i + 1))));
  }
  loop.points = std::move(out);
}

}  // namespace detail

/// lambda2 from the discrete sup over odd loops of min Psi on M.
///
/// The returned eigenfunction is the minimizing point of the converged loop,
/// sign-normalized by the tie-break rule. The computed value is an upper
/// bound on the discrete minimax value (the loop family is a subset).
inline EigenResult solve_lambda2(const Mesh& mesh, const Params& params, const SolverOptions& opts,
                                 const EigenResult& lambda1_result, LoopState* final_loop = nullptr) {
  opts.validate();
  if (!lambda1_result.converged) throw PreconditionError("solve_lambda2 needs a converged lambda1 result");
  check_shape(mesh, lambda1_result.z);
  const auto& K = mesh.K();
  const StateVector z1 = normalize_to_manifold(mesh, params, lambda1_result.z);
  const double eps = detail::regularization_scale(mesh, z1, opts.epsilon_reg);

  LoopState loop = detail::initial_loop(mesh, params, z1, opts.loop_samples);
  EigenResult res;
  int collapses = 0;
  int it = 0;
  double gain = 1.0;  // shrinks when the climbing residual grows
  double prev_residual = std::numeric_limits<double>::infinity();
  detail::ManifoldPoint worst;
  for (;; ++it) {
    std::vector<detail::ManifoldPoint> mps;
    mps.reserve(loop.half());
    for (const auto& z : loop.points) mps.push_back(detail::evaluate_on_manifold(mesh, params, z, eps));
    std::size_t imin = 0;
    for (std::size_t i = 1; i < mps.size(); ++i)
      if (mps[i].psi < mps[imin].psi) imin = i;
    if (imin != 0) {
      detail::rotate_loop(loop, imin);
      std::vector<detail::ManifoldPoint> rotated;
      for (std::size_t i = 0; i < mps.size(); ++i) {
        auto mp = mps[(imin + i) % mps.size()];
        if (imin + i >= mps.size()) {  // negated point: Psi even, Q' odd
          mp.q_prime *= -1.0;
          mp.ascent *= -1.0;
        }
        rotated.push_back(std::move(mp));
      }
      mps = std::move(rotated);
    }
    loop.min_index = 0;
    worst = mps.front();
    res.history.push_back({it, worst.psi, worst.residual});
    if (worst.residual <= opts.tol_residual) {
      res.converged = true;
      break;
    }
    if (it >= opts.max_iters) {
      res.message = "iteration cap reached";
      break;
    }
    gain = worst.residual > prev_residual ? std::max(0.5 * gain, 1e-4) : std::min(1.1 * gain, 1.0);
    prev_residual = worst.residual;

    const std::size_t m = loop.half();
    StateVector tangent = loop.point(1) - loop.point(2 * m - 1);
    const double tn = K.norm(tangent);
    if (tn > 0.0) tangent *= 1.0 / tn;
    std::vector<StateVector> next;
    next.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
      StateVector d = mps[k].ascent;
      if (k == 0 && tn > 0.0) d -= (2.0 * K.inner(d, tangent)) * tangent;
      // the fixed step is tuned for p = 2; cap the move so strongly
      // nonlinear cases cannot jump across the manifold
      double h = gain * opts.loop_step / mps[k].psi;
      const double move = h * K.norm(d), cap = 0.1 * K.norm(loop.points[k]);
      if (move > cap) h *= cap / move;
      next.push_back(normalize_to_manifold(mesh, params, loop.points[k] + h * d));
    }
    loop.points = std::move(next);

    // collapse: a segment much shorter than the mean segment
    double seg_min = std::numeric_limits<double>::infinity(), seg_sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double l = K.norm(loop.point(i + 1) - loop.point(i));
      seg_min = std::min(seg_min, l);
      seg_sum += l;
    }
    const bool collapsed = seg_min < 1e-3 * seg_sum / static_cast<double>(m);
    if (collapsed) ++collapses;
    if (collapses > 50) {
      res.message = "loop collapse persisted after repeated reparametrization";
      break;
    }
    if (collapsed || (it + 1) % opts.reparam_every == 0) {
      detail::reparametrize(mesh, params, loop);
      // under-resolved loop: a retracted chord midpoint dips below the loop minimum
      const double floor_psi = psi(mesh, params, loop.points.front());
      bool dips = false;
      for (std::size_t i = 0; i < loop.half() && !dips; ++i) {
        const StateVector mid = normalize_to_manifold(mesh, params, 0.5 * (loop.point(i) + loop.point(i + 1)));
        dips = psi(mesh, params, mid) < floor_psi * (1.0 - 1e-2);
      }
      if (dips && loop.half() < 256) detail::refine_loop(mesh, params, loop);
    }
  }
  res.iterations = it;
  res.z = tie_break_sign(mesh, loop.points.front());
  res.lambda = 1.0 / psi(mesh, params, res.z);
  res.residual = worst.residual;
  if (final_loop) *final_loop = loop;
  return res;
}

struct SimplicityReport {
  double max_deviation = 0.0;  // max pairwise max-norm nodal deviation of canonical representatives
  double lambda_spread = 0.0;  // (max - min) / mean over converged runs
  int runs = 0;
  int failures = 0;
  std::vector<double> lambdas;
};

/// Multi-start lambda1 runs mapped to the canonical representative.
inline SimplicityReport simplicity_check(const Mesh& mesh, const Params& params, const SolverOptions& opts) {
  opts.validate();
  std::mt19937_64 rng(opts.seed);
  std::vector<StateVector> reps;
  SimplicityReport rep;
  for (int k = 0; k < opts.n_starts; ++k) {
    StateVector start(smooth_random_field(mesh, rng), smooth_random_field(mesh, rng));
    if (!(psi(mesh, params, start) > 0.0)) {
      ++rep.failures;
      continue;
    }
    const EigenResult r = solve_lambda1(mesh, params, opts, start);
    ++rep.runs;
    if (!r.converged) {
      ++rep.failures;
      continue;
    }
    reps.push_back(normalize_to_manifold(mesh, params, canonical_first_branch(mesh, r.z)));
    rep.lambdas.push_back(r.lambda);
  }
  for (std::size_t i = 0; i < reps.size(); ++i)
    for (std::size_t j = i + 1; j < reps.size(); ++j)
      rep.max_deviation = std::max(rep.max_deviation, (reps[i] - reps[j]).max_abs());
  if (!rep.lambdas.empty()) {
    const auto [lo, hi] = std::minmax_element(rep.lambdas.begin(), rep.lambdas.end());
    double mean = 0.0;
    for (double l : rep.lambdas) mean += l;
    mean /= static_cast<double>(rep.lambdas.size());
    rep.lambda_spread = (*hi - *lo) / mean;
  }
  return rep;
}

struct IsolationPoint {
  double lambda = 0.0;
  double min_residual = 0.0;
};

/// Smallest ||Phi'(z) - lambda Psi'(z)||_* found over M by Riemannian descent
/// of half its square from each start.
inline double min_eigen_residual(const Mesh& mesh, const Params& params, const SolverOptions& opts, double lambda,
                                 const std::vector<StateVector>& starts, int max_iters = 400) {
  const auto& K = mesh.K();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s0 : starts) {
    if (s0.is_zero()) continue;
    StateVector z = normalize_to_manifold(mesh, params, s0);
    const double eps = detail::regularization_scale(mesh, z, opts.epsilon_reg);
    auto objective = [&](const StateVector& y, Covector* r_out, StateVector* ry_out) {
      Covector r = grad_phi(mesh, params, y, eps) - lambda * grad_psi(mesh, params, y);
      StateVector ry = K.riesz(r);
      const double f = 0.5 * pair(r, ry);
      if (r_out) *r_out = std::move(r);
      if (ry_out) *ry_out = std::move(ry);
      return f;
    };
    Covector r;
    StateVector ry;
    double f = objective(z, &r, &ry);
    double step = 1.0;
    for (int it = 0; it < max_iters; ++it) {
      if (std::sqrt(2.0 * f) <= 0.1 * opts.tol_residual) break;
      const Covector g = hessvec_phi(mesh, params, z, ry, eps) - lambda * hessvec_psi(mesh, params, z, ry);
      StateVector d = K.riesz(g);
      const Covector gphi = grad_phi(mesh, params, z, eps);
      const StateVector normal = K.riesz(gphi);
      const double nn = pair(gphi, normal);
      if (nn > 0.0) d -= (pair(gphi, d) / nn) * normal;
      const double slope = pair(g, d);
      if (!(slope > 0.0)) break;
      bool accepted = false;
      while (step > 1e-12) {
        const StateVector trial = normalize_to_manifold(mesh, params, z - step * d);
        Covector rt;
        StateVector ryt;
        const double ft = objective(trial, &rt, &ryt);
        if (ft <= f - opts.armijo_c * step * slope) {
          z = trial;
          f = ft;
          r = std::move(rt);
          ry = std::move(ryt);
          accepted = true;
          break;
        }
        step *= opts.backtrack_factor;
      }
      if (!accepted) break;
      step = std::min(step * 2.0, 4.0);
    }
    best = std::min(best, std::sqrt(2.0 * f));
  }
  return best;
}

/// Residual floor at each of n_grid equispaced lambda in [lambda_lo, lambda_hi].
inline std::vector<IsolationPoint> isolation_scan(const Mesh& mesh, const Params& params, const SolverOptions& opts,
                                                  double lambda_lo, double lambda_hi, int n_grid,
                                                  const std::vector<StateVector>& starts) {
  if (n_grid < 1) throw ParameterError("isolation_scan needs n_grid >= 1");
  if (!(lambda_hi >= lambda_lo)) throw ParameterError("isolation_scan needs lambda_hi >= lambda_lo");
  std::vector<IsolationPoint> out;
  for (int k = 0; k < n_grid; ++k) {
    const double lam = n_grid == 1 ? lambda_lo : lambda_lo + (lambda_hi - lambda_lo) * k / (n_grid - 1);
    out.push_back({lam, min_eigen_residual(mesh, params, opts, lam, starts)});
  }
  return out;
}

/// Starts used by the scan: the eigenfunctions given plus n_starts random smooth pairs.
inline std::vector<StateVector> isolation_starts(const Mesh& mesh, const SolverOptions& opts,
                                                 std::vector<StateVector> eigenfunctions) {
  std::mt19937_64 rng(opts.seed + 101);
  for (int k = 0; k < opts.n_starts; ++k)
    eigenfunctions.emplace_back(smooth_random_field(mesh, rng), smooth_random_field(mesh, rng));
  return eigenfunctions;
}

/// Scan of (lambda1 + delta, lambda_max) with lambda1 computed on the mesh.
inline std::vector<IsolationPoint> isolation_scan(const Mesh& mesh, const Params& params, const SolverOptions& opts,
                                                  double lambda_max, int n_grid, double delta = 0.5) {
  const EigenResult e1 = solve_lambda1(mesh, params, opts);
  if (!(lambda_max > e1.lambda + delta))
    throw ParameterError("isolation_scan needs lambda_max above lambda1 + delta");
  return isolation_scan(mesh, params, opts, e1.lambda + delta, lambda_max, n_grid,
                        isolation_starts(mesh, opts, {e1.z}));
}

}  // namespace pqlap
