#pragma once

// Reference values computed without the library's solvers.

#include "pqlap/pqlap.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

namespace oracle {

using pqlap::Mesh;
using pqlap::StateVector;
using pqlap::Vector;

/// Smallest Dirichlet eigenvalue of -(|u'|^{p-2}u')' = lam |u|^{p-2}u on (0, 1)
/// by shooting: u(0) = 0, u'(0) = 1, RK4 on (u, w = |u'|^{p-2}u') until u
/// first returns to 0, then bisection on lam so that this happens at x = 1.
inline double first_zero(double p, double lam, double h = 2e-5) {
  auto du = [p](double w) { return std::copysign(std::pow(std::abs(w), 1.0 / (p - 1.0)), w); };
  auto dw = [p, lam](double u) { return -lam * std::copysign(std::pow(std::abs(u), p - 1.0), u); };
  double x = 0.0, u = 0.0, w = 1.0;
  while (x < 10.0) {
    const double k1u = du(w), k1w = dw(u);
    const double k2u = du(w + 0.5 * h * k1w), k2w = dw(u + 0.5 * h * k1u);
    const double k3u = du(w + 0.5 * h * k2w), k3w = dw(u + 0.5 * h * k2u);
    const double k4u = du(w + h * k3w), k4w = dw(u + h * k3u);
    const double un = u + h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
    const double wn = w + h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w);
    if (x > h && un <= 0.0) return x + h * u / (u - un);  // linear interpolation of the crossing
    x += h;
    u = un;
    w = wn;
  }
  return 10.0;
}

inline double shooting_eigenvalue(double p) {
  double lo = 0.5, hi = 400.0;  // first_zero decreases in lam
  for (int k = 0; k < 60; ++k) {
    const double mid = 0.5 * (lo + hi);
    (first_zero(p, mid) > 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// (p-1) pi_p^p, pi_p = 2 pi / (p sin(pi/p)).
inline double closed_form_eigenvalue(double p) {
  const double pi_p = 2.0 * std::numbers::pi / (p * std::sin(std::numbers::pi / p));
  return (p - 1.0) * std::pow(pi_p, p);
}

/// k-th eigenvalue of the P1 stiffness with lumped mass on n uniform cells of (0, 1).
inline double discrete_laplacian_eigenvalue(int n, int k) {
  const double h = 1.0 / n;
  return (2.0 - 2.0 * std::cos(k * std::numbers::pi * h)) / (h * h);
}

inline Vector random_smooth(const Mesh& mesh, std::mt19937_64& rng) { return pqlap::smooth_random_field(mesh, rng, 5); }

inline StateVector random_state(const Mesh& mesh, std::mt19937_64& rng) {
  return {random_smooth(mesh, rng), random_smooth(mesh, rng)};
}

/// Central difference of f along w.
inline double central_difference(const std::function<double(const StateVector&)>& f, const StateVector& z,
                                 const StateVector& w, double t) {
  return (f(z + t * w) - f(z - t * w)) / (2.0 * t);
}

// Residual of the linear-case weak form, assembled by hand: K = (1/h) tridiag(-1, 2, -1),
// lumped mass h, Psi = int u v. Returned in the dual norm of the same K, inverted densely.
inline double linear_weak_residual(int n, const StateVector& z, double lambda, double a, double b, double h1, double h2) {
  const double h = 1.0 / n;
  const int m = n - 1;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    K(i, i) = 2.0 / h;
    if (i > 0) K(i, i - 1) = K(i - 1, i) = -1.0 / h;
  }
  Eigen::VectorXd ru(m), rv(m);
  for (int i = 0; i < m; ++i) {
    const double u = z.u[i + 1], v = z.v[i + 1];
    ru[i] = -h * lambda * v - h * a * std::atan(u) + h * h1;
    rv[i] = -h * lambda * u - h * b * std::atan(v) + h * h2;
  }
  ru += K * z.u.segment(1, m);
  rv += K * z.v.segment(1, m);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(K);
  return std::sqrt(ru.dot(ldlt.solve(ru)) + rv.dot(ldlt.solve(rv)));
}

}  // namespace oracle
