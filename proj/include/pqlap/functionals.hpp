#pragma once

// Discrete Phi, Psi, Q and J with exact gradients, Hessian-vector products
// and the dual-norm residuals used as stopping criteria.
//
// Gradient energies are integrated exactly per element (P1 gradients are
// constant); vertex terms use lumped quadrature, so every gradient below is
// the exact derivative of the discrete functional it belongs to.

#include "pqlap/core.hpp"
#include "pqlap/mesh.hpp"
#include "pqlap/nonlinearity.hpp"

#include <cmath>
#include <optional>

namespace pqlap {

namespace detail {

/// |s|^e sgn(s), taken as 0 at s = 0 for every e.
inline double signed_pow(double s, double e) {
  if (s == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(s), e), s);
}

/// |s|^e, taken as 0 at s = 0 even when e <= 0.
inline double abs_pow(double s, double e) {
  if (s == 0.0) return e == 0.0 ? 1.0 : 0.0;
  return std::pow(std::abs(s), e);
}

inline double sgn(double s) { return s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0); }

inline bool regularized(double r, double eps) { return r < 2.0 && eps > 0.0; }

/// Integral of |grad w|^r, or of (|grad w|^2 + eps^2)^{r/2} - eps^r when r < 2.
inline double gradient_energy(const Mesh& mesh, const Vector& w, double r, double eps) {
  const auto grads = gradient_field(mesh, w);
  const bool reg = regularized(r, eps);
  double s = 0.0;
  for (std::size_t e = 0; e < grads.size(); ++e) {
    const double g2 = grads[e][0] * grads[e][0] + grads[e][1] * grads[e][1];
    const double val = reg ? std::pow(g2 + eps * eps, 0.5 * r) - std::pow(eps, r) : std::pow(g2, 0.5 * r);
    s += val * mesh.element_measure[e];
  }
  return s;
}

/// Gradient of (1/r) gradient_energy: assembles |grad w|^{r-2} grad w . grad phi_i.
inline Vector gradient_energy_grad(const Mesh& mesh, const Vector& w, double r, double eps) {
  const auto grads = gradient_field(mesh, w);
  const bool reg = regularized(r, eps);
  const int nv = mesh.vertices_per_element();
  Vector out = Vector::Zero(w.size());
  for (std::size_t e = 0; e < grads.size(); ++e) {
    const Grad& g = grads[e];
    const double g2 = g[0] * g[0] + g[1] * g[1];
    if (g2 == 0.0 && !reg) continue;
    const double weight = std::pow(reg ? g2 + eps * eps : g2, 0.5 * (r - 2.0)) * mesh.element_measure[e];
    for (int a = 0; a < nv; ++a) {
      const Grad& b = mesh.grad_coeffs[e][a];
      out[mesh.elements[e][a]] += weight * (g[0] * b[0] + g[1] * b[1]);
    }
  }
  mesh.apply_dirichlet(out);
  return out;
}

/// Directional derivative of gradient_energy_grad at w along dw.
inline Vector gradient_energy_hessvec(const Mesh& mesh, const Vector& w, const Vector& dw, double r, double eps) {
  const auto grads = gradient_field(mesh, w);
  const auto dgrads = gradient_field(mesh, dw);
  const bool reg = regularized(r, eps);
  const int nv = mesh.vertices_per_element();
  Vector out = Vector::Zero(w.size());
  for (std::size_t e = 0; e < grads.size(); ++e) {
    const Grad& g = grads[e];
    const Grad& d = dgrads[e];
    const double g2 = g[0] * g[0] + g[1] * g[1];
    const double base = reg ? g2 + eps * eps : g2;
    double c0 = 0.0, c1 = 0.0;
    if (base > 0.0) {
      c0 = std::pow(base, 0.5 * (r - 2.0));
      c1 = (r - 2.0) * std::pow(base, 0.5 * (r - 4.0));
    } else if (r == 2.0) {
      c0 = 1.0;
    }
    const double gd = g[0] * d[0] + g[1] * d[1];
    const Grad h{c0 * d[0] + c1 * gd * g[0], c0 * d[1] + c1 * gd * g[1]};
    for (int a = 0; a < nv; ++a) {
      const Grad& b = mesh.grad_coeffs[e][a];
      out[mesh.elements[e][a]] += mesh.element_measure[e] * (h[0] * b[0] + h[1] * b[1]);
    }
  }
  mesh.apply_dirichlet(out);
  return out;
}

}  // namespace detail

/// Phi(z) = (alpha+1)/p int |grad u|^p + (beta+1)/q int |grad v|^q.
///
/// eps > 0 regularizes the blocks whose exponent is below 2.
inline double phi(const Mesh& mesh, const Params& params, const StateVector& z, double eps = 0.0) {
  check_shape(mesh, z);
  return (params.alpha() + 1.0) / params.p() * detail::gradient_energy(mesh, z.u, params.p(), eps) +
         (params.beta() + 1.0) / params.q() * detail::gradient_energy(mesh, z.v, params.q(), eps);
}

/// Psi(z) = int |u|^{alpha+1} |v|^{beta+1}, lumped.
inline double psi(const Mesh& mesh, const Params& params, const StateVector& z) {
  check_shape(mesh, z);
  const double a = params.alpha() + 1.0, b = params.beta() + 1.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < z.u.size(); ++i)
    s += mesh.lumped_mass[i] * detail::abs_pow(z.u[i], a) * detail::abs_pow(z.v[i], b);
  return s;
}

inline Covector grad_phi(const Mesh& mesh, const Params& params, const StateVector& z, double eps = 0.0) {
  check_shape(mesh, z);
  return {(params.alpha() + 1.0) * detail::gradient_energy_grad(mesh, z.u, params.p(), eps),
          (params.beta() + 1.0) * detail::gradient_energy_grad(mesh, z.v, params.q(), eps)};
}

inline Covector grad_psi(const Mesh& mesh, const Params& params, const StateVector& z) {
  check_shape(mesh, z);
  const double a = params.alpha() + 1.0, b = params.beta() + 1.0;
  Covector g = Covector::zeros(z.size());
  for (Eigen::Index i = 0; i < z.u.size(); ++i) {
    const double m = mesh.lumped_mass[i];
    g.du[i] = a * m * detail::signed_pow(z.u[i], a - 1.0) * detail::abs_pow(z.v[i], b);
    g.dv[i] = b * m * detail::abs_pow(z.u[i], a) * detail::signed_pow(z.v[i], b - 1.0);
  }
  mesh.apply_dirichlet(g);
  return g;
}

/// Phi''(z)[w].
inline Covector hessvec_phi(const Mesh& mesh, const Params& params, const StateVector& z, const StateVector& w,
                            double eps = 0.0) {
  check_shape(mesh, z);
  check_shape(mesh, w);
  return {(params.alpha() + 1.0) * detail::gradient_energy_hessvec(mesh, z.u, w.u, params.p(), eps),
          (params.beta() + 1.0) * detail::gradient_energy_hessvec(mesh, z.v, w.v, params.q(), eps)};
}

/// Psi''(z)[w]; second derivatives that blow up at a zero coefficient are taken as 0 there.
inline Covector hessvec_psi(const Mesh& mesh, const Params& params, const StateVector& z, const StateVector& w) {
  check_shape(mesh, z);
  check_shape(mesh, w);
  const double a = params.alpha() + 1.0, b = params.beta() + 1.0;
  Covector h = Covector::zeros(z.size());
  for (Eigen::Index i = 0; i < z.u.size(); ++i) {
    const double u = z.u[i], v = z.v[i], m = mesh.lumped_mass[i];
    const double fuu = a * (a - 1.0) * detail::abs_pow(u, a - 2.0) * detail::abs_pow(v, b);
    const double fvv = b * (b - 1.0) * detail::abs_pow(u, a) * detail::abs_pow(v, b - 2.0);
    const double fuv = a * b * detail::signed_pow(u, a - 1.0) * detail::signed_pow(v, b - 1.0);
    h.du[i] = m * (fuu * w.u[i] + fuv * w.v[i]);
    h.dv[i] = m * (fuv * w.u[i] + fvv * w.v[i]);
  }
  mesh.apply_dirichlet(h);
  return h;
}

/// Q(z) = Psi(z) / Phi(z).
inline double rayleigh_q(const Mesh& mesh, const Params& params, const StateVector& z) {
  if (z.is_zero()) throw DomainError("rayleigh_q is undefined at z = 0");
  return psi(mesh, params, z) / phi(mesh, params, z);
}

/// e(z) = (u/p, v/q).
inline StateVector e_map(const StateVector& z, const Params& params) {
  return {z.u / params.p(), z.v / params.q()};
}

/// Blockwise dual norm sqrt(r^T K^{-1} r) with the mesh's p = 2 stiffness operator.
inline double dual_norm(const Mesh& mesh, const Params&, const Covector& r) {
  check_shape(mesh, r);
  return mesh.K().dual_norm(r);
}

inline double dual_norm(const Mesh& mesh, const Covector& r) {
  check_shape(mesh, r);
  return mesh.K().dual_norm(r);
}

/// ||Phi'(z) - lambda Psi'(z)||_*.
inline double eigen_residual(const Mesh& mesh, const Params& params, const StateVector& z, double lambda,
                             double eps = 0.0) {
  if (z.is_zero()) throw DomainError("eigen_residual is undefined at z = 0");
  return dual_norm(mesh, grad_phi(mesh, params, z, eps) - lambda * grad_psi(mesh, params, z));
}

/// Data of the resonant problem: nonlinearity, vertex samples of the
/// forcings, and the discrete first eigenvalue on the same mesh.
struct ResonantData {
  NonlinearitySpec nonlinearity;
  Vector h1;
  Vector h2;
  std::optional<double> lambda1;

  double require_lambda1() const {
    if (!lambda1) throw StateError("resonant functional needs lambda1 from the eigensolver");
    return *lambda1;
  }
};

inline void check_shape(const Mesh& mesh, const ResonantData& data) {
  if (static_cast<std::size_t>(data.h1.size()) != mesh.num_vertices() ||
      static_cast<std::size_t>(data.h2.size()) != mesh.num_vertices())
    throw ShapeError("forcing length does not match vertex count");
}

/// J(z) = Phi(z) - lambda1 Psi(z) - int F(x,u,v) + int h1 u + int h2 v.
inline double j_value(const Mesh& mesh, const Params& params, const StateVector& z, const ResonantData& data,
                      double eps = 0.0) {
  check_shape(mesh, data);
  const double lambda1 = data.require_lambda1();
  double vertex_terms = 0.0;
  for (Eigen::Index i = 0; i < z.u.size(); ++i) {
    const Point& x = mesh.vertices[i];
    vertex_terms += mesh.lumped_mass[i] *
                    (-data.nonlinearity.f(x, z.u[i], z.v[i]) + data.h1[i] * z.u[i] + data.h2[i] * z.v[i]);
  }
  return phi(mesh, params, z, eps) - lambda1 * psi(mesh, params, z) + vertex_terms;
}

inline Covector grad_j(const Mesh& mesh, const Params& params, const StateVector& z, const ResonantData& data,
                       double eps = 0.0) {
  check_shape(mesh, data);
  const double lambda1 = data.require_lambda1();
  Covector g = grad_phi(mesh, params, z, eps) - lambda1 * grad_psi(mesh, params, z);
  for (Eigen::Index i = 0; i < z.u.size(); ++i) {
    const Point& x = mesh.vertices[i];
    const double m = mesh.lumped_mass[i];
    g.du[i] += m * (-data.nonlinearity.f_s(x, z.u[i], z.v[i]) + data.h1[i]);
    g.dv[i] += m * (-data.nonlinearity.f_t(x, z.u[i], z.v[i]) + data.h2[i]);
  }
  mesh.apply_dirichlet(g);
  return g;
}

}  // namespace pqlap
