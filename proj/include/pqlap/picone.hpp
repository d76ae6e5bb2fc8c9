#pragma once

// Elementwise Picone quantities for a nonnegative u and a positive v.
//
// Both sides are evaluated from the same data: centroid values of the P1
// interpolants and their constant gradients. The gradient of u^r / v^{r-1}
// is expanded with the chain rule instead of being re-interpolated, so L and
// R differ only by rounding.

#include "pqlap/core.hpp"
#include "pqlap/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace pqlap {

inline constexpr double kPiconePositivity = 1e-14;

struct PiconeField {
  std::vector<double> l_values;
  std::vector<double> r_values;
};

namespace detail {

inline double dot(const Grad& a, const Grad& b) { return a[0] * b[0] + a[1] * b[1]; }

/// |g|^{r-2} g, with the r < 2 singularity at g = 0 resolved to 0.
inline Grad power_vector(const Grad& g, double r) {
  const double n = std::hypot(g[0], g[1]);
  if (n == 0.0) return {0.0, 0.0};
  const double w = std::pow(n, r - 2.0);
  return {w * g[0], w * g[1]};
}

/// |a|^r - r |b|^{r-2} b.a + (r-1) |b|^r, written as the Bregman divergence
/// of |.|^r at b so that it stays accurate when a is close to b:
/// |a|^r - |b|^r = |b|^r expm1((r/2) log1p(d.(a+b) / |b|^2)), d = a - b.
inline double bregman_power(const Grad& a, const Grad& b, double r) {
  const double nb2 = dot(b, b);
  if (nb2 == 0.0) return std::pow(std::sqrt(dot(a, a)), r);
  const Grad d{a[0] - b[0], a[1] - b[1]};
  const Grad s{a[0] + b[0], a[1] + b[1]};
  const double nbr = std::pow(nb2, 0.5 * r);
  const double diff = nbr * std::expm1(0.5 * r * std::log1p(std::max(dot(d, s) / nb2, -1.0)));
  return diff - r * std::pow(nb2, 0.5 * r - 1.0) * dot(b, d);
}

inline void check_picone_inputs(const Mesh& mesh, double r, const Vector& u, const Vector& v) {
  if (!(r > 1.0)) throw ParameterError("Picone exponent must exceed 1, got " + std::to_string(r));
  if (static_cast<std::size_t>(u.size()) != mesh.num_vertices() ||
      static_cast<std::size_t>(v.size()) != mesh.num_vertices())
    throw ShapeError("Picone fields must have one value per vertex");
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (u[i] < 0.0) throw DomainError("u is negative at vertex " + std::to_string(i));
    if (!mesh.boundary_mask[i] && !(v[i] > kPiconePositivity))
      throw DomainError("v is not positive at interior vertex " + std::to_string(i));
  }
}

}  // namespace detail

/// L_r and R_r per element at the element centroid.
inline PiconeField picone_fields(const Mesh& mesh, double r, const Vector& u, const Vector& v) {
  detail::check_picone_inputs(mesh, r, u, v);
  const auto gu = gradient_field(mesh, u);
  const auto gv = gradient_field(mesh, v);
  const int nv = mesh.vertices_per_element();
  PiconeField out;
  out.l_values.resize(mesh.num_elements());
  out.r_values.resize(mesh.num_elements());
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    double um = 0.0, vm = 0.0;
    for (int a = 0; a < nv; ++a) {
      um += u[mesh.elements[e][a]];
      vm += v[mesh.elements[e][a]];
    }
    um /= nv;
    vm /= nv;
    if (!(vm > 0.0)) {
      // all vertices on the boundary (mesh corners): nothing to compare when
      // u vanishes there too
      bool u_zero = true;
      for (int a = 0; a < nv; ++a) u_zero = u_zero && u[mesh.elements[e][a]] == 0.0;
      if (!u_zero) throw DomainError("v vanishes on element " + std::to_string(e) + " where u does not");
      out.l_values[e] = out.r_values[e] = 0.0;
      continue;
    }
    const double ratio = um / vm;
    const double abs_gu_r = std::pow(std::hypot(gu[e][0], gu[e][1]), r);
    const Grad pv = detail::power_vector(gv[e], r);
    const double rm1 = std::pow(ratio, r - 1.0);
    const double rr = std::pow(ratio, r);

    // L = |grad u|^r + (r-1) rho^r |grad v|^r - r rho^{r-1} |grad v|^{r-2} grad v . grad u, rho = u/v
    out.l_values[e] = detail::bregman_power(gu[e], {ratio * gv[e][0], ratio * gv[e][1]}, r);

    // grad(u^r / v^{r-1}) = r (u/v)^{r-1} grad u - (r-1) (u/v)^r grad v
    const Grad gq{r * rm1 * gu[e][0] - (r - 1.0) * rr * gv[e][0], r * rm1 * gu[e][1] - (r - 1.0) * rr * gv[e][1]};
    out.r_values[e] = abs_gu_r - detail::dot(pv, gq);
  }
  return out;
}

struct PiconeCheck {
  double identity_gap = 0.0;
  double min_l = 0.0;
  bool pass = false;
};

inline PiconeCheck verify_picone(const Mesh& mesh, double r, const Vector& u, const Vector& v, double tol) {
  const PiconeField f = picone_fields(mesh, r, u, v);
  PiconeCheck c;
  c.min_l = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < f.l_values.size(); ++e) {
    c.identity_gap = std::max(c.identity_gap, std::abs(f.l_values[e] - f.r_values[e]));
    c.min_l = std::min(c.min_l, f.l_values[e]);
  }
  c.pass = c.identity_gap <= tol && c.min_l >= -tol;
  return c;
}

}  // namespace pqlap
