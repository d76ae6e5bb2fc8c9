#pragma once

#include "pqlap/mesh.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace pqlap {

/// prod_d x_d (L_d - x_d): positive inside, zero on the boundary.
inline Vector bump_field(const Mesh& mesh) {
  const auto [lx, ly] = mesh.extent;
  return mesh.interpolate([&](const Point& x) {
    double b = x[0] * (lx - x[0]) / (lx * lx);
    if (mesh.dim == 2) b *= x[1] * (ly - x[1]) / (ly * ly);
    return b;
  });
}

/// sin(kx pi x / lx) [* sin(ky pi y / ly) in 2D].
inline Vector sine_mode(const Mesh& mesh, int kx, int ky = 1) {
  const auto [lx, ly] = mesh.extent;
  Vector w = mesh.interpolate([&](const Point& x) {
    double s = std::sin(kx * std::numbers::pi * x[0] / lx);
    if (mesh.dim == 2) s *= std::sin(ky * std::numbers::pi * x[1] / ly);
    return s;
  });
  mesh.apply_dirichlet(w);
  return w;
}

/// Random combination of the lowest sine modes with coefficients ~ N(0, 1/k).
inline Vector smooth_random_field(const Mesh& mesh, std::mt19937_64& rng, int modes = 4) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector w = Vector::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
  const int ky_max = mesh.dim == 2 ? modes : 1;
  for (int kx = 1; kx <= modes; ++kx)
    for (int ky = 1; ky <= ky_max; ++ky) w += normal(rng) / (kx + ky - 1) * sine_mode(mesh, kx, ky);
  return w;
}

}  // namespace pqlap
