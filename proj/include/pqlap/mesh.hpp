#pragma once

#include "pqlap/core.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace pqlap {

using Point = std::array<double, 2>;
using Grad = std::array<double, 2>;

class StiffnessOperator;

/// Simplicial P1 mesh of an interval (dim 1) or rectangle (dim 2).
///
/// Points and gradients always carry two components; the second one is zero
/// for interval meshes. Elements list dim+1 vertex indices.
struct Mesh {
  int dim = 1;
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> elements;  // unused third slot is -1 in 1D
  std::vector<bool> boundary_mask;
  std::vector<double> element_measure;
  // grad_coeffs[e][a]: gradient of the P1 basis function of local vertex a on element e
  std::vector<std::array<Grad, 3>> grad_coeffs;
  std::vector<double> lumped_mass;
  std::array<double, 2> extent{1.0, 0.0};
  // Factorized p = 2 stiffness matrix on interior vertices; built once, read-only.
  std::shared_ptr<const StiffnessOperator> stiffness;

  const StiffnessOperator& K() const { return *stiffness; }

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_elements() const { return elements.size(); }
  int vertices_per_element() const { return dim + 1; }
  double domain_measure() const { return dim == 1 ? extent[0] : extent[0] * extent[1]; }

  /// Zeroes boundary entries of a nodal vector in place.
  void apply_dirichlet(Vector& w) const {
    for (std::size_t i = 0; i < boundary_mask.size(); ++i)
      if (boundary_mask[i]) w[static_cast<Eigen::Index>(i)] = 0.0;
  }
  void apply_dirichlet(StateVector& z) const {
    apply_dirichlet(z.u);
    apply_dirichlet(z.v);
  }
  void apply_dirichlet(Covector& r) const {
    apply_dirichlet(r.du);
    apply_dirichlet(r.dv);
  }

  /// Nodal interpolant of f.
  template <class F>
  Vector interpolate(F&& f) const {
    Vector w(static_cast<Eigen::Index>(vertices.size()));
    for (std::size_t i = 0; i < vertices.size(); ++i) w[static_cast<Eigen::Index>(i)] = f(vertices[i]);
    return w;
  }

  /// Lumped-quadrature integral of a nodal field.
  double integrate_nodal(const Vector& w) const {
    double s = 0.0;
    for (std::size_t i = 0; i < lumped_mass.size(); ++i) s += lumped_mass[i] * w[static_cast<Eigen::Index>(i)];
    return s;
  }
};

/// Linear stiffness operator K (integral of grad w . grad phi) restricted to
/// interior vertices, with its sparse LDL^T factorization.
///
/// Provides the Riesz map K^{-1}, the blockwise dual norm sqrt(r^T K^{-1} r)
/// and the energy inner product used as the solver metric.
class StiffnessOperator {
 public:
  explicit StiffnessOperator(const Mesh& mesh) : n_(static_cast<Eigen::Index>(mesh.num_vertices())) {
    index_.assign(mesh.num_vertices(), -1);
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i)
      if (!mesh.boundary_mask[i]) index_[i] = k++;
    interior_ = k;
    if (interior_ == 0) throw ParameterError("mesh has no interior vertices");
    std::vector<Eigen::Triplet<double>> trip;
    const int nv = mesh.vertices_per_element();
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
      const auto& el = mesh.elements[e];
      const auto& g = mesh.grad_coeffs[e];
      for (int a = 0; a < nv; ++a) {
        const Eigen::Index ia = index_[el[a]];
        if (ia < 0) continue;
        for (int b = 0; b < nv; ++b) {
          const Eigen::Index ib = index_[el[b]];
          if (ib < 0) continue;
          const double kab = mesh.element_measure[e] * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
          trip.emplace_back(ia, ib, kab);
        }
      }
    }
    Eigen::SparseMatrix<double> kmat(interior_, interior_);
    kmat.setFromTriplets(trip.begin(), trip.end());
    matrix_ = kmat;
    solver_.compute(matrix_);
    if (solver_.info() != Eigen::Success) throw Error("stiffness factorization failed");
  }

  Eigen::Index interior_size() const { return interior_; }

  /// K^{-1} r, zero on boundary vertices.
  Vector solve(const Vector& r) const {
    Vector ri(interior_);
    for (Eigen::Index i = 0; i < n_; ++i)
      if (index_[i] >= 0) ri[index_[i]] = r[i];
    const Vector xi = solver_.solve(ri);
    Vector x = Vector::Zero(n_);
    for (Eigen::Index i = 0; i < n_; ++i)
      if (index_[i] >= 0) x[i] = xi[index_[i]];
    return x;
  }

  /// K w restricted to interior rows (boundary entries 0).
  Vector apply(const Vector& w) const {
    Vector wi(interior_);
    for (Eigen::Index i = 0; i < n_; ++i)
      if (index_[i] >= 0) wi[index_[i]] = w[i];
    const Vector yi = matrix_ * wi;
    Vector y = Vector::Zero(n_);
    for (Eigen::Index i = 0; i < n_; ++i)
      if (index_[i] >= 0) y[i] = yi[index_[i]];
    return y;
  }

  StateVector riesz(const Covector& r) const { return {solve(r.du), solve(r.dv)}; }

  double dual_norm(const Covector& r) const {
    const double s = r.du.dot(solve(r.du)) + r.dv.dot(solve(r.dv));
    return std::sqrt(std::max(s, 0.0));
  }

  /// Energy inner product a^T K b summed over both blocks.
  double inner(const StateVector& a, const StateVector& b) const {
    return a.u.dot(apply(b.u)) + a.v.dot(apply(b.v));
  }
  double norm(const StateVector& a) const { return std::sqrt(std::max(inner(a, a), 0.0)); }

 private:
  Eigen::Index n_ = 0;
  Eigen::Index interior_ = 0;
  std::vector<Eigen::Index> index_;
  Eigen::SparseMatrix<double> matrix_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

namespace detail {

inline void finish_mesh(Mesh& m) {
  const int nv = m.vertices_per_element();
  m.element_measure.resize(m.elements.size());
  m.grad_coeffs.resize(m.elements.size());
  m.lumped_mass.assign(m.vertices.size(), 0.0);
  for (std::size_t e = 0; e < m.elements.size(); ++e) {
    const auto& el = m.elements[e];
    std::array<Grad, 3> g{};
    double measure = 0.0;
    if (m.dim == 1) {
      const double x0 = m.vertices[el[0]][0], x1 = m.vertices[el[1]][0];
      const double h = x1 - x0;
      measure = h;
      g[0] = {-1.0 / h, 0.0};
      g[1] = {1.0 / h, 0.0};
    } else {
      const Point& a = m.vertices[el[0]];
      const Point& b = m.vertices[el[1]];
      const Point& c = m.vertices[el[2]];
      const double det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
      measure = 0.5 * det;
      // grad of barycentric coordinates
      g[0] = {(b[1] - c[1]) / det, (c[0] - b[0]) / det};
      g[1] = {(c[1] - a[1]) / det, (a[0] - c[0]) / det};
      g[2] = {(a[1] - b[1]) / det, (b[0] - a[0]) / det};
    }
    if (!(measure > 0.0)) throw ParameterError("mesh element with non-positive measure");
    m.element_measure[e] = measure;
    m.grad_coeffs[e] = g;
    for (int a = 0; a < nv; ++a) m.lumped_mass[el[a]] += measure / nv;
  }
  m.stiffness = std::make_shared<const StiffnessOperator>(m);
}

}  // namespace detail

/// Uniform mesh of (0, length) with n_cells elements.
inline Mesh build_interval_mesh(double length, int n_cells) {
  if (n_cells < 2) throw ParameterError("interval mesh needs at least 2 cells");
  if (!(length > 0.0)) throw ParameterError("interval length must be positive");
  Mesh m;
  m.dim = 1;
  m.extent = {length, 0.0};
  m.vertices.resize(n_cells + 1);
  m.boundary_mask.assign(n_cells + 1, false);
  for (int i = 0; i <= n_cells; ++i) m.vertices[i] = {length * i / n_cells, 0.0};
  m.boundary_mask.front() = m.boundary_mask.back() = true;
  for (int i = 0; i < n_cells; ++i) m.elements.push_back({i, i + 1, -1});
  detail::finish_mesh(m);
  return m;
}

/// Structured triangulation of (0,lx) x (0,ly); each grid cell is cut along
/// its lower-left to upper-right diagonal.
inline Mesh build_rect_mesh(double lx, double ly, int nx, int ny) {
  if (nx < 2 || ny < 2) throw ParameterError("rectangle mesh needs nx, ny >= 2");
  if (!(lx > 0.0) || !(ly > 0.0)) throw ParameterError("rectangle side lengths must be positive");
  Mesh m;
  m.dim = 2;
  m.extent = {lx, ly};
  const auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      m.vertices.push_back({lx * i / nx, ly * j / ny});
      m.boundary_mask.push_back(i == 0 || j == 0 || i == nx || j == ny);
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      m.elements.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.elements.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  detail::finish_mesh(m);
  return m;
}

/// Constant gradient of the P1 interpolant of w on every element.
inline std::vector<Grad> gradient_field(const Mesh& mesh, const Vector& w) {
  if (static_cast<std::size_t>(w.size()) != mesh.num_vertices())
    throw ShapeError("gradient_field: nodal vector length does not match vertex count");
  std::vector<Grad> out(mesh.num_elements());
  const int nv = mesh.vertices_per_element();
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    Grad g{0.0, 0.0};
    for (int a = 0; a < nv; ++a) {
      const double wa = w[mesh.elements[e][a]];
      g[0] += wa * mesh.grad_coeffs[e][a][0];
      g[1] += wa * mesh.grad_coeffs[e][a][1];
    }
    out[e] = g;
  }
  return out;
}

/// Sum of value * element measure, accumulated in element order.
inline double integrate_elementwise(const Mesh& mesh, std::span<const double> values) {
  if (values.size() != mesh.num_elements())
    throw ShapeError("integrate_elementwise: one value per element expected");
  double s = 0.0;
  for (std::size_t e = 0; e < values.size(); ++e) s += values[e] * mesh.element_measure[e];
  return s;
}

inline void check_shape(const Mesh& mesh, const StateVector& z) {
  if (static_cast<std::size_t>(z.u.size()) != mesh.num_vertices() ||
      static_cast<std::size_t>(z.v.size()) != mesh.num_vertices())
    throw ShapeError("state vector length does not match vertex count");
}

inline void check_shape(const Mesh& mesh, const Covector& r) {
  if (static_cast<std::size_t>(r.du.size()) != mesh.num_vertices() ||
      static_cast<std::size_t>(r.dv.size()) != mesh.num_vertices())
    throw ShapeError("covector length does not match vertex count");
}

}  // namespace pqlap
