#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace pqlap {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid scalar parameter (exponent, mesh size, step, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Sequence lengths do not match the mesh.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of the operation (zero state, negative field).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Required state is missing (e.g. no lambda1 supplied to the resonant functional).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Starting point cannot seed the iteration.
class StartError : public Error {
 public:
  using Error::Error;
};

/// Precondition of a solver does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

using Vector = Eigen::VectorXd;

inline constexpr double kCouplingTolerance = 1e-12;

/// Which exponent range Params accepts.
///
/// Strict requires alpha, beta > 0. Relaxed only requires alpha, beta > -1 so
/// that the linear case p = q = 2, alpha = beta = 0 and the p = q < 2 scalar
/// reductions can be expressed; the coupling identity is enforced in both.
enum class ExponentPolicy { Strict, Relaxed };

/// Exponents (p, q, alpha, beta) with (alpha+1)/p + (beta+1)/q = 1.
class Params {
 public:
  Params(double p, double q, double alpha, double beta,
         ExponentPolicy policy = ExponentPolicy::Strict)
      : p_(p), q_(q), alpha_(alpha), beta_(beta), policy_(policy) {
    if (!(p > 1.0) || !(q > 1.0))
      throw ParameterError("exponents p and q must exceed 1");
    const double lower = policy == ExponentPolicy::Strict ? 0.0 : -1.0;
    if (!(alpha > lower) || !(beta > lower))
      throw ParameterError(policy == ExponentPolicy::Strict
                               ? "alpha and beta must be strictly positive"
                               : "alpha and beta must exceed -1");
    if (std::abs(coupling_defect()) > kCouplingTolerance)
      throw ParameterError("coupling identity (alpha+1)/p + (beta+1)/q = 1 violated by " +
                           std::to_string(coupling_defect()));
  }

  /// Solves the coupling identity for beta.
  static Params with_coupled_beta(double p, double q, double alpha,
                                  ExponentPolicy policy = ExponentPolicy::Strict) {
    if (!(p > 1.0) || !(q > 1.0))
      throw ParameterError("exponents p and q must exceed 1");
    const double beta = q * (1.0 - (alpha + 1.0) / p) - 1.0;
    return Params(p, q, alpha, beta, policy);
  }

  double p() const { return p_; }
  double q() const { return q_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  ExponentPolicy policy() const { return policy_; }

  double coupling_defect() const { return (alpha_ + 1.0) / p_ + (beta_ + 1.0) / q_ - 1.0; }

 private:
  double p_, q_, alpha_, beta_;
  ExponentPolicy policy_;
};

/// Discrete pair z = (u, v) of nodal coefficients.
struct StateVector {
  Vector u;
  Vector v;

  StateVector() = default;
  StateVector(Vector u_, Vector v_) : u(std::move(u_)), v(std::move(v_)) {}
  static StateVector zeros(Eigen::Index n) { return {Vector::Zero(n), Vector::Zero(n)}; }

  Eigen::Index size() const { return u.size(); }

  StateVector& operator+=(const StateVector& o) {
    u += o.u;
    v += o.v;
    return *this;
  }
  StateVector& operator-=(const StateVector& o) {
    u -= o.u;
    v -= o.v;
    return *this;
  }
  StateVector& operator*=(double s) {
    u *= s;
    v *= s;
    return *this;
  }
  friend StateVector operator+(StateVector a, const StateVector& b) { return a += b; }
  friend StateVector operator-(StateVector a, const StateVector& b) { return a -= b; }
  friend StateVector operator*(double s, StateVector a) { return a *= s; }
  friend StateVector operator-(StateVector a) { return a *= -1.0; }

  bool is_zero() const { return u.isZero(0.0) && v.isZero(0.0); }
  double max_abs() const {
    return std::max(u.size() ? u.cwiseAbs().maxCoeff() : 0.0, v.size() ? v.cwiseAbs().maxCoeff() : 0.0);
  }
};

/// Assembled dual quantity (gradient or residual of a functional).
struct Covector {
  Vector du;
  Vector dv;

  Covector() = default;
  Covector(Vector du_, Vector dv_) : du(std::move(du_)), dv(std::move(dv_)) {}
  static Covector zeros(Eigen::Index n) { return {Vector::Zero(n), Vector::Zero(n)}; }

  Covector& operator+=(const Covector& o) {
    du += o.du;
    dv += o.dv;
    return *this;
  }
  Covector& operator-=(const Covector& o) {
    du -= o.du;
    dv -= o.dv;
    return *this;
  }
  Covector& operator*=(double s) {
    du *= s;
    dv *= s;
    return *this;
  }
  friend Covector operator+(Covector a, const Covector& b) { return a += b; }
  friend Covector operator-(Covector a, const Covector& b) { return a -= b; }
  friend Covector operator*(double s, Covector a) { return a *= s; }
};

/// Duality pairing <r, z>.
inline double pair(const Covector& r, const StateVector& z) { return r.du.dot(z.u) + r.dv.dot(z.v); }

/// (theta^{1/p} u, theta^{1/q} v); Phi and Psi scale by theta.
inline StateVector homogeneous_scale(const StateVector& z, double theta, const Params& params) {
  if (!(theta > 0.0)) throw ParameterError("homogeneous_scale requires theta > 0");
  return {std::pow(theta, 1.0 / params.p()) * z.u, std::pow(theta, 1.0 / params.q()) * z.v};
}

/// The two families generated by an eigenfunction under (p,q)-scaling:
/// branch 1 is sgn(theta) (|theta|^{1/p} u, |theta|^{1/q} v),
/// branch 2 is sgn(theta) (-|theta|^{1/p} u, |theta|^{1/q} v).
enum class Branch { Same = 1, Mirrored = 2 };

inline StateVector sign_branch(const StateVector& z, double theta, const Params& params,
                               Branch branch = Branch::Same) {
  if (theta == 0.0) return StateVector::zeros(z.size());
  const double a = std::abs(theta);
  const double sgn = theta > 0.0 ? 1.0 : -1.0;
  const double su = branch == Branch::Same ? sgn : -sgn;
  return {su * std::pow(a, 1.0 / params.p()) * z.u, sgn * std::pow(a, 1.0 / params.q()) * z.v};
}

}  // namespace pqlap
