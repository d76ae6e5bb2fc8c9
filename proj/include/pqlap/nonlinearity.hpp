#pragma once

#include "pqlap/mesh.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>

namespace pqlap {

/// Sign quadrant (s -> +-inf, t -> +-inf) of an asymptotic limit.
enum class Quadrant { PP = 0, PM = 1, MP = 2, MM = 3 };

inline const char* quadrant_name(Quadrant q) {
  switch (q) {
    case Quadrant::PP: return "++";
    case Quadrant::PM: return "+-";
    case Quadrant::MP: return "-+";
    case Quadrant::MM: return "--";
  }
  return "?";
}

/// A nonlinearity F(x, s, t) with bounded partial derivatives and the eight
/// asymptotic limits of F_s and F_t.
///
/// fs_limit[Q](x) is the limit of F_s(x, s, t) and ft_limit[Q](x) the limit of
/// F_t(x, s, t) as (s, t) runs to infinity in quadrant Q.
struct NonlinearitySpec {
  using Field = std::function<double(const Point&, double, double)>;
  using Limit = std::function<double(const Point&)>;

  std::string name;
  Field f;
  Field f_s;
  Field f_t;
  double bound_m = 0.0;
  std::array<Limit, 4> fs_limit;
  std::array<Limit, 4> ft_limit;

  double fs_lim(Quadrant q, const Point& x) const { return fs_limit[static_cast<int>(q)](x); }
  double ft_lim(Quadrant q, const Point& x) const { return ft_limit[static_cast<int>(q)](x); }
};

/// F = 0.
inline NonlinearitySpec zero_nonlinearity() {
  NonlinearitySpec spec;
  spec.name = "zero";
  spec.f = spec.f_s = spec.f_t = [](const Point&, double, double) { return 0.0; };
  spec.bound_m = 0.0;
  for (auto& l : spec.fs_limit) l = [](const Point&) { return 0.0; };
  for (auto& l : spec.ft_limit) l = [](const Point&) { return 0.0; };
  return spec;
}

/// Primitive of arctan vanishing at 0: g(s) = s atan(s) - log(1 + s^2) / 2.
inline double arctan_primitive(double s) { return s * std::atan(s) - 0.5 * std::log1p(s * s); }

/// F(x, s, t) = m(x) (a g(s) + b g(t)) with g' = arctan.
///
/// F_s = m a atan(s) and F_t = m b atan(t), so every limit is +-m(x) a pi/2
/// (resp. b) independently of the other variable. The modulation m defaults
/// to 1 and must be bounded and non-negative.
inline NonlinearitySpec arctan_sum(double a, double b, std::function<double(const Point&)> modulation = {},
                                   double modulation_bound = 1.0) {
  if (!modulation) modulation = [](const Point&) { return 1.0; };
  NonlinearitySpec spec;
  spec.name = "arctan_sum";
  spec.f = [=](const Point& x, double s, double t) {
    return modulation(x) * (a * arctan_primitive(s) + b * arctan_primitive(t));
  };
  spec.f_s = [=](const Point& x, double s, double) { return modulation(x) * a * std::atan(s); };
  spec.f_t = [=](const Point& x, double, double t) { return modulation(x) * b * std::atan(t); };
  spec.bound_m = modulation_bound * std::max(std::abs(a), std::abs(b)) * std::numbers::pi / 2.0;
  const double h = std::numbers::pi / 2.0;
  for (Quadrant q : {Quadrant::PP, Quadrant::PM, Quadrant::MP, Quadrant::MM}) {
    const double ss = (q == Quadrant::PP || q == Quadrant::PM) ? 1.0 : -1.0;
    const double st = (q == Quadrant::PP || q == Quadrant::MP) ? 1.0 : -1.0;
    spec.fs_limit[static_cast<int>(q)] = [=](const Point& x) { return modulation(x) * a * ss * h; };
    spec.ft_limit[static_cast<int>(q)] = [=](const Point& x) { return modulation(x) * b * st * h; };
  }
  return spec;
}

/// Outcome of the randomized bound/limit spot checks.
struct SpotCheck {
  bool bound_ok = true;
  bool limits_ok = true;
  double max_derivative = 0.0;
  double max_limit_gap = 0.0;
};

/// Samples |F_s|, |F_t| on random (x, s, t) and compares F_s, F_t at
/// (+-S, +-S) with the declared limits. Evidence only, not a proof.
inline SpotCheck spot_check(const NonlinearitySpec& spec, const Mesh& mesh, unsigned seed = 7,
                            int samples = 200, double far = 1e6, double limit_tol = 1e-3) {
  SpotCheck out;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, mesh.num_vertices() - 1);
  std::normal_distribution<double> wide(0.0, 50.0);
  for (int k = 0; k < samples; ++k) {
    const Point& x = mesh.vertices[pick(rng)];
    const double s = wide(rng), t = wide(rng);
    out.max_derivative = std::max({out.max_derivative, std::abs(spec.f_s(x, s, t)), std::abs(spec.f_t(x, s, t))});
  }
  out.bound_ok = out.max_derivative <= spec.bound_m * (1.0 + 1e-12);
  for (std::size_t i = 0; i < mesh.num_vertices(); i += std::max<std::size_t>(1, mesh.num_vertices() / 16)) {
    const Point& x = mesh.vertices[i];
    for (Quadrant q : {Quadrant::PP, Quadrant::PM, Quadrant::MP, Quadrant::MM}) {
      const double s = (q == Quadrant::PP || q == Quadrant::PM) ? far : -far;
      const double t = (q == Quadrant::PP || q == Quadrant::MP) ? far : -far;
      out.max_limit_gap = std::max({out.max_limit_gap, std::abs(spec.f_s(x, s, t) - spec.fs_lim(q, x)),
                                    std::abs(spec.f_t(x, s, t) - spec.ft_lim(q, x))});
    }
  }
  out.limits_ok = out.max_limit_gap <= limit_tol;
  return out;
}

}  // namespace pqlap
