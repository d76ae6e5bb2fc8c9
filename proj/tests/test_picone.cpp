#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace pqlap;

namespace {

Vector positive_profile(const Mesh& m, std::mt19937_64& rng) {
  const Vector s = oracle::random_smooth(m, rng);
  return bump_field(m).cwiseProduct((1.0 + 0.3 * s.array().tanh()).matrix());
}

double max_abs(const std::vector<double>& a) {
  double s = 0.0;
  for (double x : a) s = std::max(s, std::abs(x));
  return s;
}

}  // namespace

class PiconeIdentity : public ::testing::TestWithParam<double> {};

TEST_P(PiconeIdentity, BothSidesAgreeAndLIsNonNegative) {
  const double r = GetParam();
  std::mt19937_64 rng(static_cast<unsigned>(100 * r));
  for (const Mesh& m : {build_interval_mesh(1.0, 40), build_rect_mesh(1.0, 1.0, 10, 10)}) {
    for (int k = 0; k < 4; ++k) {
      const Vector u = positive_profile(m, rng), v = positive_profile(m, rng);
      const PiconeField f = picone_fields(m, r, u, v);
      const double scale = 1.0 + max_abs(f.l_values);
      const PiconeCheck c = verify_picone(m, r, u, v, 1e-12 * scale);
      EXPECT_TRUE(c.pass) << "gap " << c.identity_gap << " min " << c.min_l;
      EXPECT_GE(c.min_l, -1e-12 * scale);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Exponents, PiconeIdentity, ::testing::Values(1.2, 1.5, 2.0, 2.5, 3.0, 4.0));

TEST(Picone, ProportionalPairHasZeroL) {
  const Mesh m = build_interval_mesh(1.0, 30);
  std::mt19937_64 rng(1);
  const Vector v = positive_profile(m, rng);
  const PiconeField f = picone_fields(m, 2.5, 3.0 * v, v);
  const PiconeField g = picone_fields(m, 2.5, v, v);
  double scale = 0.0;
  for (const auto& gr : gradient_field(m, v)) scale = std::max(scale, std::pow(std::abs(gr[0]), 2.5));
  EXPECT_LT(max_abs(f.l_values), 1e-12 * scale * std::pow(3.0, 2.5));
  EXPECT_LT(max_abs(g.l_values), 1e-12 * scale);
}

TEST(Picone, QuadraticCaseIsASquare) {
  // r = 2: L = |grad u - (u/v) grad v|^2
  const Mesh m = build_rect_mesh(1.0, 1.0, 6, 6);
  std::mt19937_64 rng(2);
  const Vector u = positive_profile(m, rng), v = positive_profile(m, rng);
  const PiconeField f = picone_fields(m, 2.0, u, v);
  const auto gu = gradient_field(m, u), gv = gradient_field(m, v);
  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    double um = 0, vm = 0;
    for (int a = 0; a < 3; ++a) {
      um += u[m.elements[e][a]] / 3;
      vm += v[m.elements[e][a]] / 3;
    }
    if (vm == 0.0) continue;
    const double dx = gu[e][0] - um / vm * gv[e][0], dy = gu[e][1] - um / vm * gv[e][1];
    EXPECT_NEAR(f.l_values[e], dx * dx + dy * dy, 1e-11 * (1 + dx * dx + dy * dy));
  }
}

TEST(Picone, Homogeneity) {
  const double r = 3.0;
  const Mesh m = build_interval_mesh(1.0, 30);
  std::mt19937_64 rng(3);
  const Vector u = positive_profile(m, rng), v = positive_profile(m, rng);
  const PiconeField base = picone_fields(m, r, u, v);
  const PiconeField scaled_u = picone_fields(m, r, 2.0 * u, v);
  const PiconeField scaled_v = picone_fields(m, r, u, 5.0 * v);
  for (std::size_t e = 0; e < base.l_values.size(); ++e) {
    const double tol = 1e-10 * (1 + std::abs(base.l_values[e]) * 8);
    EXPECT_NEAR(scaled_u.l_values[e], 8.0 * base.l_values[e], tol);
    EXPECT_NEAR(scaled_v.l_values[e], base.l_values[e], tol);
  }
}

TEST(Picone, RejectsInvalidInputs) {
  const Mesh m = build_interval_mesh(1.0, 10);
  const Vector b = bump_field(m);
  EXPECT_THROW(picone_fields(m, 1.0, b, b), ParameterError);
  EXPECT_THROW(picone_fields(m, 2.0, -b, b), DomainError);
  Vector hole = b;
  hole[5] = 0.0;
  EXPECT_THROW(picone_fields(m, 2.0, b, hole), DomainError);
  EXPECT_THROW(picone_fields(m, 2.0, b, Vector::Ones(4)), ShapeError);
}

TEST(Picone, ToleranceBelowGapFails) {
  const Mesh m = build_interval_mesh(1.0, 50);
  std::mt19937_64 rng(4);
  const Vector u = positive_profile(m, rng), v = positive_profile(m, rng);
  const PiconeCheck c = verify_picone(m, 2.7, u, v, 1.0);
  EXPECT_TRUE(c.pass);
  if (c.identity_gap > 0.0) EXPECT_FALSE(verify_picone(m, 2.7, u, v, 0.5 * c.identity_gap).pass);
}

TEST(Picone, EigenfunctionAgainstLiftedEigenfunction) {
  const Mesh m = build_interval_mesh(1.0, 128);
  const Params prm(3.0, 3.0, 0.5, 0.5);
  SolverOptions o;
  const EigenResult e = solve_lambda1(m, prm, o);
  ASSERT_TRUE(e.converged);
  const Vector v = e.z.u + 0.1 * bump_field(m);
  const PiconeCheck c = verify_picone(m, 3.0, e.z.u, v, 1e-8);
  EXPECT_TRUE(c.pass) << c.identity_gap;
}

TEST(Picone, CornerElementsOfTheSquareAreSkipped) {
  // two triangles touch the boundary with all three vertices
  const Mesh m = build_rect_mesh(1.0, 1.0, 8, 8);
  const Vector b = bump_field(m);
  PiconeCheck c;
  ASSERT_NO_THROW(c = verify_picone(m, 2.0, b, b, 1e-12));
  EXPECT_TRUE(c.pass);
}
