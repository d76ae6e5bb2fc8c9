#include "pqlap/core.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace pqlap;

TEST(Params, AcceptsCoupledPositiveExponents) {
  const Params p(3.0, 3.0, 0.5, 0.5);
  EXPECT_NEAR(p.coupling_defect(), 0.0, 1e-15);
  EXPECT_EQ(p.policy(), ExponentPolicy::Strict);
}

TEST(Params, CoupledBetaSolvesTheIdentity) {
  const Params p = Params::with_coupled_beta(3.0, 1.5, 0.5, ExponentPolicy::Relaxed);
  EXPECT_NEAR((p.alpha() + 1) / p.p() + (p.beta() + 1) / p.q(), 1.0, 1e-14);
  EXPECT_NEAR(p.beta(), -0.25, 1e-14);
  // with q = 1.5 no positive pair satisfies the identity
  EXPECT_THROW(Params::with_coupled_beta(3.0, 1.5, 0.5), ParameterError);
}

TEST(Params, RejectsBrokenCoupling) {
  EXPECT_THROW(Params(2.0, 2.0, 0.5, 0.6), ParameterError);
  EXPECT_THROW(Params(2.0, 2.0, 0.1, 0.0, ExponentPolicy::Relaxed), ParameterError);
}

TEST(Params, StrictRejectsZeroExponentRelaxedAccepts) {
  EXPECT_THROW(Params(2.0, 2.0, 0.0, 0.0), ParameterError);
  EXPECT_NO_THROW(Params(2.0, 2.0, 0.0, 0.0, ExponentPolicy::Relaxed));
  EXPECT_NO_THROW(Params(1.5, 1.5, -0.25, -0.25, ExponentPolicy::Relaxed));
  EXPECT_THROW(Params(1.5, 1.5, -1.0, 0.5, ExponentPolicy::Relaxed), ParameterError);
}

TEST(Params, RejectsExponentsNotAboveOne) {
  EXPECT_THROW(Params(1.0, 2.0, 0.0, 0.0, ExponentPolicy::Relaxed), ParameterError);
  EXPECT_THROW(Params::with_coupled_beta(2.0, 0.5, 0.0), ParameterError);
}

TEST(HomogeneousScale, ScalesBlocksByTheirOwnRoots) {
  const Params p = Params::with_coupled_beta(3.0, 1.5, 0.5, ExponentPolicy::Relaxed);
  const StateVector z(Vector::Constant(3, 2.0), Vector::Constant(3, -1.0));
  const StateVector s = homogeneous_scale(z, 8.0, p);
  EXPECT_NEAR(s.u[0], 2.0 * 2.0, 1e-14);
  EXPECT_NEAR(s.v[1], -std::pow(8.0, 1.0 / 1.5), 1e-14);
  EXPECT_THROW(homogeneous_scale(z, 0.0, p), ParameterError);
  EXPECT_THROW(homogeneous_scale(z, -1.0, p), ParameterError);
}

TEST(SignBranch, ZeroThetaGivesZeroState) {
  const Params p(2.0, 2.0, 0.0, 0.0, ExponentPolicy::Relaxed);
  const StateVector z(Vector::Ones(4), Vector::Ones(4));
  EXPECT_TRUE(sign_branch(z, 0.0, p, Branch::Mirrored).is_zero());
}

TEST(SignBranch, MirroredFlipsOnlyU) {
  const Params p(2.0, 2.0, 0.0, 0.0, ExponentPolicy::Relaxed);
  const StateVector z(Vector::Ones(2), Vector::Ones(2));
  const StateVector a = sign_branch(z, 4.0, p, Branch::Same);
  const StateVector b = sign_branch(z, 4.0, p, Branch::Mirrored);
  const StateVector c = sign_branch(z, -4.0, p, Branch::Mirrored);
  EXPECT_DOUBLE_EQ(a.u[0], 2.0);
  EXPECT_DOUBLE_EQ(a.v[0], 2.0);
  EXPECT_DOUBLE_EQ(b.u[0], -2.0);
  EXPECT_DOUBLE_EQ(b.v[0], 2.0);
  EXPECT_DOUBLE_EQ(c.u[0], 2.0);
  EXPECT_DOUBLE_EQ(c.v[0], -2.0);
}

TEST(StateVector, ArithmeticAndPairing) {
  StateVector a(Vector::Ones(3), Vector::Constant(3, 2.0));
  const StateVector b = 2.0 * a - a;
  EXPECT_TRUE((b - a).is_zero());
  EXPECT_DOUBLE_EQ((-a).max_abs(), 2.0);
  const Covector r(Vector::Ones(3), Vector::Ones(3));
  EXPECT_DOUBLE_EQ(pair(r, a), 9.0);
}
