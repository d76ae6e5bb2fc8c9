#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace pqlap;

namespace {

const Params kLinear(2.0, 2.0, 0.0, 0.0, ExponentPolicy::Relaxed);

// p = q with alpha = beta = p/2 - 1 reduces to the scalar p-Laplacian on u = v
Params scalar_reduction(double p) { return Params(p, p, p / 2 - 1, p / 2 - 1, ExponentPolicy::Relaxed); }

SolverOptions options(int max_iters = 5000) {
  SolverOptions o;
  o.max_iters = max_iters;
  return o;
}

}  // namespace

TEST(Oracle, ShootingAgreesWithClosedForm) {
  for (double p : {1.5, 2.0, 3.0})
    EXPECT_NEAR(oracle::shooting_eigenvalue(p), oracle::closed_form_eigenvalue(p), 1e-6 * oracle::closed_form_eigenvalue(p))
        << p;
}

TEST(Lambda1, MatchesDiscreteLaplacian) {
  const int n = 64;
  const Mesh m = build_interval_mesh(1.0, n);
  const EigenResult r = solve_lambda1(m, kLinear, options());
  ASSERT_TRUE(r.converged) << r.message;
  EXPECT_NEAR(r.lambda, oracle::discrete_laplacian_eigenvalue(n, 1), 1e-9 * r.lambda);
  EXPECT_LE(r.residual, 1e-8);
}

TEST(Lambda1, SquareMatchesFivePointStencil) {
  // the diagonal P1 triangulation of the square reproduces the 5-point stencil
  const int n = 16;
  const Mesh m = build_rect_mesh(1.0, 1.0, n, n);
  const EigenResult r = solve_lambda1(m, kLinear, options());
  ASSERT_TRUE(r.converged) << r.message;
  EXPECT_NEAR(r.lambda, 2 * oracle::discrete_laplacian_eigenvalue(n, 1), 1e-9 * r.lambda);
}

class Lambda1PLaplacian : public ::testing::TestWithParam<double> {};

TEST_P(Lambda1PLaplacian, ConvergesToShootingValue) {
  const double p = GetParam();
  const Mesh m = build_interval_mesh(1.0, 256);
  const EigenResult r = solve_lambda1(m, scalar_reduction(p), options());
  ASSERT_TRUE(r.converged) << r.message;
  EXPECT_NEAR(r.lambda, oracle::shooting_eigenvalue(p), 2e-4 * r.lambda);
}

INSTANTIATE_TEST_SUITE_P(Exponents, Lambda1PLaplacian, ::testing::Values(1.5, 3.0));

TEST(Lambda1, ResultIsAnEigenpairOnTheManifold) {
  const Params prm = Params::with_coupled_beta(3.0, 2.0, 0.25);
  const Mesh m = build_interval_mesh(1.0, 128);
  const EigenResult r = solve_lambda1(m, prm, options());
  ASSERT_TRUE(r.converged) << r.message;
  EXPECT_NEAR(phi(m, prm, r.z), 1.0, 1e-12);
  EXPECT_LE(eigen_residual(m, prm, r.z, r.lambda), 1e-8 * 1.01);
  EXPECT_NEAR(r.lambda, 1.0 / rayleigh_q(m, prm, r.z), 1e-12 * r.lambda);
}

TEST(Lambda1, QualityIsMonotoneUpToRounding) {
  for (const Params& prm : {kLinear, scalar_reduction(1.5), Params::with_coupled_beta(3.0, 2.0, 0.25)}) {
    const Mesh m = build_interval_mesh(1.0, 128);
    const EigenResult r = solve_lambda1(m, prm, options());
    ASSERT_TRUE(r.converged) << r.message;
    for (std::size_t k = 1; k < r.history.size(); ++k)
      EXPECT_GE(r.history[k].q_value, r.history[k - 1].q_value * (1 - 1e-13)) << k;
  }
}

TEST(Lambda1, StartScaleDoesNotMatter) {
  const Params prm = Params::with_coupled_beta(3.0, 2.0, 0.25);
  const Mesh m = build_interval_mesh(1.0, 64);
  std::mt19937_64 rng(5);
  const StateVector z0{bump_field(m) + 0.1 * oracle::random_smooth(m, rng), bump_field(m)};
  const EigenResult a = solve_lambda1(m, prm, options(), z0);
  const EigenResult b = solve_lambda1(m, prm, options(), 40.0 * z0);
  ASSERT_TRUE(a.converged && b.converged);
  EXPECT_NEAR(a.lambda, b.lambda, 1e-9 * a.lambda);
  EXPECT_LT((a.z - b.z).max_abs(), 1e-6);
}

TEST(Lambda1, MirroredStartGivesCanonicalPositivePair) {
  const Params prm = Params::with_coupled_beta(3.0, 2.0, 0.25);
  const Mesh m = build_interval_mesh(1.0, 64);
  const Vector b = bump_field(m);
  const EigenResult plain = solve_lambda1(m, prm, options(), StateVector(b, b));
  const EigenResult mirrored = solve_lambda1(m, prm, options(), StateVector(-b, b));
  ASSERT_TRUE(plain.converged && mirrored.converged);
  EXPECT_NEAR(plain.lambda, mirrored.lambda, 1e-9 * plain.lambda);
  const SignStructure s = check_sign_structure(m, mirrored.z);
  EXPECT_EQ(s.u_neg + s.v_neg, 0);
  EXPECT_EQ(s.u_pos, 63);
  EXPECT_EQ(s.v_pos, 63);
}

TEST(Lambda1, RejectsStartWithZeroPsi) {
  const Mesh m = build_interval_mesh(1.0, 16);
  EXPECT_THROW(solve_lambda1(m, kLinear, options(), StateVector(Vector::Zero(17), bump_field(m))), StartError);
  SolverOptions bad;
  bad.max_iters = 0;
  EXPECT_THROW(solve_lambda1(m, kLinear, bad), ParameterError);
}

TEST(Lambda1, IterationCapIsReportedNotThrown) {
  const Mesh m = build_interval_mesh(1.0, 64);
  const EigenResult r = solve_lambda1(m, Params::with_coupled_beta(3.0, 2.0, 0.25), options(1));
  EXPECT_FALSE(r.converged);
  EXPECT_FALSE(r.message.empty());
  EXPECT_THROW(solve_lambda2(m, kLinear, options(), r), PreconditionError);
}

TEST(Lambda2, MatchesDiscreteLaplacian) {
  const int n = 64;
  const Mesh m = build_interval_mesh(1.0, n);
  const EigenResult e1 = solve_lambda1(m, kLinear, options());
  const EigenResult e2 = solve_lambda2(m, kLinear, options(), e1);
  ASSERT_TRUE(e2.converged) << e2.message;
  EXPECT_NEAR(e2.lambda, oracle::discrete_laplacian_eigenvalue(n, 2), 1e-7 * e2.lambda);
  EXPECT_LE(eigen_residual(m, kLinear, e2.z, e2.lambda), 1e-8 * 1.01);
  EXPECT_GT(e2.lambda, e1.lambda);
}

TEST(Lambda2, ScalarPLaplacianDoublesTheFrequency) {
  // in 1D the second eigenfunction is two half-size copies of the first
  const double p = 3.0;
  const Mesh m = build_interval_mesh(1.0, 128);
  const EigenResult e1 = solve_lambda1(m, scalar_reduction(p), options());
  const EigenResult e2 = solve_lambda2(m, scalar_reduction(p), options(), e1);
  ASSERT_TRUE(e2.converged) << e2.message;
  EXPECT_NEAR(e2.lambda, std::pow(2.0, p) * oracle::shooting_eigenvalue(p), 2e-3 * e2.lambda);
  const SignStructure s = check_sign_structure(m, e2.z);
  EXPECT_TRUE(s.u_changes_sign());
  EXPECT_TRUE(s.v_changes_sign());
}

TEST(Simplicity, RandomStartsReachOneEigenfunction) {
  const Mesh m = build_interval_mesh(1.0, 64);
  SolverOptions o = options();
  o.n_starts = 5;
  o.seed = 7;
  const SimplicityReport rep = simplicity_check(m, Params::with_coupled_beta(3.0, 2.0, 0.25), o);
  EXPECT_EQ(rep.failures, 0);
  EXPECT_GE(rep.runs, 3);
  EXPECT_LT(rep.max_deviation, 1e-6);
  EXPECT_LT(rep.lambda_spread, 1e-9);
}

TEST(Isolation, ResidualFloorStaysAwayFromZeroAboveLambda1) {
  const Mesh m = build_interval_mesh(1.0, 64);
  const SolverOptions o = options();
  const EigenResult e1 = solve_lambda1(m, kLinear, o);
  const EigenResult e2 = solve_lambda2(m, kLinear, o, e1);
  ASSERT_TRUE(e2.converged);
  const auto scan = isolation_scan(m, kLinear, o, e1.lambda + 0.5, e2.lambda - 0.5, 6,
                                   isolation_starts(m, o, {e1.z, e2.z}));
  for (const auto& pt : scan) EXPECT_GT(pt.min_residual, 1e3 * o.tol_residual) << pt.lambda;
  // the scan does reach the tolerance at an eigenvalue
  EXPECT_LT(min_eigen_residual(m, kLinear, o, e1.lambda, {e1.z}), 1e-7);
}
