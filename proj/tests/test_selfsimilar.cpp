#include <gtest/gtest.h>

#include <cmath>

#include "fastdiff/selfsimilar.hpp"

using namespace fastdiff;

namespace {

// Same algebra as the shipped bundle but with an adjustable front constant,
// to show the shipped value is the one that closes the equation.
ProfileDerivatives bundle_with_constant(int N, double lambda, double K) {
  const double qf = 0.5 * (N + 2), qm = 0.5 * (N - 2);
  const double L = lambda;
  ProfileDerivatives d;
  d.f = [=](double e) { return std::pow(K * L / (L * L + e * e), qf); };
  d.f_e = [=](double e) {
    const double D = L * L + e * e;
    return std::pow(K * L / D, qf) * (-qf) * 2.0 * e / D;
  };
  d.fm_e = [=](double e) {
    const double D = L * L + e * e;
    return std::pow(K * L / D, qm) * (-qm) * 2.0 * e / D;
  };
  d.fm_ee = [=](double e) {
    const double D = L * L + e * e;
    return std::pow(K * L / D, qm) * 2.0 * qm * (2.0 * (qm + 1) * e * e / (D * D) - 1.0 / D);
  };
  return d;
}

}  // namespace

TEST(SelfSimilar, FrontConstantOracle) {
  EXPECT_NEAR(yamabe_K(3), 1.5491933384829668, 1e-15);  // 2 sqrt(3/5)
  EXPECT_NEAR(yamabe_K(6), 2.0 * std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(yamabe_profile(3, 1.0, 0.0), std::pow(yamabe_K(3), 2.5), 1e-14);
  EXPECT_THROW(yamabe_profile(3, 0.0, 1.0), InvalidArgument);
}

TEST(SelfSimilar, ExplicitProfileSolvesEquation) {
  const ProblemParams p = derive_params(3, 0.2, 1.0);
  ASSERT_TRUE(p.is_yamabe);
  for (double lambda : {1.0, 2.5}) {
    const ProfileDerivatives d = yamabe_profile_derivatives(3, lambda);
    for (double eta = 0.0; eta <= 20.0; eta += 0.5) {
      const double res = profile_ode_residual(d, p, 0.0, eta);
      EXPECT_LT(std::abs(res), 1e-10 * (1.0 + d.f(eta))) << "lambda=" << lambda << " eta=" << eta;
    }
  }
}

TEST(SelfSimilar, PerturbedConstantBreaksEquation) {
  const ProblemParams p = derive_params(3, 0.2, 1.0);
  const ProfileDerivatives good = bundle_with_constant(3, 1.0, yamabe_K(3));
  const ProfileDerivatives bad = bundle_with_constant(3, 1.0, 1.01 * yamabe_K(3));
  EXPECT_LT(std::abs(profile_ode_residual(good, p, 0.0, 1.0)), 1e-12);
  EXPECT_GT(std::abs(profile_ode_residual(bad, p, 0.0, 1.0)), 1e-3);
  // wrong similarity exponent also fails on the exact profile (away from
  // eta = lambda, where the two exponent terms happen to cancel)
  EXPECT_GT(std::abs(profile_ode_residual(good, p, 0.1, 2.0)), 1e-3);
  EXPECT_THROW(profile_ode_residual(good, p, 0.0, -1.0), InvalidArgument);
}

TEST(SelfSimilar, SpecConsistencyChecks) {
  const ProblemParams p = derive_params(3, 0.2, 1.0);
  SelfSimilarSpec s;
  s.theta = 0.0;
  s.alpha_ss = alpha_ss_of_theta(p, 0.0);
  EXPECT_NO_THROW(check_selfsimilar_spec(s, p));
  s.alpha_ss += 1e-6;
  EXPECT_THROW(check_selfsimilar_spec(s, p), InvalidArgument);
  s.theta = 0.75;  // outside (theta_lower, 1/2)
  s.alpha_ss = alpha_ss_of_theta(p, s.theta);
  EXPECT_THROW(check_selfsimilar_spec(s, p), InvalidArgument);
  s.theta = 0.0;
  s.alpha_ss = alpha_ss_of_theta(p, 0.0);
  s.lambda = 0.0;
  EXPECT_THROW(check_selfsimilar_spec(s, p), InvalidArgument);
}

TEST(SelfSimilar, ProfileFieldSeamAndTail) {
  GridPtr g = make_grid(1000.0, 400, 20.0, 3);
  const RadialField f = yamabe_profile_field(3, 1.0, g);
  ASSERT_TRUE(f.tail.is_power());
  EXPECT_DOUBLE_EQ(f.tail.p, 5.0);  // (N-2)/m at the conformal exponent
  EXPECT_DOUBLE_EQ(f.values.back(), f.tail.eval(g->back()));
  for (std::size_t i = 0; i + 1 < f.size(); ++i)
    EXPECT_DOUBLE_EQ(f.values[i], yamabe_profile(3, 1.0, g->nodes[i]));
}

TEST(SelfSimilar, LambdaScalingMapsWithinFamily) {
  const ProblemParams p = derive_params(3, 0.2, 1.0);
  GridPtr g = make_grid(1000.0, 400, 20.0, 3);
  const RadialField f1 = yamabe_profile_field(3, 1.0, g);
  const double lambda = 2.0;
  const RadialField f2 = scale_profile(f1, p, lambda);
  for (std::size_t i = 0; i + 1 < f2.size(); ++i) {
    const double eta = f2.grid->nodes[i];
    EXPECT_NEAR(f2.values[i], yamabe_profile(3, lambda, eta), 1e-13 * f2.values[i]) << eta;
  }
  // tail stays a power law with the same exponent
  ASSERT_TRUE(f2.tail.is_power());
  EXPECT_DOUBLE_EQ(f2.tail.p, f1.tail.p);
  EXPECT_THROW(scale_profile(f1, p, 0.0), InvalidArgument);
}

TEST(SelfSimilar, ShotAtZeroThetaTracksExplicitProfile) {
  const ProblemParams p = derive_params(3, 0.2, 1.0);
  const double f0 = yamabe_profile(3, 1.0, 0.0);
  const RadialField shot = shoot_profile(p, 0.0, f0, 20.0);
  ASSERT_GE(shot.size(), 8u);
  double worst = 0.0;
  for (std::size_t i = 0; i < shot.size(); ++i) {
    const double want = yamabe_profile(3, 1.0, shot.grid->nodes[i]);
    worst = std::max(worst, std::abs(shot.values[i] - want) / want);
  }
  EXPECT_LT(worst, 1e-5);
  EXPECT_THROW(shoot_profile(p, 0.0, -1.0, 20.0), InvalidArgument);
  EXPECT_THROW(shoot_profile(p, 0.75, f0, 20.0), InvalidArgument);
}

TEST(SelfSimilar, ShotClassificationSeparatesRegimes) {
  const ProblemParams p = derive_params(3, 0.2, 1.0);
  const double f0 = yamabe_profile(3, 1.0, 0.0);
  EXPECT_EQ(classify_shot(p, -0.3, f0, 400.0), ShotClass::SlowTail);
  EXPECT_NE(classify_shot(p, 0.3, f0, 400.0), ShotClass::SlowTail);
}

TEST(SelfSimilar, AnomalousThetaNearZeroAtConformalExponent) {
  const ProblemParams p = derive_params(3, 0.2, 1.0);
  const double f0 = yamabe_profile(3, 1.0, 0.0);
  const double theta = find_anomalous_theta(p, f0);
  EXPECT_LT(std::abs(theta), 1e-4);
}

TEST(SelfSimilar, ThetaSearchFailureModes) {
  // tail exponents too close to tell apart
  const ProblemParams close_exponents = derive_params(3, 0.32, 1.0);
  EXPECT_THROW(find_anomalous_theta(close_exponents, 1.0), InvalidArgument);
  // window too short for any classification to flip
  const ProblemParams p = derive_params(3, 0.2, 1.0);
  EXPECT_THROW(find_anomalous_theta(p, yamabe_profile(3, 1.0, 0.0), 0.01), NoSignChange);
}
