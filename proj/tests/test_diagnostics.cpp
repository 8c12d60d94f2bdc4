#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fastdiff/diagnostics.hpp"

using namespace fastdiff;

namespace {

GridPtr small_grid(int N, int intervals = 200) {
  return make_grid(1000.0, std::size_t(intervals), 20.0, N);
}

Trajectory member_trajectory(const ProblemParams& p, double k, GridPtr g,
                             const std::vector<double>& times) {
  Trajectory traj;
  for (double t : times) {
    traj.times.push_back(t);
    traj.fields.push_back(barenblatt_field(p, {k, p.T}, g, t));
  }
  return traj;
}

Trajectory constant_trajectory(GridPtr g, const std::vector<double>& times,
                               const std::vector<double>& amps) {
  Trajectory traj;
  for (std::size_t j = 0; j < times.size(); ++j) {
    RadialField f;
    f.grid = g;
    f.values.assign(g->size(), amps[j]);
    traj.times.push_back(times[j]);
    traj.fields.push_back(std::move(f));
  }
  return traj;
}

RescaledTrajectory bump_trajectory(const ProblemParams& p, double k, GridPtr g,
                                   const std::vector<double>& taus,
                                   const std::vector<double>& amps) {
  RescaledTrajectory traj;
  for (std::size_t j = 0; j < taus.size(); ++j) {
    RadialField f = rescaled_barenblatt_field(p, k, g);
    for (std::size_t i = 0; i < f.size(); ++i)
      f.values[i] *= 1.0 + amps[j] * std::exp(-g->nodes[i] * g->nodes[i]);
    traj.taus.push_back(taus[j]);
    traj.fields.push_back(std::move(f));
  }
  return traj;
}

}  // namespace

TEST(Diagnostics, ClaimIFrozenValues) {
  const ProblemParams p = derive_params(6, 0.4, 1.0);
  const ClaimIResult at1 = claim_i_identity(p, 1.0, 1.0);
  EXPECT_NEAR(at1.lhs, -0.383154716197, 1e-10 * 0.383154716197);
  EXPECT_TRUE(at1.check.passed);
  EXPECT_LT(at1.check.worst_value, 1e-10);
  EXPECT_DOUBLE_EQ(at1.check.tolerance, 1e-10);

  const ClaimIResult at0 = claim_i_identity(p, 1.0, 0.0);
  EXPECT_NEAR(at0.lhs, -0.965489384606, 1e-10 * 0.965489384606);
  EXPECT_LT(at0.lhs, 0.0);
}

TEST(Diagnostics, ClaimIHoldsAcrossRadii) {
  for (const auto& [N, m] : {std::pair{6, 0.40}, std::pair{7, 0.50}, std::pair{10, 0.60}}) {
    const ProblemParams p = derive_params(N, m, 1.0);
    for (double k2 : {0.5, 2.0}) {
      for (double r = 0.0; r <= 1000.0; r = (r == 0.0 ? 0.01 : 10.0 * r)) {
        const ClaimIResult c = claim_i_identity(p, k2, r);
        EXPECT_LT(c.check.worst_value, 1e-10) << "N=" << N << " k2=" << k2 << " r=" << r;
        EXPECT_LT(c.lhs, 0.0);
        EXPECT_LT(c.rhs, 0.0);
      }
    }
  }
}

TEST(Diagnostics, ClaimIOutsideHypothesis) {
  // needs m < (N-4)/(N-2) strictly; dimension 3 never qualifies
  const ProblemParams p3 = derive_params(3, 0.2, 1.0);
  EXPECT_THROW(claim_i_identity(p3, 1.0, 1.0), NotApplicable);
  // boundary case m = (N-4)/(N-2) is excluded too
  const ProblemParams edge = derive_params(6, 0.5, 1.0);
  EXPECT_THROW(claim_i_identity(edge, 1.0, 1.0), NotApplicable);
  const ProblemParams p = derive_params(6, 0.4, 1.0);
  EXPECT_THROW(claim_i_identity(p, 0.0, 1.0), InvalidArgument);
  EXPECT_THROW(claim_i_identity(p, 1.0, -1.0), InvalidArgument);
}

TEST(Diagnostics, WeightLaplacianSign) {
  const ProblemParams p = derive_params(6, 0.4, 1.0);
  const CheckResult ok = laplacian_weight_sign(p, 1.0);
  EXPECT_TRUE(ok.passed);
  EXPECT_LT(ok.worst_value, 0.0);

  // closed form at the axis: -2 a N Cstar^a k2^{-a-1}, a = alpha q
  const double alpha = p.weight_alpha, q = p.q();
  const double a = alpha * q;
  const double axis = -2.0 * a * p.N * std::pow(p.Cstar, a);
  const double h = 1e-4;
  const auto A = [&](double r) { return std::pow(eval_rescaled_barenblatt(p, 1.0, r), alpha); };
  const double fd_axis = p.N * 2.0 * (A(h) - A(0.0)) / (h * h);
  EXPECT_NEAR(fd_axis, axis, 1e-5 * std::abs(axis));

  // exponents above the concavity threshold flip the sign at large radii
  const CheckResult bad = laplacian_weight_sign(p, 1.0, 1.5);
  EXPECT_FALSE(bad.passed);
  EXPECT_GT(bad.worst_value, 0.0);
  EXPECT_GT(bad.location, 1.0);

  EXPECT_THROW(laplacian_weight_sign(p, 0.0), InvalidArgument);
  // negative weight exponent: nothing to certify
  const ProblemParams p3 = derive_params(3, 0.2, 1.0);
  EXPECT_THROW(laplacian_weight_sign(p3, 1.0), NotApplicable);
}

TEST(Diagnostics, TrappedOrderOnMembers) {
  const ProblemParams p = derive_params(3, 0.2, 1.0);
  GridPtr g = small_grid(3);
  const Trajectory traj = member_trajectory(p, 1.0, g, {0.2, 0.5, 0.8});

  const CheckResult inside = check_trapped(traj, p, 2.0, 0.5);
  EXPECT_TRUE(inside.passed);
  EXPECT_LT(inside.worst_value, 0.0);

  // a member above the upper envelope violates by an order-one margin
  const Trajectory high = member_trajectory(p, 0.25, g, {0.2, 0.5, 0.8});
  const CheckResult out = check_trapped(high, p, 2.0, 0.5);
  EXPECT_FALSE(out.passed);
  EXPECT_GT(out.worst_value, 0.01);

  EXPECT_THROW(check_trapped(traj, p, 0.5, 2.0), InvalidArgument);
  EXPECT_THROW(check_trapped(Trajectory{}, p, 2.0, 0.5), InvalidArgument);
}

TEST(Diagnostics, ContractionSeriesOnMemberPair) {
  const ProblemParams p = derive_params(3, 0.2, 1.0);
  GridPtr g = make_grid(1000.0, 800, 20.0, 3);
  const Trajectory u = member_trajectory(p, 1.0, g, {0.0, 0.4});
  const Trajectory v = member_trajectory(p, 2.0, g, {0.0, 0.4});
  const ContractionResult c = contraction_series(u, v);
  ASSERT_EQ(c.distance.size(), 2u);
  ASSERT_FALSE(c.distance[0].divergent);
  // distance between members is invariant under the flow; at t=0 it equals
  // the fixed-frame pair distance
  EXPECT_NEAR(c.distance[0].value, 0.762030703999757, 1e-3);
  EXPECT_NEAR(c.distance[1].value, c.distance[0].value, 1e-3 * c.distance[0].value);
}

TEST(Diagnostics, ContractionCheckGatesOnMonotonicity) {
  GridPtr g = make_grid(100.0, 64, 5.0, 3);
  const std::vector<double> times = {0.0, 1.0, 2.0};
  const Trajectory base = constant_trajectory(g, times, {1.0, 1.0, 1.0});

  const Trajectory down = constant_trajectory(g, times, {1.004, 1.002, 1.001});
  const ContractionResult good = contraction_series(down, base);
  EXPECT_TRUE(good.check.passed);
  EXPECT_TRUE(good.check.applicable);

  const Trajectory up = constant_trajectory(g, times, {1.001, 1.002, 1.004});
  const ContractionResult bad = contraction_series(up, base);
  EXPECT_FALSE(bad.check.passed);

  // a divergent distance anywhere makes the plain metric meaningless
  Trajectory fat = constant_trajectory(g, times, {1.004, 1.002, 1.001});
  for (auto& f : fat.fields) f.tail = TailModel::power(2.5, 1.0);
  const ContractionResult div = contraction_series(fat, base);
  EXPECT_FALSE(div.check.applicable);
  EXPECT_TRUE(std::isinf(div.check.worst_value));

  Trajectory shifted = base;
  shifted.times[1] = 1.5;
  EXPECT_THROW(contraction_series(shifted, base), InvalidArgument);
}

TEST(Diagnostics, WeightedContractionRegimeGating) {
  const ProblemParams p6 = derive_params(6, 0.4, 1.0);
  GridPtr g = small_grid(6);
  const std::vector<double> taus = {0.0, 1.0, 2.0};

  const RescaledTrajectory u = bump_trajectory(p6, 1.0, g, taus, {0.2, 0.1, 0.05});
  const RescaledTrajectory v = bump_trajectory(p6, 1.0, g, taus, {0.0, 0.0, 0.0});
  const ContractionResult c = weighted_contraction_series(u, v, p6, 1.0);
  ASSERT_FALSE(c.distance[0].divergent);
  EXPECT_GT(c.distance[0].value, 0.0);
  EXPECT_TRUE(c.check.passed);
  EXPECT_TRUE(c.check.applicable);

  // the same series is informational only where masses are comparable
  const ProblemParams p3 = derive_params(3, 0.2, 1.0);
  GridPtr g3 = small_grid(3);
  const RescaledTrajectory u3 = bump_trajectory(p3, 1.0, g3, taus, {0.2, 0.1, 0.05});
  const RescaledTrajectory v3 = bump_trajectory(p3, 1.0, g3, taus, {0.0, 0.0, 0.0});
  const ContractionResult c3 = weighted_contraction_series(u3, v3, p3, 1.0);
  EXPECT_FALSE(c3.check.applicable);

  // two distinct members: the weighted member-pair distance has no finite value
  RescaledTrajectory m1, m2;
  for (double tau : taus) {
    m1.taus.push_back(tau);
    m1.fields.push_back(rescaled_barenblatt_field(p6, 1.0, g));
    m2.taus.push_back(tau);
    m2.fields.push_back(rescaled_barenblatt_field(p6, 2.0, g));
  }
  const ContractionResult pair = weighted_contraction_series(m1, m2, p6, 1.0);
  EXPECT_TRUE(pair.distance[0].divergent);
  EXPECT_FALSE(pair.check.applicable);
}

TEST(Diagnostics, PotentialDecayDegenerateAndGuards) {
  const ProblemParams p = derive_params(3, 0.2, 1.0);
  GridPtr g = make_grid(100.0, 64, 5.0, 3);
  std::vector<double> times;
  for (int j = 0; j <= 50; ++j) times.push_back(0.01 * j);
  std::vector<double> amps(times.size(), 1.0);
  const Trajectory u = constant_trajectory(g, times, amps);

  // identical runs: w vanishes identically and sits far below the envelope
  const CheckResult same = potential_decay_check(u, u, p, 0.05);
  EXPECT_TRUE(same.passed);
  EXPECT_DOUBLE_EQ(same.worst_value, -1.0);

  const Trajectory shortu = constant_trajectory(g, {0.0, 0.1}, {1.0, 1.0});
  EXPECT_THROW(potential_decay_check(shortu, shortu, p, 0.05), InvalidArgument);

  // the bound needs a finite initial mass difference
  Trajectory fat = u;
  for (auto& f : fat.fields) f.tail = TailModel::power(2.5, 1.0);
  EXPECT_THROW(potential_decay_check(fat, u, p, 0.05), NotApplicable);
}

TEST(Diagnostics, AronsonBenilanGrowthCap) {
  const ProblemParams p = derive_params(3, 0.2, 1.0);
  GridPtr g = small_grid(3);

  // exact vanishing solutions decay, so they sit strictly inside the cap
  const Trajectory member = member_trajectory(p, 1.0, g, {0.2, 0.4, 0.6, 0.8});
  const CheckResult ok = aronson_benilan_check(member, p);
  EXPECT_TRUE(ok.passed);
  EXPECT_LT(ok.worst_value, 0.0);

  // growth beyond (t2/t1)^{1/(1-m)} is flagged
  const Trajectory fast = constant_trajectory(g, {1.0, 1.1}, {1.0, 10.0});
  const CheckResult bad = aronson_benilan_check(fast, p);
  EXPECT_FALSE(bad.passed);
  EXPECT_GT(bad.worst_value, 1.0);

  // creation out of nothing is an unbounded violation
  const Trajectory birth = constant_trajectory(g, {1.0, 2.0}, {0.0, 1.0});
  EXPECT_TRUE(std::isinf(aronson_benilan_check(birth, p).worst_value));

  // snapshots at t = 0 carry no information for the quotient
  const Trajectory only_zero = constant_trajectory(g, {0.0, 1.0}, {1.0, 1.0});
  EXPECT_NO_THROW(aronson_benilan_check(only_zero, p));
  EXPECT_THROW(aronson_benilan_check(constant_trajectory(g, {0.0}, {1.0}), p), InvalidArgument);
}

TEST(Diagnostics, SandwichBoundsOnScaledMember) {
  const ProblemParams p = derive_params(6, 0.4, 1.0);
  GridPtr g = small_grid(6);
  const std::vector<double> taus = {0.0, 1.0, 2.0, 3.0};

  RescaledTrajectory traj;
  for (double tau : taus) {
    RadialField f = rescaled_barenblatt_field(p, 1.0, g);
    for (double& v : f.values) v *= 0.9;
    traj.taus.push_back(tau);
    traj.fields.push_back(std::move(f));
  }

  const SandwichResult s = sandwich_bounds_check(traj, p, 1.0, 5.0, 1.0);
  EXPECT_TRUE(s.check.passed);
  // 0.9 B_1 (1+r^2)^q == 0.9 Cstar^q exactly, so both constants collapse
  const double rho = 0.9 * std::pow(p.Cstar, p.q());
  EXPECT_NEAR(s.C1, rho, 1e-6 * rho);
  EXPECT_GE(s.C2, s.C1);
  EXPECT_LT(s.C2, rho * (1.0 + 1e-4));

  // data starting above the member is refused, not graded
  RescaledTrajectory above = traj;
  for (double& v : above.fields.front().values) v *= 1.3;
  EXPECT_THROW(sandwich_bounds_check(above, p, 1.0, 5.0, 1.0), NotApplicable);

  EXPECT_THROW(sandwich_bounds_check(RescaledTrajectory{}, p, 1.0, 5.0, 1.0), InvalidArgument);
  EXPECT_THROW(sandwich_bounds_check(traj, p, 1.0, 5.0, 10.0), InvalidArgument);
}

TEST(Diagnostics, ConvergenceSeriesGatesByRegime) {
  const std::vector<double> taus = {0.0, 1.0, 2.0, 3.5};
  const std::vector<double> amps = {0.1, 0.05, 0.02, 0.01};

  const ProblemParams p3 = derive_params(3, 0.2, 1.0);
  GridPtr g3 = small_grid(3);
  const ConvergenceResult c3 = convergence_series(bump_trajectory(p3, 1.0, g3, taus, amps), p3, 1.0);
  EXPECT_TRUE(c3.check.passed);
  EXPECT_NEAR(c3.check.worst_value, 0.1, 0.02);
  ASSERT_EQ(c3.l1.size(), taus.size());  // plain metric exists here
  EXPECT_FALSE(c3.l1.front().divergent);

  const ProblemParams p6 = derive_params(6, 0.4, 1.0);
  GridPtr g6 = small_grid(6);
  const ConvergenceResult c6 = convergence_series(bump_trajectory(p6, 1.0, g6, taus, amps), p6, 1.0);
  EXPECT_TRUE(c6.check.passed);
  EXPECT_TRUE(c6.l1.empty());  // not certified in this regime
  ASSERT_EQ(c6.weighted.size(), taus.size());
  EXPECT_FALSE(c6.weighted.front().divergent);

  // window guards
  const RescaledTrajectory narrow = bump_trajectory(p3, 1.0, g3, {0.0, 1.0}, {0.1, 0.05});
  EXPECT_THROW(convergence_series(narrow, p3, 1.0), InvalidArgument);
  const RescaledTrajectory single = bump_trajectory(p3, 1.0, g3, {0.0}, {0.1});
  EXPECT_THROW(convergence_series(single, p3, 1.0), InvalidArgument);
}
