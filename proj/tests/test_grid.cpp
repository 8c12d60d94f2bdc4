#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fastdiff/grid.hpp"
#include "fastdiff/profiles.hpp"

using namespace fastdiff;

namespace {

constexpr double kPi = 3.14159265358979323846;

RadialField power_law_field(GridPtr g, double p) {
  // (1+r^2)^{-p/2} with the tail coefficient anchored at the seam so the
  // field satisfies its own tail model exactly.
  auto fn = [p](double r) { return std::pow(1.0 + r * r, -0.5 * p); };
  const double R = g->back();
  return sample_field(g, fn, TailModel::power(p, fn(R) * std::pow(R, p)));
}

}  // namespace

TEST(Grid, MakeGridShape) {
  const GridPtr g = make_grid(1000.0, 400, 5.0, 3);
  ASSERT_EQ(g->nodes.size(), 401u);
  EXPECT_EQ(g->nodes.front(), 0.0);
  EXPECT_EQ(g->nodes.back(), 1000.0);  // exact, not within rounding
  EXPECT_EQ(g->N, 3);
  EXPECT_DOUBLE_EQ(g->r_lin, 5.0);
  // uniform quarter
  const double h = 5.0 / 100.0;
  for (std::size_t i = 0; i + 1 <= 100; ++i)
    EXPECT_NEAR(g->nodes[i + 1] - g->nodes[i], h, 1e-12);
  // geometric remainder
  EXPECT_NEAR(g->ratio, std::pow(200.0, 1.0 / 300.0), 1e-14);
  for (std::size_t i = 101; i + 1 < g->nodes.size(); ++i)
    EXPECT_NEAR(g->nodes[i + 1] / g->nodes[i], g->ratio, 1e-9);
}

TEST(Grid, MakeGridRejects) {
  EXPECT_THROW(make_grid(1000.0, 32, 5.0, 3), InvalidArgument);
  EXPECT_THROW(make_grid(4.0, 400, 5.0, 3), InvalidArgument);
  EXPECT_THROW(make_grid(1000.0, 400, 0.0, 3), InvalidArgument);
  EXPECT_THROW(make_grid(1000.0, 400, 5.0, 2), InvalidArgument);
}

TEST(Grid, MakeGridPropertySweep) {
  std::mt19937 rng(20240817);
  std::uniform_real_distribution<double> uR(50.0, 5000.0);
  std::uniform_real_distribution<double> ul(0.5, 20.0);
  std::uniform_int_distribution<int> uM(64, 3000);
  for (int trial = 0; trial < 50; ++trial) {
    const double Rmax = uR(rng), r_lin = ul(rng);
    const std::size_t M = std::size_t(uM(rng));
    const GridPtr g = make_grid(Rmax, M, r_lin, 3 + trial % 5);
    ASSERT_EQ(g->nodes.size(), M + 1);
    EXPECT_EQ(g->nodes.front(), 0.0);
    EXPECT_EQ(g->nodes.back(), Rmax);
    for (std::size_t i = 0; i + 1 < g->nodes.size(); ++i)
      ASSERT_LT(g->nodes[i], g->nodes[i + 1]) << "trial " << trial << " node " << i;
  }
}

TEST(Grid, GridFromNodesRoundTrip) {
  const GridPtr g = make_grid(100.0, 128, 2.0, 4);
  const GridPtr h = grid_from_nodes(g->nodes, 4);
  EXPECT_EQ(h->nodes, g->nodes);
  EXPECT_EQ(h->ratio, 0.0);  // raw-node grids carry no ratio
  EXPECT_THROW(grid_from_nodes({0.0, 1.0, 1.0, 2.0}, 3), InvalidArgument);
}

TEST(Field, ValidateRejectsBadFields) {
  const GridPtr g = make_grid(100.0, 64, 2.0, 3);
  RadialField f = power_law_field(g, 4.0);
  EXPECT_NO_THROW(validate_field(f));

  RadialField bad = f;
  bad.values[3] = -1e-9;
  EXPECT_THROW(validate_field(bad), InvalidArgument);

  bad = f;
  bad.values.pop_back();
  EXPECT_THROW(validate_field(bad), InvalidArgument);

  bad = f;
  bad.tail = TailModel::power(4.0, bad.tail.c * 1.001);  // 1e-3 seam gap
  EXPECT_THROW(validate_field(bad), InvalidArgument);

  bad = f;
  bad.tail = TailModel::power(-1.0, 1.0);
  EXPECT_THROW(validate_field(bad), InvalidArgument);
}

TEST(Field, InterpolationIsAccurateAndPositive) {
  const GridPtr g = make_grid(1000.0, 400, 5.0, 3);
  const RadialField f = power_law_field(g, 5.0);
  auto exact = [](double r) { return std::pow(1.0 + r * r, -2.5); };

  double worst = 0;
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> ur(0.0, 1000.0);
  for (int i = 0; i < 2000; ++i) {
    const double r = ur(rng);
    const double v = interpolate(f, r);
    EXPECT_GE(v, 0.0);
    worst = std::max(worst, std::abs(v - exact(r)) / exact(r));
  }
  EXPECT_LT(worst, 2e-4);

  // nodes reproduce exactly; beyond the seam the tail model answers
  EXPECT_DOUBLE_EQ(interpolate(f, g->nodes[57]), f.values[57]);
  EXPECT_DOUBLE_EQ(interpolate(f, 2000.0), f.tail.eval(2000.0));
}

TEST(Field, ResampleAgreesWithFunction) {
  const GridPtr g1 = make_grid(1000.0, 800, 5.0, 3);
  const GridPtr g2 = make_grid(1000.0, 512, 4.0, 3);
  const RadialField f = power_law_field(g1, 5.0);
  const RadialField h = resample(f, g2);
  for (std::size_t i = 0; i < h.size(); i += 7) {
    const double r = g2->nodes[i];
    EXPECT_NEAR(h.values[i], std::pow(1.0 + r * r, -2.5),
                2e-4 * std::pow(1.0 + r * r, -2.5) + 1e-300);
  }
}

TEST(Integral, PowerLawWithTailOracle) {
  // 4 pi int r^2 (1+r^2)^{-5/2} dr = 4 pi / 3
  const GridPtr g = make_grid(1000.0, 800, 5.0, 3);
  const RadialField f = power_law_field(g, 5.0);
  const IntegralValue v = volume_integral(f);
  ASSERT_FALSE(v.divergent);
  EXPECT_NEAR(v.value, 4.0 * kPi / 3.0, 1e-4 * 4.0 * kPi / 3.0);
}

TEST(Integral, GaussianMassOracle) {
  const GridPtr g = make_grid(1000.0, 800, 5.0, 3);
  const RadialField f = sample_field(
      g, [](double r) { return std::exp(-r * r); }, TailModel::none());
  const IntegralValue v = volume_integral(f);
  ASSERT_FALSE(v.divergent);
  EXPECT_NEAR(v.value, std::pow(kPi, 1.5), 1e-5 * std::pow(kPi, 1.5));
}

TEST(Integral, DivergenceByTailExponent) {
  const GridPtr g = make_grid(1000.0, 200, 5.0, 3);
  // p = N: logarithmically divergent
  EXPECT_TRUE(volume_integral(power_law_field(g, 3.0)).divergent);
  // p slightly above N: finite
  EXPECT_FALSE(volume_integral(power_law_field(g, 3.5)).divergent);
  // zero-coefficient tail never contributes
  RadialField f = power_law_field(g, 3.0);
  f.values.assign(f.values.size(), 0.0);
  f.tail = TailModel::power(3.0, 0.0);
  EXPECT_FALSE(volume_integral(f).divergent);
}

TEST(Integral, ScalesLinearly) {
  const GridPtr g = make_grid(500.0, 256, 5.0, 4);
  const RadialField f = power_law_field(g, 6.0);
  RadialField h = f;
  for (double& v : h.values) v *= 3.5;
  h.tail.c *= 3.5;
  EXPECT_NEAR(volume_integral(h).value, 3.5 * volume_integral(f).value,
              1e-12 * volume_integral(h).value);
}

TEST(Distance, MemberPairL1Oracle) {
  // continuum value of the member-pair L1 gap at (N,m) = (3,0.2), k = 1 vs 2
  const ProblemParams p = derive_params(3, 0.2, 1.0);
  const GridPtr g = make_grid(1000.0, 800, 5.0, 3);
  const RadialField b1 = rescaled_barenblatt_field(p, 1.0, g);
  const RadialField b2 = rescaled_barenblatt_field(p, 2.0, g);
  const IntegralValue d = l1_distance(b1, b2);
  ASSERT_FALSE(d.divergent);
  EXPECT_NEAR(d.value, 0.762030703999757, 1e-3);
}

TEST(Distance, MemberPairPlainL1DivergesWhenMassesDiffer) {
  // leading tails cancel, the next-order law decays like r^{-(2q+2)} with
  // 2q+2 <= N: the plain metric does not exist for this pair
  const ProblemParams p = derive_params(6, 0.4, 1.0);
  const GridPtr g = make_grid(1000.0, 600, 5.0, 6);
  const RadialField b1 = rescaled_barenblatt_field(p, 1.0, g);
  const RadialField b2 = rescaled_barenblatt_field(p, 2.0, g);
  EXPECT_TRUE(l1_distance(b1, b2).divergent);
  // and the alpha-weighted metric is still log-divergent for the member pair
  EXPECT_TRUE(weighted_l1_distance(b1, b2, p, 1.0).divergent);
}

TEST(Distance, WeightedMetricFiniteForLocalizedDifference) {
  const ProblemParams p = derive_params(6, 0.4, 1.0);
  const GridPtr g = make_grid(1000.0, 600, 5.0, 6);
  const RadialField b = rescaled_barenblatt_field(p, 1.0, g);
  RadialField u = b;
  for (std::size_t i = 0; i < u.size(); ++i)
    u.values[i] *= 1.0 + 0.2 * std::exp(-g->nodes[i] * g->nodes[i]);
  const IntegralValue w = weighted_l1_distance(u, b, p, 1.0);
  ASSERT_FALSE(w.divergent);
  EXPECT_GT(w.value, 0.0);
  const IntegralValue plain = l1_distance(u, b);
  ASSERT_FALSE(plain.divergent);
  EXPECT_GT(plain.value, 0.0);
}

TEST(Distance, ContractionWeightShape) {
  const ProblemParams p = derive_params(6, 0.4, 1.0);
  const RadialWeight wt = contraction_weight(p, 1.0);
  const double a = p.weight_alpha * p.q();
  EXPECT_NEAR(wt.w(0.0), std::pow(p.Cstar, a), 1e-14);
  EXPECT_NEAR(wt.tail_p, 2.0 * a, 1e-14);
  EXPECT_NEAR(wt.w(10.0), std::pow(p.Cstar / 101.0, a), 1e-14);
  // low dimension: alpha < 0, the weight grows with radius
  const ProblemParams p3 = derive_params(3, 0.2, 1.0);
  const RadialWeight w3 = contraction_weight(p3, 1.0);
  EXPECT_GT(w3.w(10.0), w3.w(1.0));
}

TEST(Distance, SupIncludesTailGap) {
  const GridPtr g = make_grid(1000.0, 200, 5.0, 3);
  RadialField f = power_law_field(g, 5.0);
  RadialField h = f;  // same nodes, tail coefficient off by 3%
  h.values.back() *= 1.03;
  h.tail.c *= 1.03;
  const double s = sup_distance(f, h);
  EXPECT_GT(s, 0.0);
  EXPECT_NEAR(s, 0.03 * f.values.back(), 0.05 * 0.03 * f.values.back());
}

TEST(TailFit, RecoversExponent) {
  const GridPtr g = make_grid(1000.0, 400, 5.0, 3);
  const RadialField f = power_law_field(g, 5.0);
  EXPECT_NEAR(fit_tail_exponent(f, 100.0), 5.0, 0.02);
  EXPECT_THROW(fit_tail_exponent(f, 999.0), InvalidArgument);
}

TEST(Newtonian, GaussianOracleAndDecayBound) {
  const GridPtr g = make_grid(1000.0, 800, 5.0, 3);
  const RadialField f = sample_field(
      g, [](double r) { return std::exp(-r * r); }, TailModel::none());
  const RadialField Z = newtonian_potential(f);
  const double mass = volume_integral(f).value;

  // independently integrated oracle at r = 2
  const double z2 = interpolate(Z, 2.0);
  EXPECT_NEAR(z2, 0.2205203476906054, 1e-4 * 0.22);

  // classical envelope: Z(r) <= mass / (area (N-2) r^{N-2}), exact discretely
  const double area = sphere_area(3);
  for (std::size_t i = 0; i < Z.size(); ++i) {
    const double r = g->nodes[i];
    if (r < 1.0) continue;
    EXPECT_LE(Z.values[i], mass / (area * r) * (1.0 + 1e-9)) << "r=" << r;
  }
  // far field saturates the point-mass law
  EXPECT_NEAR(Z.values.back() * area * g->back(), mass, 1e-6 * mass);
}
