#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <vector>

#include "fastdiff/ode.hpp"

using namespace fastdiff;

TEST(Ode, ExponentialDecay) {
  const std::function<std::array<double, 1>(double, const std::array<double, 1>&)> rhs =
      [](double, const std::array<double, 1>& y) { return std::array<double, 1>{-y[0]}; };
  double last_x = -1.0;
  std::array<double, 1> last_y{0.0};
  const std::function<OdeFlow(double, const std::array<double, 1>&)> obs =
      [&](double x, const std::array<double, 1>& y) {
        last_x = x;
        last_y = y;
        return OdeFlow::Continue;
      };
  integrate_dp45<1>(rhs, {1.0}, 0.0, 5.0, {}, obs);
  EXPECT_DOUBLE_EQ(last_x, 5.0);
  EXPECT_NEAR(last_y[0], std::exp(-5.0), 1e-9 * std::exp(-5.0));
}

TEST(Ode, HarmonicOscillatorEnergy) {
  const std::function<std::array<double, 2>(double, const std::array<double, 2>&)> rhs =
      [](double, const std::array<double, 2>& y) { return std::array<double, 2>{y[1], -y[0]}; };
  std::array<double, 2> last{0.0, 0.0};
  const std::function<OdeFlow(double, const std::array<double, 2>&)> obs =
      [&](double, const std::array<double, 2>& y) {
        last = y;
        // energy is conserved along the whole trajectory, not just at the end
        EXPECT_NEAR(y[0] * y[0] + y[1] * y[1], 1.0, 1e-8);
        return OdeFlow::Continue;
      };
  const double x_end = 8.0 * std::atan(1.0);  // one full period
  integrate_dp45<2>(rhs, {1.0, 0.0}, 0.0, x_end, {}, obs);
  EXPECT_NEAR(last[0], 1.0, 1e-8);
  EXPECT_NEAR(last[1], 0.0, 1e-8);
}

TEST(Ode, ObserverSeesMonotoneStepsAndCanStop) {
  const std::function<std::array<double, 1>(double, const std::array<double, 1>&)> rhs =
      [](double, const std::array<double, 1>& y) { return std::array<double, 1>{y[0]}; };
  std::vector<double> xs;
  const std::function<OdeFlow(double, const std::array<double, 1>&)> obs =
      [&](double x, const std::array<double, 1>& y) {
        xs.push_back(x);
        return y[0] >= 2.0 ? OdeFlow::Stop : OdeFlow::Continue;
      };
  integrate_dp45<1>(rhs, {1.0}, 0.0, 10.0, {}, obs);
  ASSERT_GE(xs.size(), 3u);
  for (std::size_t i = 1; i < xs.size(); ++i) EXPECT_GT(xs[i], xs[i - 1]);
  // stopped once y crossed 2, long before x_end
  EXPECT_LT(xs.back(), 1.0);
  EXPECT_GT(xs.back(), std::log(2.0) - 0.2);
}

TEST(Ode, ToleranceControlsAccuracy) {
  const std::function<std::array<double, 1>(double, const std::array<double, 1>&)> rhs =
      [](double x, const std::array<double, 1>&) { return std::array<double, 1>{std::cos(x)}; };
  const auto solve = [&](double rtol) {
    double end_val = 0.0;
    OdeOptions<1> opt;
    opt.rtol = rtol;
    opt.atol = 1e-16;
    const std::function<OdeFlow(double, const std::array<double, 1>&)> obs =
        [&](double, const std::array<double, 1>& y) {
          end_val = y[0];
          return OdeFlow::Continue;
        };
    integrate_dp45<1>(rhs, {0.0}, 0.0, 1.0, opt, obs);
    return std::abs(end_val - std::sin(1.0));
  };
  const double loose = solve(1e-4);
  const double tight = solve(1e-12);
  EXPECT_LT(tight, 1e-11);
  EXPECT_LT(tight, loose + 1e-16);
}
