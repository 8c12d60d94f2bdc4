#pragma once

#include <array>
#include <cmath>
#include <functional>

#include "fastdiff/errors.hpp"

namespace fastdiff {

// Dormand–Prince 5(4) adaptive integrator for small systems.  Stops on
// x_end or when the observer asks to; the observer sees every accepted step.
template <std::size_t K>
struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-14;
  double h_init = 1e-6;
  double h_max = 1.0;
};

enum class OdeFlow { Continue, Stop };

template <std::size_t K>
void integrate_dp45(const std::function<std::array<double, K>(double, const std::array<double, K>&)>& rhs,
                    std::array<double, K> y, double x, double x_end, const OdeOptions<K>& opt,
                    const std::function<OdeFlow(double, const std::array<double, K>&)>& observe) {
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                          e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

  if (observe(x, y) == OdeFlow::Stop) return;
  double h = opt.h_init;
  auto k1 = rhs(x, y);
  int rejects_in_a_row = 0;
  while (x < x_end) {
    h = std::min(h, std::min(opt.h_max, x_end - x));
    std::array<double, K> t;

    for (std::size_t i = 0; i < K; ++i) t[i] = y[i] + h * a21 * k1[i];
    auto k2 = rhs(x + h / 5, t);
    for (std::size_t i = 0; i < K; ++i) t[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    auto k3 = rhs(x + 3 * h / 10, t);
    for (std::size_t i = 0; i < K; ++i) t[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    auto k4 = rhs(x + 4 * h / 5, t);
    for (std::size_t i = 0; i < K; ++i)
      t[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    auto k5 = rhs(x + 8 * h / 9, t);
    for (std::size_t i = 0; i < K; ++i)
      t[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    auto k6 = rhs(x + h, t);
    std::array<double, K> ynew;
    for (std::size_t i = 0; i < K; ++i)
      ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    auto k7 = rhs(x + h, ynew);

    double err = 0;
    for (std::size_t i = 0; i < K; ++i) {
      const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      err = std::max(err, std::abs(e) / sc);
    }
    if (err <= 1.0 || h <= 1e-14 * std::max(1.0, std::abs(x))) {
      x += h;
      y = ynew;
      k1 = k7;  // first-same-as-last
      rejects_in_a_row = 0;
      if (observe(x, y) == OdeFlow::Stop) return;
    } else if (++rejects_in_a_row > 200) {
      throw Error("integrate_dp45: step control stalled");
    }
    const double fac = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    h *= std::min(5.0, std::max(0.2, fac));
  }
}

}  // namespace fastdiff
