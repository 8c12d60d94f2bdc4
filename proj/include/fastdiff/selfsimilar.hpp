#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "fastdiff/errors.hpp"
#include "fastdiff/grid.hpp"
#include "fastdiff/ode.hpp"
#include "fastdiff/params.hpp"

namespace fastdiff {

// One anomalous similarity solution (T*-t)^{alpha_ss} f(r (T*-t)^{-theta}).
// The pair (theta, alpha_ss) is tied by alpha_ss (1-m) = 1 - 2 theta.
struct SelfSimilarSpec {
  double theta = 0;
  double alpha_ss = 0;
  double lambda = 1;
  double Tstar = 1;
  RadialField profile;
};

inline double alpha_ss_of_theta(const ProblemParams& p, double theta) {
  return (1.0 - 2.0 * theta) / (1.0 - p.m);
}

inline void check_selfsimilar_spec(const SelfSimilarSpec& s, const ProblemParams& p) {
  if (std::abs(s.alpha_ss * (1.0 - p.m) - (1.0 - 2.0 * s.theta)) > 1e-12)
    throw InvalidArgument("selfsimilar spec: alpha_ss inconsistent with theta");
  if (!(s.theta > theta_lower_bound(p)) || !(s.theta < theta_upper_bound(p)))
    throw InvalidArgument("selfsimilar spec: theta outside the admissible interval");
  if (!(s.lambda > 0)) throw InvalidArgument("selfsimilar spec: lambda must be > 0");
}

// Profile equation residual:
//   (f^m)'' + (N-1)/eta (f^m)' - theta eta f' + alpha_ss f = 0,
// with the axis limit N (f^m)'' + alpha_ss f.  The caller supplies analytic
// derivatives of f and f^m through the same bundle used for residual checks.
struct ProfileDerivatives {
  std::function<double(double)> f;      // f(eta)
  std::function<double(double)> f_e;    // f'
  std::function<double(double)> fm_e;   // (f^m)'
  std::function<double(double)> fm_ee;  // (f^m)''
};

inline double profile_ode_residual(const ProfileDerivatives& d, const ProblemParams& p,
                                   double theta, double eta) {
  if (!(eta >= 0)) throw InvalidArgument("profile_ode_residual: eta must be >= 0");
  const double a = alpha_ss_of_theta(p, theta);
  if (eta == 0.0) return p.N * d.fm_ee(0.0) + a * d.f(0.0);
  return d.fm_ee(eta) + (p.N - 1) / eta * d.fm_e(eta) - theta * eta * d.f_e(eta) + a * d.f(eta);
}

// Explicit fast-decay profile for the conformal exponent m = (N-2)/(N+2):
//   f(eta; lambda) = (K_N lambda / (lambda^2 + eta^2))^{(N+2)/2},
// K_N = 2 sqrt(N(N-2)/(N+2)) — the unique constant making the residual vanish
// with theta = 0 (checked against the substitution oracle in the tests).
inline double yamabe_K(int N) { return 2.0 * std::sqrt(double(N) * (N - 2) / (N + 2)); }

inline double yamabe_profile(int N, double lambda, double eta) {
  if (!(lambda > 0)) throw InvalidArgument("yamabe_profile: lambda must be > 0");
  const double K = yamabe_K(N);
  return std::pow(K * lambda / (lambda * lambda + eta * eta), 0.5 * (N + 2));
}

// Analytic derivative bundle for the explicit profile (m = (N-2)/(N+2), so
// f^m = (K lambda / (lambda^2 + eta^2))^{(N-2)/2}).
inline ProfileDerivatives yamabe_profile_derivatives(int N, double lambda) {
  const double K = yamabe_K(N);
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

// Sampled explicit profile with its power tail ((N+2) = (N-2)/m at the
// conformal exponent); seam node reconciled to the tail model.
inline RadialField yamabe_profile_field(int N, double lambda, GridPtr g) {
  RadialField f;
  f.grid = std::move(g);
  f.values.reserve(f.grid->size());
  for (double e : f.grid->nodes) f.values.push_back(yamabe_profile(N, lambda, e));
  const double K = yamabe_K(N);
  f.tail = TailModel::power(double(N + 2), std::pow(K * lambda, 0.5 * (N + 2)));
  f.values.back() = f.tail.eval(f.grid->back());
  validate_field(f);
  return f;
}

// lambda-scaling map: f(eta; lambda) = lambda^{-2/(1-m)} f(eta/lambda; 1).
// Applied to a sampled profile by mapping its nodes, which keeps it exact.
inline RadialField scale_profile(const RadialField& f_at_1, const ProblemParams& p, double lambda) {
  if (!(lambda > 0)) throw InvalidArgument("scale_profile: lambda must be > 0");
  const double amp = std::pow(lambda, -2.0 / (1.0 - p.m));
  RadialField out;
  std::vector<double> eta(f_at_1.grid->nodes);
  for (double& e : eta) e *= lambda;
  out.grid = grid_from_nodes(std::move(eta), f_at_1.grid->N);
  out.values.reserve(f_at_1.values.size());
  for (double v : f_at_1.values) out.values.push_back(amp * v);
  if (f_at_1.tail.is_power())
    out.tail = TailModel::power(f_at_1.tail.p, f_at_1.tail.c * amp * std::pow(lambda, f_at_1.tail.p));
  return out;
}

// ---------------------------------------------------------------------------
// Shooting
// ---------------------------------------------------------------------------

namespace detail {

// State is (f, g) with g = (f^m)'; f' = g f^{1-m} / m keeps the system regular
// wherever f > 0.  Integration starts off-axis on the series
// f = f0 - alpha_ss f0^{2-m} / (2 m N) eta^2, which clears the (N-1)/eta pole.
struct ShotResult {
  std::vector<double> eta;
  std::vector<double> f;
  bool hit_zero = false;
};

inline ShotResult shoot_raw(const ProblemParams& p, double theta, double f0, double eta_max) {
  const double a = alpha_ss_of_theta(p, theta);
  const double m = p.m;
  const int N = p.N;
  const double cap = 1e6 * f0;

  const double eta0 = 1e-4;
  const double f2 = -a * std::pow(f0, 2.0 - m) / (2.0 * m * N);
  std::array<double, 2> y = {f0 + f2 * eta0 * eta0, 2.0 * m * std::pow(f0, m - 1.0) * f2 * eta0};

  ShotResult out;
  out.eta.push_back(0.0);
  out.f.push_back(f0);

  const auto rhs = [&, a, m, N, theta](double e, const std::array<double, 2>& s) {
    const double f = std::max(s[0], 1e-300);
    const double fp = s[1] * std::pow(f, 1.0 - m) / m;
    return std::array<double, 2>{fp, -(N - 1) / e * s[1] + theta * e * fp - a * f};
  };
  OdeOptions<2> opt;
  opt.rtol = 1e-10;
  opt.atol = 1e-30;
  opt.h_init = 1e-6;
  opt.h_max = 0.25;
  integrate_dp45<2>(
      rhs, y, eta0, eta_max, opt, [&](double e, const std::array<double, 2>& s) {
        if (s[0] > cap) throw Blowup("shoot_profile: profile exceeded 1e6 x f(0)");
        if (s[0] <= 0.0) {
          out.hit_zero = true;
          return OdeFlow::Stop;
        }
        if (e > out.eta.back()) {
          out.eta.push_back(e);
          out.f.push_back(s[0]);
        }
        return OdeFlow::Continue;
      });
  return out;
}

}  // namespace detail

// Integrate the profile equation from the axis with f(0)=f0, f'(0)=0.
// Throws Blowup on the runaway side; a shot that touches zero is truncated at
// the last positive sample.
inline RadialField shoot_profile(const ProblemParams& p, double theta, double f0, double eta_max) {
  if (!(f0 > 0)) throw InvalidArgument("shoot_profile: f0 must be > 0");
  if (!(theta > theta_lower_bound(p)) || !(theta < theta_upper_bound(p)))
    throw InvalidArgument("shoot_profile: theta outside the admissible interval");
  detail::ShotResult s = detail::shoot_raw(p, theta, f0, eta_max);
  if (s.eta.size() < 8) throw Error("shoot_profile: trajectory too short to represent");
  RadialField f;
  f.grid = grid_from_nodes(std::move(s.eta), p.N);
  f.values = std::move(s.f);
  f.tail = TailModel::none();
  return f;
}

// Tail label of one shot, for the eigenvalue bisection.
enum class ShotClass { SlowTail, FastTail, HitZero };

namespace detail {

struct ShotSlope {
  bool hit_zero = false;
  bool too_short = false;
  double slope = 0;
};

inline ShotSlope shot_slope(const ProblemParams& p, double theta, double f0, double eta_max) {
  ShotResult s = shoot_raw(p, theta, f0, eta_max);
  if (s.hit_zero) return {true, false, 0};
  // log-log slope over the outer decade
  const double r_min = 0.1 * s.eta.back();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.eta.size(); ++i) {
    if (s.eta[i] < r_min || s.f[i] <= 0) continue;
    const double X = std::log(s.eta[i]), Y = std::log(s.f[i]);
    sx += X; sy += Y; sxx += X * X; sxy += X * Y;
    ++n;
  }
  if (n < 10) return {false, true, 0};
  return {false, false, -(double(n) * sxy - sx * sy) / (double(n) * sxx - sx * sx)};
}

}  // namespace detail

inline ShotClass classify_shot(const ProblemParams& p, double theta, double f0, double eta_max) {
  const detail::ShotSlope s = detail::shot_slope(p, theta, f0, eta_max);
  if (s.hit_zero || s.too_short) return ShotClass::HitZero;
  const double generic = 2.0 / (1.0 - p.m);
  const double fast = (p.N - 2) / p.m;
  return s.slope >= 0.5 * (generic + fast) ? ShotClass::FastTail : ShotClass::SlowTail;
}

// Bisection for the anomalous exponent: below theta* the tail relaxes to the
// generic 2/(1-m) law, at and above it the profile decays at (N-2)/m or
// crosses zero.  The high/low test is the fitted outer slope against the fast
// exponent itself — near theta* the slope passes through it monotonically,
// which is what lets the bisection resolve far below the window truncation.
inline double find_anomalous_theta(const ProblemParams& p, double f0, double eta_max = 400.0) {
  if ((p.N - 2) / p.m - 2.0 / (1.0 - p.m) <= 0.5)
    throw InvalidArgument("find_anomalous_theta: candidate tail exponents too close to separate");
  const double inset = 1e-6;
  double lo = theta_lower_bound(p) + inset;
  double hi = theta_upper_bound(p) - inset;
  const double fast = (p.N - 2) / p.m;
  const auto is_high = [&](double th) {
    try {
      const detail::ShotSlope s = detail::shot_slope(p, th, f0, eta_max);
      return s.hit_zero || s.too_short || s.slope >= fast;
    } catch (const Blowup&) {
      return true;
    }
  };
  if (is_high(lo) || !is_high(hi))
    throw NoSignChange("find_anomalous_theta: classification does not flip on the interval");
  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    (is_high(mid) ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace fastdiff
