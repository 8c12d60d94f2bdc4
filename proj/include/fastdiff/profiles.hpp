#pragma once

#include <cmath>
#include <functional>

#include "fastdiff/errors.hpp"
#include "fastdiff/grid.hpp"
#include "fastdiff/params.hpp"

namespace fastdiff {

// ---------------------------------------------------------------------------
// Closed-form vanishing solutions
// ---------------------------------------------------------------------------

// B_k(r,t) = (Cstar (T-t) / (k (T-t)^{2 gamma} + r^2))^{1/(1-m)}, 0 for t >= T.
// Decreasing in r, in k, and in t on [0,T).
inline double eval_barenblatt(const ProblemParams& p, const BarenblattSpec& b, double r, double t) {
  if (!(r >= 0)) throw InvalidArgument("eval_barenblatt: r must be >= 0");
  if (t >= b.T) return 0.0;
  const double s = b.T - t;
  const double denom = b.k * std::pow(s, 2.0 * p.gamma) + r * r;
  return std::pow(p.Cstar * s / denom, p.q());
}

// Fixed-frame profile: (Cstar/(k + y^2))^{1/(1-m)}; the stationary state of the
// rescaled flow.  Tail exponent 2/(1-m), coefficient Cstar^{1/(1-m)} (k-free).
inline double eval_rescaled_barenblatt(const ProblemParams& p, double k, double y) {
  if (!(k > 0)) throw InvalidArgument("eval_rescaled_barenblatt: k must be > 0");
  if (!(y >= 0)) throw InvalidArgument("eval_rescaled_barenblatt: y must be >= 0");
  return std::pow(p.Cstar / (k + y * y), p.q());
}

// Sampled fields with their exact far-field models.  The tail coefficient is
// the asymptotic one, shared by every member of the family, so that member
// differences cancel at leading order; the seam node is reconciled to the
// tail model (the ~k/Rmax^2 mismatch there is the price of a sharp seam).
inline RadialField barenblatt_field(const ProblemParams& p, const BarenblattSpec& b, GridPtr g, double t) {
  const double q = p.q();
  RadialField f;
  f.grid = std::move(g);
  f.values.reserve(f.grid->size());
  for (double r : f.grid->nodes) f.values.push_back(eval_barenblatt(p, b, r, t));
  if (t < b.T) {
    f.tail = TailModel::power(2.0 * q, std::pow(p.Cstar * (b.T - t), q));
    f.values.back() = f.tail.eval(f.grid->back());
  }
  validate_field(f);
  return f;
}

inline RadialField rescaled_barenblatt_field(const ProblemParams& p, double k, GridPtr g) {
  const double q = p.q();
  RadialField f;
  f.grid = std::move(g);
  f.values.reserve(f.grid->size());
  for (double y : f.grid->nodes) f.values.push_back(eval_rescaled_barenblatt(p, k, y));
  f.tail = TailModel::power(2.0 * q, std::pow(p.Cstar, q));
  f.values.back() = f.tail.eval(f.grid->back());
  validate_field(f);
  return f;
}

// ---------------------------------------------------------------------------
// Analytic derivative bundle and PDE residual
// ---------------------------------------------------------------------------

// Radial space-time profile with hand-coded derivatives of itself and of its
// m-th power, for residual checks that must reach round-off accuracy.
struct AnalyticProfile {
  std::function<double(double, double)> u;      // u(r,t)
  std::function<double(double, double)> wm_r;   // d/dr u^m
  std::function<double(double, double)> wm_rr;  // d2/dr2 u^m
  std::function<double(double, double)> u_t;    // d/dt u
};

// Fully hand-differentiated closed-form solution.  Exercised at round-off
// level by the residual tests, so every exponent here is load-bearing.
inline AnalyticProfile barenblatt_analytic(const ProblemParams& p, const BarenblattSpec& b) {
  const double q = p.q();
  const double mq = p.m * q;
  const double C = p.Cstar, k = b.k, T = b.T, g2 = 2.0 * p.gamma;
  AnalyticProfile ap;
  ap.u = [=](double r, double t) {
    if (t >= T) return 0.0;
    const double s = T - t;
    return std::pow(C * s / (k * std::pow(s, g2) + r * r), q);
  };
  // u^m = (C s)^{mq} D^{-mq},  D = k s^{2 gamma} + r^2
  ap.wm_r = [=](double r, double t) {
    if (t >= T) return 0.0;
    const double s = T - t;
    const double D = k * std::pow(s, g2) + r * r;
    return std::pow(C * s, mq) * (-mq) * std::pow(D, -mq - 1.0) * 2.0 * r;
  };
  ap.wm_rr = [=](double r, double t) {
    if (t >= T) return 0.0;
    const double s = T - t;
    const double D = k * std::pow(s, g2) + r * r;
    return std::pow(C * s, mq) * (-2.0 * mq) * std::pow(D, -mq - 2.0) *
           (D - (mq + 1.0) * 2.0 * r * r);
  };
  ap.u_t = [=](double r, double t) {
    if (t >= T) return 0.0;
    const double s = T - t;
    const double D = k * std::pow(s, g2) + r * r;
    const double dD_dt = -g2 * k * std::pow(s, g2 - 1.0);
    // u = (C s)^q D^{-q};  du/dt = q (C s)^{q-1} (-C) D^{-q} + (C s)^q (-q) D^{-q-1} dD/dt
    return -q * C * std::pow(C * s, q - 1.0) * std::pow(D, -q) -
           q * std::pow(C * s, q) * std::pow(D, -q - 1.0) * dD_dt;
  };
  return ap;
}

// residual = u_t - r^{1-N} (r^{N-1} (u^m)_r)_r
//          = u_t - (u^m)_rr - (N-1)/r (u^m)_r,   with the r=0 limit N (u^m)_rr.
inline double pde_residual(const AnalyticProfile& ap, const ProblemParams& p, double r, double t) {
  if (!(r >= 0)) throw InvalidArgument("pde_residual: r must be >= 0");
  if (r == 0.0) return ap.u_t(0.0, t) - double(p.N) * ap.wm_rr(0.0, t);
  return ap.u_t(r, t) - ap.wm_rr(r, t) - (p.N - 1) / r * ap.wm_r(r, t);
}

// Centered-difference variant for profiles supplied as a bare callable;
// O(h^2) in both arguments.
inline double pde_residual_fd(const std::function<double(double, double)>& u,
                              const ProblemParams& p, double r, double t, double h) {
  if (!(h > 0)) throw InvalidArgument("pde_residual_fd: h must be > 0");
  if (!(r == 0.0 || r >= h)) throw InvalidArgument("pde_residual_fd: need r = 0 or r >= h");
  const auto wm = [&](double rr, double tt) { return std::pow(u(std::abs(rr), tt), p.m); };
  const double u_t = (u(r, t + h) - u(r, t - h)) / (2.0 * h);
  const double wm_rr = (wm(r + h, t) - 2.0 * wm(r, t) + wm(r - h, t)) / (h * h);
  if (r == 0.0) return u_t - double(p.N) * wm_rr;
  const double wm_r = (wm(r + h, t) - wm(r - h, t)) / (2.0 * h);
  return u_t - wm_rr - (p.N - 1) / r * wm_r;
}

// ---------------------------------------------------------------------------
// Mass-matching selector
// ---------------------------------------------------------------------------

namespace detail {

// Signed analogue of difference_tail for integrands that may change sign: the
// coefficient keeps its sign, and consistency is judged on the signed samples.
inline TailModel signed_difference_tail(const RadialField& f, const RadialField& g) {
  const TailModel& a = f.tail;
  const TailModel& b = g.tail;
  const bool ap = a.is_power() && a.c != 0, bp = b.is_power() && b.c != 0;
  if (!ap && !bp) return TailModel::none();
  if (ap && !bp) return a;
  if (!ap && bp) return TailModel::power(b.p, -b.c);
  const double tol = 1e-9;
  if (std::abs(a.p - b.p) > tol * std::max(a.p, b.p))
    return a.p < b.p ? a : TailModel::power(b.p, -b.c);
  const double p = 0.5 * (a.p + b.p);
  const double ctol = 1e-5;  // below truncation accuracy: same asymptotic line
  if (std::abs(a.c - b.c) > ctol * std::max(std::abs(a.c), std::abs(b.c)))
    return TailModel::power(p, a.c - b.c);
  // seam node excluded: reconciled to the tail model, no next-order signal
  const auto& r = f.grid->nodes;
  const double Rcut = 0.08 * r.back();
  std::vector<double> d;
  for (std::size_t i = 0; i + 1 < r.size(); ++i)
    if (r[i] >= Rcut) d.push_back((f.values[i] - g.values[i]) * std::pow(r[i], p + 2));
  if (d.size() < 6) {
    const std::size_t n = std::min<std::size_t>(6, r.size() - 1);
    d.clear();
    for (std::size_t i = r.size() - 1 - n; i + 1 < r.size(); ++i)
      d.push_back((f.values[i] - g.values[i]) * std::pow(r[i], p + 2));
  }
  std::vector<double> sorted = d;
  std::sort(sorted.begin(), sorted.end());
  const double med = sorted[sorted.size() / 2];
  if (std::abs(med) <= 1e-300) return TailModel::power(p + 2, 0.0);
  double lo = 1e300, hi = 0;
  for (double x : d) {
    if (x * med <= 0) return TailModel::none();  // sign flips: no consistent law
    lo = std::min(lo, std::abs(x));
    hi = std::max(hi, std::abs(x));
  }
  if (hi / lo > 4.0) return TailModel::none();
  return TailModel::power(p + 2, med);
}

}  // namespace detail

// Signed mass mismatch F(k) = integral of (u0 - B_k(.,0)) including the
// cancellation tail; strictly increasing in k on trapped data.
inline IntegralValue mass_mismatch(const RadialField& u0, const ProblemParams& p, double k) {
  const RadialField Bk = barenblatt_field(p, {k, p.T}, u0.grid, 0.0);
  std::vector<double> diff(u0.values.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = u0.values[i] - Bk.values[i];
  return detail::volume_integral_signed(u0.grid->nodes, diff, u0.grid->N,
                                        detail::signed_difference_tail(u0, Bk), RadialWeight::unit());
}

// Bisection for the member of the family with the same (renormalized) mass as
// u0.  Bracket convention: k_lo >= k_hi, so F(k_hi) <= 0 <= F(k_lo).
inline double find_k0(const RadialField& u0, const ProblemParams& p, double k_lo, double k_hi,
                      double tol_mass = -1.0) {
  if (p.regime != Regime::Integrable)
    throw NonIntegrableRegime("find_k0: mass matching requires the Integrable regime");
  if (!(k_lo >= k_hi) || !(k_hi > 0))
    throw InvalidArgument("find_k0: need k_lo >= k_hi > 0");
  validate_field(u0);

  if (tol_mass <= 0) {
    const RadialField Bhi = barenblatt_field(p, {k_hi, p.T}, u0.grid, 0.0);
    const IntegralValue scale = l1_distance(u0, Bhi);
    if (scale.divergent) throw InvalidArgument("find_k0: |u0 - B_{k_hi}| has divergent mass");
    tol_mass = 1e-8 * scale.value;
  }

  auto F = [&](double k) {
    const IntegralValue v = mass_mismatch(u0, p, k);
    if (v.divergent) throw InvalidArgument("find_k0: mass mismatch diverges at k=" + std::to_string(k));
    return v.value;
  };
  double flo = F(k_hi), fhi = F(k_lo);  // flo at the small-k end
  if (std::abs(flo) <= tol_mass) return k_hi;
  if (std::abs(fhi) <= tol_mass) return k_lo;
  if (flo > 0 || fhi < 0)
    throw NoBracket("find_k0: mass mismatch does not change sign on the bracket");

  double a = k_hi, b = k_lo;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    const double fm = F(mid);
    if (std::abs(fm) <= tol_mass || (b - a) <= 1e-14 * b) return mid;
    if (fm < 0) a = mid; else b = mid;
  }
  return 0.5 * (a + b);
}

}  // namespace fastdiff
