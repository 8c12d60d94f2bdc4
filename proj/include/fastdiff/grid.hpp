#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fastdiff/errors.hpp"
#include "fastdiff/params.hpp"

namespace fastdiff {

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

// Stretched radial grid: uniform spacing on [0, r_lin] (first quarter of the
// intervals), geometric spacing from r_lin to Rmax, last node exactly Rmax.
// Node count is M+1 with nodes[0] = 0 and nodes[M] = Rmax.
struct RadialGrid {
  std::vector<double> nodes;
  int N = 3;          // dimension, for volume weights
  double Rmax = 0;
  double r_lin = 0;   // end of the uniform span
  double ratio = 0;   // geometric ratio beyond r_lin; 0 when constructed from raw nodes

  std::size_t size() const { return nodes.size(); }
  double back() const { return nodes.back(); }
};

using GridPtr = std::shared_ptr<const RadialGrid>;

inline GridPtr make_grid(double Rmax, std::size_t M, double r_lin, int N) {
  if (N < 3) throw InvalidArgument("make_grid: N must be >= 3");
  if (M < 64) throw InvalidArgument("make_grid: need at least 64 intervals, got " + std::to_string(M));
  if (!(Rmax > r_lin) || !(r_lin > 0))
    throw InvalidArgument("make_grid: require Rmax > r_lin > 0");

  auto g = std::make_shared<RadialGrid>();
  g->N = N;
  g->Rmax = Rmax;
  g->r_lin = r_lin;
  const std::size_t Mu = M / 4;           // uniform intervals on [0, r_lin]
  const std::size_t Mg = M - Mu;          // geometric intervals on [r_lin, Rmax]
  g->ratio = std::pow(Rmax / r_lin, 1.0 / double(Mg));
  g->nodes.resize(M + 1);
  for (std::size_t i = 0; i <= Mu; ++i) g->nodes[i] = r_lin * double(i) / double(Mu);
  for (std::size_t j = 1; j <= Mg; ++j) g->nodes[Mu + j] = r_lin * std::pow(g->ratio, double(j));
  g->nodes[M] = Rmax;  // kill the last rounding wobble
  return g;
}

inline GridPtr default_grid(int N) { return make_grid(1000.0, 400, 5.0, N); }

// Grid from externally produced nodes (rescaled frames, shooting output).
// Requires strict monotonicity starting at 0; stretch descriptors stay unset.
inline GridPtr grid_from_nodes(std::vector<double> nodes, int N) {
  if (nodes.size() < 2 || nodes.front() != 0.0)
    throw InvalidArgument("grid_from_nodes: need nodes starting at 0");
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (!(nodes[i] > nodes[i - 1])) throw InvalidArgument("grid_from_nodes: nodes must increase");
  auto g = std::make_shared<RadialGrid>();
  g->N = N;
  g->Rmax = nodes.back();
  g->nodes = std::move(nodes);
  return g;
}

// ---------------------------------------------------------------------------
// Field with far-field model
// ---------------------------------------------------------------------------

// Beyond the last node a field is either negligible (None) or follows the
// power law u(r) ~ c r^{-p}.  c may be negative only in internal difference
// fields; public fields keep c >= 0.
struct TailModel {
  enum class Kind { None, Power } kind = Kind::None;
  double p = 0;
  double c = 0;

  static TailModel none() { return {}; }
  static TailModel power(double p, double c) { return {Kind::Power, p, c}; }
  bool is_power() const { return kind == Kind::Power; }
  double eval(double r) const { return is_power() ? c * std::pow(r, -p) : 0.0; }
};

struct RadialField {
  GridPtr grid;
  std::vector<double> values;
  TailModel tail;

  const std::vector<double>& r() const { return grid->nodes; }
  std::size_t size() const { return values.size(); }
};

inline void validate_field(const RadialField& f) {
  if (!f.grid || f.values.size() != f.grid->nodes.size())
    throw InvalidArgument("field: values/grid size mismatch");
  for (double v : f.values)
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("field: values must be finite and >= 0");
  if (f.tail.is_power()) {
    if (!(f.tail.c >= 0) || !(f.tail.p > 0))
      throw InvalidArgument("field: power tail needs c >= 0 and p > 0");
    const double um = f.values.back();
    const double seam = f.tail.eval(f.grid->back());
    if (std::abs(seam - um) > 1e-6 * std::max(um, 1e-300))
      throw InvalidArgument("field: tail does not meet the last node value (seam gap too large)");
  }
}

// Sample a radial function onto a grid; tail model supplied by the caller.
inline RadialField sample_field(GridPtr g, const std::function<double(double)>& fn, TailModel tail) {
  RadialField f;
  f.grid = std::move(g);
  f.values.reserve(f.grid->size());
  for (double r : f.grid->nodes) f.values.push_back(fn(r));
  f.tail = tail;
  validate_field(f);
  return f;
}

// ---------------------------------------------------------------------------
// Monotone cubic interpolation
// ---------------------------------------------------------------------------

namespace detail {

// Derivative at x[i] of the cubic through four consecutive samples.  Third-order
// accurate, which keeps the limited Hermite interpolant fourth-order on smooth data.
inline double cubic_node_slope(const std::vector<double>& x, const std::vector<double>& y,
                               std::size_t j0, std::size_t i) {
  double d = 0;
  for (std::size_t a = j0; a < j0 + 4; ++a) {
    // L_a'(x_i) for the Lagrange basis on the 4-point stencil
    double s = 0;
    for (std::size_t b = j0; b < j0 + 4; ++b) {
      if (b == a) continue;
      double prod = 1;
      for (std::size_t c = j0; c < j0 + 4; ++c) {
        if (c == a || c == b) continue;
        prod *= (x[i] - x[c]) / (x[a] - x[c]);
      }
      s += prod / (x[a] - x[b]);
    }
    d += y[a] * s;
  }
  return d;
}

// Slope estimate limited so each cell's Hermite cubic stays monotone (box
// criterion: both endpoint slopes in [0, 3] times the secant slope).
inline double limited_slope(const std::vector<double>& x, const std::vector<double>& y, std::size_t i) {
  const std::size_t n = x.size();
  const std::size_t j0 = std::min(std::max<std::ptrdiff_t>(std::ptrdiff_t(i) - 1, 0),
                                  std::ptrdiff_t(n) - 4);
  double d = cubic_node_slope(x, y, std::size_t(j0), i);
  const double dl = i > 0 ? (y[i] - y[i - 1]) / (x[i] - x[i - 1]) : 0;
  const double dr = i + 1 < n ? (y[i + 1] - y[i]) / (x[i + 1] - x[i]) : 0;
  if (i > 0 && i + 1 < n && dl * dr <= 0) return 0;  // local extremum: flat slope, no overshoot
  const double ref = i == 0 ? dr : (i + 1 == n ? dl : (dl > 0 ? std::min(dl, dr) : std::max(dl, dr)));
  if (ref == 0) return 0;
  if (ref > 0) return std::min(std::max(d, 0.0), 3.0 * ref);
  return std::max(std::min(d, 0.0), 3.0 * ref);
}

}  // namespace detail

// Value at radius r: shape-preserving piecewise cubic between nodes (never
// undershoots 0 on nonnegative data), power tail beyond the last node.
inline double interpolate(const RadialField& f, double r) {
  if (!(r >= 0)) throw InvalidArgument("interpolate: r must be >= 0");
  const auto& x = f.grid->nodes;
  const auto& y = f.values;
  if (f.values.size() < 4) throw InvalidArgument("interpolate: need at least 4 nodes");
  if (r >= x.back()) {
    if (r == x.back()) return y.back();
    return f.tail.eval(r);
  }
  const auto it = std::upper_bound(x.begin(), x.end(), r);
  const std::size_t i = std::size_t(it - x.begin()) - 1;
  if (x[i] == r) return y[i];
  const double h = x[i + 1] - x[i];
  const double t = (r - x[i]) / h;
  const double d0 = detail::limited_slope(x, y, i) * h;
  const double d1 = detail::limited_slope(x, y, i + 1) * h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y[i] + (t3 - 2 * t2 + t) * d0 +
         (-2 * t3 + 3 * t2) * y[i + 1] + (t3 - t2) * d1;
}

// Resample onto another grid (values by interpolation, tail carried over).
inline RadialField resample(const RadialField& f, GridPtr g) {
  RadialField out;
  out.grid = std::move(g);
  out.values.reserve(out.grid->size());
  for (double r : out.grid->nodes) out.values.push_back(std::max(0.0, interpolate(f, r)));
  out.tail = f.tail;
  if (out.tail.is_power() && out.values.back() > 0) {
    const double seam = out.tail.eval(out.grid->back());
    if (std::abs(seam - out.values.back()) > 1e-6 * out.values.back())
      out.values.back() = seam;  // keep the seam contract after truncating the domain
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quadrature: N-dimensional volume integrals of radial functions
// ---------------------------------------------------------------------------

// A radial weight with known power-law behavior at infinity, so weighted tail
// contributions stay closed-form:  w(r) ~ tail.c * r^{-tail.p}.
struct RadialWeight {
  std::function<double(double)> w;
  double tail_p = 0;
  double tail_c = 1;

  static RadialWeight unit() {
    return {[](double) { return 1.0; }, 0.0, 1.0};
  }
};

// Integral value that can encode a non-convergent far field.
struct IntegralValue {
  bool divergent = false;
  double value = 0;
};

namespace detail {

// Core signed quadrature: trapezoid with measure area(S^{N-1}) r^{N-1} dr over
// the nodes, plus the closed-form tail piece when it converges.
inline IntegralValue volume_integral_signed(const std::vector<double>& r, const std::vector<double>& v,
                                            int N, const TailModel& tail, const RadialWeight& wt) {
  const double omega = sphere_area(N);
  double acc = 0;
  double prev = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double g = v[i] * wt.w(r[i]) * std::pow(r[i], N - 1);
    if (i > 0) acc += 0.5 * (g + prev) * (r[i] - r[i - 1]);
    prev = g;
  }
  acc *= omega;
  if (tail.is_power() && tail.c != 0) {
    const double p_eff = tail.p + wt.tail_p;
    if (p_eff <= N + 1e-9) return {true, 0};
    const double R = r.back();
    acc += omega * tail.c * wt.tail_c * std::pow(R, double(N) - p_eff) / (p_eff - double(N));
  }
  return {false, acc};
}

}  // namespace detail

inline IntegralValue volume_integral(const RadialField& f,
                                     const std::optional<RadialWeight>& weight = std::nullopt) {
  validate_field(f);
  return detail::volume_integral_signed(f.grid->nodes, f.values, f.grid->N, f.tail,
                                        weight ? *weight : RadialWeight::unit());
}

// ---------------------------------------------------------------------------
// Difference tails and distances
// ---------------------------------------------------------------------------

namespace detail {

// Far-field model of |f-g|.  Distinct exponents: the slower tail wins.  Equal
// exponents with distinct coefficients: same exponent, |delta c|.  Identical
// leading behavior: the cancellation exposes the next-order law c' r^{-(p+2)},
// whose coefficient is estimated from the outer nodes; if those estimates do
// not form a consistent power law the difference decays faster than any power
// we can certify and the tail is dropped (contributes nothing).
inline TailModel difference_tail(const RadialField& f, const RadialField& g) {
  const TailModel& a = f.tail;
  const TailModel& b = g.tail;
  const bool ap = a.is_power() && a.c != 0, bp = b.is_power() && b.c != 0;
  if (!ap && !bp) return TailModel::none();
  if (ap && !bp) return a;
  if (!ap && bp) return b;
  const double tol = 1e-9;
  if (std::abs(a.p - b.p) > tol * std::max(a.p, b.p))
    return a.p < b.p ? a : b;
  const double p = 0.5 * (a.p + b.p);
  // Coefficients agreeing to better than the domain-truncation accuracy
  // (~k/Rmax^2) describe the same asymptotic line; only larger gaps are a
  // genuine same-exponent difference.
  const double ctol = 1e-5;
  if (std::abs(a.c - b.c) > ctol * std::max(std::abs(a.c), std::abs(b.c)))
    return TailModel::power(p, std::abs(a.c - b.c));

  // Equal leading tails: probe the next-order coefficient on the outer nodes.
  // The seam node is excluded — it is reconciled to the tail model by
  // construction, so its difference carries no next-order information.
  const auto& r = f.grid->nodes;
  const double Rcut = 0.08 * r.back();
  std::vector<double> d;
  for (std::size_t i = 0; i + 1 < r.size(); ++i)
    if (r[i] >= Rcut) d.push_back(std::abs(f.values[i] - g.values[i]) * std::pow(r[i], p + 2));
  if (d.size() < 6) {
    const std::size_t n = std::min<std::size_t>(6, r.size() - 1);
    d.clear();
    for (std::size_t i = r.size() - 1 - n; i + 1 < r.size(); ++i)
      d.push_back(std::abs(f.values[i] - g.values[i]) * std::pow(r[i], p + 2));
  }
  std::vector<double> sorted = d;
  std::sort(sorted.begin(), sorted.end());
  const double med = sorted[sorted.size() / 2];
  if (med <= 1e-300) return TailModel::power(p + 2, 0.0);
  if (sorted.back() / std::max(sorted.front(), 1e-300) > 4.0)
    return TailModel::none();  // scattered: faster than the next power law
  return TailModel::power(p + 2, med);
}

inline void require_same_grid(const RadialField& f, const RadialField& g, const char* who) {
  if (f.grid == g.grid) return;
  if (f.grid->nodes != g.grid->nodes || f.grid->N != g.grid->N)
    throw InvalidArgument(std::string(who) + ": fields live on different grids");
}

}  // namespace detail

inline IntegralValue l1_distance(const RadialField& f, const RadialField& g) {
  detail::require_same_grid(f, g, "l1_distance");
  std::vector<double> diff(f.values.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = std::abs(f.values[i] - g.values[i]);
  return detail::volume_integral_signed(f.grid->nodes, diff, f.grid->N,
                                        detail::difference_tail(f, g), RadialWeight::unit());
}

// Weight (Cstar/(k2+r^2))^{weight_alpha/(1-m)}: restores integrability of
// perturbation differences in the non-comparable regime.
inline RadialWeight contraction_weight(const ProblemParams& p, double k2) {
  const double a = p.weight_alpha / (1.0 - p.m);
  const double C = p.Cstar;
  return {[C, k2, a](double r) { return std::pow(C / (k2 + r * r), a); },
          2.0 * a, std::pow(C, a)};
}

inline IntegralValue weighted_l1_distance(const RadialField& f, const RadialField& g,
                                          const ProblemParams& p, double k2) {
  detail::require_same_grid(f, g, "weighted_l1_distance");
  std::vector<double> diff(f.values.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = std::abs(f.values[i] - g.values[i]);
  return detail::volume_integral_signed(f.grid->nodes, diff, f.grid->N,
                                        detail::difference_tail(f, g), contraction_weight(p, k2));
}

inline double sup_distance(const RadialField& f, const RadialField& g) {
  detail::require_same_grid(f, g, "sup_distance");
  double s = 0;
  for (std::size_t i = 0; i < f.values.size(); ++i)
    s = std::max(s, std::abs(f.values[i] - g.values[i]));
  const TailModel dt = detail::difference_tail(f, g);
  if (dt.is_power()) s = std::max(s, std::abs(dt.eval(f.grid->back())));
  return s;
}

// ---------------------------------------------------------------------------
// Tail exponent fit
// ---------------------------------------------------------------------------

// Least-squares slope of log u against log r over [r_min, Rmax].  Needs at
// least 10 positive samples in the window.
inline double fit_tail_exponent(const RadialField& f, double r_min) {
  const auto& r = f.grid->nodes;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] < r_min || f.values[i] <= 0) continue;
    const double X = std::log(r[i]), Y = std::log(f.values[i]);
    sx += X; sy += Y; sxx += X * X; sxy += X * Y;
    ++n;
  }
  if (n < 10) throw InvalidArgument("fit_tail_exponent: fewer than 10 positive nodes above r_min");
  const double slope = (double(n) * sxy - sx * sy) / (double(n) * sxx - sx * sx);
  return -slope;
}

// ---------------------------------------------------------------------------
// Newtonian potential
// ---------------------------------------------------------------------------

namespace detail {

// \int_a^b rho^e drho with the logarithmic special case.
inline double power_int(double a, double b, double e) {
  if (std::abs(e + 1.0) < 1e-14) return std::log(b / a);
  return (std::pow(b, e + 1) - std::pow(a, e + 1)) / (e + 1);
}

}  // namespace detail

// Z(r) = area^{-1} \int_r^infty rho^{1-N} M(rho) drho with M(rho) the mass
// inside radius rho, normalized so that the N-dimensional Laplacian of Z is -f.
// The rho-integrals are done in closed form against piecewise-linear M, which
// keeps the classical decay bound Z(r) <= mass/(area (N-2) r^{N-2}) exact at
// the discrete level (M never exceeds the total mass).
inline RadialField newtonian_potential(const RadialField& f) {
  validate_field(f);
  const IntegralValue mass = volume_integral(f);
  if (mass.divergent) throw InvalidArgument("newtonian_potential: field mass diverges");
  const auto& r = f.grid->nodes;
  const int N = f.grid->N;
  const double omega = sphere_area(N);
  const std::size_t n = r.size();

  // cumulative mass at nodes (trapezoid of the shell density)
  std::vector<double> M(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    const double g0 = f.values[i - 1] * std::pow(r[i - 1], N - 1);
    const double g1 = f.values[i] * std::pow(r[i], N - 1);
    M[i] = M[i - 1] + omega * 0.5 * (g0 + g1) * (r[i] - r[i - 1]);
  }

  // contribution from beyond the last node
  const double R = r.back();
  double zout = M.back() * std::pow(R, 2 - N) / (N - 2);
  if (f.tail.is_power() && f.tail.c != 0)
    zout += omega * f.tail.c * std::pow(R, 2.0 - f.tail.p) / ((f.tail.p - 2) * (N - 2));
  zout /= omega;

  // exact per-cell integrals of rho^{1-N} (A + B rho); the first cell uses the
  // M ~ rho^N model that the linear one cannot represent at the axis.
  std::vector<double> Z(n, 0.0);
  Z[n - 1] = zout;
  for (std::size_t i = n - 1; i > 0; --i) {
    const double a = r[i - 1], b = r[i];
    double cell;
    if (i == 1) {
      cell = M[1] * std::pow(b, -double(N)) * detail::power_int(0.0, b, 1.0);
    } else {
      const double B = (M[i] - M[i - 1]) / (b - a);
      const double A = M[i - 1] - B * a;
      cell = A * detail::power_int(a, b, 1.0 - N) + B * detail::power_int(a, b, 2.0 - N);
    }
    Z[i - 1] = Z[i] + cell / omega;
  }

  RadialField out;
  out.grid = f.grid;
  out.values = std::move(Z);
  out.tail = TailModel::power(double(N - 2), out.values.back() * std::pow(R, N - 2));
  return out;
}

}  // namespace fastdiff
