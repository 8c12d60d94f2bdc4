#pragma once

#include <cmath>
#include <vector>

#include "fastdiff/errors.hpp"
#include "fastdiff/grid.hpp"
#include "fastdiff/params.hpp"
#include "fastdiff/profiles.hpp"

namespace fastdiff {

// Field in the fixed-profile frame y = r (T-t)^{-gamma}, tau = -log(T-t).
struct RescaledField {
  double tau = 0;
  RadialField field;
};

// u(r,t) -> utilde(y) = (T-t)^{-beta} u(y (T-t)^{gamma}).  Nodes are mapped,
// not resampled, so members of the explicit family land exactly on their
// fixed-frame profile (identity to round-off); callers needing a common grid
// resample afterwards.
inline RescaledField to_rescaled(const RadialField& f, double t, const ProblemParams& p) {
  if (!(t < p.T)) throw InvalidArgument("to_rescaled: need t < T");
  const double s = p.T - t;
  const double amp = std::pow(s, -p.beta);
  const double scale = std::pow(s, -p.gamma);  // gamma < 0, so this contracts radii

  RescaledField out;
  out.tau = -std::log(s);
  std::vector<double> y(f.grid->nodes);
  for (double& yi : y) yi *= scale;
  y.front() = 0.0;
  out.field.grid = grid_from_nodes(std::move(y), f.grid->N);
  out.field.values.reserve(f.values.size());
  for (double v : f.values) out.field.values.push_back(amp * v);
  if (f.tail.is_power())
    out.field.tail = TailModel::power(f.tail.p, f.tail.c * std::pow(s, -p.beta - p.gamma * f.tail.p));
  return out;
}

// Inverse map; returns the physical field and its time.
inline std::pair<RadialField, double> from_rescaled(const RescaledField& g, const ProblemParams& p) {
  const double s = std::exp(-g.tau);
  const double t = p.T - s;
  const double amp = std::pow(s, p.beta);
  const double scale = std::pow(s, p.gamma);

  RadialField out;
  std::vector<double> r(g.field.grid->nodes);
  for (double& ri : r) ri *= scale;
  r.front() = 0.0;
  out.grid = grid_from_nodes(std::move(r), g.field.grid->N);
  out.values.reserve(g.field.values.size());
  for (double v : g.field.values) out.values.push_back(amp * v);
  if (g.field.tail.is_power())
    out.tail = TailModel::power(g.field.tail.p, g.field.tail.c * std::pow(s, p.beta + p.gamma * g.field.tail.p));
  return {std::move(out), t};
}

// Stationarity defect of the fixed-frame flow,
//   residual = Lap_y g^m + |gamma| y^{1-N} d/dy (y^N g),
// by centered differences on the field's own nodes.  Entries at the two
// boundary nodes are reported as 0 (one-sided stencils would pollute the
// refinement study this feeds).
inline std::vector<double> rescaled_residual(const RescaledField& gfield, const ProblemParams& p) {
  const auto& y = gfield.field.grid->nodes;
  const auto& g = gfield.field.values;
  const std::size_t n = y.size();
  for (double v : g)
    if (!(v > 0)) throw InvalidArgument("rescaled_residual: field must be positive on nodes");
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = std::pow(g[i], p.m);

  std::vector<double> res(n, 0.0);
  const double ag = std::abs(p.gamma);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double a = y[i] - y[i - 1], b = y[i + 1] - y[i];
    const auto d1 = [&](const std::vector<double>& v) {
      return (-b / (a * (a + b))) * v[i - 1] + ((b - a) / (a * b)) * v[i] +
             (a / (b * (a + b))) * v[i + 1];
    };
    const auto d2 = [&](const std::vector<double>& v) {
      return 2.0 * (v[i - 1] / (a * (a + b)) - v[i] / (a * b) + v[i + 1] / (b * (a + b)));
    };
    const double lap_w = d2(w) + (p.N - 1) / y[i] * d1(w);
    res[i] = lap_w + ag * (y[i] * d1(g) + p.N * g[i]);
  }
  // axis limit: N w'' + |gamma| N g, using the symmetric second difference
  if (n >= 2 && y[0] == 0.0) {
    const double h = y[1] - y[0];
    res[0] = p.N * 2.0 * (w[1] - w[0]) / (h * h) + ag * p.N * g[0];
  }
  return res;
}

// Pointwise stationarity defect of one family member under the fixed-frame
// operator, with hand-coded derivatives.  The member's flux vanishes
// identically — d/dy (B^m) = -|gamma| y B — so this is zero to round-off and
// anchors the differencing variants below.
inline double rescaled_member_residual(const ProblemParams& p, double k, double y) {
  if (!(k > 0) || !(y >= 0)) throw InvalidArgument("rescaled_member_residual: need k > 0, y >= 0");
  const double q = p.q(), mq = p.m * q, ag = std::abs(p.gamma);
  const double D = k + y * y;
  const double B = std::pow(p.Cstar / D, q);
  const double dB = -q * B * 2.0 * y / D;
  const double wm_yy =
      std::pow(p.Cstar, mq) * (-2.0 * mq) * std::pow(D, -mq - 2.0) * (D - (mq + 1.0) * 2.0 * y * y);
  if (y == 0.0) return p.N * wm_yy + ag * p.N * B;
  const double wm_y = std::pow(p.Cstar, mq) * (-mq) * std::pow(D, -mq - 1.0) * 2.0 * y;
  return wm_yy + (p.N - 1) / y * wm_y + ag * (p.N * B + y * dB);
}

// Same defect through centered differences of the closed form with step h;
// error O(h^2), so modest h already certifies stationarity far below any
// grid-level truncation.
inline double rescaled_member_residual_fd(const ProblemParams& p, double k, double y, double h) {
  if (!(h > 0)) throw InvalidArgument("rescaled_member_residual_fd: h must be > 0");
  if (!(y == 0.0 || y >= h))
    throw InvalidArgument("rescaled_member_residual_fd: need y = 0 or y >= h");
  const double ag = std::abs(p.gamma);
  const auto B = [&](double yy) { return eval_rescaled_barenblatt(p, k, std::abs(yy)); };
  const auto wm = [&](double yy) { return std::pow(B(yy), p.m); };
  const double wm_yy = (wm(y + h) - 2.0 * wm(y) + wm(y - h)) / (h * h);
  if (y == 0.0) return p.N * wm_yy + ag * p.N * B(0.0);
  const double wm_y = (wm(y + h) - wm(y - h)) / (2.0 * h);
  const double dB = (B(y + h) - B(y - h)) / (2.0 * h);
  return wm_yy + (p.N - 1) / y * wm_y + ag * (p.N * B(y) + y * dB);
}

// Second-kind similarity view of a snapshot:
//   g(eta) = (Tstar - t)^{-alpha_ss} u(eta (Tstar - t)^{theta}).
// For the anomalous profiles alpha_ss (1-m) = 1 - 2 theta must hold exactly.
inline RadialField second_kind_rescale(const RadialField& f, double t, double Tstar, double theta,
                                       double alpha_ss, const ProblemParams& p) {
  if (!(t < Tstar)) throw InvalidArgument("second_kind_rescale: need t < Tstar");
  if (std::abs(alpha_ss * (1.0 - p.m) - (1.0 - 2.0 * theta)) > 1e-12)
    throw InvalidArgument("second_kind_rescale: alpha_ss inconsistent with theta");
  const double s = Tstar - t;
  const double amp = std::pow(s, -alpha_ss);
  const double scale = std::pow(s, -theta);

  RadialField out;
  std::vector<double> eta(f.grid->nodes);
  for (double& e : eta) e *= scale;
  eta.front() = 0.0;
  out.grid = grid_from_nodes(std::move(eta), f.grid->N);
  out.values.reserve(f.values.size());
  for (double v : f.values) out.values.push_back(amp * v);
  if (f.tail.is_power())
    out.tail = TailModel::power(f.tail.p, f.tail.c * std::pow(s, -alpha_ss - theta * f.tail.p));
  return out;
}

}  // namespace fastdiff
