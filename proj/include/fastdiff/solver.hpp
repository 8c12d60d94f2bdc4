#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "fastdiff/errors.hpp"
#include "fastdiff/grid.hpp"
#include "fastdiff/params.hpp"
#include "fastdiff/profiles.hpp"

namespace fastdiff {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class BoundaryMode {
  DirichletAnalytic,   // pin the last node to a comparison envelope value
  TailExtrapolation,   // impose the log-derivative of the current fitted tail
};

enum class StopKind { AtTime, AtExtinction };

struct SolverConfig {
  double dt_init = 1e-8;
  double dt_max = 0.05;
  double newton_tol = 1e-12;
  int newton_max_iter = 40;
  double adapt_target = 4e-3;   // max relative change per accepted step
  BoundaryMode boundary_mode = BoundaryMode::DirichletAnalytic;
  BarenblattSpec envelope;      // DirichletAnalytic comparison member
  double tail_fit_rmin = 100.0; // TailExtrapolation fit window start
  StopKind stop = StopKind::AtTime;
  double stop_time = 1.0;
  double extinction_threshold = 1e-10;

  void validate() const {
    if (!(dt_init > 0) || !(dt_max > 0) || !(newton_tol > 0) || newton_max_iter < 1)
      throw InvalidArgument("solver config: tolerances and budgets must be positive");
    if (!(adapt_target > 0) || !(adapt_target <= 0.5))
      throw InvalidArgument("solver config: adapt_target must be in (0, 0.5]");
  }
};

struct SolverStats {
  long steps = 0;
  long newton_iters = 0;
  long rejected = 0;
  double last_mass_defect = 0;   // conservation identity residual of the last step
};

struct SolverState {
  double t = 0;
  RadialField field;
  SolverStats stats;
  double tail_p = 0;  // current fitted tail exponent (TailExtrapolation)
};

struct Trajectory {
  std::vector<double> times;
  std::vector<RadialField> fields;
  std::size_t size() const { return times.size(); }
};

struct RescaledTrajectory {
  std::vector<double> taus;
  std::vector<RadialField> fields;
  std::size_t size() const { return taus.size(); }
};

namespace detail {

// In-place Thomas solve of the tridiagonal system (a,b,c) x = d;
// a[0] and c[n-1] are ignored.
inline void thomas(std::vector<double>& a, std::vector<double>& b, std::vector<double>& c,
                   std::vector<double>& d) {
  const std::size_t n = b.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  d[n - 1] /= b[n - 1];
  for (std::size_t i = n - 1; i > 0; --i) d[i - 1] = (d[i - 1] - c[i - 1] * d[i]) / b[i - 1];
}

// Finite-volume geometry shared by both frames: faces at midpoints, shell
// volumes per steradian.
struct FvGeometry {
  std::vector<double> rf;  // faces, size n-1
  std::vector<double> A;   // face areas rf^{N-1}
  std::vector<double> V;   // control volumes
  std::vector<double> h;   // node spacings

  FvGeometry(const std::vector<double>& r, int N) {
    const std::size_t n = r.size();
    rf.resize(n - 1);
    A.resize(n - 1);
    h.resize(n - 1);
    V.resize(n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      rf[i] = 0.5 * (r[i] + r[i + 1]);
      A[i] = std::pow(rf[i], N - 1);
      h[i] = r[i + 1] - r[i];
    }
    double prev = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      V[i] = (std::pow(rf[i], N) - prev) / N;
      prev = std::pow(rf[i], N);
    }
    V[n - 1] = (std::pow(r[n - 1], N) - prev) / N;
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Physical-frame solver
// ---------------------------------------------------------------------------

// Backward Euler on the flux form of u_t = r^{1-N} (r^{N-1} (u^m)_r)_r, Newton
// in w = u^m (diffusivity stays bounded where u vanishes), zero flux at the
// axis, outer boundary per SolverConfig.  Deterministic: same inputs, same
// bits.
class PhysicalSolver {
 public:
  PhysicalSolver(const ProblemParams& p, GridPtr grid, SolverConfig cfg)
      : p_(p), grid_(std::move(grid)), cfg_(std::move(cfg)), geo_(grid_->nodes, p.N) {
    cfg_.validate();
    wfloor_ = std::pow(1e-300, p_.m);
  }

  const SolverConfig& config() const { return cfg_; }
  const ProblemParams& params() const { return p_; }
  GridPtr grid() const { return grid_; }

  SolverState init_state(const RadialField& u0) const {
    validate_field(u0);
    if (u0.grid->nodes != grid_->nodes)
      throw InvalidArgument("init_state: initial data lives on a different grid");
    SolverState s;
    s.t = 0;
    s.field = u0;
    s.tail_p = u0.tail.is_power() ? u0.tail.p : 2.0 * p_.q();
    return s;
  }

  // One implicit step of size dt.  Throws SolverFailure when Newton stalls;
  // the caller owns the retry policy.
  SolverState step(const SolverState& s, double dt) const {
    if (!(dt > 0)) throw InvalidArgument("step: dt must be > 0");
    const auto& r = grid_->nodes;
    const std::size_t n = r.size();
    const std::vector<double>& un = s.field.values;

    // lagged tail exponent for the extrapolation boundary
    double tail_p = s.tail_p;
    if (cfg_.boundary_mode == BoundaryMode::TailExtrapolation) {
      tail_p = fit_tail_or(s.field, tail_p);
    }
    const double bc_w = boundary_w(s, dt, tail_p);
    const double ratio_w =
        std::pow(r[n - 1] / r[n - 2], -tail_p * p_.m);  // w_{M} = ratio * w_{M-1}

    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::pow(std::max(un[i], 1e-300), p_.m);

    std::vector<double> G(n), a(n), b(n), c(n), u(n), dudw(n);
    long iters = 0;
    for (int it = 0;; ++it) {
      if (it >= cfg_.newton_max_iter)
        throw SolverFailure("step: Newton did not converge", s.t);
      ++iters;
      for (std::size_t i = 0; i < n; ++i) {
        u[i] = std::pow(w[i], 1.0 / p_.m);
        dudw[i] = u[i] / (p_.m * w[i]);
      }
      // residual and tridiagonal Jacobian
      for (std::size_t i = 0; i < n; ++i) {
        a[i] = c[i] = 0;
        if (i + 1 == n) break;
        const double Flo = i > 0 ? (w[i] - w[i - 1]) / geo_.h[i - 1] : 0.0;
        const double Fhi = (w[i + 1] - w[i]) / geo_.h[i];
        G[i] = geo_.V[i] * (u[i] - un[i]) -
               dt * (geo_.A[i] * Fhi - (i > 0 ? geo_.A[i - 1] * Flo : 0.0));
        b[i] = geo_.V[i] * dudw[i] + dt * geo_.A[i] / geo_.h[i] +
               (i > 0 ? dt * geo_.A[i - 1] / geo_.h[i - 1] : 0.0);
        c[i] = -dt * geo_.A[i] / geo_.h[i];
        if (i > 0) a[i] = -dt * geo_.A[i - 1] / geo_.h[i - 1];
      }
      if (cfg_.boundary_mode == BoundaryMode::DirichletAnalytic) {
        G[n - 1] = w[n - 1] - bc_w;
        b[n - 1] = 1.0;
        a[n - 1] = 0.0;
      } else {
        G[n - 1] = w[n - 1] - ratio_w * w[n - 2];
        b[n - 1] = 1.0;
        a[n - 1] = -ratio_w;
      }

      std::vector<double> aa = a, bb = b, cc = c, dd = G;
      detail::thomas(aa, bb, cc, dd);

      double lam = 1.0;
      for (int k = 0; k < 60; ++k) {
        bool ok = true;
        for (std::size_t i = 0; i < n; ++i)
          if (w[i] - lam * dd[i] <= 0) { ok = false; break; }
        if (ok) break;
        lam *= 0.5;
      }
      double dmax = 0, wmax = 0;
      for (std::size_t i = 0; i < n; ++i) {
        w[i] = std::max(w[i] - lam * dd[i], wfloor_);
        dmax = std::max(dmax, std::abs(lam * dd[i]));
        wmax = std::max(wmax, w[i]);
      }
      if (dmax < cfg_.newton_tol * std::max(wmax, wfloor_) && lam == 1.0) break;
    }

    SolverState out;
    out.t = s.t + dt;
    out.stats = s.stats;
    out.stats.steps += 1;
    out.stats.newton_iters += iters;
    out.tail_p = tail_p;
    out.field.grid = grid_;
    out.field.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.field.values[i] = std::pow(w[i], 1.0 / p_.m);
    out.field.tail = snapshot_tail(out.field.values, tail_p);

    // conservation identity over the flux rows: mass change = boundary influx
    double dm = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) dm += geo_.V[i] * (out.field.values[i] - un[i]);
    const double f_in = dt * geo_.A[n - 2] *
                        (std::pow(out.field.values[n - 1], p_.m) - std::pow(out.field.values[n - 2], p_.m)) /
                        geo_.h[n - 2];
    double interior = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) interior += geo_.V[i] * out.field.values[i];
    out.stats.last_mass_defect = std::abs(dm - f_in) / std::max(interior, 1e-300);
    return out;
  }

  // Adaptive evolution with snapshots interpolated in the u^{1-m} variable
  // (exact for the vanishing envelope's amplitude law).
  Trajectory evolve(SolverState s, const std::vector<double>& output_times,
                    SolverStats* stats_out = nullptr) const {
    for (std::size_t i = 1; i < output_times.size(); ++i)
      if (!(output_times[i] > output_times[i - 1]))
        throw InvalidArgument("evolve: output times must increase");
    Trajectory traj;
    std::size_t next_out = 0;
    const auto capture_now = [&](const SolverState& st) {
      traj.times.push_back(st.t);
      traj.fields.push_back(st.field);
    };
    while (next_out < output_times.size() && output_times[next_out] <= s.t) {
      capture_now(s);
      ++next_out;
    }

    double dt = cfg_.dt_init;
    while (true) {
      if (cfg_.stop == StopKind::AtTime && s.t >= cfg_.stop_time - 1e-14) break;
      if (cfg_.stop == StopKind::AtExtinction &&
          *std::max_element(s.field.values.begin(), s.field.values.end()) < cfg_.extinction_threshold)
        break;

      double dtn = std::min(dt, cfg_.dt_max);
      if (cfg_.stop == StopKind::AtTime) dtn = std::min(dtn, cfg_.stop_time - s.t);

      SolverState snew;
      int halvings = 0;
      for (;;) {
        try {
          snew = step(s, dtn);
          break;
        } catch (const SolverFailure&) {
          if (++halvings > 20) throw SolverFailure("evolve: step kept failing", s.t);
          dtn *= 0.5;
          dt = dtn;
        }
      }
      const double umax = *std::max_element(s.field.values.begin(), s.field.values.end());
      double change = 0;
      for (std::size_t i = 0; i < s.field.values.size(); ++i)
        change = std::max(change, std::abs(snew.field.values[i] - s.field.values[i]) /
                                      (s.field.values[i] + 1e-8 * umax));
      if (change > 2.0 * cfg_.adapt_target && dtn == dt) {
        dt *= 0.5;
        s.stats.rejected += 1;
        continue;
      }
      snew.stats.rejected = s.stats.rejected;

      while (next_out < output_times.size() && output_times[next_out] <= snew.t + 1e-14) {
        traj.times.push_back(output_times[next_out]);
        traj.fields.push_back(interp_snapshot(s, snew, output_times[next_out]));
        ++next_out;
      }
      dt = std::min(cfg_.dt_max, dtn * std::min(1.5, cfg_.adapt_target / std::max(change, 1e-12)));
      s = std::move(snew);
    }
    if (stats_out) *stats_out = s.stats;
    return traj;
  }

 private:
  double fit_tail_or(const RadialField& f, double fallback) const {
    try {
      const double p = fit_tail_exponent(f, cfg_.tail_fit_rmin);
      if (p > 0.1 && p < 60.0) return p;
    } catch (const InvalidArgument&) {
    }
    return fallback;
  }

  double boundary_w(const SolverState& s, double dt, double) const {
    if (cfg_.boundary_mode != BoundaryMode::DirichletAnalytic) return 0.0;
    const double val = eval_barenblatt(p_, cfg_.envelope, grid_->back(), s.t + dt);
    return std::pow(std::max(val, 1e-300), p_.m);
  }

  TailModel snapshot_tail(const std::vector<double>& u, double tail_p) const {
    const double p = cfg_.boundary_mode == BoundaryMode::DirichletAnalytic ? 2.0 * p_.q() : tail_p;
    const double um = u.back();
    if (um <= 1e-290) return TailModel::none();
    return TailModel::power(p, um * std::pow(grid_->back(), p));
  }

  RadialField interp_snapshot(const SolverState& s0, const SolverState& s1, double t) const {
    const double e = 1.0 - p_.m;
    const double th = (t - s0.t) / (s1.t - s0.t);
    RadialField f;
    f.grid = grid_;
    f.values.resize(s0.field.values.size());
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      const double v = (1.0 - th) * std::pow(s0.field.values[i], e) +
                       th * std::pow(s1.field.values[i], e);
      f.values[i] = std::pow(std::max(v, 0.0), 1.0 / e);
    }
    f.tail = snapshot_tail(f.values, (1.0 - th) * s0.tail_p + th * s1.tail_p);
    return f;
  }

  ProblemParams p_;
  GridPtr grid_;
  SolverConfig cfg_;
  detail::FvGeometry geo_;
  double wfloor_;
};

// ---------------------------------------------------------------------------
// Fixed-frame (rescaled) solver
// ---------------------------------------------------------------------------

// Backward Euler for the rescaled flow u_tau = Lap u^m + |gamma| y^{1-N}(y^N u)',
// whose stationary states are the fixed-frame family members.  Two outer
// boundaries, matching the two mass-selection mechanisms:
//   ZeroFlux  — conserves mass exactly; the family member is selected by mass
//               (mass-comparable regime),
//   PinProfile — pins the boundary to the target member; excess mass leaves
//               through the boundary (non-comparable regime).
// The family-exact flux correction subtracts, on each outer face, the discrete
// flux of the family member matching the local face average, making every
// member an exact steady state of the scheme; without it, O(h^2) truncation
// seeds the unstable amplitude mode and a slow walk along the family.
class RescaledFlowSolver {
 public:
  enum class Outer { ZeroFlux, PinProfile };

  struct Config {
    double dt_init = 1e-6;
    double dt_max = 0.05;
    double newton_tol = 1e-12;
    int newton_max_iter = 40;
    double adapt_target = 0.02;
    Outer outer = Outer::ZeroFlux;
    double k_pin = 1.0;            // PinProfile target
    bool family_correction = true;
    double r_corr = 5.0;           // faces at or beyond this radius are corrected

    void validate() const {
      if (!(dt_init > 0) || !(dt_max > 0) || !(newton_tol > 0) || newton_max_iter < 1)
        throw InvalidArgument("rescaled config: tolerances and budgets must be positive");
      if (!(adapt_target > 0) || !(adapt_target <= 0.5))
        throw InvalidArgument("rescaled config: adapt_target must be in (0, 0.5]");
    }
  };

  RescaledFlowSolver(const ProblemParams& p, GridPtr grid, Config cfg)
      : p_(p), grid_(std::move(grid)), cfg_(cfg), geo_(grid_->nodes, p.N) {
    cfg_.validate();
    wfloor_ = std::pow(1e-300, p_.m);
  }

  GridPtr grid() const { return grid_; }

  RadialField step(const RadialField& f, double dtau) const {
    if (!(dtau > 0)) throw InvalidArgument("step: dtau must be > 0");
    const auto& y = grid_->nodes;
    const std::size_t n = y.size();
    const std::vector<double>& un = f.values;
    const double ag = std::abs(p_.gamma);
    const double q = p_.q();
    const double wpin = std::pow(eval_rescaled_barenblatt(p_, cfg_.k_pin, y[n - 1]), p_.m);

    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::pow(std::max(un[i], 1e-300), p_.m);

    const std::size_t nf = n - 1;
    std::vector<double> F(nf), dFlo(nf), dFhi(nf);
    std::vector<double> G(n), a(n), b(n), c(n), u(n), dudw(n);

    for (int it = 0;; ++it) {
      if (it >= cfg_.newton_max_iter)
        throw SolverFailure("rescaled step: Newton did not converge", 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        u[i] = std::pow(w[i], 1.0 / p_.m);
        dudw[i] = u[i] / (p_.m * w[i]);
      }
      for (std::size_t i = 0; i < nf; ++i) {
        const double h = geo_.h[i], rf = geo_.rf[i];
        F[i] = (w[i + 1] - w[i]) / h + ag * rf * 0.5 * (u[i] + u[i + 1]);
        dFlo[i] = -1.0 / h + ag * rf * 0.5 * dudw[i];
        dFhi[i] = 1.0 / h + ag * rf * 0.5 * dudw[i + 1];
        if (cfg_.family_correction && rf >= cfg_.r_corr) {
          const double ub = 0.5 * (u[i] + u[i + 1]);
          double khat = p_.Cstar * std::pow(ub, -(1.0 - p_.m)) - rf * rf;
          double dk_dub = -p_.Cstar * (1.0 - p_.m) * std::pow(ub, -(2.0 - p_.m));
          if (khat < -0.5 * rf * rf) {
            khat = -0.5 * rf * rf;
            dk_dub = 0.0;
          }
          const double Di = khat + y[i] * y[i], Dip = khat + y[i + 1] * y[i + 1];
          const double Bi = std::pow(p_.Cstar / Di, q), Bip = std::pow(p_.Cstar / Dip, q);
          const double Fb = (std::pow(Bip, p_.m) - std::pow(Bi, p_.m)) / h +
                            ag * rf * 0.5 * (Bi + Bip);
          const double dBi = -q * Bi / Di, dBip = -q * Bip / Dip;
          const double dFb_dk =
              (p_.m * std::pow(Bip, p_.m - 1.0) * dBip - p_.m * std::pow(Bi, p_.m - 1.0) * dBi) / h +
              ag * rf * 0.5 * (dBi + dBip);
          F[i] -= Fb;
          dFlo[i] -= dFb_dk * dk_dub * 0.5 * dudw[i];
          dFhi[i] -= dFb_dk * dk_dub * 0.5 * dudw[i + 1];
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        a[i] = c[i] = 0;
        const bool has_hi = i < nf && !(i + 1 == n);
        const double Ahi = has_hi ? geo_.A[i] : 0.0;
        const double Alo = i > 0 ? geo_.A[i - 1] : 0.0;
        if (i + 1 == n) {
          if (cfg_.outer == Outer::PinProfile) {
            G[i] = w[i] - wpin;
            b[i] = 1.0;
            a[i] = 0.0;
          } else {
            G[i] = geo_.V[i] * (u[i] - un[i]) + dtau * Alo * F[i - 1];
            b[i] = geo_.V[i] * dudw[i] + dtau * Alo * dFhi[i - 1];
            a[i] = dtau * Alo * dFlo[i - 1];
          }
          continue;
        }
        G[i] = geo_.V[i] * (u[i] - un[i]) - dtau * (Ahi * F[i] - (i > 0 ? Alo * F[i - 1] : 0.0));
        b[i] = geo_.V[i] * dudw[i] - dtau * Ahi * dFlo[i] + (i > 0 ? dtau * Alo * dFhi[i - 1] : 0.0);
        c[i] = -dtau * Ahi * dFhi[i];
        if (i > 0) a[i] = dtau * Alo * dFlo[i - 1];
      }

      std::vector<double> aa = a, bb = b, cc = c, dd = G;
      detail::thomas(aa, bb, cc, dd);
      double lam = 1.0;
      for (int k = 0; k < 60; ++k) {
        bool ok = true;
        for (std::size_t i = 0; i < n; ++i)
          if (w[i] - lam * dd[i] <= 0) { ok = false; break; }
        if (ok) break;
        lam *= 0.5;
      }
      double dmax = 0, wmax = 0;
      for (std::size_t i = 0; i < n; ++i) {
        w[i] = std::max(w[i] - lam * dd[i], wfloor_);
        dmax = std::max(dmax, std::abs(lam * dd[i]));
        wmax = std::max(wmax, w[i]);
      }
      if (dmax < cfg_.newton_tol * std::max(wmax, wfloor_) && lam == 1.0) break;
    }

    RadialField out;
    out.grid = grid_;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = std::pow(w[i], 1.0 / p_.m);
    const double um = out.values.back();
    out.tail = um > 1e-290 ? TailModel::power(2.0 * q, um * std::pow(grid_->back(), 2.0 * q))
                           : TailModel::none();
    return out;
  }

  // Adaptive march with snapshots at the requested tau ladder (interpolated in
  // u^{1-m} like the physical frame).
  RescaledTrajectory evolve(RadialField f, double tau0, const std::vector<double>& out_taus,
                            SolverStats* stats_out = nullptr) const {
    SolverStats stats;
    RescaledTrajectory traj;
    std::size_t next = 0;
    double tau = tau0;
    while (next < out_taus.size() && out_taus[next] <= tau) {
      traj.taus.push_back(tau);
      traj.fields.push_back(f);
      ++next;
    }
    if (next >= out_taus.size()) {
      if (stats_out) *stats_out = stats;
      return traj;
    }

    double dt = cfg_.dt_init;
    const double tau_end = out_taus.back();
    while (tau < tau_end - 1e-12) {
      double dtn = std::min({dt, cfg_.dt_max, tau_end - tau});
      RadialField fnew;
      int halvings = 0;
      for (;;) {
        try {
          fnew = step(f, dtn);
          break;
        } catch (const SolverFailure&) {
          if (++halvings > 20) throw SolverFailure("rescaled evolve: step kept failing", tau);
          dtn *= 0.5;
          dt = dtn;
        }
      }
      const double umax = *std::max_element(f.values.begin(), f.values.end());
      double change = 0;
      for (std::size_t i = 0; i < f.values.size(); ++i)
        change = std::max(change, std::abs(fnew.values[i] - f.values[i]) / (f.values[i] + 1e-8 * umax));
      if (change > 2.0 * cfg_.adapt_target && dtn == dt) {
        dt *= 0.5;
        stats.rejected += 1;
        continue;
      }
      stats.steps += 1;
      const double tau_new = tau + dtn;
      while (next < out_taus.size() && out_taus[next] <= tau_new + 1e-12) {
        const double e = 1.0 - p_.m;
        const double th = (out_taus[next] - tau) / dtn;
        RadialField snap;
        snap.grid = grid_;
        snap.values.resize(f.values.size());
        for (std::size_t i = 0; i < snap.values.size(); ++i) {
          const double v = (1.0 - th) * std::pow(f.values[i], e) + th * std::pow(fnew.values[i], e);
          snap.values[i] = std::pow(std::max(v, 0.0), 1.0 / e);
        }
        const double um = snap.values.back();
        snap.tail = um > 1e-290
                        ? TailModel::power(2.0 * p_.q(), um * std::pow(grid_->back(), 2.0 * p_.q()))
                        : TailModel::none();
        traj.taus.push_back(out_taus[next]);
        traj.fields.push_back(std::move(snap));
        ++next;
      }
      dt = std::min(cfg_.dt_max, dtn * std::min(1.5, cfg_.adapt_target / std::max(change, 1e-12)));
      tau = tau_new;
      f = std::move(fnew);
    }
    if (stats_out) *stats_out = stats;
    return traj;
  }

 private:
  ProblemParams p_;
  GridPtr grid_;
  Config cfg_;
  detail::FvGeometry geo_;
  double wfloor_;
};

// ---------------------------------------------------------------------------
// Extinction-time estimate
// ---------------------------------------------------------------------------

// Linear extrapolation of max_r u^{1-m} over the last 10 snapshots; the
// amplitude power is asymptotically affine in t for vanishing envelopes.
inline double estimate_extinction_time(const Trajectory& traj, const ProblemParams& p) {
  if (traj.size() < 10)
    throw InvalidArgument("estimate_extinction_time: need at least 10 snapshots");
  const std::size_t n0 = traj.size() - 10;
  double prev = -1;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t j = n0; j < traj.size(); ++j) {
    const double mx = *std::max_element(traj.fields[j].values.begin(), traj.fields[j].values.end());
    if (prev >= 0 && !(mx < prev))
      throw NotDecaying("estimate_extinction_time: amplitude is not strictly decreasing");
    prev = mx;
    const double X = traj.times[j], Y = std::pow(mx, 1.0 - p.m);
    sx += X; sy += Y; sxx += X * X; sxy += X * Y;
  }
  const double slope = (10.0 * sxy - sx * sy) / (10.0 * sxx - sx * sx);
  const double icept = (sy - slope * sx) / 10.0;
  if (!(slope < 0)) throw NotDecaying("estimate_extinction_time: fitted slope is not negative");
  const double T_est = -icept / slope;
  if (!(T_est > traj.times.back()))
    throw NotDecaying("estimate_extinction_time: extrapolated time is not in the future");
  return T_est;
}

}  // namespace fastdiff
