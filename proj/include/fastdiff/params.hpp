#pragma once

#include <cmath>
#include <string>

#include "fastdiff/errors.hpp"

namespace fastdiff {

// Exponent regime of u_t = div(u^{m-1} grad u * m) = Laplace(u^m) for 0 < m < (N-2)/N.
//
// Integrable:    (N-4)/(N-2) < m < (N-2)/N  — perturbations of the explicit family
//                with finite mass difference relax back to it in plain L1.
// NonIntegrable: N > 4 and 0 < m <= (N-4)/(N-2) — pairs within the family are not
//                L1-comparable; contraction needs the weighted norm (weight_alpha).
// OutOfRange:    m >= (N-2)/N — no finite-time vanishing; derived exponents are
//                still computed but meaningless.
enum class Regime { Integrable, NonIntegrable, OutOfRange };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::Integrable: return "Integrable";
    case Regime::NonIntegrable: return "NonIntegrable";
    default: return "OutOfRange";
  }
}

// Dimension, exponent, reference vanishing time, and every constant derived from them.
//
// beta  = N/(N-2-N m)       similarity rate; positive in range
// gamma = -beta/N           spatial similarity exponent (negative)
// Cstar = 2m(N-2-mN)/(1-m)  profile constant of the explicit family
// weight_alpha = (N-2)(1-m)/2 - 1   exponent of the contraction weight
//
// The identity beta(1-m) = 1 + 2 beta/N is what makes the rescaled profile
// time-independent; derive_params checks it to 1e-12.
struct ProblemParams {
  int N = 0;
  double m = 0;
  double T = 0;

  double beta = 0;
  double gamma = 0;
  double Cstar = 0;
  double weight_alpha = 0;
  Regime regime = Regime::OutOfRange;
  bool is_yamabe = false;

  double one_minus_m() const { return 1.0 - m; }
  // 1/(1-m): amplitude power of the vanishing envelope.
  double q() const { return 1.0 / (1.0 - m); }
};

// Shape parameter and vanishing time of one member of the explicit family.
struct BarenblattSpec {
  double k = 1.0;
  double T = 1.0;
};

inline ProblemParams derive_params(int N, double m, double T) {
  if (N < 3) throw InvalidArgument("derive_params: N must be >= 3, got " + std::to_string(N));
  if (!(T > 0)) throw InvalidArgument("derive_params: T must be > 0");
  if (!(m > 0) || !(m < 1)) throw InvalidArgument("derive_params: m must be in (0,1)");

  ProblemParams p;
  p.N = N;
  p.m = m;
  p.T = T;
  const double crit = double(N - 2) / N;          // fast-vanishing range endpoint
  const double split = double(N - 4) / (N - 2);   // L1-comparability threshold

  p.beta = N / (N - 2 - N * m);
  p.gamma = -p.beta / N;
  p.Cstar = 2.0 * m * (N - 2 - m * N) / (1.0 - m);
  p.weight_alpha = (N - 2) * (1.0 - m) / 2.0 - 1.0;
  p.is_yamabe = std::abs(m - double(N - 2) / (N + 2)) <= 1e-12 * std::max(1.0, std::abs(m));

  if (m >= crit) {
    p.regime = Regime::OutOfRange;
  } else if (N > 4 && m <= split) {
    p.regime = Regime::NonIntegrable;
  } else {
    p.regime = Regime::Integrable;
  }

  if (p.regime != Regime::OutOfRange) {
    // beta(1-m) = 1 - 2 gamma; a violation means the closed forms above were edited.
    const double lhs = p.beta * (1.0 - m);
    const double rhs = 1.0 + 2.0 * p.beta / N;
    if (std::abs(lhs - rhs) > 1e-12 * std::max(1.0, std::abs(rhs)))
      throw Error("derive_params: exponent identity violated");
  }
  return p;
}

// Admissible similarity-exponent interval for the anomalous-profile eigenvalue problem.
inline double theta_lower_bound(const ProblemParams& p) {
  return -p.m / ((1.0 - p.m) * p.N - 2.0);
}
inline double theta_upper_bound(const ProblemParams&) { return 0.5; }

// Surface area of the unit sphere in R^N: 2 pi^{N/2} / Gamma(N/2).
inline double sphere_area(int N) {
  return 2.0 * std::pow(M_PI, 0.5 * N) / std::tgamma(0.5 * N);
}

}  // namespace fastdiff
