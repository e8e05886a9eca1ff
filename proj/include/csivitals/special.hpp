#pragma once

// Regularized lower incomplete gamma P(a, x) and its inverse, enough to get
// chi-squared quantiles for the ellipsoid radius.

#include <cmath>
#include <limits>

#include "csivitals/error.hpp"

namespace csivitals::special {

namespace detail {

// Series expansion, converges quickly for x < a + 1.
inline double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 10000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-17) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) (modified Lentz), used for x >= a + 1.
inline double gamma_q_cf(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
inline double gamma_p(double a, double x) {
  if (!(a > 0) || !(x >= 0)) throw ParameterError("gamma_p requires a > 0 and x >= 0");
  if (x == 0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_cf(a, x);
}

inline double chi2_cdf(double x, double dof) { return x <= 0 ? 0.0 : gamma_p(0.5 * dof, 0.5 * x); }

/// Chi-squared quantile: smallest x with chi2_cdf(x, dof) = p.
/// Safeguarded Newton on a bracket; the bracket is refined by bisection
/// whenever a Newton step leaves it.
inline double chi2_quantile(double p, double dof) {
  if (!(dof > 0)) throw ParameterError("chi2_quantile: dof must be positive");
  if (!(p > 0 && p < 1)) throw ParameterError("chi2_quantile: p must be in (0, 1)");
  const double a = 0.5 * dof;
  // Solve P(a, y) = p for y, then x = 2y.
  double lo = 0.0, hi = std::max(1.0, a);
  while (gamma_p(a, hi) < p) {
    lo = hi;
    hi *= 2.0;
  }
  // Small-p start from the leading term P ~ y^a / Gamma(a + 1).
  double y = std::exp((std::log(p) + std::lgamma(a + 1.0)) / a);
  if (!(y > lo && y < hi)) y = 0.5 * (lo + hi);
  for (int it = 0; it < 500; ++it) {
    const double f = gamma_p(a, y) - p;
    if (f == 0) break;
    if (f < 0) lo = y; else hi = y;
    const double dens = std::exp(-y + (a - 1.0) * std::log(y) - std::lgamma(a));
    double next = (dens > 0 && std::isfinite(dens)) ? y - f / dens : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - y) <= 1e-15 * std::max(1e-300, y)) {
      y = next;
      break;
    }
    y = next;
    if (hi - lo <= 4 * std::numeric_limits<double>::min()) break;
  }
  return 2.0 * y;
}

}  // namespace csivitals::special
