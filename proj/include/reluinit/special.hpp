#pragma once

// Special functions shared by the analytic modules: the standard normal CDF
// and the (regularized) upper incomplete gamma function.

#include <cmath>
#include <limits>
#include <numbers>

#include "reluinit/errors.hpp"

namespace reluinit {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;

// Standard normal CDF.
//
// Uses erfc on the lower tail only and reflects for z > 0, so
// normal_cdf(z) + normal_cdf(-z) == 1 holds exactly in floating point.
inline double normal_cdf(double z) {
  if (std::isnan(z)) return z;
  if (z <= 0.0) return 0.5 * std::erfc(-z * kInvSqrt2);
  return 1.0 - 0.5 * std::erfc(z * kInvSqrt2);
}

inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

namespace detail {

inline constexpr int kGammaMaxIter = 10000;
inline constexpr double kGammaEps = 1e-16;

// log(x^a e^-x / Gamma(a))
inline double gamma_log_prefactor(double a, double x) {
  return a * std::log(x) - x - std::lgamma(a);
}

// Series for P(a, x) / prefactor, valid for x < a + 1.
inline double gamma_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int n = 0; n < kGammaMaxIter; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kGammaEps) break;
  }
  return sum;
}

// Modified Lentz continued fraction for Q(a, x) / prefactor, x >= a + 1.
inline double gamma_continued_fraction(double a, double x) {
  constexpr double tiny = std::numeric_limits<double>::min() / kGammaEps;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kGammaMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kGammaEps) break;
  }
  return h;
}

inline void check_gamma_domain(double a, double x) {
  if (!(a > 0.0) || !std::isfinite(a))
    throw DomainError("incomplete gamma: shape a must be positive and finite");
  if (!(x >= 0.0))
    throw DomainError("incomplete gamma: argument x must be nonnegative");
}

}  // namespace detail

// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
// Series below x = a + 1, continued fraction above.
inline double gamma_q(double a, double x) {
  detail::check_gamma_domain(a, x);
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  const double pre = std::exp(detail::gamma_log_prefactor(a, x));
  if (x < a + 1.0) return 1.0 - pre * detail::gamma_series(a, x);
  return pre * detail::gamma_continued_fraction(a, x);
}

// Regularized lower incomplete gamma P(a, x) = 1 - Q(a, x).
inline double gamma_p(double a, double x) {
  detail::check_gamma_domain(a, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double pre = std::exp(detail::gamma_log_prefactor(a, x));
  if (x < a + 1.0) return pre * detail::gamma_series(a, x);
  return 1.0 - pre * detail::gamma_continued_fraction(a, x);
}

// Upper incomplete gamma Gamma(a, x) = int_x^inf e^-t t^(a-1) dt (not
// regularized). Gamma(a, 0) = Gamma(a).
inline double incomplete_gamma_upper(double a, double x) {
  detail::check_gamma_domain(a, x);
  if (x == 0.0) return std::tgamma(a);
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) {
    const double lower = std::exp(a * std::log(x) - x) * detail::gamma_series(a, x);
    return std::tgamma(a) - lower;
  }
  return std::exp(a * std::log(x) - x) * detail::gamma_continued_fraction(a, x);
}

}  // namespace reluinit
