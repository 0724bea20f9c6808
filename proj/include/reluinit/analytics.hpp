#pragma once

// Closed-form quantities of randomly initialized neurons: state
// probabilities in one dimension, the law of the weight norm under Gaussian
// weights, the expected squared output Psi, and weight-direction densities.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "reluinit/errors.hpp"
#include "reluinit/ratiodist.hpp"
#include "reluinit/special.hpp"

namespace reluinit {

struct StateProbs {
  double p_fully_active;
  double p_semi_active;
  double p_inactive;

  double sum() const { return p_fully_active + p_semi_active + p_inactive; }
};

// State probabilities of x -> relu(a x + b), a ~ weight, b ~ bias, relative
// to data with extremes x_min < x_max. The knot -b/a has law bias/weight
// reflected, which is why F is evaluated at -x_min and -x_max.
//
// The formulas need a continuous knot law. A Dirac(0) bias puts every knot
// at 0: this is only answered when 0 is interior to the window (then every
// neuron is fully active); otherwise use state_probabilities_zero_bias.
inline StateProbs state_probabilities(const ScalarDist& bias, const ScalarDist& weight, double x_min,
                                      double x_max) {
  if (!(x_min < x_max)) throw ValidationError("state_probabilities: need x_min < x_max");
  if (bias.is<Dirac>() && bias.as<Dirac>().b == 0.0) {
    if (x_min < 0.0 && 0.0 < x_max) return {1.0, 0.0, 0.0};
    throw UnsupportedContinuityError(
        "state_probabilities: a zero bias gives an atomic knot distribution at 0; "
        "the formulas need a continuous knot law (use state_probabilities_zero_bias)");
  }
  const RatioPair pair(bias, weight);
  const auto lo = detail::split(pair, -x_min);
  const auto hi = detail::split(pair, -x_max);
  StateProbs s;
  s.p_fully_active = (lo.minus + lo.plus) - (hi.minus + hi.plus);
  s.p_semi_active = weight.tail_from(0.0) + hi.minus - lo.plus;
  s.p_inactive = weight.cdf(0.0) + hi.plus - lo.minus;
  return s;
}

// Zero bias: every knot sits at 0 and the state only depends on sign(a).
inline StateProbs state_probabilities_zero_bias(const ScalarDist& weight, double x_min, double x_max) {
  if (!(x_min < x_max)) throw ValidationError("state_probabilities_zero_bias: need x_min < x_max");
  if (x_min < 0.0 && 0.0 < x_max) return {1.0, 0.0, 0.0};
  const double pos = weight.tail_from(0.0) - weight.mass_at(0.0);
  const double neg = weight.cdf_left(0.0);
  if (x_min >= 0.0) return {0.0, pos, neg};
  return {0.0, neg, pos};
}

struct NormStats {
  double mean;
  double variance;
  double mode;
  double gautschi_lo;
  double gautschi_hi;
};

// ||X||_2 for X ~ N(0, sigma^2 I_d).
inline NormStats weight_norm_stats(int d, double sigma) {
  if (d < 1) throw ValidationError("weight_norm_stats: d must be at least 1");
  if (!(sigma > 0.0)) throw ValidationError("weight_norm_stats: sigma must be positive");
  const double dd = static_cast<double>(d);
  const double ratio = std::sqrt(2.0) * std::exp(std::lgamma((dd + 1.0) / 2.0) - std::lgamma(dd / 2.0));
  NormStats s;
  s.mean = sigma * ratio;
  s.variance = sigma * sigma * (dd - ratio * ratio);
  s.mode = sigma * std::sqrt(dd - 1.0);
  s.gautschi_lo = sigma * std::sqrt(dd - 0.5);
  s.gautschi_hi = sigma * std::sqrt(dd - 0.25);
  return s;
}

// Density of ||X||_2.
inline double weight_norm_density(int d, double sigma, double x) {
  if (d < 1) throw ValidationError("weight_norm_density: d must be at least 1");
  if (x < 0.0) return 0.0;
  const double dd = static_cast<double>(d);
  if (x == 0.0) return d == 1 ? std::sqrt(2.0 / std::numbers::pi) / sigma : 0.0;
  const double log_f = (1.0 - dd / 2.0) * std::log(2.0) - std::lgamma(dd / 2.0) - dd * std::log(sigma) +
                       (dd - 1.0) * std::log(x) - x * x / (2.0 * sigma * sigma);
  return std::exp(log_f);
}

// P(||X||_2 >= s).
inline double weight_norm_tail(int d, double sigma, double s) {
  if (d < 1) throw ValidationError("weight_norm_tail: d must be at least 1");
  if (!(sigma > 0.0)) throw ValidationError("weight_norm_tail: sigma must be positive");
  if (s <= 0.0) return 1.0;
  return gamma_q(static_cast<double>(d) / 2.0, s * s / (2.0 * sigma * sigma));
}

// Upper bound on P(||A||_2 >= sqrt(2) + delta) for A ~ N(0, (2/d) I_d),
// derived for d >= 3.
inline double weight_norm_tail_bound(int d, double delta) {
  if (d < 3) throw DomainError("weight_norm_tail_bound: derived for d >= 3");
  if (delta < -1.0) throw DomainError("weight_norm_tail_bound: need delta >= -1");
  const double dd = static_cast<double>(d);
  const double alpha = std::sqrt(2.0) * delta + delta * delta / 2.0;
  if (!(alpha > 0.0)) return 1.0;
  const double pre = 2.0 * std::sqrt(dd) / (4.0 + 2.0 * std::sqrt(2.0) * dd * delta + dd * delta * delta);
  const double log_base = std::log1p(alpha) - alpha;
  return pre / std::sqrt(std::numbers::pi) * std::exp(dd / 2.0 * log_base);
}

// Gaussian Lipschitz concentration: P(||A||_2 >= E||A||_2 + sqrt(tau/d)) <= exp(-tau/4).
// Returns the deviation sqrt(tau/d) at which the bound equals `level`.
inline double lipschitz_deviation(int d, double level) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("lipschitz_deviation: level must lie in (0, 1)");
  const double tau = -4.0 * std::log(level);
  return std::sqrt(tau / static_cast<double>(d));
}

// Smallest delta in [lo, hi] with tail(delta) <= level, for tail decreasing
// in delta, by bisection to absolute width tol.
inline double smallest_delta(const std::function<double(double)>& tail, double level, double lo, double hi,
                             double tol = 1e-12) {
  if (tail(hi) > level) throw DomainError("smallest_delta: level not reached on the bracket");
  if (tail(lo) <= level) return lo;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (tail(mid) <= level) hi = mid;
    else lo = mid;
  }
  return hi;
}

struct DeltaThresholds {
  double exact;      // from the exact tail
  double gamma;      // from weight_norm_tail_bound (NaN for d < 3)
  double lipschitz;  // E||A||_2 - sqrt(2) + lipschitz_deviation
};

// Smallest delta with P(||A||_2 >= sqrt(2) + delta) <= level under He scaling.
inline DeltaThresholds norm_delta_thresholds(int d, double level) {
  const double sigma = std::sqrt(2.0 / static_cast<double>(d));
  const double s2 = std::sqrt(2.0);
  DeltaThresholds t;
  t.exact = smallest_delta([&](double del) { return weight_norm_tail(d, sigma, s2 + del); }, level, 0.0, 16.0);
  t.gamma = d >= 3 ? smallest_delta([&](double del) { return weight_norm_tail_bound(d, del); }, level, 0.0, 16.0)
                   : std::numeric_limits<double>::quiet_NaN();
  t.lipschitz = weight_norm_stats(d, sigma).mean - s2 + lipschitz_deviation(d, level);
  return t;
}

// Psi(u, b) = E relu(Y)^2 for Y ~ N(b, 2u^2), the expected squared output of
// a He-initialized neuron with bias b at an input of normalized norm u.
inline double psi_output_size(double u, double b) {
  if (!(u >= 0.0)) throw DomainError("psi_output_size: u must be nonnegative");
  if (u == 0.0) return b >= 0.0 ? b * b : 0.0;
  const double z = b / (std::sqrt(2.0) * u);
  return (2.0 * u * u + b * b) * normal_cdf(z) +
         u * b * std::exp(-b * b / (4.0 * u * u)) / std::sqrt(std::numbers::pi);
}

// Density w.r.t. surface measure of the direction A/||A||_2 for
// A ~ U[-alpha, alpha]^d; independent of alpha.
inline double direction_density_uniform_weights(const Eigen::VectorXd& xi) {
  const Eigen::Index d = xi.size();
  if (d < 1) throw ValidationError("direction_density_uniform_weights: empty vector");
  if (std::abs(xi.norm() - 1.0) > 1e-10)
    throw DomainError("direction_density_uniform_weights: xi must be a unit vector");
  const double dd = static_cast<double>(d);
  const double inf_norm = xi.cwiseAbs().maxCoeff();
  return 1.0 / (dd * std::pow(2.0, dd) * std::pow(inf_norm, dd));
}

}  // namespace reluinit
