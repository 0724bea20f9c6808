#pragma once

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <vector>

namespace reluinit {

struct QuadratureOptions {
  double tolerance = 1e-10;
  unsigned max_depth = 18;
};

// Adaptive 15-point Gauss-Kronrod on [lo, hi], split at every breakpoint that
// falls strictly inside the interval (kinks and jumps of the integrand).
template <typename F>
double integrate(F&& f, double lo, double hi, std::vector<double> breakpoints = {},
                 QuadratureOptions opts = {}) {
  if (!(hi > lo)) return 0.0;
  breakpoints.push_back(lo);
  breakpoints.push_back(hi);
  std::sort(breakpoints.begin(), breakpoints.end());
  double total = 0.0;
  double left = lo;
  for (double p : breakpoints) {
    if (p <= left) continue;
    if (p > hi) break;
    total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        f, left, p, opts.max_depth, opts.tolerance);
    left = p;
  }
  return total;
}

}  // namespace reluinit
