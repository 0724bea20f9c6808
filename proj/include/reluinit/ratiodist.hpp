#pragma once

// Ratio distributions P/Q and the split functions F-, F+.
//
// For independent X ~ P and Y ~ Q with Q({0}) = 0:
//   F(z)  = P(X/Y <= z) = F+(z) + F-(z)
//   F+(z) = P(X <= zY, Y > 0) = int_(0,inf)  P((-inf, zt]) dQ(t)
//   F-(z) = P(X >= zY, Y < 0) = int_(-inf,0) P([zt, inf))  dQ(t)
//
// Closed forms are used for the normal/normal, Dirac/any, and
// uniform/symmetric-uniform families; every other pair goes through
// adaptive quadrature of the integral representation.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "reluinit/errors.hpp"
#include "reluinit/quadrature.hpp"
#include "reluinit/rng.hpp"
#include "reluinit/special.hpp"

namespace reluinit {

// Standard normal quantile at 1e-12: N(0, s^2) puts less than 1e-12 mass
// beyond s * kNormalTruncation on either side.
inline constexpr double kNormalTruncation = 7.0344838253011311;

struct Normal {
  double sigma;
};

struct Uniform {
  double lo;
  double hi;
};

struct Dirac {
  double b;
};

class ScalarDist {
 public:
  using Kind = std::variant<Normal, Uniform, Dirac>;

  static ScalarDist normal(double sigma) { return ScalarDist(Normal{sigma}); }
  static ScalarDist uniform(double lo, double hi) { return ScalarDist(Uniform{lo, hi}); }
  static ScalarDist dirac(double b) { return ScalarDist(Dirac{b}); }

  explicit ScalarDist(Kind kind) : kind_(kind) { validate(); }

  const Kind& kind() const noexcept { return kind_; }

  template <typename T>
  bool is() const noexcept {
    return std::holds_alternative<T>(kind_);
  }
  template <typename T>
  const T& as() const {
    return std::get<T>(kind_);
  }

  // P((-inf, x])
  double cdf(double x) const {
    return std::visit(
        [x](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Normal>) {
            return normal_cdf(x / d.sigma);
          } else if constexpr (std::is_same_v<T, Uniform>) {
            if (x <= d.lo) return 0.0;
            if (x >= d.hi) return 1.0;
            return (x - d.lo) / (d.hi - d.lo);
          } else {
            return x >= d.b ? 1.0 : 0.0;
          }
        },
        kind_);
  }

  // P((-inf, x))
  double cdf_left(double x) const {
    if (const auto* d = std::get_if<Dirac>(&kind_)) return x > d->b ? 1.0 : 0.0;
    return cdf(x);
  }

  // P([x, inf))
  double tail_from(double x) const { return 1.0 - cdf_left(x); }

  double mass_at(double x) const {
    if (const auto* d = std::get_if<Dirac>(&kind_)) return x == d->b ? 1.0 : 0.0;
    return 0.0;
  }

  // Lebesgue density; Dirac laws have none.
  double pdf(double x) const {
    return std::visit(
        [x](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Normal>) {
            return normal_pdf(x / d.sigma) / d.sigma;
          } else if constexpr (std::is_same_v<T, Uniform>) {
            return (x >= d.lo && x <= d.hi) ? 1.0 / (d.hi - d.lo) : 0.0;
          } else {
            throw DomainError("Dirac distribution has no Lebesgue density");
          }
        },
        kind_);
  }

  bool atomless() const noexcept { return !is<Dirac>(); }

  bool symmetric() const noexcept {
    return std::visit(
        [](const auto& d) -> bool {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Normal>) return true;
          else if constexpr (std::is_same_v<T, Uniform>) return d.lo == -d.hi;
          else return d.b == 0.0;
        },
        kind_);
  }

  // Interval carrying all but at most 2e-12 of the mass.
  double support_lo() const {
    if (const auto* n = std::get_if<Normal>(&kind_)) return -kNormalTruncation * n->sigma;
    if (const auto* u = std::get_if<Uniform>(&kind_)) return u->lo;
    return std::get<Dirac>(kind_).b;
  }
  double support_hi() const {
    if (const auto* n = std::get_if<Normal>(&kind_)) return kNormalTruncation * n->sigma;
    if (const auto* u = std::get_if<Uniform>(&kind_)) return u->hi;
    return std::get<Dirac>(kind_).b;
  }

  // Points where the CDF is not smooth.
  std::vector<double> kinks() const {
    if (const auto* u = std::get_if<Uniform>(&kind_)) return {u->lo, u->hi};
    if (const auto* d = std::get_if<Dirac>(&kind_)) return {d->b};
    return {};
  }

  // Standard deviation; zero for Dirac.
  double stddev() const {
    if (const auto* n = std::get_if<Normal>(&kind_)) return n->sigma;
    if (const auto* u = std::get_if<Uniform>(&kind_)) return (u->hi - u->lo) / std::sqrt(12.0);
    return 0.0;
  }

  template <typename Rng>
  double sample(Rng& rng) const {
    if (const auto* n = std::get_if<Normal>(&kind_)) return n->sigma * standard_normal(rng);
    if (const auto* u = std::get_if<Uniform>(&kind_)) return reluinit::uniform(rng, u->lo, u->hi);
    return std::get<Dirac>(kind_).b;
  }

  std::string describe() const {
    return std::visit(
        [](const auto& d) -> std::string {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Normal>)
            return "Normal(0," + std::to_string(d.sigma) + "^2)";
          else if constexpr (std::is_same_v<T, Uniform>)
            return "Uniform[" + std::to_string(d.lo) + "," + std::to_string(d.hi) + "]";
          else
            return "Dirac(" + std::to_string(d.b) + ")";
        },
        kind_);
  }

 private:
  void validate() const {
    std::visit(
        [](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, Normal>) {
            if (!(d.sigma > 0.0) || !std::isfinite(d.sigma))
              throw ValidationError("Normal: sigma must be positive and finite");
          } else if constexpr (std::is_same_v<T, Uniform>) {
            if (!(d.lo < d.hi) || !std::isfinite(d.lo) || !std::isfinite(d.hi))
              throw ValidationError("Uniform: need finite lo < hi");
          } else {
            if (!std::isfinite(d.b)) throw ValidationError("Dirac: location must be finite");
          }
        },
        kind_);
  }

  Kind kind_;
};

// Law of X/Y for X ~ num (bias law) and Y ~ den (weight law).
struct RatioPair {
  ScalarDist num;
  ScalarDist den;

  RatioPair(ScalarDist numerator, ScalarDist denominator)
      : num(std::move(numerator)), den(std::move(denominator)) {
    validate();
  }

  void validate() const {
    if (den.is<Dirac>())
      throw ValidationError("ratio denominator must not be a Dirac distribution");
    if (den.is<Uniform>()) {
      const auto& u = den.as<Uniform>();
      const bool straddles = u.lo < 0.0 && 0.0 < u.hi;
      const bool excludes = u.lo > 0.0 || u.hi < 0.0;
      if (!straddles && !excludes)
        throw ValidationError("uniform denominator must not have 0 as an endpoint");
    }
  }

  bool both_symmetric() const { return num.symmetric() && den.symmetric(); }
};

namespace detail {

struct Split {
  double minus;
  double plus;
};

inline bool symmetric_uniform(const ScalarDist& d) {
  return d.is<Uniform>() && d.as<Uniform>().lo == -d.as<Uniform>().hi;
}

// Dirac(b) numerator over an atomless denominator: both halves are
// probabilities of intervals under Q.
inline Split split_dirac(double b, const ScalarDist& q, double z) {
  const double q_neg = q.cdf_left(0.0);        // Q((-inf, 0))
  const double q_pos = 1.0 - q.cdf(0.0);       // Q((0, inf))
  Split s{0.0, 0.0};
  // F+(z) = Q({y > 0 : b <= z y})
  if (z > 0.0) {
    s.plus = b > 0.0 ? q.tail_from(b / z) : q_pos;
  } else if (z == 0.0) {
    s.plus = b <= 0.0 ? q_pos : 0.0;
  } else {
    s.plus = b < 0.0 ? q.cdf(b / z) - q.cdf(0.0) : 0.0;
  }
  // F-(z) = Q({y < 0 : b >= z y})
  if (z > 0.0) {
    s.minus = b >= 0.0 ? q_neg : q.cdf(b / z);
  } else if (z == 0.0) {
    s.minus = b >= 0.0 ? q_neg : 0.0;
  } else {
    s.minus = b > 0.0 ? q_neg - q.cdf_left(b / z) : 0.0;
  }
  return s;
}

// Uniform[0, beta] over Uniform[-alpha, alpha].
inline double asym_uniform_cdf(double beta, double alpha, double z) {
  const double edge = beta / alpha;
  if (z <= -edge) return -beta / (4.0 * alpha * z);
  if (z >= edge) return 1.0 - beta / (4.0 * alpha * z);
  return (2.0 * beta + alpha * z) / (4.0 * beta);
}

inline double asym_uniform_fplus(double beta, double alpha, double z) {
  if (z <= 0.0) return 0.0;
  const double edge = beta / alpha;
  if (z <= edge) return alpha * z / (4.0 * beta);
  return 0.5 - beta / (4.0 * alpha * z);
}

inline double asym_uniform_pdf(double beta, double alpha, double z) {
  return std::min(alpha * alpha, beta * beta / (z * z)) / (4.0 * alpha * beta);
}

enum class Family { NormalNormal, DiracAny, UniformAsym, UniformAsymReflected, UniformSym, Numeric };

inline Family classify_pair(const RatioPair& p) {
  if (p.num.is<Dirac>()) return Family::DiracAny;
  if (p.num.is<Normal>() && p.den.is<Normal>()) return Family::NormalNormal;
  if (p.num.is<Uniform>() && symmetric_uniform(p.den)) {
    const auto& u = p.num.as<Uniform>();
    if (u.lo == 0.0) return Family::UniformAsym;
    if (u.hi == 0.0) return Family::UniformAsymReflected;
    if (u.lo == -u.hi) return Family::UniformSym;
  }
  return Family::Numeric;
}

inline std::vector<double> scaled_breakpoints(const ScalarDist& num, const ScalarDist& den, double z) {
  std::vector<double> bp{0.0};
  for (double k : den.kinks()) bp.push_back(k);
  if (z != 0.0)
    for (double k : num.kinks()) bp.push_back(k / z);
  return bp;
}

inline Split split_numeric(const RatioPair& p, double z) {
  const ScalarDist& num = p.num;
  const ScalarDist& den = p.den;
  const auto bp = scaled_breakpoints(num, den, z);
  const double lo = den.support_lo();
  const double hi = den.support_hi();
  Split s{0.0, 0.0};
  if (hi > 0.0) {
    s.plus = integrate([&](double t) { return num.cdf(z * t) * den.pdf(t); },
                       std::max(lo, 0.0), hi, bp);
  }
  if (lo < 0.0) {
    s.minus = integrate([&](double t) { return num.tail_from(z * t) * den.pdf(t); },
                        lo, std::min(hi, 0.0), bp);
  }
  return s;
}

inline Split split(const RatioPair& p, double z) {
  switch (classify_pair(p)) {
    case Family::DiracAny:
      return split_dirac(p.num.as<Dirac>().b, p.den, z);
    case Family::NormalNormal: {
      const double f = 0.5 + std::atan(p.den.as<Normal>().sigma * z / p.num.as<Normal>().sigma) /
                                 std::numbers::pi;
      return {0.5 * f, 0.5 * f};
    }
    case Family::UniformAsym: {
      const double beta = p.num.as<Uniform>().hi;
      const double alpha = p.den.as<Uniform>().hi;
      const double plus = asym_uniform_fplus(beta, alpha, z);
      return {asym_uniform_cdf(beta, alpha, z) - plus, plus};
    }
    case Family::UniformAsymReflected: {
      // Uniform[-beta, 0] is the reflection of Uniform[0, beta]; over a
      // symmetric denominator the halves swap and F is unchanged.
      const double beta = -p.num.as<Uniform>().lo;
      const double alpha = p.den.as<Uniform>().hi;
      const double minus = asym_uniform_fplus(beta, alpha, z);
      return {minus, asym_uniform_cdf(beta, alpha, z) - minus};
    }
    case Family::UniformSym: {
      const double f = asym_uniform_cdf(p.num.as<Uniform>().hi, p.den.as<Uniform>().hi, z);
      return {0.5 * f, 0.5 * f};
    }
    case Family::Numeric:
      break;
  }
  return split_numeric(p, z);
}

}  // namespace detail

// True when the pair is evaluated by a closed form rather than quadrature.
inline bool has_closed_form(const RatioPair& pair) {
  return detail::classify_pair(pair) != detail::Family::Numeric;
}

// (F-(z), F+(z)) by quadrature of the integral representation, bypassing
// any closed form.
inline std::pair<double, double> split_by_quadrature(const RatioPair& pair, double z) {
  const auto s = detail::split_numeric(pair, z);
  return {s.minus, s.plus};
}

inline double fminus(const RatioPair& pair, double z) { return detail::split(pair, z).minus; }
inline double fplus(const RatioPair& pair, double z) { return detail::split(pair, z).plus; }

// Right-continuous CDF of P/Q.
inline double cdf_ratio(const RatioPair& pair, double z) {
  const auto s = detail::split(pair, z);
  return s.minus + s.plus;
}

// P(X/Y < z). P/Q has an atom only at 0, of size P({0}).
inline double cdf_ratio_left(const RatioPair& pair, double z) {
  const double f = cdf_ratio(pair, z);
  return z == 0.0 ? f - pair.num.mass_at(0.0) : f;
}

// Lebesgue density of P/Q.
//
// Dirac(0) numerators give an atom at 0 and throw there. For Dirac(b), b != 0,
// the density |b| z^-2 f_Q(b/z) extends continuously to 0 at z = 0.
inline double pdf_ratio(const RatioPair& pair, double z) {
  using detail::Family;
  const ScalarDist& num = pair.num;
  const ScalarDist& den = pair.den;
  switch (detail::classify_pair(pair)) {
    case Family::DiracAny: {
      const double b = num.as<Dirac>().b;
      if (z == 0.0) {
        if (b == 0.0) throw DomainError("pdf_ratio: Dirac(0) numerator has an atom at 0");
        return 0.0;
      }
      if (b == 0.0) return 0.0;
      const double density = std::abs(b) / (z * z) * den.pdf(b / z);
      return std::isfinite(density) ? density : 0.0;
    }
    case Family::NormalNormal: {
      const double sp = num.as<Normal>().sigma;
      const double sq = den.as<Normal>().sigma;
      return sp * sq / (std::numbers::pi * (sq * sq * z * z + sp * sp));
    }
    case Family::UniformAsym:
    case Family::UniformSym:
    case Family::UniformAsymReflected: {
      const auto& u = num.as<Uniform>();
      const double beta = u.hi - u.lo;
      const double alpha = den.as<Uniform>().hi;
      // The symmetric case has the same density with beta the half-width.
      const double width = detail::classify_pair(pair) == Family::UniformSym ? u.hi : beta;
      if (z == 0.0) return alpha / (4.0 * width);
      return detail::asym_uniform_pdf(width, alpha, z);
    }
    case Family::Numeric:
      break;
  }
  const auto bp = detail::scaled_breakpoints(num, den, z);
  return integrate([&](double t) { return std::abs(t) * num.pdf(t * z) * den.pdf(t); },
                   den.support_lo(), den.support_hi(), bp);
}

// n i.i.d. draws of X/Y from a stream keyed by `seed`.
inline std::vector<double> sample_ratio(const RatioPair& pair, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ValidationError("sample_ratio: n must be at least 1");
  CounterRng rng(seed);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = pair.num.sample(rng);
    const double y = pair.den.sample(rng);
    out.push_back(x / y);
  }
  return out;
}

// Product lower bound on P/Q((-inf, z]) for z < 0 and on P/Q([z, inf)) for
// z > 0, obtained by restricting the denominator to [-eps, 0) and (0, eps].
inline double ratio_tail_lower_bound(const RatioPair& pair, double z, double eps) {
  if (z == 0.0) throw DomainError("ratio_tail_lower_bound: z must be nonzero");
  if (!(eps > 0.0)) throw DomainError("ratio_tail_lower_bound: eps must be positive");
  const ScalarDist& p = pair.num;
  const ScalarDist& q = pair.den;
  const double q_left = q.cdf_left(0.0) - q.cdf_left(-eps);  // Q([-eps, 0))
  const double q_right = q.cdf(eps) - q.cdf(0.0);            // Q((0, eps])
  if (z < 0.0) return p.tail_from(-eps * z) * q_left + p.cdf(eps * z) * q_right;
  return p.tail_from(eps * z) * q_right + p.cdf(-eps * z) * q_left;
}

}  // namespace reluinit
