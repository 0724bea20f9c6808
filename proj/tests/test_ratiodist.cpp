#include <gtest/gtest.h>

#include <algorithm>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>
#include <optional>

#include "reluinit/ratiodist.hpp"

using namespace reluinit;

namespace {

// F(z) = int_{y>0} F_P(z y) f_Q(y) dy + int_{y<0} (1 - F_P((z y)^-)) f_Q(y) dy
// by tanh-sinh, split where F_P(z y) has a kink, for atomless numerators.
double cdf_oracle(const RatioPair& p, double z) {
  boost::math::quadrature::tanh_sinh<double> ts;
  const double lo = p.den.support_lo(), hi = p.den.support_hi();
  std::vector<double> kinks;
  if (z != 0.0 && std::isfinite(p.num.support_lo())) {
    kinks.push_back(p.num.support_lo() / z);
    kinks.push_back(p.num.support_hi() / z);
  }
  auto pieces = [&](auto f, double a, double b) {
    std::vector<double> cuts = {a};
    for (double k : kinks)
      if (k > a && k < b) cuts.push_back(k);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) s += ts.integrate(f, cuts[i], cuts[i + 1]);
    return s;
  };
  double total = 0.0;
  auto pos = [&](double y) { return p.num.cdf(z * y) * p.den.pdf(y); };
  auto neg = [&](double y) { return (1.0 - p.num.cdf(z * y)) * p.den.pdf(y); };
  if (hi > 0.0) total += pieces(pos, std::max(lo, 0.0), hi);
  if (lo < 0.0) total += pieces(neg, lo, std::min(hi, 0.0));
  return total;
}

double ecdf(std::vector<double> xs, double z) {
  return static_cast<double>(std::count_if(xs.begin(), xs.end(), [&](double v) { return v <= z; })) /
         static_cast<double>(xs.size());
}

RatioPair nn(double sp, double sq) { return {ScalarDist::normal(sp), ScalarDist::normal(sq)}; }

}  // namespace

TEST(ScalarDist, RejectsInvalidParameters) {
  EXPECT_THROW(ScalarDist::normal(0.0), ValidationError);
  EXPECT_THROW(ScalarDist::normal(-1.0), ValidationError);
  EXPECT_THROW(ScalarDist::uniform(1.0, 1.0), ValidationError);
  EXPECT_THROW(ScalarDist::dirac(std::nan("")), ValidationError);
}

TEST(RatioPair, DenominatorMustNotCharge0) {
  EXPECT_THROW(RatioPair(ScalarDist::normal(1.0), ScalarDist::dirac(1.0)), ValidationError);
  EXPECT_THROW(RatioPair(ScalarDist::normal(1.0), ScalarDist::uniform(0.0, 1.0)), ValidationError);
  EXPECT_THROW(RatioPair(ScalarDist::normal(1.0), ScalarDist::uniform(-1.0, 0.0)), ValidationError);
  EXPECT_NO_THROW(RatioPair(ScalarDist::normal(1.0), ScalarDist::uniform(0.5, 1.0)));
  EXPECT_NO_THROW(RatioPair(ScalarDist::dirac(0.0), ScalarDist::uniform(-1.0, 2.0)));
}

TEST(CdfRatio, NormalOverNormal) {
  EXPECT_NEAR(cdf_ratio(nn(1, 1), 0.0), 0.5, 1e-15);
  EXPECT_NEAR(cdf_ratio(nn(1, 1), 1.0), 0.75, 1e-15);
  EXPECT_NEAR(cdf_ratio(nn(1, 1), 1.0), std::atan(1.0) / std::numbers::pi + 0.5, 1e-15);
}

TEST(CdfRatio, UniformOverSymmetricUniform) {
  const RatioPair p(ScalarDist::uniform(0.0, 1.0), ScalarDist::uniform(-1.0, 1.0));
  EXPECT_NEAR(cdf_ratio(p, 1.0), 0.75, 1e-15);
  EXPECT_NEAR(cdf_ratio(p, 1.0), (2.0 + 1.0) / 4.0, 1e-15);
}

TEST(CdfRatio, MonteCarloOracle) {
  const RatioPair p(ScalarDist::normal(1.0), ScalarDist::normal(1.0));
  const auto xs = sample_ratio(p, 1'000'000, 5);
  EXPECT_NEAR(ecdf(xs, 1.0), 0.75, 0.005);
  const RatioPair u(ScalarDist::uniform(0.0, 1.0), ScalarDist::uniform(-1.0, 1.0));
  const auto us = sample_ratio(u, 1'000'000, 6);
  EXPECT_NEAR(ecdf(us, 1.0), 0.75, 0.005);
}

TEST(CdfRatio, ClosedFormsMatchIndependentQuadrature) {
  const std::vector<RatioPair> pairs = {
      nn(1.0, 1.0),
      nn(0.3, 2.0),
      {ScalarDist::uniform(0.0, 1.0), ScalarDist::uniform(-1.0, 1.0)},
      {ScalarDist::uniform(0.0, 2.0), ScalarDist::uniform(-0.5, 0.5)},
      {ScalarDist::uniform(-1.0, 0.0), ScalarDist::uniform(-3.0, 3.0)},
      {ScalarDist::uniform(-1.0, 1.0), ScalarDist::uniform(-2.0, 2.0)},
  };
  for (const auto& p : pairs)
    for (double z = -6.0; z <= 6.0; z += 0.37) EXPECT_NEAR(cdf_ratio(p, z), cdf_oracle(p, z), 1e-10) << z;
}

TEST(CdfRatio, NumericFallbackMatchesIndependentQuadrature) {
  const std::vector<RatioPair> pairs = {
      {ScalarDist::uniform(0.0, 1.0), ScalarDist::normal(1.0)},
      {ScalarDist::normal(1.0), ScalarDist::uniform(-1.0, 1.0)},
      {ScalarDist::normal(0.7), ScalarDist::uniform(-1.0, 3.0)},
      {ScalarDist::uniform(-0.5, 2.0), ScalarDist::uniform(0.5, 1.5)},
  };
  for (const auto& p : pairs) {
    EXPECT_FALSE(has_closed_form(p));
    for (double z = -4.0; z <= 4.0; z += 0.29) EXPECT_NEAR(cdf_ratio(p, z), cdf_oracle(p, z), 1e-9) << z;
  }
  EXPECT_NEAR(cdf_ratio(pairs[0], 0.5), 0.695225788890302, 1e-9);
  EXPECT_NEAR(cdf_ratio(pairs[1], 0.7), 0.634195852013111, 1e-9);
}

TEST(CdfRatio, DiracNumeratorOneSidedLimits) {
  const RatioPair p(ScalarDist::dirac(0.0), ScalarDist::normal(1.0));
  EXPECT_EQ(cdf_ratio(p, 0.0), 1.0);
  EXPECT_EQ(cdf_ratio_left(p, 0.0), 0.0);
  EXPECT_EQ(cdf_ratio(p, -1e-9), 0.0);
  const RatioPair q(ScalarDist::dirac(1.0), ScalarDist::normal(1.0));
  // b / Y <= z  with b = 1: {0 < 1/z <= Y} for z > 0 plus {Y < 0}.
  for (double z : {-2.0, -0.5, 0.5, 3.0}) {
    const double exact = z > 0 ? 0.5 + (1.0 - normal_cdf(1.0 / z)) : 0.5 - normal_cdf(1.0 / z);
    EXPECT_NEAR(cdf_ratio(q, z), exact, 1e-15) << z;
  }
}

TEST(PdfRatio, KnownValues) {
  EXPECT_NEAR(pdf_ratio(nn(1, 1), 0.0), 1.0 / std::numbers::pi, 1e-15);
  EXPECT_EQ(pdf_ratio(RatioPair(ScalarDist::dirac(0.1), ScalarDist::normal(std::sqrt(2.0))), 0.0), 0.0);
  const RatioPair uu(ScalarDist::uniform(-1.0, 1.0), ScalarDist::uniform(-1.0, 1.0));
  EXPECT_NEAR(pdf_ratio(uu, 0.0), 0.25, 1e-15);
  EXPECT_THROW(pdf_ratio(RatioPair(ScalarDist::dirac(0.0), ScalarDist::normal(1.0)), 0.0), DomainError);
}

TEST(PdfRatio, SymmetricUniformMatchesMinFormula) {
  for (double rho : {0.5, 1.0, 3.0}) {
    const RatioPair p(ScalarDist::uniform(-1.0, 1.0), ScalarDist::uniform(-rho, rho));
    for (double z : {-4.0, -1.0, -0.2, 0.1, 0.3, 2.0})
      EXPECT_NEAR(pdf_ratio(p, z), 0.25 * std::min(rho, 1.0 / (rho * z * z)), 1e-14) << rho << " " << z;
  }
}

TEST(PdfRatio, DiracNormalModes) {
  const double b = 0.1, s = std::sqrt(2.0);
  const RatioPair p(ScalarDist::dirac(b), ScalarDist::normal(s));
  const double mode = b / (std::sqrt(2.0) * s);
  for (double sgn : {-1.0, 1.0}) {
    const double m = sgn * mode;
    EXPECT_GT(pdf_ratio(p, m), pdf_ratio(p, m * 1.01));
    EXPECT_GT(pdf_ratio(p, m), pdf_ratio(p, m * 0.99));
  }
}

TEST(PdfRatio, DerivativeOfCdf) {
  const std::vector<RatioPair> pairs = {
      nn(1.0, 2.0),
      {ScalarDist::dirac(0.5), ScalarDist::normal(1.0)},
      {ScalarDist::dirac(-0.5), ScalarDist::uniform(-1.0, 1.0)},
      {ScalarDist::uniform(0.0, 1.0), ScalarDist::uniform(-2.0, 2.0)},
      {ScalarDist::uniform(-1.0, 0.0), ScalarDist::uniform(-2.0, 2.0)},
      {ScalarDist::uniform(-1.0, 1.0), ScalarDist::uniform(-0.5, 0.5)},
      {ScalarDist::uniform(0.0, 1.0), ScalarDist::normal(1.0)},
  };
  const double h = 1e-5;
  for (const auto& p : pairs)
    for (double z : {-3.1, -0.77, 0.13, 0.61, 2.3}) {
      const double fd = (cdf_ratio(p, z + h) - cdf_ratio(p, z - h)) / (2 * h);
      EXPECT_NEAR(pdf_ratio(p, z), fd, 1e-5) << p.num.describe() << "/" << p.den.describe() << " z=" << z;
    }
}

TEST(Split, ExamplesFromClosedForms) {
  EXPECT_NEAR(fplus(nn(1, 1), 0.0), 0.25, 1e-15);
  EXPECT_EQ(fplus(RatioPair(ScalarDist::dirac(0.1), ScalarDist::normal(std::sqrt(2.0))), -1.0), 0.0);
  const RatioPair u(ScalarDist::uniform(0.0, 1.0), ScalarDist::uniform(-1.0, 1.0));
  EXPECT_NEAR(fplus(u, 0.25), 0.0625, 1e-15);
}

TEST(Split, FplusMonteCarlo) {
  const RatioPair u(ScalarDist::uniform(0.0, 1.0), ScalarDist::uniform(-1.0, 1.0));
  CounterRng rng(99);
  const int n = 1'000'000;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    const double x = u.num.sample(rng), y = u.den.sample(rng);
    if (y > 0 && x <= 0.25 * y) ++hits;
  }
  const double se = std::sqrt(0.0625 * 0.9375 / n);
  EXPECT_NEAR(static_cast<double>(hits) / n, 0.0625, 4 * se);
}

TEST(Split, PropertiesOnRandomPairs) {
  CounterRng rng(2024);
  for (int i = 0; i < 2000; ++i) {
    const double s1 = uniform(rng, 0.1, 3.0), s2 = uniform(rng, 0.1, 3.0), b = uniform(rng, -2.0, 2.0);
    std::optional<RatioPair> p;
    switch (uniform_index(rng, 6)) {
      case 0: p.emplace(ScalarDist::normal(s1), ScalarDist::normal(s2)); break;
      case 1: p.emplace(ScalarDist::dirac(b), ScalarDist::normal(s2)); break;
      case 2: p.emplace(ScalarDist::uniform(0.0, s1), ScalarDist::uniform(-s2, s2)); break;
      case 3: p.emplace(ScalarDist::uniform(-s1, s1), ScalarDist::uniform(-s2, s2)); break;
      case 4: p.emplace(ScalarDist::dirac(b), ScalarDist::uniform(-s2, s2)); break;
      default: p.emplace(ScalarDist::uniform(-s1, 0.0), ScalarDist::uniform(-s2, s2)); break;
    }
    const double z = uniform(rng, -6.0, 6.0);
    const double fm = fminus(*p, z), fp = fplus(*p, z), f = cdf_ratio(*p, z);
    EXPECT_GE(fm, 0.0);
    EXPECT_GE(fp, 0.0);
    EXPECT_LE(fm, 1.0);
    EXPECT_LE(fp, 1.0);
    EXPECT_NEAR(fm + fp, f, 1e-10);
    const auto [qm, qp] = split_by_quadrature(*p, z);
    EXPECT_NEAR(fm, qm, 1e-10);
    EXPECT_NEAR(fp, qp, 1e-10);
    if (p->both_symmetric()) {
      EXPECT_NEAR(fm, f / 2, 1e-12);
      EXPECT_NEAR(fp, f / 2, 1e-12);
    }
    // Symmetric denominator, atomless numerator: F(-z) + F(z) = 1.
    if (p->num.atomless() && p->den.symmetric() && p->num.symmetric())
      EXPECT_NEAR(cdf_ratio(*p, -z) + cdf_ratio(*p, z), 1.0, 1e-12);
    // With an atom at b the reflected sum uses the left limit.
    if (p->num.is<Dirac>() && z > 0)
      EXPECT_NEAR(cdf_ratio(RatioPair(ScalarDist::dirac(-b), p->den), -z) + cdf_ratio_left(*p, z), 1.0, 1e-12);
  }
}

TEST(Split, CdfIsMonotone) {
  const std::vector<RatioPair> pairs = {nn(1, 0.5),
                                        {ScalarDist::dirac(0.3), ScalarDist::uniform(-1.0, 1.0)},
                                        {ScalarDist::uniform(0.0, 1.0), ScalarDist::uniform(-0.2, 0.2)},
                                        {ScalarDist::normal(1.0), ScalarDist::uniform(-1.0, 1.0)}};
  for (const auto& p : pairs) {
    double prev = 0.0;
    for (double z = -20.0; z <= 20.0; z += 0.05) {
      const double f = cdf_ratio(p, z);
      EXPECT_GE(f, prev - 1e-12);
      prev = f;
    }
  }
}

TEST(SampleRatio, DeterministicAndValidated) {
  const RatioPair p(ScalarDist::dirac(1.0), ScalarDist::normal(1.0));
  EXPECT_THROW(sample_ratio(p, 0, 1), ValidationError);
  EXPECT_EQ(sample_ratio(p, 1000, 17), sample_ratio(p, 1000, 17));
  EXPECT_NE(sample_ratio(p, 1000, 17), sample_ratio(p, 1000, 18));
}

TEST(SampleRatio, KolmogorovSmirnovDiracOverNormal) {
  const RatioPair p(ScalarDist::dirac(1.0), ScalarDist::normal(1.0));
  auto xs = sample_ratio(p, 1'000'000, 4);
  std::sort(xs.begin(), xs.end());
  double ks = 0.0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); i += 97) {
    const double f = cdf_ratio(p, xs[i]);
    ks = std::max({ks, std::abs(f - (i + 1) / n), std::abs(f - i / n)});
  }
  EXPECT_LT(ks, 0.005);
}

TEST(TailBound, ExamplesAndInequality) {
  EXPECT_LE(ratio_tail_lower_bound(nn(1, 1), 2.0, 1.0), 1.0 - cdf_ratio_left(nn(1, 1), 2.0));
  const RatioPair u(ScalarDist::uniform(0.0, 1.0), ScalarDist::uniform(-1.0, 1.0));
  EXPECT_NEAR(ratio_tail_lower_bound(u, -1.0, 0.5), 0.125, 1e-15);
  EXPECT_LE(ratio_tail_lower_bound(u, -1.0, 0.5), cdf_ratio(u, -1.0));
  const RatioPair d(ScalarDist::dirac(1.0), ScalarDist::normal(1.0));
  EXPECT_NEAR(ratio_tail_lower_bound(d, 1.0, 1.0), normal_cdf(1.0) - 0.5, 1e-15);
  EXPECT_LE(ratio_tail_lower_bound(d, 1.0, 1.0), 1.0 - cdf_ratio_left(d, 1.0));
  for (const auto& p : {nn(1, 1), u, d})
    for (double z : {-3.0, -1.0, -0.2, 0.2, 1.0, 3.0})
      for (double eps : {0.1, 0.5, 1.0, 2.0}) {
        const double exact = z < 0 ? cdf_ratio(p, z) : 1.0 - cdf_ratio_left(p, z);
        EXPECT_LE(ratio_tail_lower_bound(p, z, eps), exact + 1e-15);
      }
  EXPECT_THROW(ratio_tail_lower_bound(u, 0.0, 1.0), DomainError);
}
