#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "reluinit/analytics.hpp"
#include "reluinit/geometry.hpp"
#include "reluinit/initstrat.hpp"
#include "reluinit/lab/experiments.hpp"

using namespace reluinit;

namespace {

DataSet uniform_data(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  CounterRng rng(seed);
  Matrix x(n, d);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < d; ++k) x(j, k) = uniform_open01(rng);
  return DataSet(x);
}

}  // namespace

TEST(InitLayer, HeNormalVariance) {
  InitConfig cfg;
  const auto L = init_layer(cfg, 1, 100000, nullptr, 1);
  const double n = 1e5;
  const double mean = L.W.mean();
  const double var = (L.W.array() - mean).square().sum() / (n - 1);
  // Var of the sample variance of N(0, 2) is 2 * 2^2 / (n - 1).
  EXPECT_NEAR(var, 2.0, 3.0 * std::sqrt(8.0 / (n - 1)));
  EXPECT_TRUE(L.b.isZero());
}

TEST(InitLayer, SphereRowsAreUnitAndBallRowsBounded) {
  InitConfig cfg;
  cfg.weight = weights::Sphere{};
  const auto S = init_layer(cfg, 8, 1000, nullptr, 2);
  for (Eigen::Index i = 0; i < S.W.rows(); ++i) EXPECT_NEAR(S.W.row(i).norm(), 1.0, 1e-12);
  cfg.weight = weights::Ball{};
  const auto B = init_layer(cfg, 8, 100000, nullptr, 3);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < B.W.rows(); ++i) {
    EXPECT_LE(B.W.row(i).norm(), 2.0);
    sum += B.W.row(i).norm();
  }
  EXPECT_NEAR(sum / 1e5, 1.0, 0.01);
}

TEST(InitLayer, UniformSchemesStayInRange) {
  InitConfig cfg;
  cfg.weight = weights::HeUniform{};
  const auto H = init_layer(cfg, 6, 500, nullptr, 4);
  EXPECT_LE(H.W.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 6.0));
  cfg.weight = weights::XavierUniform{};
  const auto X = init_layer(cfg, 6, 10, nullptr, 4);
  EXPECT_LE(X.W.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 16.0));
  cfg.bias = bias::UniformRange{0.2, 0.3};
  const auto U = init_layer(cfg, 6, 500, nullptr, 5);
  EXPECT_GE(U.b.minCoeff(), 0.2);
  EXPECT_LE(U.b.maxCoeff(), 0.3);
}

TEST(InitLayer, HullOnSinglePointPutsEveryKnotThere) {
  InitConfig cfg;
  cfg.bias = bias::HullFixed{1};
  const auto d = DataSet::from_1d({0.3});
  const auto L = init_layer(cfg, 1, 200, &d, 6);
  for (Eigen::Index i = 0; i < 200; ++i) EXPECT_EQ(L.b(i), -0.3 * L.W(i, 0));
  cfg.bias = bias::HullFixed{5};
  const auto M = init_layer(cfg, 1, 200, &d, 7);
  for (Eigen::Index i = 0; i < 200; ++i) EXPECT_NEAR(knot_of(Neuron::scalar(M.W(i, 0), M.b(i))), 0.3, 1e-15);
}

TEST(InitLayer, DataDependentSchemesNeedData) {
  InitConfig cfg;
  cfg.bias = bias::HullRandom{3};
  EXPECT_THROW(init_layer(cfg, 2, 4, nullptr, 1), ValidationError);
  cfg.bias = bias::KnotUniform1D{};
  EXPECT_THROW(init_layer(cfg, 1, 4, nullptr, 1), ValidationError);
  const auto d2 = uniform_data(10, 2, 1);
  EXPECT_THROW(init_layer(cfg, 2, 4, &d2, 1), ValidationError);
  cfg.bias = bias::HullFixed{0};
  EXPECT_THROW(validate(cfg.bias), ValidationError);
  EXPECT_THROW(validate(WeightScheme(weights::NormalSigma{-1.0})), ValidationError);
}

TEST(InitLayer, HullAnchorsAreInsideTheDataHull) {
  const auto d = uniform_data(50, 2, 8);
  InitConfig cfg;
  cfg.weight = weights::Sphere{};
  cfg.bias = bias::HullRandom{4};
  const auto L = init_layer(cfg, 2, 500, &d, 9);
  for (Eigen::Index i = 0; i < 500; ++i) {
    EXPECT_GT(L.anchors.row(i).minCoeff(), 0.0);
    EXPECT_LT(L.anchors.row(i).maxCoeff(), 1.0);
    EXPECT_NEAR(L.W.row(i).dot(L.anchors.row(i)) + L.b(i), 0.0, 1e-15);
  }
}

TEST(InitLayer, DeterministicPerSeed) {
  InitConfig cfg;
  cfg.bias = bias::NormalSigma{0.3};
  const auto a = init_layer(cfg, 3, 7, nullptr, 11), b = init_layer(cfg, 3, 7, nullptr, 11);
  EXPECT_EQ(a.W, b.W);
  EXPECT_EQ(a.b, b.b);
  // Neuron i does not depend on the layer width.
  const auto c = init_layer(cfg, 3, 12, nullptr, 11);
  EXPECT_EQ(c.W.topRows(7), a.W);
}

TEST(InitNetwork, KnotUniformGivesOnlyFullyActiveNeurons) {
  const auto d = uniform_data(256, 1, 12);
  NetworkInit spec;
  InitConfig c;
  c.bias = bias::KnotUniform1D{};
  spec.hidden = {c};
  const auto p = init_network(spec, {1, 10000}, &d, 13);
  EXPECT_EQ(p.c, 0.0);
  const DataSet window = DataSet::from_1d({d.x_min(), d.x_max()});
  for (Eigen::Index i = 0; i < 10000; ++i)
    EXPECT_EQ(classify_1d(window, Neuron::scalar(p.layers[0].W(i, 0), p.layers[0].b(i))), NeuronState::FullyActive);
}

TEST(InitNetwork, CollapsedLayerInputsPutHullKnotsOnThePoint) {
  // First layer inactive on all data maps everything to 0 in layer two.
  Matrix x(20, 1);
  for (int j = 0; j < 20; ++j) x(j, 0) = 0.05 * (j + 1);
  const DataSet d(x);
  NetworkInit spec;
  InitConfig first;
  first.bias = bias::Const{-5.0};
  first.weight = weights::NormalSigma{0.01};
  InitConfig second;
  second.bias = bias::HullFixed{5};
  spec.hidden = {first, second};
  const auto p = init_network(spec, {1, 3, 6}, &d, 14);
  EXPECT_TRUE(p.layers[1].b.isZero());
}

TEST(InitNetwork, ZeroBiasNetworkIsPositivelyHomogeneousForDyadicScales) {
  NetworkInit spec;
  spec.hidden = {InitConfig{}, InitConfig{}, InitConfig{}};
  const auto p = init_network(spec, {3, 5, 5, 5}, nullptr, 15);
  const Eigen::Vector3d x(0.2, -0.4, 1.3);
  EXPECT_EQ(forward(p, Vector(8.0 * x)), 8.0 * forward(p, x));
  EXPECT_THROW(init_network(spec, {3, 5}, nullptr, 1), ValidationError);
}

TEST(KnotOf, Examples) {
  EXPECT_EQ(knot_of(Neuron::scalar(2.0, -1.0)), 0.5);
  EXPECT_EQ(edge_distance(Neuron(Eigen::Vector2d(1.0, 2.0), 0.0)), 0.0);
  EXPECT_THROW(knot_of(Neuron::scalar(0.0, 1.0)), ConstantNeuronError);
  EXPECT_THROW(edge_distance(Neuron(Eigen::Vector2d(0.0, 0.0), 1.0)), ConstantNeuronError);
}

TEST(KnotOf, HeNormalEdgeDistancesConcentrate) {
  InitConfig cfg;
  cfg.bias = bias::Const{0.1};
  const auto L = init_layer(cfg, 64, 10000, nullptr, 16);
  std::vector<double> dist;
  for (Eigen::Index i = 0; i < L.W.rows(); ++i) dist.push_back(edge_distance(Neuron(L.W.row(i).transpose(), L.b(i))));
  std::nth_element(dist.begin(), dist.begin() + 5000, dist.end());
  EXPECT_GE(dist[5000], 0.06);
  EXPECT_LE(dist[5000], 0.08);
}

TEST(StateFrequencies, MatchAnalyticProbabilities) {
  struct Case {
    ScalarDist bias, weight;
  };
  const std::vector<Case> cases = {
      {ScalarDist::normal(1.0), ScalarDist::normal(2.0)},
      {ScalarDist::dirac(0.3), ScalarDist::normal(1.0)},
      {ScalarDist::uniform(0.0, 1.0), ScalarDist::uniform(-1.0, 1.0)},
      {ScalarDist::uniform(-1.0, 1.0), ScalarDist::uniform(-0.5, 0.5)},
      {ScalarDist::dirac(-0.2), ScalarDist::uniform(-1.0, 1.0)},
  };
  std::uint64_t seed = 100;
  for (const auto& c : cases)
    for (auto [lo, hi] : std::vector<std::pair<double, double>>{{0.0, 1.0}, {-1.0, 1.0}}) {
      const auto p = state_probabilities(c.bias, c.weight, lo, hi);
      const long long n = 100000;
      const auto k = lab::count_states_1d(c.bias, c.weight, lo, hi, n, seed++);
      for (auto [count, prob] : {std::pair{k.fully_active, p.p_fully_active}, std::pair{k.semi_active, p.p_semi_active},
                                 std::pair{k.inactive, p.p_inactive}}) {
        const double se = std::sqrt(prob * (1 - prob) / n);
        if (se == 0.0) EXPECT_EQ(static_cast<double>(count) / n, prob);
        else EXPECT_NEAR(static_cast<double>(count) / n, prob, 3.5 * se) << c.bias.describe() << " " << lo;
      }
    }
}

TEST(StateFrequencies, SignedBiasesExcludeStates) {
  const ScalarDist w = ScalarDist::normal(1.0);
  for (auto [lo, hi] : std::vector<std::pair<double, double>>{{0.0, 1.0}, {-1.0, 1.0}, {0.0, 2.0}}) {
    EXPECT_EQ(lab::count_states_1d(ScalarDist::uniform(0.0, 0.5), w, lo, hi, 1000000, 17).inactive, 0);
    EXPECT_EQ(lab::count_states_1d(ScalarDist::uniform(-0.5, 0.0), w, lo, hi, 1000000, 18).semi_active, 0);
  }
}

TEST(StateFrequencies, NonzeroBiasPutsKnotsOutsideTheWindow) {
  InitConfig cfg;
  cfg.bias = bias::NormalSigma{1.0};
  const auto L = init_layer(cfg, 1, 10000, nullptr, 19);
  int below = 0, above = 0;
  for (Eigen::Index i = 0; i < L.W.rows(); ++i) {
    const double k = knot_of(Neuron::scalar(L.W(i, 0), L.b(i)));
    below += k < 0.0;
    above += k > 1.0;
  }
  EXPECT_GT(below, 0);
  EXPECT_GT(above, 0);
}

TEST(StateFrequencies, ZeroBiasOrthantInactiveRate) {
  for (int d = 2; d <= 8; ++d) {
    Matrix x(d + 5, d);
    x.topRows(d).setIdentity();
    CounterRng rng(static_cast<std::uint64_t>(d));
    for (int j = d; j < d + 5; ++j)
      for (int k = 0; k < d; ++k) x(j, k) = uniform_open01(rng);
    const DataSet data(x);
    ASSERT_TRUE(coni_is_positive_orthant(data));
    const auto L = init_layer(InitConfig{}, d, 100000, nullptr, 20 + static_cast<std::uint64_t>(d));
    long long inactive = 0;
    for (Eigen::Index i = 0; i < L.W.rows(); ++i)
      inactive += classify(data, Neuron(L.W.row(i).transpose(), 0.0)) == NeuronState::Inactive;
    const double p = std::ldexp(1.0, -d);
    EXPECT_NEAR(inactive / 1e5, p, 3.5 * std::sqrt(p * (1 - p) / 1e5)) << d;
  }
}
