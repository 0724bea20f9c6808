#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "reluinit/geometry.hpp"
#include "reluinit/initstrat.hpp"
#include "reluinit/lab/experiments.hpp"
#include "reluinit/netcore.hpp"

using namespace reluinit;

namespace {

MLPParams scalar_net(double a, double b, double w, double c) {
  return MLPParams::one_layer(Vector::Constant(1, a), Vector::Constant(1, b), Vector::Constant(1, w), c);
}

LabeledData data_1d(std::vector<double> xs, std::vector<double> ys) {
  Matrix x(static_cast<Eigen::Index>(xs.size()), 1);
  Vector y(static_cast<Eigen::Index>(ys.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    x(static_cast<Eigen::Index>(i), 0) = xs[i];
    y(static_cast<Eigen::Index>(i)) = ys[i];
  }
  return {x, y};
}

Vector central_differences(const MLPParams& p, const LabeledData& d, Loss loss, double h = 1e-6) {
  const Vector theta = p.flatten();
  Vector g(theta.size());
  MLPParams q = p;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    Vector t = theta;
    t(k) += h;
    q.assign(t);
    const double up = empirical_risk(q, d, loss);
    t(k) = theta(k) - h;
    q.assign(t);
    g(k) = (up - empirical_risk(q, d, loss)) / (2 * h);
  }
  return g;
}

double rel_err(const Vector& a, const Vector& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-300);
}

}  // namespace

TEST(Partial0, Validated) {
  EXPECT_THROW(Partial0(-0.1), ValidationError);
  EXPECT_THROW(Partial0(1.5), ValidationError);
  EXPECT_EQ(relu_derivative(0.0, Partial0(0.3)), 0.3);
  EXPECT_EQ(relu_derivative(2.0, Partial0(0.3)), 1.0);
  EXPECT_EQ(relu_derivative(-2.0, Partial0(0.3)), 0.0);
}

TEST(Forward, Examples) {
  const auto p = scalar_net(1, 0, 1, 0);
  EXPECT_EQ(forward(p, Vector::Constant(1, 2.0)), 2.0);
  EXPECT_EQ(forward(p, Vector::Constant(1, -2.0)), 0.0);
  MLPParams z = MLPParams::one_layer(Vector::Zero(3), Vector::Zero(3), Vector::Zero(3), 0.7);
  EXPECT_EQ(forward(z, Vector::Constant(1, 123.0)), 0.7);
  EXPECT_THROW(forward(p, Vector::Zero(2)), ShapeError);
}

TEST(MLPParams, FlattenAssignRoundTrip) {
  CounterRng rng(1);
  NetworkInit spec;
  spec.hidden = {InitConfig{}, InitConfig{}};
  spec.hidden[0].bias = bias::NormalSigma{1.0};
  MLPParams p = init_network(spec, {3, 4, 2}, nullptr, 5);
  const Vector v = p.flatten();
  EXPECT_EQ(v.size(), p.num_parameters());
  EXPECT_EQ(v.size(), 4 * 3 + 4 + 2 * 4 + 2 + 2 + 1);
  MLPParams q = p.zeros_like();
  q.assign(v);
  EXPECT_TRUE(q == p);
  EXPECT_THROW(q.assign(Vector::Zero(3)), ShapeError);
}

TEST(EmpiricalRisk, Examples) {
  const auto p = scalar_net(1, 0, 1, 0);
  EXPECT_EQ(empirical_risk(p, data_1d({0.5, 1.0}, {0.5, 1.0}), Loss::least_squares()), 0.0);
  const auto zero = scalar_net(0, 0, 0, 0);
  EXPECT_EQ(empirical_risk(zero, data_1d({0.1, 0.2}, {1.0, -1.0}), Loss::least_squares()), 1.0);
  const auto d = data_1d({0.3}, {-1.0});
  const Loss lg = Loss::logistic();
  EXPECT_EQ(empirical_risk(p, d, lg), lg.value(-1.0, forward(p, Vector::Constant(1, 0.3))));
}

TEST(Loss, LogisticStableAndDerivative) {
  const Loss lg = Loss::logistic();
  EXPECT_NEAR(lg.value(1.0, 800.0), 0.0, 1e-300);
  EXPECT_NEAR(lg.value(1.0, -800.0), 800.0, 1e-9);
  for (double t : {-3.0, -0.2, 0.0, 1.4})
    for (double y : {-1.0, 1.0}) {
      const double h = 1e-6;
      EXPECT_NEAR(lg.derivative(y, t), (lg.value(y, t + h) - lg.value(y, t - h)) / (2 * h), 1e-8);
    }
}

TEST(Grad1d, InactiveNeuronHasZeroGradient) {
  // a < 0 and every sample strictly right of the knot.
  const MLPParams p = MLPParams::one_layer(Eigen::Vector2d(-1.0, 1.0), Eigen::Vector2d(0.1, 0.0),
                                           Eigen::Vector2d(0.7, 1.0), 0.2);
  const auto d = data_1d({0.2, 0.5, 0.9}, {1.0, 0.0, -1.0});
  const Gradient g = grad_1d_closed_form(p, d, Loss::least_squares(), 0.0);
  EXPECT_EQ(g.layers[0].W(0, 0), 0.0);
  EXPECT_EQ(g.layers[0].b(0), 0.0);
  EXPECT_EQ(g.w(0), 0.0);
  EXPECT_NE(g.w(1), 0.0);
}

TEST(Grad1d, ConstantNeuronWithNegativeBias) {
  const MLPParams p = MLPParams::one_layer(Eigen::Vector2d(0.0, 1.0), Eigen::Vector2d(-0.3, 0.0),
                                           Eigen::Vector2d(0.7, 1.0), 0.2);
  const auto d = data_1d({0.2, 0.5, 0.9}, {1.0, 0.0, -1.0});
  for (double p0 : {0.0, 0.5, 1.0}) {
    const Gradient g = grad_1d_closed_form(p, d, Loss::least_squares(), p0);
    EXPECT_EQ(g.layers[0].W(0, 0), 0.0);
    EXPECT_EQ(g.layers[0].b(0), 0.0);
    EXPECT_EQ(g.w(0), 0.0);
  }
}

TEST(Grad1d, MatchesFiniteDifferencesAwayFromKinks) {
  CounterRng rng(2);
  int tested = 0;
  while (tested < 200) {
    Vector a(4), b(4), w(4);
    for (int i = 0; i < 4; ++i) {
      a(i) = standard_normal(rng);
      b(i) = standard_normal(rng);
      w(i) = standard_normal(rng);
    }
    const MLPParams p = MLPParams::one_layer(a, b, w, 0.1);
    Matrix x(16, 1);
    Vector y(16);
    double min_pre = 1e300;
    for (int j = 0; j < 16; ++j) {
      x(j, 0) = uniform(rng, -1.0, 1.0);
      y(j) = standard_normal(rng);
      min_pre = std::min(min_pre, (a * x(j, 0) + b).cwiseAbs().minCoeff());
    }
    if (min_pre < 1e-4) continue;
    const LabeledData d(x, y);
    for (Loss loss : {Loss::least_squares(), Loss::logistic()}) {
      const Vector g = grad_1d_closed_form(p, d, loss, 0.0).flatten();
      EXPECT_LT(rel_err(central_differences(p, d, loss), g), 1e-6);
    }
    ++tested;
  }
}

TEST(Backprop, AgreesWithClosedFormIncludingKnotSamples) {
  CounterRng rng(3);
  for (int inst = 0; inst < 1000; ++inst) {
    const int m = 1 + static_cast<int>(uniform_index(rng, 6));
    Vector a(m), b(m), w(m);
    for (int i = 0; i < m; ++i) {
      a(i) = inst % 3 == 0 ? 0.5 * static_cast<double>(uniform_index(rng, 5)) - 1.0 : standard_normal(rng);
      b(i) = inst % 3 == 0 ? 0.25 * static_cast<double>(uniform_index(rng, 9)) - 1.0 : standard_normal(rng);
      w(i) = standard_normal(rng);
    }
    const MLPParams p = MLPParams::one_layer(a, b, w, standard_normal(rng));
    const int n = 1 + static_cast<int>(uniform_index(rng, 20));
    Matrix x(n, 1);
    Vector y(n);
    for (int j = 0; j < n; ++j) {
      // Dyadic grid so knots land exactly on samples.
      x(j, 0) = inst % 3 == 0 ? 0.125 * static_cast<double>(uniform_index(rng, 17)) - 1.0 : uniform(rng, -2.0, 2.0);
      y(j) = uniform_index(rng, 2) ? 1.0 : -1.0;
    }
    const LabeledData d(x, y);
    const double p0 = inst % 5 == 0 ? 0.0 : uniform_open01(rng);
    for (Loss loss : {Loss::least_squares(), Loss::logistic()}) {
      const Vector gc = grad_1d_closed_form(p, d, loss, p0).flatten();
      const Vector gb = backprop(p, d, loss, p0).flatten();
      for (Eigen::Index k = 0; k < gc.size(); ++k)
        EXPECT_LE(std::abs(gc(k) - gb(k)), 1e-12 * std::max(1.0, std::abs(gc(k)))) << inst << " " << k;
    }
  }
}

TEST(Backprop, DeepNetMatchesFiniteDifferences) {
  CounterRng rng(4);
  int tested = 0;
  while (tested < 100) {
    NetworkInit spec;
    std::vector<Eigen::Index> arch{3};
    for (int l = 0; l < 3; ++l) {
      InitConfig c;
      c.bias = bias::NormalSigma{0.5};
      spec.hidden.push_back(c);
      arch.push_back(5);
    }
    spec.output_bias = -0.2;
    const MLPParams p = init_network(spec, arch, nullptr, rng());
    Matrix x(8, 3);
    Vector y(8);
    for (int j = 0; j < 8; ++j) {
      for (int k = 0; k < 3; ++k) x(j, k) = standard_normal(rng);
      y(j) = standard_normal(rng);
    }
    double min_pre = 1e300;
    Matrix H = x;
    for (const auto& L : p.layers) {
      const Matrix Z = (H * L.W.transpose()).rowwise() + L.b.transpose();
      min_pre = std::min(min_pre, Z.cwiseAbs().minCoeff());
      H = Z.cwiseMax(0.0);
    }
    if (min_pre < 1e-4) continue;
    const LabeledData d(x, y);
    EXPECT_LT(rel_err(central_differences(p, d, Loss::least_squares()), backprop(p, d, Loss::least_squares(), 0.0).flatten()),
              1e-5);
    ++tested;
  }
}

TEST(Backprop, ZeroBiasOutputGradientScalesWithInput) {
  NetworkInit spec;
  spec.hidden = {InitConfig{}, InitConfig{}};
  const MLPParams p = init_network(spec, {2, 6, 6}, nullptr, 8);
  const Eigen::Vector2d x(0.3, -1.2);
  const double alpha = 4.0;
  Matrix xs(1, 2), xa(1, 2);
  xs.row(0) = x.transpose();
  xa.row(0) = alpha * x.transpose();
  // d f / d w is the last hidden activation, which is homogeneous of degree 1.
  const Vector h1 = hidden_activations(p, xs, 1).row(0).transpose();
  const Vector h2 = hidden_activations(p, xa, 1).row(0).transpose();
  EXPECT_TRUE(h2.isApprox(alpha * h1, 1e-14));
}

TEST(Homogeneity, ZeroAtOriginExactly) {
  CounterRng rng(5);
  for (int i = 0; i < 1000; ++i) {
    NetworkInit spec;
    const int depth = 1 + static_cast<int>(uniform_index(rng, 4));
    std::vector<Eigen::Index> arch{1 + static_cast<Eigen::Index>(uniform_index(rng, 8))};
    for (int l = 0; l < depth; ++l) {
      spec.hidden.push_back(InitConfig{});
      arch.push_back(1 + static_cast<Eigen::Index>(uniform_index(rng, 16)));
    }
    const MLPParams p = init_network(spec, arch, nullptr, rng());
    EXPECT_EQ(forward(p, Vector::Zero(arch[0])), 0.0);
  }
}

TEST(Homogeneity, HoldsToRoundingForPowerOfTwoScales) {
  // Scaling by 2^k is exact in binary floating point, so equality is exact.
  CounterRng rng(6);
  for (int i = 0; i < 1000; ++i) {
    NetworkInit spec;
    spec.hidden = {InitConfig{}, InitConfig{}};
    const MLPParams p = init_network(spec, {4, 8, 8}, nullptr, rng());
    Vector x(4);
    for (int k = 0; k < 4; ++k) x(k) = standard_normal(rng);
    const double alpha = std::ldexp(1.0, static_cast<int>(uniform_index(rng, 20)) - 10);
    EXPECT_EQ(forward(p, Vector(alpha * x)), alpha * forward(p, x));
  }
}

TEST(Homogeneity, GeneralScalesWithinConditionBound) {
  // For general alpha, rounding alpha*x perturbs the input by up to half an
  // ulp per coordinate; the output error is bounded by the network's
  // condition number, not by a fixed ulp count.
  CounterRng rng(7);
  for (int i = 0; i < 1000; ++i) {
    NetworkInit spec;
    spec.hidden = {InitConfig{}, InitConfig{}};
    const MLPParams p = init_network(spec, {4, 8, 8}, nullptr, rng());
    Vector x(4);
    for (int k = 0; k < 4; ++k) x(k) = standard_normal(rng);
    const double alpha = uniform(rng, 0.0, 1000.0);
    const double fa = forward(p, Vector(alpha * x)), f = forward(p, x);
    // sum |w| |W2| |W1| |x| bounds every intermediate magnitude.
    const double scale = (p.w.cwiseAbs().transpose() * p.layers[1].W.cwiseAbs() * p.layers[0].W.cwiseAbs() *
                          x.cwiseAbs())(0);
    EXPECT_LE(std::abs(fa - alpha * f), 64 * std::numeric_limits<double>::epsilon() * alpha * scale);
  }
}

TEST(Train, ZeroLearningRateLeavesParamsUnchanged) {
  const auto d = lab::make_1d_data("linear", 64, 1);
  const MLPParams p = lab::init_1d_network("he-zero", 8, d, 2);
  TrainConfig cfg;
  cfg.adam.lr = 0.0;
  cfg.epochs = 5;
  cfg.batch_size = 16;
  const auto r = train(p, d, cfg);
  EXPECT_TRUE(r.params == p);
  ASSERT_EQ(r.train_risk.size(), 6u);
  for (double v : r.train_risk) EXPECT_EQ(v, r.train_risk[0]);
}

TEST(Train, Deterministic) {
  const auto d = lab::make_1d_data("sin", 64, 3);
  const MLPParams p = lab::init_1d_network("knot-uniform", 16, d, 4);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 16;
  cfg.seed = 9;
  const auto r1 = train(p, d, cfg), r2 = train(p, d, cfg);
  EXPECT_EQ(r1.train_risk, r2.train_risk);
  EXPECT_TRUE(r1.params == r2.params);
  cfg.seed = 10;
  EXPECT_NE(train(p, d, cfg).train_risk, r1.train_risk);
}

TEST(Train, HullInitFitsLinearTarget) {
  const auto d = lab::make_1d_data("linear", 256, 5);
  const MLPParams p = lab::init_1d_network("he/hull+2", 16, d, 6);
  TrainConfig cfg;
  cfg.epochs = 500;
  cfg.batch_size = 32;
  cfg.adam.lr = 1e-2;
  cfg.seed = 7;
  const auto r = train(p, d, cfg);
  EXPECT_LT(std::sqrt(r.train_risk.back()), 0.05);
}

TEST(Train, EarlyStoppingReturnsBestHeldOutParams) {
  const auto d = lab::make_1d_data("hat", 128, 8);
  const auto v = lab::make_1d_data("hat", 64, 9);
  const MLPParams p = lab::init_1d_network("knot-uniform", 16, d, 10);
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.batch_size = 32;
  cfg.patience = 3;
  cfg.adam.lr = 0.05;
  const auto r = train(p, d, cfg, v);
  const double best = *std::min_element(r.validation_risk.begin(), r.validation_risk.end());
  EXPECT_EQ(empirical_risk(r.params, v, cfg.loss), best);
  EXPECT_THROW(
      [&] {
        TrainConfig bad;
        bad.batch_size = 0;
        train(p, d, bad);
      }(),
      ValidationError);
}

TEST(Train, DeadNeuronsStayFrozenUnderFullBatchGradient) {
  const auto d = lab::make_1d_data("sin", 64, 11);
  const MLPParams p0 = lab::init_1d_network("he-zero", 32, d, 12);
  const DataSet inputs(d.inputs);
  std::vector<Eigen::Index> dead;
  for (Eigen::Index i = 0; i < 32; ++i)
    if (is_dead(inputs, Neuron(p0.layers[0].W.row(i).transpose(), p0.layers[0].b(i)), 0.0)) dead.push_back(i);
  ASSERT_FALSE(dead.empty());
  TrainConfig cfg;
  cfg.epochs = 100;
  cfg.batch_size = 64;
  cfg.adam.lr = 1e-2;
  const auto r = train(p0, d, cfg);
  for (auto i : dead) {
    EXPECT_EQ(r.params.layers[0].W(i, 0), p0.layers[0].W(i, 0));
    EXPECT_EQ(r.params.layers[0].b(i), p0.layers[0].b(i));
    EXPECT_EQ(r.params.w(i), p0.w(i));
  }
}
