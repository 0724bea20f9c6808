#pragma once

// Building blocks shared by the commands and the validation suite:
// strategy strings, the one-dimensional knot-law strategies indexed by rho,
// target functions and one-dimensional training runs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "reluinit/analytics.hpp"
#include "reluinit/geometry.hpp"
#include "reluinit/initstrat.hpp"
#include "reluinit/lab/config.hpp"
#include "reluinit/lab/csv.hpp"
#include "reluinit/netcore.hpp"
#include "reluinit/ratiodist.hpp"

namespace reluinit::lab {

// "<weight>/<bias>", e.g. "he/zero", "he/const=0.1", "sphere/hull-5",
// "ball/hull+5", "normal=1.5/uniform=-1,1", "he/knot-uniform".
inline WeightScheme parse_weight_scheme(const std::string& s) {
  const auto eq = s.find('=');
  const std::string name = s.substr(0, eq);
  const std::string arg = eq == std::string::npos ? "" : s.substr(eq + 1);
  WeightScheme w;
  if (name == "he") w = weights::HeNormal{};
  else if (name == "he-uniform") w = weights::HeUniform{};
  else if (name == "xavier") w = weights::XavierUniform{};
  else if (name == "normal") w = weights::NormalSigma{parse_double(arg, "normal weight sigma")};
  else if (name == "uniform") w = weights::UniformAlpha{parse_double(arg, "uniform weight alpha")};
  else if (name == "sphere") w = weights::Sphere{};
  else if (name == "ball") w = weights::Ball{};
  else throw ValidationError("unknown weight scheme '" + s + "'");
  validate(w);
  return w;
}

inline BiasScheme parse_bias_scheme(const std::string& s) {
  const auto eq = s.find('=');
  const std::string name = s.substr(0, eq);
  const std::string arg = eq == std::string::npos ? "" : s.substr(eq + 1);
  BiasScheme b;
  if (name == "zero") {
    b = bias::Zero{};
  } else if (name == "const") {
    b = bias::Const{parse_double(arg, "const bias")};
  } else if (name == "normal") {
    b = bias::NormalSigma{parse_double(arg, "normal bias sigma")};
  } else if (name == "uniform") {
    const auto parts = split(arg, ',');
    if (parts.size() != 2) throw ValidationError("uniform bias needs lo,hi");
    b = bias::UniformRange{parse_double(parts[0], "uniform bias lo"), parse_double(parts[1], "uniform bias hi")};
  } else if (name == "knot-uniform") {
    b = bias::KnotUniform1D{};
  } else if (name.rfind("hull+", 0) == 0) {
    b = bias::HullFixed{static_cast<int>(parse_int(name.substr(5), "hull N"))};
  } else if (name.rfind("hull-", 0) == 0) {
    b = bias::HullRandom{static_cast<int>(parse_int(name.substr(5), "hull N_max"))};
  } else {
    throw ValidationError("unknown bias scheme '" + s + "'");
  }
  validate(b);
  return b;
}

inline InitConfig parse_strategy(const std::string& s, double partial0 = 0.0, std::uint64_t seed = 0) {
  const auto slash = s.find('/');
  if (slash == std::string::npos) throw ValidationError("strategy must be '<weight>/<bias>': '" + s + "'");
  InitConfig cfg;
  cfg.weight = parse_weight_scheme(s.substr(0, slash));
  cfg.bias = parse_bias_scheme(s.substr(slash + 1));
  cfg.partial0 = partial0;
  cfg.seed = seed;
  return cfg;
}

inline std::string to_string(const WeightScheme& w) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, weights::HeNormal>) return "he";
        else if constexpr (std::is_same_v<T, weights::HeUniform>) return "he-uniform";
        else if constexpr (std::is_same_v<T, weights::XavierUniform>) return "xavier";
        else if constexpr (std::is_same_v<T, weights::NormalSigma>) return "normal=" + format_shortest(s.sigma);
        else if constexpr (std::is_same_v<T, weights::UniformAlpha>) return "uniform=" + format_shortest(s.alpha);
        else if constexpr (std::is_same_v<T, weights::Sphere>) return "sphere";
        else return "ball";
      },
      w);
}

inline std::string to_string(const BiasScheme& b) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, bias::Zero>) return "zero";
        else if constexpr (std::is_same_v<T, bias::Const>) return "const=" + format_shortest(s.b);
        else if constexpr (std::is_same_v<T, bias::NormalSigma>) return "normal=" + format_shortest(s.sigma);
        else if constexpr (std::is_same_v<T, bias::UniformRange>)
          return "uniform=" + format_shortest(s.lo) + "," + format_shortest(s.hi);
        else if constexpr (std::is_same_v<T, bias::KnotUniform1D>) return "knot-uniform";
        else if constexpr (std::is_same_v<T, bias::HullFixed>) return "hull+" + std::to_string(s.n);
        else return "hull-" + std::to_string(s.n_max);
      },
      b);
}

inline std::string to_string(const InitConfig& c) { return to_string(c.weight) + "/" + to_string(c.bias); }

// Weight and bias laws of the six one-dimensional strategies, parametrized
// by the inverse ratio of standard deviations rho.
struct KnotStrategy {
  std::string name;
  std::function<ScalarDist(double)> bias;
  std::function<ScalarDist(double)> weight;
  bool zero_bias = false;
};

inline std::vector<KnotStrategy> knot_strategies() {
  const double sqrt3 = std::sqrt(3.0);
  return {
      {"zero-bias", [](double) { return ScalarDist::dirac(0.0); },
       [](double) { return ScalarDist::normal(std::sqrt(2.0)); }, true},
      // rho = sigma_a / b
      {"nonzero-bias-normal", [](double) { return ScalarDist::dirac(1.0); },
       [](double rho) { return ScalarDist::normal(rho); }},
      // rho = alpha / (sqrt(3) b)
      {"nonzero-bias-uniform", [](double) { return ScalarDist::dirac(1.0); },
       [sqrt3](double rho) { return ScalarDist::uniform(-sqrt3 * rho, sqrt3 * rho); }},
      // rho = sigma_a / sigma_b
      {"normal-ratio", [](double) { return ScalarDist::normal(1.0); },
       [](double rho) { return ScalarDist::normal(rho); }},
      // rho = 2 alpha / beta
      {"asym-uniform-ratio", [](double) { return ScalarDist::uniform(0.0, 1.0); },
       [](double rho) { return ScalarDist::uniform(-rho / 2.0, rho / 2.0); }},
      // rho = alpha / beta
      {"sym-uniform-ratio", [](double) { return ScalarDist::uniform(-1.0, 1.0); },
       [](double rho) { return ScalarDist::uniform(-rho, rho); }},
  };
}

inline StateProbs knot_strategy_probs(const KnotStrategy& s, double rho, double x_min, double x_max) {
  if (s.zero_bias) return state_probabilities_zero_bias(s.weight(rho), x_min, x_max);
  return state_probabilities(s.bias(rho), s.weight(rho), x_min, x_max);
}

struct StateCounts {
  long long fully_active = 0;
  long long semi_active = 0;
  long long inactive = 0;

  void add(NeuronState s) {
    if (s == NeuronState::FullyActive) ++fully_active;
    else if (s == NeuronState::SemiActive) ++semi_active;
    else ++inactive;
  }
  long long total() const { return fully_active + semi_active + inactive; }
};

inline BiasScheme bias_scheme_for(const ScalarDist& law) {
  if (law.is<Dirac>()) return law.as<Dirac>().b == 0.0 ? BiasScheme(bias::Zero{}) : bias::Const{law.as<Dirac>().b};
  if (law.is<Normal>()) return bias::NormalSigma{law.as<Normal>().sigma};
  return bias::UniformRange{law.as<Uniform>().lo, law.as<Uniform>().hi};
}

inline WeightScheme weight_scheme_for(const ScalarDist& law) {
  if (law.is<Normal>()) return weights::NormalSigma{law.as<Normal>().sigma};
  if (law.is<Uniform>() && law.symmetric()) return weights::UniformAlpha{law.as<Uniform>().hi};
  throw ValidationError("weight law must be a centered normal or symmetric uniform");
}

// Initializes one layer of n scalar neurons with a ~ weight_law, b ~ bias_law
// and classifies each against the window [x_min, x_max].
inline StateCounts count_states_1d(const ScalarDist& bias_law, const ScalarDist& weight_law, double x_min,
                                   double x_max, long long n, std::uint64_t seed) {
  InitConfig cfg;
  cfg.weight = weight_scheme_for(weight_law);
  cfg.bias = bias_scheme_for(bias_law);
  const auto layer = init_layer(cfg, 1, n, nullptr, seed);
  const DataSet window = DataSet::from_1d({x_min, x_max});
  StateCounts c;
  Neuron h = Neuron::scalar(1.0, 0.0);
  for (long long i = 0; i < n; ++i) {
    h.a(0) = layer.W(i, 0);
    h.b = layer.b(i);
    c.add(classify_1d(window, h));
  }
  return c;
}

// Target functions of the one-dimensional training experiments.
inline std::function<double(double)> target_function(const std::string& name) {
  if (name == "linear") return [](double t) { return 2.0 - t; };
  if (name == "hat") return [](double t) { return 1.0 - 6.0 * std::abs(t - 1.0 / 3.0); };
  if (name == "sin") return [](double t) { return std::sin(2.0 * std::numbers::pi * t); };
  throw ValidationError("unknown target '" + name + "' (linear, hat, sin)");
}

// n inputs uniform on [0, 1] labelled by the target.
inline LabeledData make_1d_data(const std::string& target, Eigen::Index n, std::uint64_t seed) {
  const auto f = target_function(target);
  CounterRng rng(seed);
  Matrix x(n, 1);
  Vector y(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    x(j, 0) = uniform_open01(rng);
    y(j) = f(x(j, 0));
  }
  return LabeledData(std::move(x), std::move(y));
}

// One hidden layer of width m; "he-zero" and "knot-uniform" use He-normal
// weights everywhere and c = 0.
inline MLPParams init_1d_network(const std::string& init, Eigen::Index m, const LabeledData& data,
                                 std::uint64_t seed) {
  NetworkInit spec;
  InitConfig hidden;
  if (init == "he-zero") hidden.bias = bias::Zero{};
  else if (init == "knot-uniform") hidden.bias = bias::KnotUniform1D{};
  else hidden = parse_strategy(init);
  spec.hidden = {hidden};
  const DataSet inputs(data.inputs);
  return init_network(spec, {1, m}, &inputs, seed);
}

struct NeuronCensus {
  StateCounts states;
  long long dead = 0;
  long long constant = 0;
};

inline NeuronCensus census_1d(const MLPParams& p, const DataSet& inputs, double partial0) {
  NeuronCensus c;
  const auto& L = p.layers.at(0);
  for (Eigen::Index i = 0; i < L.W.rows(); ++i) {
    const Neuron h(L.W.row(i).transpose(), L.b(i));
    if (h.is_constant()) {
      ++c.constant;
      continue;
    }
    c.states.add(classify(inputs, h));
    if (is_dead(inputs, h, partial0)) ++c.dead;
  }
  return c;
}

struct TrainSnapshot {
  int epoch;
  double rmse;
  MLPParams params;
};

struct Run1dConfig {
  std::string target = "sin";
  std::string init = "he-zero";
  Eigen::Index width = 16;
  Eigen::Index n = 256;
  int epochs = 250;
  std::vector<int> snapshot_epochs = {0, 10, 50, 250};
  TrainConfig train;
};

// Trains on n samples of the target; the data, initialization and batch
// order all derive from `seed`. Snapshots are taken after the listed epochs
// (epoch 0 is the initialization).
inline std::vector<TrainSnapshot> run_1d_training(const Run1dConfig& cfg, std::uint64_t seed) {
  const LabeledData data = make_1d_data(cfg.target, cfg.n, derive_seed(seed, 1));
  const MLPParams init = init_1d_network(cfg.init, cfg.width, data, derive_seed(seed, 2));
  auto rmse = [&](const MLPParams& p) { return std::sqrt(empirical_risk(p, data, Loss::least_squares())); };
  const auto wanted = [&](int e) {
    return std::find(cfg.snapshot_epochs.begin(), cfg.snapshot_epochs.end(), e) != cfg.snapshot_epochs.end();
  };
  std::vector<TrainSnapshot> out;
  if (wanted(0)) out.push_back({0, rmse(init), init});
  TrainConfig tc = cfg.train;
  tc.epochs = cfg.epochs;
  tc.seed = derive_seed(seed, 3);
  tc.on_epoch = [&](int e, const MLPParams& p) {
    if (wanted(e)) out.push_back({e, rmse(p), p});
  };
  train(init, data, tc);
  return out;
}

}  // namespace reluinit::lab
