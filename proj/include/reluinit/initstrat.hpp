#pragma once

// Weight and bias initialization schemes, including the data-dependent
// knot-uniform and hull schemes that place each neuron's edge through a
// point of the layer's input data.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "reluinit/errors.hpp"
#include "reluinit/geometry.hpp"
#include "reluinit/netcore.hpp"
#include "reluinit/rng.hpp"

namespace reluinit {

namespace weights {
struct HeNormal {};       // N(0, 2/fan_in)
struct HeUniform {};      // U[-a, a], a = sqrt(6/fan_in)
struct XavierUniform {};  // U[-a, a], a = sqrt(6/(fan_in + fan_out))
struct NormalSigma {
  double sigma;
};
struct UniformAlpha {
  double alpha;
};
struct Sphere {};  // uniform on the unit sphere
struct Ball {};    // Sphere times an independent U[0, 2] radius
}  // namespace weights

using WeightScheme = std::variant<weights::HeNormal, weights::HeUniform, weights::XavierUniform,
                                  weights::NormalSigma, weights::UniformAlpha, weights::Sphere,
                                  weights::Ball>;

namespace bias {
struct Zero {};
struct Const {
  double b;
};
struct NormalSigma {
  double sigma;
};
struct UniformRange {
  double lo, hi;
};
struct KnotUniform1D {};  // knot ~ U(x_min, x_max)
struct HullFixed {
  int n;
};
struct HullRandom {
  int n_max;
};
}  // namespace bias

using BiasScheme = std::variant<bias::Zero, bias::Const, bias::NormalSigma, bias::UniformRange,
                                bias::KnotUniform1D, bias::HullFixed, bias::HullRandom>;

struct InitConfig {
  WeightScheme weight = weights::HeNormal{};
  BiasScheme bias = bias::Zero{};
  Partial0 partial0 = 0.0;
  std::uint64_t seed = 0;
};

inline void validate(const WeightScheme& w) {
  if (const auto* s = std::get_if<weights::NormalSigma>(&w); s && !(s->sigma > 0.0))
    throw ValidationError("weight scheme: sigma must be positive");
  if (const auto* u = std::get_if<weights::UniformAlpha>(&w); u && !(u->alpha > 0.0))
    throw ValidationError("weight scheme: alpha must be positive");
}

inline void validate(const BiasScheme& b) {
  if (const auto* s = std::get_if<bias::NormalSigma>(&b); s && !(s->sigma > 0.0))
    throw ValidationError("bias scheme: sigma must be positive");
  if (const auto* u = std::get_if<bias::UniformRange>(&b); u && !(u->lo < u->hi))
    throw ValidationError("bias scheme: need lo < hi");
  if (const auto* h = std::get_if<bias::HullFixed>(&b); h && h->n < 1)
    throw ValidationError("bias scheme: hull N must be at least 1");
  if (const auto* h = std::get_if<bias::HullRandom>(&b); h && h->n_max < 1)
    throw ValidationError("bias scheme: hull N_max must be at least 1");
}

inline bool needs_data(const BiasScheme& b) {
  return std::holds_alternative<bias::KnotUniform1D>(b) || std::holds_alternative<bias::HullFixed>(b) ||
         std::holds_alternative<bias::HullRandom>(b);
}

// One weight row of length fan_in.
template <typename Rng>
Vector draw_weights(const WeightScheme& scheme, Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
  Vector a(fan_in);
  const double din = static_cast<double>(fan_in);
  auto fill_normal = [&](double sigma) {
    for (Eigen::Index k = 0; k < fan_in; ++k) a(k) = sigma * standard_normal(rng);
  };
  auto fill_uniform = [&](double alpha) {
    for (Eigen::Index k = 0; k < fan_in; ++k) a(k) = uniform(rng, -alpha, alpha);
  };
  auto fill_sphere = [&] {
    do {
      fill_normal(1.0);
    } while (a.squaredNorm() == 0.0);
    a /= a.norm();
  };
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, weights::HeNormal>) fill_normal(std::sqrt(2.0 / din));
        else if constexpr (std::is_same_v<T, weights::HeUniform>) fill_uniform(std::sqrt(6.0 / din));
        else if constexpr (std::is_same_v<T, weights::XavierUniform>)
          fill_uniform(std::sqrt(6.0 / (din + static_cast<double>(fan_out))));
        else if constexpr (std::is_same_v<T, weights::NormalSigma>) fill_normal(s.sigma);
        else if constexpr (std::is_same_v<T, weights::UniformAlpha>) fill_uniform(s.alpha);
        else if constexpr (std::is_same_v<T, weights::Sphere>) fill_sphere();
        else {
          fill_sphere();
          a *= uniform(rng, 0.0, 2.0);
        }
      },
      scheme);
  return a;
}

// k row indices out of n: without replacement when n >= k.
template <typename Rng>
std::vector<Eigen::Index> pick_samples(Eigen::Index n, int k, Rng& rng) {
  std::vector<Eigen::Index> out(static_cast<std::size_t>(k));
  if (n >= k) {
    std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});
    for (int i = 0; i < k; ++i) {
      const auto j = static_cast<std::size_t>(i) +
                     uniform_index(rng, static_cast<std::uint64_t>(n - i));
      std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
      out[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(i)];
    }
  } else {
    for (auto& idx : out) idx = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
  }
  return out;
}

struct LayerInit {
  Matrix W;
  Vector b;
  // Row i is the point the edge of neuron i was placed through (data-dependent
  // schemes only; empty otherwise).
  Matrix anchors;
};

// Neuron i draws from its own stream derive_seed(seed, i): first its weight
// row, then its bias.
inline LayerInit init_layer(const InitConfig& cfg, Eigen::Index fan_in, Eigen::Index fan_out,
                            const DataSet* layer_inputs, std::uint64_t seed) {
  if (fan_in < 1 || fan_out < 1) throw ValidationError("init_layer: fan_in and fan_out must be positive");
  validate(cfg.weight);
  validate(cfg.bias);
  const bool data_dependent = needs_data(cfg.bias);
  if (data_dependent && layer_inputs == nullptr)
    throw ValidationError("init_layer: bias scheme needs the layer's input data");
  if (data_dependent && layer_inputs->dim() != fan_in)
    throw ShapeError("init_layer: input data dimension does not match fan_in");
  if (std::holds_alternative<bias::KnotUniform1D>(cfg.bias) && fan_in != 1)
    throw ValidationError("init_layer: knot-uniform bias needs scalar input");

  LayerInit out{Matrix(fan_out, fan_in), Vector(fan_out), Matrix()};
  if (data_dependent) out.anchors.resize(fan_out, fan_in);

  for (Eigen::Index i = 0; i < fan_out; ++i) {
    CounterRng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const Vector a = draw_weights(cfg.weight, fan_in, fan_out, rng);
    out.W.row(i) = a.transpose();
    double b = 0.0;
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, bias::Zero>) {
            b = 0.0;
          } else if constexpr (std::is_same_v<T, bias::Const>) {
            b = s.b;
          } else if constexpr (std::is_same_v<T, bias::NormalSigma>) {
            b = s.sigma * standard_normal(rng);
          } else if constexpr (std::is_same_v<T, bias::UniformRange>) {
            b = uniform(rng, s.lo, s.hi);
          } else if constexpr (std::is_same_v<T, bias::KnotUniform1D>) {
            const double lo = layer_inputs->x_min();
            const double hi = layer_inputs->x_max();
            const double knot = lo < hi ? uniform(rng, lo, hi) : lo;
            out.anchors(i, 0) = knot;
            b = -a(0) * knot;
          } else {
            int count;
            if constexpr (std::is_same_v<T, bias::HullFixed>)
              count = s.n;
            else
              count = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(s.n_max)));
            const auto idx = pick_samples(layer_inputs->size(), count, rng);
            Matrix picked(count, fan_in);
            for (int k = 0; k < count; ++k) picked.row(k) = layer_inputs->points().row(idx[static_cast<std::size_t>(k)]);
            const Vector anchor = sample_ico(picked, rng);
            out.anchors.row(i) = anchor.transpose();
            b = -a.dot(anchor);
          }
        },
        cfg.bias);
    out.b(i) = b;
  }
  return out;
}

struct NetworkInit {
  std::vector<InitConfig> hidden;  // one per hidden layer
  WeightScheme output_weight = weights::HeNormal{};
  double output_bias = 0.0;
  // Caps the number of samples propagated to data-dependent layers; 0 = all.
  Eigen::Index subsample = 0;
};

// arch = {d, m_1, ..., m_L}. Layer l draws from derive_seed(seed, l), the
// output layer from derive_seed(seed, L). Data-dependent layers see the
// images of train_inputs under the already initialized layers.
inline MLPParams init_network(const NetworkInit& spec, const std::vector<Eigen::Index>& arch,
                              const DataSet* train_inputs, std::uint64_t seed) {
  if (arch.size() < 2) throw ValidationError("init_network: need input width and at least one hidden layer");
  if (spec.hidden.size() != arch.size() - 1)
    throw ValidationError("init_network: one InitConfig per hidden layer required");
  bool any_data = false;
  for (const auto& c : spec.hidden) any_data = any_data || needs_data(c.bias);
  if (any_data && train_inputs == nullptr) throw ValidationError("init_network: training inputs required");
  if (train_inputs && train_inputs->dim() != arch[0]) throw ShapeError("init_network: input dimension mismatch");

  std::optional<Matrix> images;
  if (train_inputs) {
    const Eigen::Index n = train_inputs->size();
    if (spec.subsample > 0 && n > spec.subsample) {
      CounterRng rng(derive_seed(seed, 0xFFFFFFFFULL));
      const auto idx = pick_samples(n, static_cast<int>(spec.subsample), rng);
      Matrix sub(spec.subsample, train_inputs->dim());
      for (Eigen::Index k = 0; k < spec.subsample; ++k)
        sub.row(k) = train_inputs->points().row(idx[static_cast<std::size_t>(k)]);
      images = std::move(sub);
    } else {
      images = train_inputs->points();
    }
  }

  MLPParams p;
  const std::size_t depth = arch.size() - 1;
  for (std::size_t l = 0; l < depth; ++l) {
    std::optional<DataSet> layer_data;
    if (images && needs_data(spec.hidden[l].bias)) layer_data.emplace(*images);
    auto layer = init_layer(spec.hidden[l], arch[l], arch[l + 1], layer_data ? &*layer_data : nullptr,
                            derive_seed(seed, l));
    if (images) *images = ((*images * layer.W.transpose()).rowwise() + layer.b.transpose()).cwiseMax(0.0);
    p.layers.push_back({std::move(layer.W), std::move(layer.b)});
  }
  CounterRng out_rng(derive_seed(seed, depth));
  p.w = draw_weights(spec.output_weight, arch.back(), 1, out_rng);
  p.c = spec.output_bias;
  return p;
}

inline double knot_of(const Neuron& neuron) {
  if (neuron.a.size() != 1) throw ShapeError("knot_of: need a scalar neuron");
  if (neuron.a(0) == 0.0) throw ConstantNeuronError();
  return -neuron.b / neuron.a(0);
}

inline double edge_distance(const Neuron& neuron) {
  if (neuron.is_constant()) throw ConstantNeuronError();
  return std::abs(neuron.b) / neuron.a.norm();
}

}  // namespace reluinit
