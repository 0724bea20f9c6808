#pragma once

// Dense ReLU networks g = v o H_L o ... o H_1 with scalar output,
// empirical risks and their gradients.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "reluinit/errors.hpp"
#include "reluinit/rng.hpp"

namespace reluinit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct DenseLayer {
  Matrix W;  // fan_out x fan_in
  Vector b;  // fan_out
};

struct MLPParams {
  std::vector<DenseLayer> layers;
  Vector w;  // output weights
  double c = 0.0;

  static MLPParams one_layer(const Vector& a, const Vector& b, const Vector& w, double c) {
    MLPParams p;
    p.layers.push_back({a, b});
    p.w = w;
    p.c = c;
    p.validate();
    return p;
  }

  Eigen::Index input_dim() const {
    if (layers.empty()) throw ShapeError("MLPParams: no hidden layer");
    return layers.front().W.cols();
  }
  Eigen::Index width(std::size_t l) const { return layers.at(l).W.rows(); }

  void validate() const {
    if (layers.empty()) throw ShapeError("MLPParams: no hidden layer");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& L = layers[l];
      if (L.W.rows() != L.b.size()) throw ShapeError("MLPParams: bias length mismatch");
      if (l > 0 && L.W.cols() != layers[l - 1].W.rows())
        throw ShapeError("MLPParams: consecutive layer shapes incompatible");
      if (!L.W.allFinite() || !L.b.allFinite()) throw ValidationError("MLPParams: non-finite entry");
    }
    if (w.size() != layers.back().W.rows()) throw ShapeError("MLPParams: output weight length mismatch");
    if (!w.allFinite() || !std::isfinite(c)) throw ValidationError("MLPParams: non-finite entry");
  }

  // Same shapes, all zero.
  MLPParams zeros_like() const {
    MLPParams z;
    for (const auto& L : layers) z.layers.push_back({Matrix::Zero(L.W.rows(), L.W.cols()), Vector::Zero(L.b.size())});
    z.w = Vector::Zero(w.size());
    z.c = 0.0;
    return z;
  }

  Eigen::Index num_parameters() const {
    Eigen::Index n = w.size() + 1;
    for (const auto& L : layers) n += L.W.size() + L.b.size();
    return n;
  }

  // Order: W_1 (column-major), b_1, ..., W_L, b_L, w, c.
  Vector flatten() const {
    Vector v(num_parameters());
    Eigen::Index k = 0;
    for (const auto& L : layers) {
      v.segment(k, L.W.size()) = L.W.reshaped();
      k += L.W.size();
      v.segment(k, L.b.size()) = L.b;
      k += L.b.size();
    }
    v.segment(k, w.size()) = w;
    k += w.size();
    v(k) = c;
    return v;
  }

  void assign(const Vector& v) {
    if (v.size() != num_parameters()) throw ShapeError("MLPParams::assign: length mismatch");
    Eigen::Index k = 0;
    for (auto& L : layers) {
      L.W.reshaped() = v.segment(k, L.W.size());
      k += L.W.size();
      L.b = v.segment(k, L.b.size());
      k += L.b.size();
    }
    w = v.segment(k, w.size());
    k += w.size();
    c = v(k);
  }

  bool operator==(const MLPParams& o) const {
    if (layers.size() != o.layers.size() || c != o.c || w.size() != o.w.size() || w != o.w) return false;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto &A = layers[l], &B = o.layers[l];
      if (A.W.rows() != B.W.rows() || A.W.cols() != B.W.cols() || A.W != B.W || A.b != B.b) return false;
    }
    return true;
  }
};

// Gradients share the parameter layout.
using Gradient = MLPParams;

// Value used for relu'(0).
class Partial0 {
 public:
  constexpr Partial0(double v = 0.0) : value_(v) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("partial0 must lie in [0, 1]");
  }
  constexpr double value() const noexcept { return value_; }
  constexpr operator double() const noexcept { return value_; }

 private:
  double value_;
};

inline double relu_derivative(double z, Partial0 p0) {
  if (z > 0.0) return 1.0;
  if (z < 0.0) return 0.0;
  return p0.value();
}

class Loss {
 public:
  enum class Kind { LeastSquares, Logistic };

  constexpr Loss(Kind k = Kind::LeastSquares) : kind_(k) {}
  static constexpr Loss least_squares() { return Loss(Kind::LeastSquares); }
  static constexpr Loss logistic() { return Loss(Kind::Logistic); }

  constexpr Kind kind() const noexcept { return kind_; }

  double value(double y, double t) const {
    if (kind_ == Kind::LeastSquares) return (y - t) * (y - t);
    const double z = y * t;
    return z > 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
  }

  // dL/dt
  double derivative(double y, double t) const {
    if (kind_ == Kind::LeastSquares) return 2.0 * (t - y);
    return -y / (1.0 + std::exp(y * t));
  }

 private:
  Kind kind_;
};

struct LabeledData {
  Matrix inputs;  // n x d
  Vector labels;  // n

  LabeledData() = default;
  LabeledData(Matrix x, Vector y) : inputs(std::move(x)), labels(std::move(y)) { validate(); }

  Eigen::Index size() const noexcept { return inputs.rows(); }

  void validate() const {
    if (inputs.rows() < 1) throw ValidationError("LabeledData: need at least one sample");
    if (inputs.rows() != labels.size()) throw ShapeError("LabeledData: inputs/labels length mismatch");
    if (!inputs.allFinite() || !labels.allFinite()) throw ValidationError("LabeledData: non-finite entry");
  }

  LabeledData subset(const std::vector<Eigen::Index>& idx) const {
    LabeledData out;
    out.inputs.resize(static_cast<Eigen::Index>(idx.size()), inputs.cols());
    out.labels.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      out.inputs.row(static_cast<Eigen::Index>(k)) = inputs.row(idx[k]);
      out.labels(static_cast<Eigen::Index>(k)) = labels(idx[k]);
    }
    return out;
  }
};

inline double forward(const MLPParams& params, const Vector& x) {
  if (x.size() != params.input_dim()) throw ShapeError("forward: input dimension mismatch");
  Vector h = x;
  for (const auto& L : params.layers) h = (L.W * h + L.b).cwiseMax(0.0);
  return params.w.dot(h) + params.c;
}

// Rows of X are inputs.
inline Vector forward_batch(const MLPParams& params, const Matrix& X) {
  if (X.cols() != params.input_dim()) throw ShapeError("forward_batch: input dimension mismatch");
  Vector out(X.rows());
  for (Eigen::Index j = 0; j < X.rows(); ++j) out(j) = forward(params, X.row(j).transpose());
  return out;
}

// Post-activations of hidden layer `layer` (0-based) for every input row.
inline Matrix hidden_activations(const MLPParams& params, const Matrix& X, std::size_t layer) {
  Matrix H = X;
  for (std::size_t l = 0; l <= layer; ++l) {
    const auto& L = params.layers.at(l);
    H = ((H * L.W.transpose()).rowwise() + L.b.transpose()).cwiseMax(0.0);
  }
  return H;
}

inline double empirical_risk(const MLPParams& params, const LabeledData& data, Loss loss) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < data.size(); ++j)
    sum += loss.value(data.labels(j), forward(params, data.inputs.row(j).transpose()));
  return sum / static_cast<double>(data.size());
}

// Gradient of the empirical risk of a network with one hidden layer and
// scalar input, assembled per neuron from its knot x* = -b/a:
//   a > 0: the neuron is active on samples x_j > x*,
//   a < 0: on samples x_j < x*,
//   a = 0: constant relu(b), with relu'(b) read as 0, 1 or partial0.
// Samples exactly on a knot contribute partial0 * w_i * x* * L' to d/da and
// partial0 * w_i * L' to d/db.
inline Gradient grad_1d_closed_form(const MLPParams& params, const LabeledData& data, Loss loss,
                                    Partial0 partial0) {
  if (params.layers.size() != 1 || params.input_dim() != 1)
    throw ShapeError("grad_1d_closed_form: need one hidden layer and scalar input");
  const auto& L = params.layers[0];
  const Eigen::Index m = L.W.rows();
  const Eigen::Index n = data.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  Vector scaled(n);  // L'(y_j, g(x_j)) / n
  for (Eigen::Index j = 0; j < n; ++j) {
    const double x = data.inputs(j, 0);
    scaled(j) = loss.derivative(data.labels(j), forward(params, Vector::Constant(1, x))) * inv_n;
  }

  Gradient g = params.zeros_like();
  for (Eigen::Index j = 0; j < n; ++j) g.c += scaled(j);

  for (Eigen::Index i = 0; i < m; ++i) {
    const double a = L.W(i, 0);
    const double b = L.b(i);
    const double wi = params.w(i);
    double da = 0.0, db = 0.0, dw = 0.0;
    if (a == 0.0) {
      const double db_factor = relu_derivative(b, partial0);
      const double out = std::max(0.0, b);
      for (Eigen::Index j = 0; j < n; ++j) {
        const double x = data.inputs(j, 0);
        da += scaled(j) * wi * db_factor * x;
        db += scaled(j) * wi * db_factor;
        dw += scaled(j) * out;
      }
    } else {
      const double knot = -b / a;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double x = data.inputs(j, 0);
        const bool active = a > 0.0 ? x > knot : x < knot;
        if (active) {
          da += scaled(j) * wi * x;
          db += scaled(j) * wi;
          dw += scaled(j) * (a * x + b);
        } else if (x == knot) {
          da += scaled(j) * partial0.value() * wi * knot;
          db += scaled(j) * partial0.value() * wi;
        }
      }
    }
    g.layers[0].W(i, 0) = da;
    g.layers[0].b(i) = db;
    g.w(i) = dw;
  }
  return g;
}

// Reverse-mode gradient of the empirical risk on `batch`. Wherever a
// pre-activation is exactly 0 the local ReLU derivative is partial0.
inline Gradient backprop(const MLPParams& params, const LabeledData& batch, Loss loss,
                         Partial0 partial0) {
  params.validate();
  if (batch.inputs.cols() != params.input_dim()) throw ShapeError("backprop: input dimension mismatch");
  const std::size_t depth = params.layers.size();
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  Gradient g = params.zeros_like();

  std::vector<Vector> acts(depth + 1);
  std::vector<Vector> pre(depth);
  for (Eigen::Index j = 0; j < batch.size(); ++j) {
    acts[0] = batch.inputs.row(j).transpose();
    for (std::size_t l = 0; l < depth; ++l) {
      pre[l] = params.layers[l].W * acts[l] + params.layers[l].b;
      acts[l + 1] = pre[l].cwiseMax(0.0);
    }
    const double out = params.w.dot(acts[depth]) + params.c;
    const double dl = loss.derivative(batch.labels(j), out) * inv_n;

    g.w += dl * acts[depth];
    g.c += dl;
    Vector delta = dl * params.w;
    for (std::size_t l = depth; l-- > 0;) {
      for (Eigen::Index k = 0; k < delta.size(); ++k) delta(k) *= relu_derivative(pre[l](k), partial0);
      g.layers[l].W.noalias() += delta * acts[l].transpose();
      g.layers[l].b += delta;
      if (l > 0) delta = params.layers[l].W.transpose() * delta;
    }
  }
  return g;
}

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  AdamConfig adam;
  Eigen::Index batch_size = 128;
  int epochs = 50;
  // Epochs without improvement of the held-out risk before stopping; 0 disables.
  int patience = 5;
  std::uint64_t seed = 0;
  Loss loss = Loss::least_squares();
  Partial0 partial0 = 0.0;
  // Called after every epoch with the 1-based epoch number.
  std::function<void(int, const MLPParams&)> on_epoch;
};

struct TrainResult {
  MLPParams params;
  std::vector<double> train_risk;       // entry 0 is the risk at initialization
  std::vector<double> validation_risk;  // empty without held-out data
  int epochs_run = 0;
  bool stopped_early = false;
};

class Adam {
 public:
  Adam(Eigen::Index n, AdamConfig cfg) : cfg_(cfg), m_(Vector::Zero(n)), v_(Vector::Zero(n)) {}

  void step(Vector& theta, const Vector& grad) {
    ++t_;
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      const double mh = m_(k) / c1;
      const double vh = v_(k) / c2;
      theta(k) -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
    }
  }

 private:
  AdamConfig cfg_;
  Vector m_, v_;
  std::int64_t t_ = 0;
};

// Mini-batch Adam. Batches are drawn from a per-epoch permutation seeded by
// (seed, epoch). With held-out data the parameters of the best held-out
// epoch are returned once `patience` epochs pass without improvement.
inline TrainResult train(MLPParams params, const LabeledData& data, const TrainConfig& cfg,
                         const std::optional<LabeledData>& heldout = std::nullopt) {
  if (cfg.batch_size < 1) throw ValidationError("train: batch_size must be at least 1");
  if (cfg.epochs < 0) throw ValidationError("train: epochs must be nonnegative");
  params.validate();
  data.validate();

  TrainResult res;
  Vector theta = params.flatten();
  Adam opt(theta.size(), cfg.adam);
  const Eigen::Index n = data.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));

  res.train_risk.push_back(empirical_risk(params, data, cfg.loss));
  double best = std::numeric_limits<double>::infinity();
  MLPParams best_params = params;
  int since_best = 0;
  if (heldout) {
    best = empirical_risk(params, *heldout, cfg.loss);
    res.validation_risk.push_back(best);
  }

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    CounterRng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    for (Eigen::Index k = n - 1; k > 0; --k)
      std::swap(order[static_cast<std::size_t>(k)],
                order[uniform_index(rng, static_cast<std::uint64_t>(k + 1))]);

    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index stop = std::min(n, start + cfg.batch_size);
      const std::vector<Eigen::Index> idx(order.begin() + start, order.begin() + stop);
      const Gradient g = backprop(params, data.subset(idx), cfg.loss, cfg.partial0);
      opt.step(theta, g.flatten());
      params.assign(theta);
    }
    res.epochs_run = epoch + 1;
    res.train_risk.push_back(empirical_risk(params, data, cfg.loss));
    if (cfg.on_epoch) cfg.on_epoch(epoch + 1, params);

    if (heldout) {
      const double r = empirical_risk(params, *heldout, cfg.loss);
      res.validation_risk.push_back(r);
      if (r < best) {
        best = r;
        best_params = params;
        since_best = 0;
      } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
        res.stopped_early = true;
        break;
      }
    }
  }
  res.params = heldout ? best_params : params;
  return res;
}

}  // namespace reluinit
