#pragma once

// Data sets, single ReLU neurons and their state relative to a data set.
//
// A neuron x -> relu(<a, x> + b) with a != 0 splits the input space along its
// edge <a, x> + b = 0. Relative to samples x_1..x_n it is
//   FullyActive  some sample on each strict side of the edge,
//   SemiActive   every sample on the closed active side, one strictly,
//   Inactive     every sample on the closed zero side.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "reluinit/errors.hpp"
#include "reluinit/rng.hpp"

namespace reluinit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class DataSet {
 public:
  // Rows are samples.
  explicit DataSet(Matrix points) : points_(std::move(points)) {
    if (points_.rows() < 1 || points_.cols() < 1)
      throw ValidationError("DataSet: need at least one sample and one dimension");
    if (!points_.allFinite()) throw ValidationError("DataSet: entries must be finite");
    min_ = points_.colwise().minCoeff().transpose();
    max_ = points_.colwise().maxCoeff().transpose();
  }

  static DataSet from_1d(const std::vector<double>& xs) {
    Matrix m(static_cast<Eigen::Index>(xs.size()), 1);
    for (std::size_t i = 0; i < xs.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = xs[i];
    return DataSet(std::move(m));
  }

  const Matrix& points() const noexcept { return points_; }
  Eigen::Index size() const noexcept { return points_.rows(); }
  Eigen::Index dim() const noexcept { return points_.cols(); }
  auto sample(Eigen::Index j) const { return points_.row(j).transpose(); }

  const Vector& coord_min() const noexcept { return min_; }
  const Vector& coord_max() const noexcept { return max_; }
  double x_min() const { return min_(0); }
  double x_max() const { return max_(0); }

 private:
  Matrix points_;
  Vector min_;
  Vector max_;
};

struct Neuron {
  Vector a;
  double b = 0.0;

  Neuron() = default;
  Neuron(Vector weights, double bias) : a(std::move(weights)), b(bias) {
    if (!a.allFinite() || !std::isfinite(b)) throw ValidationError("Neuron: entries must be finite");
  }
  static Neuron scalar(double a, double b) { return Neuron(Vector::Constant(1, a), b); }

  bool is_constant() const { return (a.array() == 0.0).all(); }

  double preactivation(const Vector& x) const { return a.dot(x) + b; }
  double operator()(const Vector& x) const { return std::max(0.0, preactivation(x)); }
};

enum class NeuronState { FullyActive, SemiActive, Inactive };

inline std::string_view to_string(NeuronState s) {
  switch (s) {
    case NeuronState::FullyActive: return "fully_active";
    case NeuronState::SemiActive: return "semi_active";
    case NeuronState::Inactive: return "inactive";
  }
  return "?";
}

struct ClassifyOptions {
  // Pre-activations with |value| <= edge_tolerance count as lying on the edge.
  double edge_tolerance = 0.0;
};

// <a, x_j> + b for every sample.
inline Vector preactivations(const DataSet& data, const Neuron& neuron) {
  if (neuron.a.size() != data.dim()) throw ShapeError("neuron dimension does not match data");
  return (data.points() * neuron.a).array() + neuron.b;
}

namespace detail {

inline NeuronState state_from_signs(bool any_pos, bool any_neg) {
  if (any_pos && any_neg) return NeuronState::FullyActive;
  if (any_pos) return NeuronState::SemiActive;
  return NeuronState::Inactive;
}

}  // namespace detail

inline NeuronState classify(const DataSet& data, const Neuron& neuron, ClassifyOptions opts = {}) {
  if (neuron.a.size() != data.dim()) throw ShapeError("neuron dimension does not match data");
  if (neuron.is_constant()) throw ConstantNeuronError();
  const Vector v = preactivations(data, neuron);
  const double tol = opts.edge_tolerance;
  const bool any_pos = (v.array() > tol).any();
  const bool any_neg = (v.array() < -tol).any();
  return detail::state_from_signs(any_pos, any_neg);
}

// One-dimensional classification. h is monotone in x, so the data extremes
// decide: the knot x* = -b/a lies strictly inside (x_min, x_max) iff h takes
// both signs there.
inline NeuronState classify_1d(const DataSet& data, const Neuron& neuron) {
  if (data.dim() != 1 || neuron.a.size() != 1) throw ShapeError("classify_1d needs d = 1");
  const double a = neuron.a(0);
  if (a == 0.0) throw ConstantNeuronError();
  const double h_lo = a * data.x_min() + neuron.b;
  const double h_hi = a * data.x_max() + neuron.b;
  return detail::state_from_signs(h_lo > 0.0 || h_hi > 0.0, h_lo < 0.0 || h_hi < 0.0);
}

// Inactive and either partial0 = 0 or no sample on the edge: every parameter
// gradient of the neuron vanishes on every subsample.
inline bool is_dead(const DataSet& data, const Neuron& neuron, double partial0,
                    ClassifyOptions opts = {}) {
  if (classify(data, neuron, opts) != NeuronState::Inactive) return false;
  if (partial0 == 0.0) return true;
  const Vector v = preactivations(data, neuron);
  return !(v.array().abs() <= opts.edge_tolerance).any();
}

// Flat-Dirichlet convex combination of the rows of `points`.
template <typename Rng>
Vector sample_ico(const Matrix& points, Rng& rng) {
  const Eigen::Index k = points.rows();
  if (k < 1) throw ValidationError("sample_ico: need at least one point");
  if (k == 1) return points.row(0).transpose();
  Vector lambda(k);
  for (Eigen::Index j = 0; j < k; ++j) lambda(j) = standard_exponential(rng);
  lambda /= lambda.sum();
  return points.transpose() * lambda;
}

inline Vector sample_ico(const Matrix& points, std::uint64_t seed) {
  CounterRng rng(seed);
  return sample_ico(points, rng);
}

// The edge meets ico D without containing it iff the neuron is fully active.
inline bool edge_hits_ico(const DataSet& data, const Neuron& neuron) {
  if (data.size() < 2) throw ValidationError("edge_hits_ico: need at least two samples");
  return classify(data, neuron) == NeuronState::FullyActive;
}

struct IcoWitness {
  Vector point;   // x on the edge with x in ico D
  Vector lambda;  // strictly positive, sums to 1
  double t;
};

// Constructive direction of the ico characterization: with D+ the samples of
// positive pre-activation and D- the rest, lambda(t) puts (1-t)/|D+| on D+ and
// t/|D-| on D-. H(t) = sum_j lambda_j(t) (<a,x_j> + b) is affine in t,
// positive at 0 and negative at 1 for fully active neurons, so its root is
// t* = H(0) / (H(0) - H(1)). Returns nothing when no such root exists.
inline std::optional<IcoWitness> ico_witness(const DataSet& data, const Neuron& neuron) {
  const Vector v = preactivations(data, neuron);
  const Eigen::Index n = v.size();
  Eigen::Index n_pos = 0;
  double sum_pos = 0.0;
  double sum_rest = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (v(j) > 0.0) {
      ++n_pos;
      sum_pos += v(j);
    } else {
      sum_rest += v(j);
    }
  }
  const Eigen::Index n_rest = n - n_pos;
  if (n_pos == 0 || n_rest == 0) return std::nullopt;
  const double h0 = sum_pos / static_cast<double>(n_pos);
  const double h1 = sum_rest / static_cast<double>(n_rest);
  if (!(h1 < 0.0)) return std::nullopt;
  const double t = h0 / (h0 - h1);
  Vector lambda(n);
  for (Eigen::Index j = 0; j < n; ++j)
    lambda(j) = v(j) > 0.0 ? (1.0 - t) / static_cast<double>(n_pos) : t / static_cast<double>(n_rest);
  IcoWitness w{data.points().transpose() * lambda, lambda, t};
  return w;
}

// y in D* iff <y, x_j> >= 0 for all samples.
inline bool dual_cone_contains(const DataSet& data, const Vector& y) {
  if (y.size() != data.dim()) throw ShapeError("dual_cone_contains: dimension mismatch");
  return ((data.points() * y).array() >= 0.0).all();
}

// coni D = [0, inf)^d iff every axis direction e_k has a positive multiple
// among the samples. Samples must lie in the closed positive orthant.
inline bool coni_is_positive_orthant(const DataSet& data, double off_axis_tol = 1e-12) {
  const Matrix& x = data.points();
  if ((x.array() < 0.0).any())
    throw DomainError("coni_is_positive_orthant: samples must be nonnegative");
  const Eigen::Index d = data.dim();
  std::vector<bool> found(static_cast<std::size_t>(d), false);
  for (Eigen::Index j = 0; j < x.rows(); ++j) {
    for (Eigen::Index k = 0; k < d; ++k) {
      if (!(x(j, k) > 0.0)) continue;
      bool on_axis = true;
      for (Eigen::Index l = 0; l < d && on_axis; ++l)
        if (l != k && !(x(j, l) < off_axis_tol)) on_axis = false;
      if (on_axis) found[static_cast<std::size_t>(k)] = true;
    }
  }
  return std::all_of(found.begin(), found.end(), [](bool f) { return f; });
}

struct AffineMap {
  Vector a;
  double b;
};

// Affine map agreeing with the neuron on every sample, if one exists.
inline std::optional<AffineMap> behaves_linearly(const DataSet& data, const Neuron& neuron,
                                                 double tol = 1e-9) {
  const Vector v = preactivations(data, neuron);
  const bool any_pos = (v.array() > 0.0).any();
  const bool any_neg = (v.array() < 0.0).any();
  if (!any_neg) return AffineMap{neuron.a, neuron.b};
  if (!any_pos) return AffineMap{Vector::Zero(data.dim()), 0.0};

  const Eigen::Index n = data.size();
  const Eigen::Index d = data.dim();
  Matrix design(n, d + 1);
  design.leftCols(d) = data.points();
  design.col(d).setOnes();
  const Vector target = v.cwiseMax(0.0);
  const Vector coef = design.completeOrthogonalDecomposition().solve(target);
  const double residual = (design * coef - target).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, target.cwiseAbs().maxCoeff());
  if (residual > tol * scale) return std::nullopt;
  return AffineMap{coef.head(d), coef(d)};
}

}  // namespace reluinit
