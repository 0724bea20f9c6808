#pragma once

// Analytic-versus-oracle checks. Each check returns named results with the
// measured statistic and the threshold it is compared against; `validate`
// and the acceptance runner print them.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "reluinit/analytics.hpp"
#include "reluinit/geometry.hpp"
#include "reluinit/initstrat.hpp"
#include "reluinit/lab/config.hpp"
#include "reluinit/lab/experiments.hpp"
#include "reluinit/lab/parallel.hpp"
#include "reluinit/netcore.hpp"
#include "reluinit/ratiodist.hpp"
#include "reluinit/special.hpp"

namespace reluinit::lab {

enum class Relation { Less, LessEq, Greater, Equal };

inline const char* to_string(Relation r) {
  switch (r) {
    case Relation::Less: return "<";
    case Relation::LessEq: return "<=";
    case Relation::Greater: return ">";
    case Relation::Equal: return "==";
  }
  return "?";
}

struct CheckResult {
  int criterion = 0;
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  Relation relation = Relation::Less;
  std::string detail;

  bool passed() const {
    if (std::isnan(statistic)) return false;
    switch (relation) {
      case Relation::Less: return statistic < threshold;
      case Relation::LessEq: return statistic <= threshold;
      case Relation::Greater: return statistic > threshold;
      case Relation::Equal: return statistic == threshold;
    }
    return false;
  }
};

inline std::string format_stat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string report_line(const CheckResult& r) {
  std::string s = r.passed() ? "PASS " : "FAIL ";
  s += r.name + " statistic=" + format_stat(r.statistic) + " " + to_string(r.relation) +
       " threshold=" + format_stat(r.threshold);
  if (!r.detail.empty()) s += " (" + r.detail + ")";
  return s;
}

struct ValidateOptions {
  long long ratio_samples = 1'000'000;
  double ks_threshold = 0.005;
  int split_cases = 1000;
  double split_tol = 1e-10;
  long long state_neurons = 100'000;
  double se_factor = 3.0;
  long long bias_neurons = 1'000'000;
  long long orthant_neurons = 100'000;
  int grad_instances = 1000;
  double grad_tol = 1e-12;
  double fd_tol_1d = 1e-6;
  double fd_tol_deep = 1e-5;
  int deep_fd_instances = 200;
  int homog_cases = 10000;
  double homog_ulps = 4.0;
  int norm_reps = 50000;
  long long psi_samples = 10'000'000;
  double psi_rel = 0.01;
  long long direction_samples = 100'000;
  long long direction_density_samples = 1'000'000;
  double chi2_alpha = 0.01;
  int dead_inits = 1000;
  int train_seeds = 10;
  int train_width = 1024;
  int train_epochs = 250;
  int train_n = 256;
  int train_batch = 128;
  double train_lr = 1e-3;
  double train_ratio = 0.5;

  static ValidateOptions from_config(const Config& c) {
    ValidateOptions o;
    o.ratio_samples = c.get_int("validate.ratio_samples", o.ratio_samples);
    o.ks_threshold = c.get_double("validate.ks_threshold", o.ks_threshold);
    o.split_cases = static_cast<int>(c.get_int("validate.split_cases", o.split_cases));
    o.split_tol = c.get_double("validate.split_tol", o.split_tol);
    o.state_neurons = c.get_int("validate.state_neurons", o.state_neurons);
    o.se_factor = c.get_double("validate.se_factor", o.se_factor);
    o.bias_neurons = c.get_int("validate.bias_neurons", o.bias_neurons);
    o.orthant_neurons = c.get_int("validate.orthant_neurons", o.orthant_neurons);
    o.grad_instances = static_cast<int>(c.get_int("validate.grad_instances", o.grad_instances));
    o.grad_tol = c.get_double("validate.grad_tol", o.grad_tol);
    o.fd_tol_1d = c.get_double("validate.fd_tol_1d", o.fd_tol_1d);
    o.fd_tol_deep = c.get_double("validate.fd_tol_deep", o.fd_tol_deep);
    o.deep_fd_instances = static_cast<int>(c.get_int("validate.deep_fd_instances", o.deep_fd_instances));
    o.homog_cases = static_cast<int>(c.get_int("validate.homog_cases", o.homog_cases));
    o.homog_ulps = c.get_double("validate.homog_ulps", o.homog_ulps);
    o.norm_reps = static_cast<int>(c.get_int("validate.norm_reps", o.norm_reps));
    o.psi_samples = c.get_int("validate.psi_samples", o.psi_samples);
    o.psi_rel = c.get_double("validate.psi_rel", o.psi_rel);
    o.direction_samples = c.get_int("validate.direction_samples", o.direction_samples);
    o.direction_density_samples = c.get_int("validate.direction_density_samples", o.direction_density_samples);
    o.chi2_alpha = c.get_double("validate.chi2_alpha", o.chi2_alpha);
    o.dead_inits = static_cast<int>(c.get_int("validate.dead_inits", o.dead_inits));
    o.train_seeds = static_cast<int>(c.get_int("validate.train_seeds", o.train_seeds));
    o.train_width = static_cast<int>(c.get_int("validate.train_width", o.train_width));
    o.train_epochs = static_cast<int>(c.get_int("validate.train_epochs", o.train_epochs));
    o.train_n = static_cast<int>(c.get_int("validate.train_n", o.train_n));
    o.train_batch = static_cast<int>(c.get_int("validate.train_batch", o.train_batch));
    o.train_lr = c.get_double("validate.train_lr", o.train_lr);
    o.train_ratio = c.get_double("validate.train_ratio", o.train_ratio);
    return o;
  }
};

namespace detail {

inline double ecdf_at(const std::vector<double>& sorted, double z) {
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), z);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

// |freq - p| in binomial standard errors; exact agreement is required when
// p is 0 or 1.
inline double binomial_z(long long count, long long n, double p) {
  const double freq = static_cast<double>(count) / static_cast<double>(n);
  const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  if (se == 0.0 || p <= 1e-15 || p >= 1.0 - 1e-15) {
    const double expected = std::round(p);
    return std::abs(freq - expected) == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return std::abs(freq - p) / se;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Chi-square goodness of fit against equal cell probabilities.
inline double chi2_pvalue_uniform(const std::vector<long long>& counts) {
  long long total = 0;
  for (auto c : counts) total += c;
  const double expected = static_cast<double>(total) / static_cast<double>(counts.size());
  double chi2 = 0.0;
  for (auto c : counts) chi2 += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  const double dof = static_cast<double>(counts.size() - 1);
  return gamma_q(dof / 2.0, chi2 / 2.0);
}

struct NamedPair {
  std::string name;
  RatioPair pair;
};

inline std::vector<NamedPair> closed_form_families() {
  return {
      {"normal/normal", RatioPair(ScalarDist::normal(1.0), ScalarDist::normal(1.0))},
      {"dirac/normal", RatioPair(ScalarDist::dirac(0.5), ScalarDist::normal(1.0))},
      {"asym-uniform/uniform", RatioPair(ScalarDist::uniform(0.0, 1.0), ScalarDist::uniform(-1.0, 1.0))},
      {"sym-uniform/uniform", RatioPair(ScalarDist::uniform(-1.0, 1.0), ScalarDist::uniform(-1.0, 1.0))},
      {"dirac/uniform", RatioPair(ScalarDist::dirac(0.5), ScalarDist::uniform(-1.0, 1.0))},
  };
}

}  // namespace detail

// 1. Ratio CDFs against empirical CDFs of sampled ratios.
inline std::vector<CheckResult> check_ratio_cdf(const ValidateOptions& o, std::uint64_t seed) {
  const std::vector<double> grid = {-4.0, -2.0, -1.0, -0.5, -0.25, -0.1, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0};
  auto families = detail::closed_form_families();
  families.push_back({"uniform/normal (quadrature)", RatioPair(ScalarDist::uniform(0.0, 1.0), ScalarDist::normal(1.0))});
  families.push_back({"normal/uniform (quadrature)", RatioPair(ScalarDist::normal(1.0), ScalarDist::uniform(-1.0, 1.0))});
  const auto stats = parallel_map(families.size(), [&](std::size_t k) {
    auto xs = sample_ratio(families[k].pair, static_cast<std::size_t>(o.ratio_samples), derive_seed(seed, 100 + k));
    std::sort(xs.begin(), xs.end());
    double worst = 0.0;
    for (double z : grid) worst = std::max(worst, std::abs(cdf_ratio(families[k].pair, z) - detail::ecdf_at(xs, z)));
    return worst;
  });
  std::vector<CheckResult> out;
  for (std::size_t k = 0; k < families.size(); ++k)
    out.push_back({1, "ratio_cdf_mc[" + families[k].name + "]", stats[k], o.ks_threshold, Relation::Less,
                   std::to_string(grid.size()) + " grid points, n=" + std::to_string(o.ratio_samples)});
  return out;
}

// 2. F- + F+ = F, closed forms against quadrature, F+ = F/2 for symmetric pairs.
inline std::vector<CheckResult> check_split_identity(const ValidateOptions& o, std::uint64_t seed) {
  CounterRng rng(derive_seed(seed, 200));
  double sum_err = 0.0, quad_err = 0.0, sym_err = 0.0, range_err = 0.0;
  int n_closed = 0, n_sym = 0;
  for (int i = 0; i < o.split_cases; ++i) {
    const double s1 = uniform(rng, 0.2, 3.0);
    const double s2 = uniform(rng, 0.2, 3.0);
    const double b = uniform(rng, -2.0, 2.0);
    std::optional<RatioPair> p;
    switch (uniform_index(rng, 9)) {
      case 0: p.emplace(ScalarDist::normal(s1), ScalarDist::normal(s2)); break;
      case 1: p.emplace(ScalarDist::dirac(b), ScalarDist::normal(s2)); break;
      case 2: p.emplace(ScalarDist::uniform(0.0, s1), ScalarDist::uniform(-s2, s2)); break;
      case 3: p.emplace(ScalarDist::uniform(-s1, 0.0), ScalarDist::uniform(-s2, s2)); break;
      case 4: p.emplace(ScalarDist::uniform(-s1, s1), ScalarDist::uniform(-s2, s2)); break;
      case 5: p.emplace(ScalarDist::dirac(b), ScalarDist::uniform(-s2, s2)); break;
      case 6: p.emplace(ScalarDist::uniform(b, b + s1), ScalarDist::normal(s2)); break;
      case 7: p.emplace(ScalarDist::normal(s1), ScalarDist::uniform(-s2, s2)); break;
      default: p.emplace(ScalarDist::normal(s1), ScalarDist::uniform(-s2, s2 * 0.5)); break;
    }
    const double z = uniform(rng, -5.0, 5.0);
    const double fm = fminus(*p, z), fp = fplus(*p, z), f = cdf_ratio(*p, z);
    sum_err = std::max(sum_err, std::abs(fm + fp - f));
    for (double v : {fm, fp, f}) range_err = std::max({range_err, -v, v - 1.0});
    if (has_closed_form(*p)) {
      ++n_closed;
      const auto [qm, qp] = split_by_quadrature(*p, z);
      quad_err = std::max({quad_err, std::abs(fm - qm), std::abs(fp - qp)});
    }
    if (p->both_symmetric()) {
      ++n_sym;
      sym_err = std::max({sym_err, std::abs(fp - f / 2.0), std::abs(fm - f / 2.0)});
    }
  }
  return {
      {2, "split_sum_identity", sum_err, o.split_tol, Relation::LessEq, std::to_string(o.split_cases) + " cases"},
      {2, "split_range", std::max(0.0, range_err), 0.0, Relation::LessEq, "F-, F+, F in [0,1]"},
      {2, "split_closed_vs_quadrature", quad_err, o.split_tol, Relation::LessEq,
       std::to_string(n_closed) + " closed-form cases"},
      {2, "split_symmetric_half", sym_err, o.split_tol, Relation::LessEq, std::to_string(n_sym) + " symmetric cases"},
  };
}

// 3. Lemma state probabilities against classified random neurons.
inline std::vector<CheckResult> check_state_probabilities(const ValidateOptions& o, std::uint64_t seed) {
  struct Family {
    std::string name;
    ScalarDist bias;
    ScalarDist weight;
  };
  const double sqrt2 = std::sqrt(2.0);
  const std::vector<Family> fams = {
      {"normal/normal rho=1", ScalarDist::normal(1.0), ScalarDist::normal(1.0)},
      {"dirac/normal", ScalarDist::dirac(0.1), ScalarDist::normal(sqrt2)},
      {"asym-uniform/uniform", ScalarDist::uniform(0.0, 1.0), ScalarDist::uniform(-1.5, 1.5)},
      {"sym-uniform/uniform", ScalarDist::uniform(-1.0, 1.0), ScalarDist::uniform(-2.0, 2.0)},
      {"dirac/uniform", ScalarDist::dirac(0.1), ScalarDist::uniform(-std::sqrt(6.0), std::sqrt(6.0))},
      {"zero-bias/normal", ScalarDist::dirac(0.0), ScalarDist::normal(sqrt2)},
  };
  const std::vector<std::pair<double, double>> windows = {{0.0, 1.0}, {-1.0, 1.0}};
  const std::size_t jobs = fams.size() * windows.size();
  const auto results = parallel_map(jobs, [&](std::size_t k) {
    const auto& f = fams[k / windows.size()];
    const auto [lo, hi] = windows[k % windows.size()];
    const StateProbs p = (f.bias.is<Dirac>() && f.bias.as<Dirac>().b == 0.0)
                             ? state_probabilities_zero_bias(f.weight, lo, hi)
                             : state_probabilities(f.bias, f.weight, lo, hi);
    const StateCounts c = count_states_1d(f.bias, f.weight, lo, hi, o.state_neurons, derive_seed(seed, 300 + k));
    const double zmax = std::max({detail::binomial_z(c.fully_active, c.total(), p.p_fully_active),
                                  detail::binomial_z(c.semi_active, c.total(), p.p_semi_active),
                                  detail::binomial_z(c.inactive, c.total(), p.p_inactive)});
    CheckResult r{3, "state_probs_mc[" + f.name + ", [" + format_stat(lo) + "," + format_stat(hi) + "]]", zmax,
                  o.se_factor, Relation::LessEq,
                  "fa/sa/ia analytic " + format_stat(p.p_fully_active) + "/" + format_stat(p.p_semi_active) + "/" +
                      format_stat(p.p_inactive)};
    return r;
  });
  std::vector<CheckResult> out(results.begin(), results.end());
  const StateProbs nn = state_probabilities(ScalarDist::normal(1.0), ScalarDist::normal(1.0), 0.0, 1.0);
  out.push_back({3, "normal_rho1_inactive", std::abs(nn.p_inactive - 0.375), 1e-12, Relation::LessEq,
                 "p_ia=" + format_stat(nn.p_inactive)});
  const StateProbs z = state_probabilities_zero_bias(ScalarDist::normal(sqrt2), 0.0, 1.0);
  out.push_back({3, "zero_bias_half", std::max(std::abs(z.p_semi_active - 0.5), std::abs(z.p_inactive - 0.5)), 1e-12,
                 Relation::LessEq, "p_sa=p_ia=0.5"});
  double sum_err = 0.0;
  for (const auto& f : fams) {
    if (f.bias.is<Dirac>() && f.bias.as<Dirac>().b == 0.0) continue;
    for (auto [lo, hi] : windows) sum_err = std::max(sum_err, std::abs(state_probabilities(f.bias, f.weight, lo, hi).sum() - 1.0));
  }
  out.push_back({3, "state_probs_sum", sum_err, 1e-10, Relation::LessEq, "p_fa+p_sa+p_ia=1"});
  return out;
}

// 4. Positive biases never give inactive neurons, negative ones never
// semi-active neurons, on windows containing 0.
inline std::vector<CheckResult> check_bias_theorems(const ValidateOptions& o, std::uint64_t seed) {
  const ScalarDist weight = ScalarDist::normal(std::sqrt(2.0));
  std::vector<CheckResult> out;
  int k = 0;
  for (auto [lo, hi] : std::vector<std::pair<double, double>>{{0.0, 1.0}, {-1.0, 1.0}}) {
    const std::string w = "[" + format_stat(lo) + "," + format_stat(hi) + "]";
    const auto pos = count_states_1d(ScalarDist::uniform(0.0, 0.5), weight, lo, hi, o.bias_neurons, derive_seed(seed, 400 + k++));
    out.push_back({4, "positive_bias_no_inactive" + w, static_cast<double>(pos.inactive), 0.0, Relation::Equal,
                   std::to_string(o.bias_neurons) + " neurons"});
    const auto neg = count_states_1d(ScalarDist::uniform(-0.5, 0.0), weight, lo, hi, o.bias_neurons, derive_seed(seed, 400 + k++));
    out.push_back({4, "negative_bias_no_semi_active" + w, static_cast<double>(neg.semi_active), 0.0, Relation::Equal,
                   std::to_string(o.bias_neurons) + " neurons"});
  }
  return out;
}

// 5. Zero bias with coni D = [0, inf)^d: inactive iff a <= 0, probability 2^-d.
inline std::vector<CheckResult> check_zero_bias_orthant(const ValidateOptions& o, std::uint64_t seed) {
  const auto results = parallel_map(7, [&](std::size_t k) {
    const int d = static_cast<int>(k) + 2;
    CounterRng rng(derive_seed(seed, 500 + k));
    const int extra = 20;
    Matrix pts(d + extra, d);
    pts.topRows(d).setIdentity();
    for (int j = 0; j < extra; ++j)
      for (int l = 0; l < d; ++l) pts(d + j, l) = uniform_open01(rng);
    const DataSet data(pts);
    InitConfig cfg;
    const auto layer = init_layer(cfg, d, o.orthant_neurons, nullptr, derive_seed(seed, 550 + k));
    long long inactive = 0;
    for (long long i = 0; i < o.orthant_neurons; ++i) {
      const Neuron h(layer.W.row(i).transpose(), layer.b(i));
      if (classify(data, h) == NeuronState::Inactive) ++inactive;
    }
    const double p = std::ldexp(1.0, -d);
    CheckResult r{5, "zero_bias_inactive_2^-d[d=" + std::to_string(d) + "]",
                  detail::binomial_z(inactive, o.orthant_neurons, p), o.se_factor, Relation::LessEq,
                  "freq=" + format_stat(static_cast<double>(inactive) / static_cast<double>(o.orthant_neurons)) +
                      " expected=" + format_stat(p) + (coni_is_positive_orthant(data) ? "" : " CONI NOT ORTHANT")};
    if (!coni_is_positive_orthant(data)) r.statistic = std::numeric_limits<double>::infinity();
    return r;
  });
  return {results.begin(), results.end()};
}

namespace detail {

struct GradInstance {
  MLPParams params;
  LabeledData data;
  Loss loss;
  double partial0;
  bool on_kinks;
};

// One hidden layer, scalar input. With on_kinks, weights are powers of two
// and some samples sit exactly on knots, and some neurons are constant.
inline GradInstance random_1d_instance(CounterRng& rng, bool on_kinks) {
  const Eigen::Index m = 1 + static_cast<Eigen::Index>(uniform_index(rng, 8));
  const Eigen::Index n = 1 + static_cast<Eigen::Index>(uniform_index(rng, 32));
  Vector a(m), b(m), w(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (on_kinks) {
      static constexpr double pow2[] = {-2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 0.0};
      a(i) = pow2[uniform_index(rng, 7)];
      b(i) = a(i) == 0.0 ? std::array<double, 3>{-0.3, 0.0, 0.4}[uniform_index(rng, 3)] : uniform(rng, -1.0, 1.0);
    } else {
      a(i) = standard_normal(rng) * std::sqrt(2.0);
      b(i) = standard_normal(rng) * 0.5;
    }
    w(i) = standard_normal(rng);
  }
  const double c = standard_normal(rng) * 0.3;
  MLPParams p = MLPParams::one_layer(a, b, w, c);
  const bool logistic = uniform_index(rng, 2) == 1;
  Matrix x(n, 1);
  Vector y(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    x(j, 0) = uniform(rng, -1.5, 1.5);
    if (on_kinks && uniform_index(rng, 3) == 0) {
      const Eigen::Index i = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(m)));
      if (a(i) != 0.0) x(j, 0) = -b(i) / a(i);
    }
    y(j) = logistic ? (uniform_index(rng, 2) ? 1.0 : -1.0) : standard_normal(rng);
  }
  static constexpr double p0s[] = {0.0, 0.5, 1.0};
  const double partial0 = uniform_index(rng, 4) == 3 ? uniform_open01(rng) : p0s[uniform_index(rng, 3)];
  return {std::move(p), LabeledData(std::move(x), std::move(y)),
          logistic ? Loss::logistic() : Loss::least_squares(), partial0, on_kinks};
}

inline double min_abs_preactivation(const MLPParams& p, const Matrix& X) {
  double m = std::numeric_limits<double>::infinity();
  Matrix H = X;
  for (const auto& L : p.layers) {
    const Matrix Z = (H * L.W.transpose()).rowwise() + L.b.transpose();
    m = std::min(m, Z.cwiseAbs().minCoeff());
    H = Z.cwiseMax(0.0);
  }
  return m;
}

inline Vector finite_difference_gradient(const MLPParams& p, const LabeledData& data, Loss loss, double h) {
  const Vector theta = p.flatten();
  Vector g(theta.size());
  MLPParams q = p;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    Vector t = theta;
    t(k) = theta(k) + h;
    q.assign(t);
    const double up = empirical_risk(q, data, loss);
    t(k) = theta(k) - h;
    q.assign(t);
    const double down = empirical_risk(q, data, loss);
    g(k) = (up - down) / (2.0 * h);
  }
  return g;
}

inline double relative_error(const Vector& approx, const Vector& exact) {
  return (approx - exact).cwiseAbs().maxCoeff() / std::max(exact.cwiseAbs().maxCoeff(), 1e-300);
}

}  // namespace detail

// 6. Closed-form 1-D gradients, backprop and finite differences.
inline std::vector<CheckResult> check_gradients(const ValidateOptions& o, std::uint64_t seed) {
  CounterRng rng(derive_seed(seed, 600));
  double worst_agree = 0.0, worst_fd = 0.0;
  int n_kink = 0, n_fd = 0;
  for (int i = 0; i < o.grad_instances; ++i) {
    const auto inst = detail::random_1d_instance(rng, i % 2 == 1);
    const Vector gc = grad_1d_closed_form(inst.params, inst.data, inst.loss, inst.partial0).flatten();
    const Vector gb = backprop(inst.params, inst.data, inst.loss, inst.partial0).flatten();
    for (Eigen::Index k = 0; k < gc.size(); ++k)
      worst_agree = std::max(worst_agree, std::abs(gc(k) - gb(k)) / std::max(1.0, std::abs(gc(k))));
    if (inst.on_kinks) ++n_kink;
    if (detail::min_abs_preactivation(inst.params, inst.data.inputs) >= 1e-4) {
      ++n_fd;
      const Vector fd = detail::finite_difference_gradient(inst.params, inst.data, inst.loss, 1e-6);
      worst_fd = std::max({worst_fd, detail::relative_error(fd, gc), detail::relative_error(fd, gb)});
    }
  }

  double worst_deep = 0.0;
  int n_deep = 0;
  CounterRng drng(derive_seed(seed, 601));
  while (n_deep < o.deep_fd_instances) {
    const int depth = 2 + static_cast<int>(uniform_index(drng, 3));
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(uniform_index(drng, 4));
    NetworkInit spec;
    std::vector<Eigen::Index> arch{d};
    for (int l = 0; l < depth; ++l) {
      InitConfig c;
      c.bias = bias::NormalSigma{0.3};
      spec.hidden.push_back(c);
      arch.push_back(1 + static_cast<Eigen::Index>(uniform_index(drng, 8)));
    }
    spec.output_bias = 0.1;
    const MLPParams p = init_network(spec, arch, nullptr, drng());
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(uniform_index(drng, 16));
    Matrix x(n, d);
    Vector y(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index k = 0; k < d; ++k) x(j, k) = standard_normal(drng);
      y(j) = standard_normal(drng);
    }
    if (detail::min_abs_preactivation(p, x) < 1e-4) continue;
    const LabeledData data(x, y);
    const Vector gb = backprop(p, data, Loss::least_squares(), 0.0).flatten();
    const Vector fd = detail::finite_difference_gradient(p, data, Loss::least_squares(), 1e-6);
    worst_deep = std::max(worst_deep, detail::relative_error(fd, gb));
    ++n_deep;
  }
  return {
      {6, "closed_form_vs_backprop", worst_agree, o.grad_tol, Relation::LessEq,
       std::to_string(o.grad_instances) + " instances, " + std::to_string(n_kink) + " with samples on knots"},
      {6, "grad_1d_vs_finite_differences", worst_fd, o.fd_tol_1d, Relation::Less,
       std::to_string(n_fd) + " kink-free instances, step 1e-6"},
      {6, "backprop_deep_vs_finite_differences", worst_deep, o.fd_tol_deep, Relation::Less,
       std::to_string(n_deep) + " instances, depth 2-4"},
  };
}

// 7. Zero-bias networks are positively homogeneous.
inline std::vector<CheckResult> check_homogeneity(const ValidateOptions& o, std::uint64_t seed) {
  CounterRng rng(derive_seed(seed, 700));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  double worst = 0.0, worst_zero = 0.0;
  int failures = 0;
  for (int i = 0; i < o.homog_cases; ++i) {
    const int depth = 1 + static_cast<int>(uniform_index(rng, 4));
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(uniform_index(rng, 8));
    NetworkInit spec;
    std::vector<Eigen::Index> arch{d};
    for (int l = 0; l < depth; ++l) {
      spec.hidden.push_back(InitConfig{});
      arch.push_back(1 + static_cast<Eigen::Index>(uniform_index(rng, 16)));
    }
    const MLPParams p = init_network(spec, arch, nullptr, rng());
    Vector x(d);
    for (Eigen::Index k = 0; k < d; ++k) x(k) = standard_normal(rng);
    double alpha;
    do {
      alpha = uniform(rng, 0.0, 1000.0);
    } while (alpha == 0.0);
    const double lhs = forward(p, Vector(alpha * x));
    const double rhs = alpha * forward(p, x);
    const double err = std::abs(lhs - rhs);
    const double ulps = rhs == 0.0 ? (err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity())
                                   : err / (eps * std::abs(rhs));
    if (ulps > o.homog_ulps) ++failures;
    worst = std::max(worst, ulps);
    worst_zero = std::max(worst_zero, std::abs(forward(p, Vector::Zero(d))));
  }
  return {
      {7, "homogeneity_ulps", worst, o.homog_ulps, Relation::LessEq,
       std::to_string(failures) + "/" + std::to_string(o.homog_cases) + " cases above the bound"},
      {7, "f_at_zero", worst_zero, 0.0, Relation::Equal, "f(0) == 0 exactly"},
  };
}

// 8. Norm statistics of He-normal weight vectors.
inline std::vector<CheckResult> check_norm_stats(const ValidateOptions& o, std::uint64_t seed) {
  std::vector<int> dims;
  for (int d = 1; d <= 64; ++d) dims.push_back(d);
  CounterRng rng(derive_seed(seed, 800));
  for (int i = 0; i < 100; ++i)
    dims.push_back(static_cast<int>(std::lround(std::exp(uniform(rng, 0.0, std::log(4096.0))))));
  dims.push_back(4096);
  int gautschi_viol = 0;
  for (int d : dims) {
    const auto s = weight_norm_stats(d, std::sqrt(2.0 / d));
    if (!(s.gautschi_lo <= s.mean && s.mean <= s.gautschi_hi)) ++gautschi_viol;
  }
  const double m64 = weight_norm_stats(64, std::sqrt(2.0 / 64.0)).mean / std::sqrt(2.0);
  const double d64_dev = std::max({0.0, 0.996 - m64, m64 - 0.9981});

  const std::vector<int> mc_dims = {2, 8, 64, 512};
  const auto mc = parallel_map(mc_dims.size(), [&](std::size_t k) {
    const int d = mc_dims[k];
    const double sigma = std::sqrt(2.0 / d);
    const auto st = weight_norm_stats(d, sigma);
    const double sd = std::sqrt(st.variance);
    const std::vector<double> thresholds = {st.mean - sd, st.mean, st.mean + sd, st.mean + 2.0 * sd};
    std::vector<long long> hits(thresholds.size(), 0);
    CounterRng r(derive_seed(seed, 810 + k));
    for (int rep = 0; rep < o.norm_reps; ++rep) {
      double sq = 0.0;
      for (int l = 0; l < d; ++l) {
        const double a = sigma * standard_normal(r);
        sq += a * a;
      }
      const double nrm = std::sqrt(sq);
      for (std::size_t t = 0; t < thresholds.size(); ++t)
        if (nrm >= thresholds[t]) ++hits[t];
    }
    double zmax = 0.0;
    for (std::size_t t = 0; t < thresholds.size(); ++t)
      zmax = std::max(zmax, detail::binomial_z(hits[t], o.norm_reps, weight_norm_tail(d, sigma, thresholds[t])));
    return zmax;
  });
  double mc_worst = 0.0;
  for (double z : mc) mc_worst = std::max(mc_worst, z);

  int bound_viol = 0;
  for (int d : {3, 4, 8, 16, 64, 256, 1024, 4096})
    for (double delta : {0.01, 0.05, 0.1, 0.2, 0.5, 1.0})
      if (weight_norm_tail(d, std::sqrt(2.0 / d), std::sqrt(2.0) + delta) > weight_norm_tail_bound(d, delta)) ++bound_viol;

  return {
      {8, "gautschi_bounds", static_cast<double>(gautschi_viol), 0.0, Relation::Equal,
       std::to_string(dims.size()) + " dimensions up to 4096"},
      {8, "he_d64_mean_window", d64_dev, 0.0, Relation::Equal, "E||A||/sqrt2=" + format_stat(m64)},
      {8, "norm_tail_mc", mc_worst, o.se_factor, Relation::LessEq,
       std::to_string(o.norm_reps) + " reps, d in {2,8,64,512}"},
      {8, "norm_tail_gamma_bound", static_cast<double>(bound_viol), 0.0, Relation::Equal,
       "exact <= bound on 48 (d, delta)"},
  };
}

// 9. Expected squared output Psi.
inline std::vector<CheckResult> check_psi(const ValidateOptions& o, std::uint64_t seed) {
  const double b = 0.1;
  const double psi0 = psi_output_size(0.0, b);
  const double ulp = std::nextafter(0.01, 1.0) - 0.01;
  const double mid = std::sqrt(psi_output_size(1.0, b)) - 1.0;
  std::vector<std::pair<double, double>> grid;
  for (double u : {0.25, 0.5, 1.0})
    for (double bb : {0.0, 0.1, 1.0}) grid.emplace_back(u, bb);
  const auto rel = parallel_map(grid.size(), [&](std::size_t k) {
    const auto [u, bb] = grid[k];
    const int d = 2;
    const double sigma = std::sqrt(2.0 / d);
    const double x = u;  // x = u (1, 1), so ||x|| / sqrt(d) = u
    CounterRng r(derive_seed(seed, 900 + k));
    double sum = 0.0;
    for (long long i = 0; i < o.psi_samples; ++i) {
      const double y = sigma * standard_normal(r) * x + sigma * standard_normal(r) * x + bb;
      if (y > 0.0) sum += y * y;
    }
    const double mc = sum / static_cast<double>(o.psi_samples);
    const double exact = psi_output_size(u, bb);
    return std::abs(mc - exact) / exact;
  });
  double worst = 0.0;
  for (double r : rel) worst = std::max(worst, r);
  return {
      {9, "psi_zero_input", psi0 == b * b ? std::abs(psi0 - 0.01) : std::numeric_limits<double>::infinity(), ulp,
       Relation::LessEq, "Psi(0,0.1) = 0.1*0.1 exactly; distance to the literal 0.01"},
      {9, "psi_reference_value", std::abs(mid - 0.057323), 5e-6, Relation::LessEq, "sqrt(Psi(1,0.1))-1=" + format_stat(mid)},
      {9, "psi_mc_relative", worst, o.psi_rel, Relation::Less,
       std::to_string(o.psi_samples) + " samples per (u,b) in {0.25,0.5,1}x{0,0.1,1}"},
  };
}

// 10. Direction laws: He-normal directions are uniform; uniform-weight
// directions follow 1/(d 2^d ||xi||_inf^d).
inline std::vector<CheckResult> check_directions(const ValidateOptions& o, std::uint64_t seed) {
  std::vector<CheckResult> out;
  {
    const int bins = 24;
    std::vector<long long> counts(bins, 0);
    InitConfig cfg;
    const auto layer = init_layer(cfg, 2, o.direction_samples, nullptr, derive_seed(seed, 1000));
    for (Eigen::Index i = 0; i < layer.W.rows(); ++i) {
      const double th = std::atan2(layer.W(i, 1), layer.W(i, 0)) + std::numbers::pi;
      const int k = std::min(bins - 1, static_cast<int>(th / (2.0 * std::numbers::pi) * bins));
      ++counts[static_cast<std::size_t>(k)];
    }
    out.push_back({10, "he_direction_uniform[d=2]", detail::chi2_pvalue_uniform(counts), o.chi2_alpha,
                   Relation::Greater, "chi-square p-value, 24 equal arcs"});
  }
  {
    // Equal-area cells: z-bands of equal height times equal longitude sectors.
    const int zb = 6, lb = 8;
    std::vector<long long> counts(zb * lb, 0);
    InitConfig cfg;
    const auto layer = init_layer(cfg, 3, o.direction_samples, nullptr, derive_seed(seed, 1001));
    for (Eigen::Index i = 0; i < layer.W.rows(); ++i) {
      const Eigen::Vector3d v = layer.W.row(i).transpose().normalized();
      const int zi = std::min(zb - 1, static_cast<int>((v(2) + 1.0) / 2.0 * zb));
      const double ph = std::atan2(v(1), v(0)) + std::numbers::pi;
      const int li = std::min(lb - 1, static_cast<int>(ph / (2.0 * std::numbers::pi) * lb));
      ++counts[static_cast<std::size_t>(zi * lb + li)];
    }
    out.push_back({10, "he_direction_uniform[d=3]", detail::chi2_pvalue_uniform(counts), o.chi2_alpha,
                   Relation::Greater, "chi-square p-value, 48 equal-area cells"});
  }
  const Eigen::Vector2d diag(std::sqrt(0.5), std::sqrt(0.5));
  const double h_diag = direction_density_uniform_weights(diag);
  out.push_back({10, "uniform_direction_density_diag", std::abs(h_diag - 0.25), 1e-15, Relation::LessEq,
                 "h=" + format_stat(h_diag)});
  {
    // Fold the four diagonal directions onto one arc of half-width w.
    const double w = 0.005;
    CounterRng r(derive_seed(seed, 1002));
    long long hits = 0;
    for (long long i = 0; i < o.direction_density_samples; ++i) {
      const double a1 = uniform(r, -1.0, 1.0), a2 = uniform(r, -1.0, 1.0);
      const double th = std::atan2(std::abs(a2), std::abs(a1));
      if (std::abs(th - std::numbers::pi / 4.0) <= w) ++hits;
    }
    const double n = static_cast<double>(o.direction_density_samples);
    const double p = static_cast<double>(hits) / n;
    const double est = p / (8.0 * w);
    const double se = std::sqrt(p * (1.0 - p) / n) / (8.0 * w);
    out.push_back({10, "uniform_direction_density_mc", std::abs(est - h_diag) / se, o.se_factor, Relation::LessEq,
                   "binned estimate " + format_stat(est) + " +- " + format_stat(se)});
  }
  return out;
}

// 11. Dead neurons of He-zero initializations on data in [0, 1].
inline std::vector<CheckResult> check_dead_count(const ValidateOptions& o, std::uint64_t seed) {
  const int m = 16;
  CounterRng rng(derive_seed(seed, 1100));
  std::vector<double> xs(256);
  for (auto& x : xs) x = uniform_open01(rng);
  const DataSet data = DataSet::from_1d(xs);
  InitConfig cfg;
  double sum = 0.0, sumsq = 0.0;
  for (int k = 0; k < o.dead_inits; ++k) {
    const auto layer = init_layer(cfg, 1, m, nullptr, derive_seed(seed, 1101 + static_cast<std::uint64_t>(k)));
    int dead = 0;
    for (int i = 0; i < m; ++i)
      if (is_dead(data, Neuron::scalar(layer.W(i, 0), layer.b(i)), 0.0)) ++dead;
    sum += dead;
    sumsq += static_cast<double>(dead) * dead;
  }
  const double n = o.dead_inits;
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  const double se = std::sqrt(m * 0.25 / n);
  return {{11, "dead_count_binomial_mean", std::abs(mean - m * 0.5) / se, o.se_factor, Relation::LessEq,
           "mean=" + format_stat(mean) + " var=" + format_stat(var) + " (Binomial(16,0.5): 8, 4)"}};
}

// 12. Knot-uniform versus He-zero training on sin(2 pi t).
inline std::vector<CheckResult> check_training(const ValidateOptions& o, std::uint64_t seed) {
  Run1dConfig rc;
  rc.target = "sin";
  rc.width = o.train_width;
  rc.n = o.train_n;
  rc.epochs = o.train_epochs;
  rc.snapshot_epochs = {0, o.train_epochs};
  rc.train.adam.lr = o.train_lr;
  rc.train.batch_size = o.train_batch;
  rc.train.patience = 0;
  const std::vector<std::string> inits = {"knot-uniform", "he-zero"};
  const std::size_t jobs = inits.size() * static_cast<std::size_t>(o.train_seeds);
  struct Outcome {
    double final_rmse = 0.0;
    double init_affine_residual = 0.0;
  };
  const auto runs = parallel_map(jobs, [&](std::size_t k) {
    Run1dConfig c = rc;
    c.init = inits[k / static_cast<std::size_t>(o.train_seeds)];
    const std::uint64_t s = derive_seed(seed, 1200 + k % static_cast<std::size_t>(o.train_seeds));
    const auto snaps = run_1d_training(c, s);
    Outcome out;
    out.final_rmse = snaps.back().rmse;
    const LabeledData data = make_1d_data(c.target, c.n, derive_seed(s, 1));
    const Vector f = forward_batch(snaps.front().params, data.inputs);
    Matrix design(data.size(), 2);
    design.col(0) = data.inputs.col(0);
    design.col(1).setOnes();
    const Vector coef = design.colPivHouseholderQr().solve(f);
    out.init_affine_residual = (design * coef - f).cwiseAbs().maxCoeff();
    return out;
  });
  std::vector<double> knot, he;
  double he_affine = 0.0;
  for (std::size_t k = 0; k < jobs; ++k) {
    if (k < static_cast<std::size_t>(o.train_seeds)) {
      knot.push_back(runs[k].final_rmse);
    } else {
      he.push_back(runs[k].final_rmse);
      he_affine = std::max(he_affine, runs[k].init_affine_residual);
    }
  }
  const double mk = detail::median(knot), mh = detail::median(he);
  return {
      {12, "knot_uniform_vs_he_zero_rmse", mk / mh, o.train_ratio, Relation::Less,
       "median RMSE knot-uniform " + format_stat(mk) + ", he-zero " + format_stat(mh) + ", m=" +
           std::to_string(o.train_width) + ", " + std::to_string(o.train_epochs) + " epochs, " +
           std::to_string(o.train_seeds) + " seeds"},
      {12, "he_zero_initial_predictor_affine", he_affine, 1e-9, Relation::Less, "max residual of affine fit"},
  };
}

struct ValidationReport {
  std::vector<CheckResult> results;

  bool all_passed() const {
    return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed(); });
  }

  std::string text(std::uint64_t seed) const {
    std::string s = "# reluinit validate seed=" + std::to_string(seed) + "\n";
    int passed = 0;
    for (const auto& r : results) {
      s += report_line(r) + "\n";
      if (r.passed()) ++passed;
    }
    s += "# " + std::to_string(passed) + "/" + std::to_string(results.size()) + " checks passed\n";
    return s;
  }
};

using CheckFn = std::vector<CheckResult> (*)(const ValidateOptions&, std::uint64_t);

inline const std::vector<std::pair<int, CheckFn>>& all_checks() {
  static const std::vector<std::pair<int, CheckFn>> checks = {
      {1, check_ratio_cdf},       {2, check_split_identity},   {3, check_state_probabilities},
      {4, check_bias_theorems},   {5, check_zero_bias_orthant}, {6, check_gradients},
      {7, check_homogeneity},     {8, check_norm_stats},        {9, check_psi},
      {10, check_directions},     {11, check_dead_count},       {12, check_training},
  };
  return checks;
}

inline ValidationReport run_validation(const ValidateOptions& o, std::uint64_t seed) {
  ValidationReport rep;
  for (const auto& [id, fn] : all_checks()) {
    auto r = fn(o, derive_seed(seed, static_cast<std::uint64_t>(id)));
    rep.results.insert(rep.results.end(), r.begin(), r.end());
  }
  return rep;
}

}  // namespace reluinit::lab
