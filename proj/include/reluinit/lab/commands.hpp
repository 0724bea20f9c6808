#pragma once

// The experiment commands. Each reads its section of the config, runs
// repetitions through parallel_map with seeds derived from (seed, index),
// and returns its tables.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "reluinit/analytics.hpp"
#include "reluinit/geometry.hpp"
#include "reluinit/initstrat.hpp"
#include "reluinit/lab/checks.hpp"
#include "reluinit/lab/config.hpp"
#include "reluinit/lab/csv.hpp"
#include "reluinit/lab/experiments.hpp"
#include "reluinit/lab/parallel.hpp"
#include "reluinit/netcore.hpp"
#include "reluinit/ratiodist.hpp"

namespace reluinit::lab {

struct CommandOutput {
  CsvTable main;
  // Written next to the main table as <stem>.<name>.csv.
  std::vector<std::pair<std::string, CsvTable>> siblings;
};

namespace detail {

inline std::vector<KnotStrategy> selected_strategies(const Config& cfg, const std::string& key) {
  const auto all = knot_strategies();
  std::vector<std::string> names;
  for (const auto& s : all) names.push_back(s.name);
  names = cfg.get_strings(key, names);
  std::vector<KnotStrategy> out;
  for (const auto& n : names) {
    const auto it = std::find_if(all.begin(), all.end(), [&](const KnotStrategy& s) { return s.name == n; });
    if (it == all.end()) throw ValidationError(key + ": unknown strategy '" + n + "'");
    out.push_back(*it);
  }
  return out;
}

inline double se_of(double p, long long n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

}  // namespace detail

// Analytic and Monte Carlo state probabilities over a rho grid.
inline CommandOutput cmd_states_sweep(const Config& cfg, std::uint64_t seed) {
  const auto strategies = detail::selected_strategies(cfg, "states.strategies");
  const auto rhos = cfg.get_doubles("states.rho", {0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 14.1});
  const double x_min = cfg.get_double("states.x_min", 0.0);
  const double x_max = cfg.get_double("states.x_max", 1.0);
  const long long neurons = cfg.get_int("states.mc_neurons", 10000);
  if (neurons < 1) throw ValidationError("states.mc_neurons must be positive");
  for (double r : rhos)
    if (!(r > 0.0)) throw ValidationError("states.rho values must be positive");

  struct Row {
    StateProbs p;
    StateCounts c;
  };
  const std::size_t nr = rhos.size();
  const auto rows = parallel_map(strategies.size() * nr, [&](std::size_t k) {
    const auto& s = strategies[k / nr];
    const double rho = rhos[k % nr];
    Row r;
    r.p = knot_strategy_probs(s, rho, x_min, x_max);
    r.c = count_states_1d(s.bias(rho), s.weight(rho), x_min, x_max, neurons, derive_seed(seed, k));
    return r;
  });

  CsvTable t("states-sweep",
             {"strategy", "rho", "p_fa", "p_sa", "p_ia", "mc_fa", "mc_sa", "mc_ia", "se_fa", "se_sa", "se_ia", "n"});
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    const double n = static_cast<double>(r.c.total());
    const double fa = r.c.fully_active / n, sa = r.c.semi_active / n, ia = r.c.inactive / n;
    t.add({strategies[k / nr].name, rhos[k % nr], r.p.p_fully_active, r.p.p_semi_active, r.p.p_inactive, fa, sa, ia,
           detail::se_of(fa, r.c.total()), detail::se_of(sa, r.c.total()), detail::se_of(ia, r.c.total()),
           r.c.total()});
  }
  return {std::move(t), {}};
}

// Knot densities f_{P_b/P_a} on a z grid; the "mass" table compares the
// trapezoid integral plus the exact mass outside the grid with 1.
inline CommandOutput cmd_knot_density(const Config& cfg, std::uint64_t) {
  auto strategies = detail::selected_strategies(cfg, "knot.strategies");
  std::erase_if(strategies, [](const KnotStrategy& s) { return s.zero_bias; });
  const auto rhos = cfg.get_doubles("knot.rho", {1.0, 2.0, 5.0});
  std::vector<double> z_default;
  for (int i = 0; i <= 4000; ++i) z_default.push_back(-10.0 + 20.0 * i / 4000.0);
  const auto z = cfg.get_doubles("knot.z", z_default);
  if (z.size() < 2 || std::adjacent_find(z.begin(), z.end(), std::greater_equal<>()) != z.end())
    throw ValidationError("knot.z must be strictly increasing with at least two points");

  struct Curve {
    std::vector<double> pdf, cdf;
    double trapezoid = 0.0, tail = 0.0;
  };
  const std::size_t nr = rhos.size();
  const auto curves = parallel_map(strategies.size() * nr, [&](std::size_t k) {
    const auto& s = strategies[k / nr];
    const RatioPair pair(s.bias(rhos[k % nr]), s.weight(rhos[k % nr]));
    Curve c;
    for (double v : z) {
      c.pdf.push_back(pdf_ratio(pair, v));
      c.cdf.push_back(cdf_ratio(pair, v));
    }
    for (std::size_t i = 1; i < z.size(); ++i) c.trapezoid += 0.5 * (z[i] - z[i - 1]) * (c.pdf[i] + c.pdf[i - 1]);
    c.tail = cdf_ratio(pair, z.front()) + (1.0 - cdf_ratio(pair, z.back()));
    return c;
  });

  CsvTable t("knot-density", {"strategy", "rho", "z", "pdf", "cdf"});
  CsvTable mass("knot-density-mass", {"strategy", "rho", "trapezoid_mass", "tail_mass", "total"});
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& name = strategies[k / nr].name;
    const double rho = rhos[k % nr];
    for (std::size_t i = 0; i < z.size(); ++i) t.add({name, rho, z[i], curves[k].pdf[i], curves[k].cdf[i]});
    mass.add({name, rho, curves[k].trapezoid, curves[k].tail, curves[k].trapezoid + curves[k].tail});
  }
  return {std::move(t), {{"mass", std::move(mass)}}};
}

// Concentration of ||A||_2 under He scaling: delta thresholds and densities.
inline CommandOutput cmd_norm_conc(const Config& cfg, std::uint64_t seed) {
  const auto ds = cfg.get_ints("norm.d", {1, 2, 3, 4, 8, 16, 32, 64, 128, 256, 512, 1024});
  const double level = cfg.get_double("norm.level", 0.01);
  const long long reps = cfg.get_int("norm.reps", 50000);
  std::vector<double> x_default;
  for (int i = 0; i <= 300; ++i) x_default.push_back(3.0 * i / 300.0);
  const auto x = cfg.get_doubles("norm.density_x", x_default);
  if (reps < 2) throw ValidationError("norm.reps must be at least 2");
  for (auto d : ds)
    if (d < 1) throw ValidationError("norm.d values must be positive");

  struct Row {
    DeltaThresholds t;
    double mc = 0.0, se = 0.0;
  };
  const auto rows = parallel_map(ds.size(), [&](std::size_t k) {
    const int d = static_cast<int>(ds[k]);
    const double sigma = std::sqrt(2.0 / d);
    Row r;
    r.t = norm_delta_thresholds(d, level);
    CounterRng rng(derive_seed(seed, k));
    std::vector<double> norms(static_cast<std::size_t>(reps));
    for (auto& v : norms) {
      double sq = 0.0;
      for (int l = 0; l < d; ++l) {
        const double a = sigma * standard_normal(rng);
        sq += a * a;
      }
      v = std::sqrt(sq);
    }
    // Empirical (1 - level) quantile and its asymptotic standard error.
    const auto idx = static_cast<std::size_t>(std::ceil((1.0 - level) * static_cast<double>(reps))) - 1;
    std::nth_element(norms.begin(), norms.begin() + static_cast<std::ptrdiff_t>(idx), norms.end());
    r.mc = norms[idx] - std::sqrt(2.0);
    const double f = weight_norm_density(d, sigma, std::sqrt(2.0) + r.t.exact);
    r.se = std::sqrt(level * (1.0 - level) / static_cast<double>(reps)) / f;
    return r;
  });

  CsvTable t("norm-conc", {"d", "level", "delta_exact", "delta_gamma", "delta_lipschitz", "delta_mc", "mc_se", "reps"});
  CsvTable dens("norm-conc-density", {"d", "x", "density"});
  for (std::size_t k = 0; k < ds.size(); ++k) {
    const auto& r = rows[k];
    t.add({ds[k], level, r.t.exact, r.t.gamma, r.t.lipschitz, r.mc, r.se, reps});
    const double sigma = std::sqrt(2.0 / static_cast<double>(ds[k]));
    for (double v : x) dens.add({ds[k], v, weight_norm_density(static_cast<int>(ds[k]), sigma, v)});
  }
  return {std::move(t), {{"density", std::move(dens)}}};
}

// One-hidden-layer training on the 1-D targets: RMSE and neuron census per
// snapshot, plus knot histograms split by the sign of a.
inline CommandOutput cmd_train_1d(const Config& cfg, std::uint64_t seed) {
  const auto widths = cfg.get_ints("train.widths", {16, 128, 1024});
  const auto targets = cfg.get_strings("train.targets", {"linear", "hat", "sin"});
  const auto inits = cfg.get_strings("train.inits", {"he-zero", "knot-uniform"});
  const long long seeds = cfg.get_int("train.seeds", 50);
  Run1dConfig base;
  base.n = cfg.get_int("train.n", 256);
  base.epochs = static_cast<int>(cfg.get_int("train.epochs", 250));
  std::vector<int> snaps;
  for (auto e : cfg.get_ints("train.snapshot_epochs", {0, 10, 50, 250})) snaps.push_back(static_cast<int>(e));
  base.snapshot_epochs = snaps;
  base.train.adam.lr = cfg.get_double("train.lr", 1e-3);
  base.train.batch_size = cfg.get_int("train.batch_size", 128);
  base.train.partial0 = cfg.get_double("train.partial0", 0.0);
  base.train.patience = 0;
  const double h_lo = cfg.get_double("train.hist_lo", -0.5);
  const double h_hi = cfg.get_double("train.hist_hi", 1.5);
  const long long bins = cfg.get_int("train.hist_bins", 40);
  if (seeds < 1 || bins < 1 || !(h_lo < h_hi)) throw ValidationError("train: bad seeds or histogram settings");
  for (const auto& t : targets) target_function(t);

  struct Job {
    long long width;
    std::string target, init;
    long long rep;
  };
  std::vector<Job> jobs;
  for (auto w : widths)
    for (const auto& t : targets)
      for (const auto& i : inits)
        for (long long r = 0; r < seeds; ++r) jobs.push_back({w, t, i, r});

  struct Snap {
    int epoch;
    double rmse;
    NeuronCensus census;
    std::vector<long long> plus, minus;
  };
  const auto results = parallel_map(jobs.size(), [&](std::size_t k) {
    const auto& j = jobs[k];
    Run1dConfig rc = base;
    rc.width = j.width;
    rc.target = j.target;
    rc.init = j.init;
    const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(j.rep));
    const LabeledData data = make_1d_data(rc.target, rc.n, derive_seed(s, 1));
    const DataSet inputs(data.inputs);
    std::vector<Snap> out;
    // Bins 0 and bins+1 collect knots below h_lo and above h_hi.
    for (const auto& snap : run_1d_training(rc, s)) {
      Snap o{snap.epoch, snap.rmse, census_1d(snap.params, inputs, base.train.partial0),
             std::vector<long long>(static_cast<std::size_t>(bins + 2), 0),
             std::vector<long long>(static_cast<std::size_t>(bins + 2), 0)};
      const auto& L = snap.params.layers[0];
      for (Eigen::Index i = 0; i < L.W.rows(); ++i) {
        if (L.W(i, 0) == 0.0) continue;
        const double knot = -L.b(i) / L.W(i, 0);
        std::size_t bin;
        if (knot < h_lo) bin = 0;
        else if (knot >= h_hi) bin = static_cast<std::size_t>(bins + 1);
        else bin = 1 + std::min(static_cast<std::size_t>(bins - 1),
                                static_cast<std::size_t>((knot - h_lo) / (h_hi - h_lo) * static_cast<double>(bins)));
        ++(L.W(i, 0) > 0.0 ? o.plus : o.minus)[bin];
      }
      out.push_back(std::move(o));
    }
    return out;
  });

  CsvTable t("train-1d", {"width", "target", "init", "seed", "epoch", "rmse", "fully_active", "semi_active",
                          "inactive", "dead", "constant"});
  CsvTable hist("train-1d-knots", {"width", "target", "init", "seed", "epoch", "bin_lo", "bin_hi", "count_plus",
                                   "count_minus"});
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const auto& j = jobs[k];
    for (const auto& s : results[k]) {
      t.add({j.width, j.target, j.init, j.rep, s.epoch, s.rmse, s.census.states.fully_active,
             s.census.states.semi_active, s.census.states.inactive, s.census.dead, s.census.constant});
      for (long long b = 0; b < bins + 2; ++b) {
        const double lo = b == 0 ? -inf : h_lo + (h_hi - h_lo) * static_cast<double>(b - 1) / static_cast<double>(bins);
        const double hi = b == bins + 1 ? inf : h_lo + (h_hi - h_lo) * static_cast<double>(b) / static_cast<double>(bins);
        const auto bi = static_cast<std::size_t>(b);
        hist.add({j.width, j.target, j.init, j.rep, s.epoch, lo, hi, s.plus[bi], s.minus[bi]});
      }
    }
  }
  return {std::move(t), {{"knots", std::move(hist)}}};
}

// Randomly initialized predictors on [0,1] and [0,1]^2 plus the edges of
// the 2-D hidden neurons.
inline CommandOutput cmd_random_functions(const Config& cfg, std::uint64_t seed) {
  const auto strategies = cfg.get_strings("random.strategies", {"he/zero", "he/const=0.1", "sphere/hull-3"});
  const long long count = cfg.get_int("random.count", 10);
  const long long m1 = cfg.get_int("random.width_1d", 128);
  const long long m2 = cfg.get_int("random.width_2d", 20);
  const long long data_n = cfg.get_int("random.data_n", 100);
  const long long g1 = cfg.get_int("random.grid_1d", 201);
  const long long g2 = cfg.get_int("random.grid_2d", 41);
  if (count < 1 || m1 < 1 || m2 < 1 || data_n < 1 || g1 < 2 || g2 < 2)
    throw ValidationError("random: counts, widths and grid sizes must be positive");
  std::vector<InitConfig> inits;
  for (const auto& s : strategies) inits.push_back(parse_strategy(s));

  struct Out {
    Vector curve, surface;
    LayerInit edges;
  };
  const std::size_t nc = static_cast<std::size_t>(count);
  const auto results = parallel_map(inits.size() * nc, [&](std::size_t k) {
    const std::uint64_t s = derive_seed(seed, k);
    CounterRng rng(derive_seed(s, 0));
    Matrix x1(data_n, 1), x2(data_n, 2);
    for (Eigen::Index j = 0; j < data_n; ++j) {
      x1(j, 0) = uniform_open01(rng);
      x2(j, 0) = uniform_open01(rng);
      x2(j, 1) = uniform_open01(rng);
    }
    NetworkInit spec;
    spec.hidden = {inits[k / nc]};
    const DataSet d1(x1), d2(x2);
    Out o;
    const MLPParams p1 = init_network(spec, {1, m1}, &d1, derive_seed(s, 1));
    Matrix grid1(g1, 1);
    for (Eigen::Index i = 0; i < g1; ++i) grid1(i, 0) = static_cast<double>(i) / static_cast<double>(g1 - 1);
    o.curve = forward_batch(p1, grid1);
    const MLPParams p2 = init_network(spec, {2, m2}, &d2, derive_seed(s, 2));
    Matrix grid2(g2 * g2, 2);
    for (Eigen::Index i = 0; i < g2; ++i)
      for (Eigen::Index j = 0; j < g2; ++j) {
        grid2(i * g2 + j, 0) = static_cast<double>(i) / static_cast<double>(g2 - 1);
        grid2(i * g2 + j, 1) = static_cast<double>(j) / static_cast<double>(g2 - 1);
      }
    o.surface = forward_batch(p2, grid2);
    // Same stream as init_network uses for the hidden layer.
    o.edges = init_layer(spec.hidden[0], 2, m2, needs_data(spec.hidden[0].bias) ? &d2 : nullptr,
                         derive_seed(derive_seed(s, 2), 0));
    return o;
  });

  CsvTable curves("random-functions", {"strategy", "predictor", "x", "y"});
  CsvTable surfaces("random-functions-2d", {"strategy", "predictor", "x1", "x2", "y"});
  CsvTable edges("random-functions-edges",
                 {"strategy", "predictor", "neuron", "a1", "a2", "b", "distance", "anchor1", "anchor2"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < results.size(); ++k) {
    const std::string& name = strategies[k / nc];
    const long long pred = static_cast<long long>(k % nc);
    const auto& o = results[k];
    for (Eigen::Index i = 0; i < g1; ++i)
      curves.add({name, pred, static_cast<double>(i) / static_cast<double>(g1 - 1), o.curve(i)});
    for (Eigen::Index i = 0; i < g2; ++i)
      for (Eigen::Index j = 0; j < g2; ++j)
        surfaces.add({name, pred, static_cast<double>(i) / static_cast<double>(g2 - 1),
                      static_cast<double>(j) / static_cast<double>(g2 - 1), o.surface(i * g2 + j)});
    const auto& L = o.edges;
    for (Eigen::Index i = 0; i < L.W.rows(); ++i) {
      const Neuron h(L.W.row(i).transpose(), L.b(i));
      const bool anchored = L.anchors.rows() > 0;
      edges.add({name, pred, static_cast<long long>(i), L.W(i, 0), L.W(i, 1), L.b(i),
                 h.is_constant() ? nan : edge_distance(h), anchored ? L.anchors(i, 0) : nan,
                 anchored ? L.anchors(i, 1) : nan});
    }
  }
  return {std::move(curves), {{"2d", std::move(surfaces)}, {"edges", std::move(edges)}}};
}

struct ValidateOutput {
  ValidationReport report;
  std::string text;
  bool passed = false;
};

inline ValidateOutput cmd_validate(const Config& cfg, std::uint64_t seed) {
  ValidateOutput out;
  out.report = run_validation(ValidateOptions::from_config(cfg), seed);
  out.text = out.report.text(seed);
  out.passed = out.report.all_passed();
  return out;
}

}  // namespace reluinit::lab
