#pragma once

// Simulation harnesses: first-split selection frequencies under the null
// model, cross-validated prediction benchmarks with tuning, and per-node
// p-value timing.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "msrf/csv.hpp"
#include "msrf/evaluation.hpp"
#include "msrf/forest.hpp"
#include "msrf/simgen.hpp"

namespace msrf {

/// A split-selection method: MSR with a p-value approximation, or log-rank.
struct MethodSpec {
  Splitter splitter = Splitter::msr;
  PValueMethod pvalue = PValueMethod::minlau;

  std::string label() const {
    return splitter == Splitter::logrank ? "logrank" : std::string(to_string(pvalue));
  }
  friend bool operator==(const MethodSpec&, const MethodSpec&) = default;
};

inline std::optional<MethodSpec> parse_method(std::string_view s) {
  if (s == "logrank") return MethodSpec{Splitter::logrank, PValueMethod::minlau};
  if (auto p = parse_pvalue_method(s)) return MethodSpec{Splitter::msr, *p};
  return std::nullopt;
}

inline std::vector<MethodSpec> all_methods() {
  return {{Splitter::msr, PValueMethod::lau92},
          {Splitter::msr, PValueMethod::lau94},
          {Splitter::msr, PValueMethod::minlau},
          {Splitter::msr, PValueMethod::condmc},
          {Splitter::logrank, PValueMethod::minlau}};
}

inline std::string_view resampling_label(bool replace) noexcept { return replace ? "bootstrap" : "subsample"; }

// --- first-split selection ---------------------------------------------------

struct BiasStudyConfig {
  std::size_t n = 100;
  std::size_t replications = 50;
  std::size_t num_trees = 500;
  std::size_t mtry = 3;
  double minprop = 0.1;
  double alpha = 1.0;
  std::size_t min_node_size = 1;
  std::size_t n_permutations = 1000;
  std::uint64_t seed = 1;
  std::vector<MethodSpec> methods = all_methods();
  std::vector<bool> resampling = {false, true};
  std::size_t threads = 1;
};

struct BiasTally {
  MethodSpec method;
  bool replace = false;
  std::vector<std::string> covariates;
  std::vector<std::size_t> counts;
  std::size_t no_split = 0;

  std::size_t splits() const noexcept {
    std::size_t s = 0;
    for (auto c : counts) s += c;
    return s;
  }
  std::size_t trees() const noexcept { return splits() + no_split; }

  /// Share of root splits on covariate j (trees without a split excluded).
  double frequency(std::size_t j) const noexcept {
    const auto s = splits();
    return s ? static_cast<double>(counts[j]) / static_cast<double>(s) : 0.0;
  }
};

/// Grows root-only forests on fresh null-model data for every method and
/// resampling scheme and tallies the root split variable.
inline std::vector<BiasTally> run_bias_study(const BiasStudyConfig& cfg) {
  if (cfg.replications == 0) throw std::invalid_argument("replications must be at least 1");
  std::vector<SurvivalDataset> datasets;
  datasets.reserve(cfg.replications);
  for (std::size_t r = 0; r < cfg.replications; ++r) {
    ScenarioSpec spec;
    spec.scenario = Scenario::null_model;
    spec.n = cfg.n;
    spec.seed = derive_seed(cfg.seed, r);
    datasets.push_back(gen_null_model(spec));
  }

  std::vector<BiasTally> out;
  for (const auto& method : cfg.methods) {
    for (bool replace : cfg.resampling) {
      BiasTally tally;
      tally.method = method;
      tally.replace = replace;
      tally.covariates = datasets.front().covariate_names();
      tally.counts.assign(tally.covariates.size(), 0);

      ForestParams params;
      params.num_trees = cfg.num_trees;
      params.mtry = cfg.mtry;
      params.minprop = cfg.minprop;
      params.alpha = cfg.alpha;
      params.min_node_size = cfg.min_node_size;
      params.n_permutations = cfg.n_permutations;
      params.splitter = method.splitter;
      params.pvalue_method = method.pvalue;
      params.replace = replace;
      params.max_depth = 1;
      for (std::size_t r = 0; r < cfg.replications; ++r) {
        params.seed = derive_seed(cfg.seed ^ 0x5EEDULL, r);
        const auto forest = grow_forest(datasets[r], params, cfg.threads);
        for (const auto& tree : forest.trees()) {
          if (tree.root().terminal()) {
            ++tally.no_split;
          } else {
            ++tally.counts[static_cast<std::size_t>(tree.root().split_var)];
          }
        }
      }
      out.push_back(std::move(tally));
    }
  }
  return out;
}

inline void write_bias_csv(std::ostream& out, const std::vector<BiasTally>& tallies) {
  if (tallies.empty()) return;
  out << "method,resampling";
  for (const auto& c : tallies.front().covariates) out << ',' << c;
  out << ",none,trees";
  for (const auto& c : tallies.front().covariates) out << ",freq_" << c;
  out << '\n';
  for (const auto& t : tallies) {
    out << t.method.label() << ',' << resampling_label(t.replace);
    for (auto c : t.counts) out << ',' << c;
    out << ',' << t.no_split << ',' << t.trees();
    for (std::size_t j = 0; j < t.counts.size(); ++j) out << ',' << format_double(t.frequency(j));
    out << '\n';
  }
}

// --- prediction benchmark ------------------------------------------------------

inline const std::vector<double> kAlphaGrid = {0.1, 0.3, 0.5, 0.7, 0.9};
inline const std::vector<std::size_t> kNodesizeGrid = {1, 3, 10, 25, 50};

struct BenchmarkConfig {
  Scenario scenario = Scenario::scenario1;
  std::size_t n = 200;
  std::size_t replications = 1;
  std::size_t folds = 10;
  std::size_t num_trees = 50;
  std::size_t mtry = 0;  // 0 = p/2
  double minprop = 0.1;
  std::size_t msr_min_node_size = 3;
  std::size_t n_permutations = 1000;
  std::vector<double> alpha_grid = kAlphaGrid;
  std::vector<std::size_t> nodesize_grid = kNodesizeGrid;
  std::vector<MethodSpec> methods = all_methods();
  std::vector<bool> resampling = {false, true};
  std::uint64_t data_seed = 1;
  std::uint64_t tune_seed = 2;
  std::uint64_t final_seed = 3;
  std::size_t threads = 1;
};

struct BenchmarkRow {
  std::size_t replication = 0;
  Scenario scenario = Scenario::scenario1;
  bool replace = false;
  MethodSpec method;
  std::string tuned_param;
  double tuned_value = 0.0;
  FoldResult fold;
};

/// Parameters of one method for a tuning value (alpha for MSR, nodesize for
/// the log-rank baseline).
inline ForestParams benchmark_params(const BenchmarkConfig& cfg, const MethodSpec& method, bool replace,
                                     std::size_t p, double tuning_value) {
  ForestParams params;
  params.num_trees = cfg.num_trees;
  params.mtry = cfg.mtry ? cfg.mtry : std::max<std::size_t>(1, p / 2);
  params.minprop = cfg.minprop;
  params.n_permutations = cfg.n_permutations;
  params.splitter = method.splitter;
  params.pvalue_method = method.pvalue;
  params.replace = replace;
  if (method.splitter == Splitter::msr) {
    params.alpha = tuning_value;
    params.min_node_size = cfg.msr_min_node_size;
  } else {
    params.min_node_size = static_cast<std::size_t>(tuning_value);
  }
  return params;
}

/// Tuning round (seeded by tune_seed) over the method's grid, then a final
/// cross-validation (seeded by final_seed) with the selected value.
inline std::vector<BenchmarkRow> run_benchmark_replication(const BenchmarkConfig& cfg, const SurvivalDataset& data,
                                                           std::size_t replication) {
  std::vector<BenchmarkRow> rows;
  for (bool replace : cfg.resampling) {
    for (const auto& method : cfg.methods) {
      std::vector<double> grid;
      if (method.splitter == Splitter::msr) {
        grid = cfg.alpha_grid;
      } else {
        for (auto s : cfg.nodesize_grid) grid.push_back(static_cast<double>(s));
      }
      double best_value = grid.front();
      double best_ibs = std::numeric_limits<double>::infinity();
      if (grid.size() > 1) {
        for (double v : grid) {
          Rng tune_rng(derive_seed(cfg.tune_seed, replication));
          const auto params = benchmark_params(cfg, method, replace, data.num_covariates(), v);
          const auto folds = cross_validate(data, params, cfg.folds, tune_rng, cfg.threads);
          const double ibs = mean_valid_ibs(folds);
          if (ibs < best_ibs) {
            best_ibs = ibs;
            best_value = v;
          }
        }
      }
      Rng final_rng(derive_seed(cfg.final_seed, replication));
      const auto params = benchmark_params(cfg, method, replace, data.num_covariates(), best_value);
      for (auto& f : cross_validate(data, params, cfg.folds, final_rng, cfg.threads)) {
        rows.push_back({replication, cfg.scenario, replace, method,
                        method.splitter == Splitter::msr ? "alpha" : "nodesize", best_value, std::move(f)});
      }
    }
  }
  return rows;
}

inline SurvivalDataset benchmark_data(const BenchmarkConfig& cfg, std::size_t replication) {
  ScenarioSpec spec;
  spec.scenario = cfg.scenario;
  spec.n = cfg.n;
  spec.seed = derive_seed(cfg.data_seed, replication);
  return simulate(spec);
}

inline std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig& cfg) {
  if (cfg.replications == 0) throw std::invalid_argument("replications must be at least 1");
  std::vector<BenchmarkRow> rows;
  for (std::size_t r = 0; r < cfg.replications; ++r) {
    auto rep = run_benchmark_replication(cfg, benchmark_data(cfg, r), r);
    rows.insert(rows.end(), std::make_move_iterator(rep.begin()), std::make_move_iterator(rep.end()));
  }
  return rows;
}

inline void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
  out << "replication,scenario,resampling,method,tuned_param,tuned_value,fold,n_test,ibs,valid,note\n";
  for (const auto& r : rows) {
    out << r.replication << ',' << to_string(r.scenario) << ',' << resampling_label(r.replace) << ','
        << r.method.label() << ',' << r.tuned_param << ',' << format_double(r.tuned_value) << ',' << r.fold.fold
        << ',' << r.fold.n_test << ',' << (r.fold.valid ? format_double(r.fold.ibs) : std::string("NA")) << ','
        << (r.fold.valid ? 1 : 0) << ',' << r.fold.note << '\n';
  }
}

// --- per-node timing -----------------------------------------------------------

struct TimingConfig {
  std::vector<std::size_t> sizes = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  std::size_t repetitions = 30;
  std::size_t batch = 10;
  std::size_t n_permutations = 1000;
  double minprop = 0.1;
  std::vector<PValueMethod> methods = {PValueMethod::lau92, PValueMethod::lau94, PValueMethod::minlau,
                                       PValueMethod::condmc};
  std::uint64_t seed = 1;
};

struct TimingRow {
  PValueMethod method = PValueMethod::lau92;
  std::size_t n = 0;
  double median_seconds = 0.0;
  std::size_t repetitions = 0;
};

/// Median wall-clock time of the work one node does for all five null-model
/// covariates: log-rank scores, maximally selected statistics and p-values.
inline std::vector<TimingRow> run_timing(const TimingConfig& cfg) {
  if (cfg.repetitions == 0 || cfg.batch == 0) throw std::invalid_argument("timing needs repetitions and batch >= 1");
  std::vector<TimingRow> rows;
  for (std::size_t n : cfg.sizes) {
    ScenarioSpec spec;
    spec.n = n;
    spec.seed = derive_seed(cfg.seed, n);
    const auto data = gen_null_model(spec);
    std::vector<std::size_t> samples(n);
    for (std::size_t i = 0; i < n; ++i) samples[i] = i;
    const std::vector<std::size_t> vars = {0, 1, 2, 3, 4};
    for (auto method : cfg.methods) {
      ForestParams params;
      params.minprop = cfg.minprop;
      params.pvalue_method = method;
      params.n_permutations = cfg.n_permutations;
      Rng rng(derive_seed(cfg.seed, 7));
      NodeWorkspace ws;
      std::vector<double> durations;
      double sink = 0.0;
      for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
        const auto start = std::chrono::steady_clock::now();
        for (std::size_t b = 0; b < cfg.batch; ++b) {
          const auto scores = detail::node_scores(data, samples, ws);
          for (const auto& t : test_variables(data, samples, scores, vars, params, rng, ws)) sink += t.pvalue;
        }
        const auto stop = std::chrono::steady_clock::now();
        durations.push_back(std::chrono::duration<double>(stop - start).count() / static_cast<double>(cfg.batch));
      }
      if (sink < 0.0) durations.push_back(0.0);  // keeps the work observable
      std::sort(durations.begin(), durations.end());
      const std::size_t m = durations.size();
      const double median = m % 2 ? durations[m / 2] : 0.5 * (durations[m / 2 - 1] + durations[m / 2]);
      rows.push_back({method, n, median, cfg.repetitions});
    }
  }
  return rows;
}

inline void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows) {
  out << "method,n,median_seconds,repetitions\n";
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << r.n << ',' << format_double(r.median_seconds) << ',' << r.repetitions
        << '\n';
  }
}

}  // namespace msrf
