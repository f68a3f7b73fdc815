#pragma once

// Survival trees grown with maximally selected rank statistics (or the plain
// log-rank baseline), forest aggregation and out-of-bag prediction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "msrf/maxstat.hpp"
#include "msrf/multiple_testing.hpp"
#include "msrf/parallel.hpp"
#include "msrf/random.hpp"
#include "msrf/step_function.hpp"
#include "msrf/survival.hpp"

namespace msrf {

enum class Splitter { msr, logrank };

/// Divisor of the Benjamini-Hochberg adjustment at a node.
enum class BhDivisor {
  tested,  ///< variables that produced a statistic
  mtry,    ///< all drawn variables
};

inline std::string_view to_string(Splitter s) noexcept { return s == Splitter::msr ? "msr" : "logrank"; }
inline std::string_view to_string(BhDivisor d) noexcept { return d == BhDivisor::tested ? "tested" : "mtry"; }

inline std::optional<Splitter> parse_splitter(std::string_view s) noexcept {
  if (s == "msr") return Splitter::msr;
  if (s == "logrank") return Splitter::logrank;
  return std::nullopt;
}

inline std::optional<BhDivisor> parse_bh_divisor(std::string_view s) noexcept {
  if (s == "tested") return BhDivisor::tested;
  if (s == "mtry") return BhDivisor::mtry;
  return std::nullopt;
}

struct ForestParams {
  std::size_t num_trees = 500;
  std::size_t mtry = 1;
  std::size_t min_node_size = 3;
  double minprop = 0.1;  // eps1; eps2 = 1 - minprop
  double alpha = 0.5;
  PValueMethod pvalue_method = PValueMethod::minlau;
  Splitter splitter = Splitter::msr;
  bool replace = false;
  double sample_fraction = 0.632;
  std::uint64_t seed = 1;
  std::size_t n_permutations = 1000;
  BhDivisor bh_divisor = BhDivisor::tested;
  std::size_t max_depth = 0;  // 0 = unlimited; 1 = root split only

  double eps1() const noexcept { return minprop; }
  double eps2() const noexcept { return 1.0 - minprop; }

  /// Throws std::invalid_argument naming the offending field.
  void validate(std::size_t num_covariates) const {
    auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
    if (num_trees == 0) fail("num_trees must be positive");
    if (mtry == 0) fail("mtry must be positive");
    if (mtry > num_covariates) {
      fail("mtry (" + std::to_string(mtry) + ") exceeds the number of covariates (" +
           std::to_string(num_covariates) + ")");
    }
    if (min_node_size == 0) fail("min_node_size must be positive");
    if (!(minprop >= 0.0 && minprop < 0.5)) fail("minprop must lie in [0, 0.5)");
    if (!(alpha > 0.0 && alpha <= 1.0)) fail("alpha must lie in (0, 1]");
    if (!(sample_fraction > 0.0 && sample_fraction <= 1.0)) fail("sample_fraction must lie in (0, 1]");
    if (pvalue_method == PValueMethod::condmc && n_permutations == 0) fail("n_permutations must be positive");
  }
};

struct Split {
  std::size_t var = 0;
  double value = 0.0;
  friend bool operator==(const Split&, const Split&) = default;
};

/// In-bag multiplicities for one tree: a bootstrap of size n, or
/// floor(sample_fraction * n) distinct observations.
inline std::vector<std::uint32_t> draw_sample(std::size_t n, const ForestParams& params, Rng& rng) {
  std::vector<std::uint32_t> counts(n, 0);
  if (params.replace) {
    for (std::size_t i = 0; i < n; ++i) ++counts[rng.below(n)];
    return counts;
  }
  const auto size = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(params.sample_fraction * static_cast<double>(n) + 1e-9)));
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
    counts[idx[i]] = 1;
  }
  return counts;
}

/// Index of the variable to split on: the smallest raw p-value (first on
/// ties), accepted only when its BH-adjusted p-value is below alpha.
inline std::optional<std::size_t> choose_split_variable(std::span<const double> pvalues, double alpha,
                                                        std::size_t num_hypotheses = 0) {
  if (pvalues.empty()) return std::nullopt;
  const auto adjusted = benjamini_hochberg(pvalues, num_hypotheses);
  std::size_t best = 0;
  for (std::size_t i = 1; i < pvalues.size(); ++i) {
    if (pvalues[i] < pvalues[best]) best = i;
  }
  if (adjusted[best] < alpha) return best;
  return std::nullopt;
}

/// Outcome of testing one candidate variable at a node.
struct VariableTest {
  std::size_t var = 0;
  double cutpoint = 0.0;
  double statistic = 0.0;
  double pvalue = 1.0;
  std::size_t num_cutpoints = 0;
};

/// Reusable per-thread buffers for node computations.
struct NodeWorkspace {
  std::vector<double> times;
  std::vector<Status> status;
  std::vector<double> x;
};

namespace detail {

inline LogRankScores node_scores(const SurvivalDataset& data, std::span<const std::size_t> samples,
                                 NodeWorkspace& ws) {
  ws.times.resize(samples.size());
  ws.status.resize(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    ws.times[k] = data.times()[samples[k]];
    ws.status[k] = data.status()[samples[k]];
  }
  return compute_logrank_scores(ws.times, ws.status);
}

inline void gather(const SurvivalDataset& data, std::span<const std::size_t> samples, std::size_t var,
                   std::vector<double>& x) {
  const auto& col = data.covariate(var);
  x.resize(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) x[k] = col[samples[k]];
}

inline double pvalue_for(const MaxStatResult& res, const LogRankScores& scores, const ForestParams& params,
                         Rng& rng) {
  const auto& c = res.candidates;
  switch (params.pvalue_method) {
    case PValueMethod::lau92: return p_lau92(res.max_statistic, params.eps1(), params.eps2());
    case PValueMethod::lau94: return p_lau94(res.max_statistic, c.n, c.group_sizes);
    case PValueMethod::minlau:
      return p_min_lau(res.max_statistic, params.eps1(), params.eps2(), c.n, c.group_sizes);
    case PValueMethod::condmc: return p_cond_mc(scores, c, res.max_statistic, params.n_permutations, rng);
  }
  return 1.0;
}

}  // namespace detail

/// Maximally selected statistic and p-value for every candidate variable with
/// at least one admissible cutpoint, using precomputed node scores.
inline std::vector<VariableTest> test_variables(const SurvivalDataset& data, std::span<const std::size_t> samples,
                                                const LogRankScores& scores,
                                                std::span<const std::size_t> candidate_vars,
                                                const ForestParams& params, Rng& rng, NodeWorkspace& ws) {
  std::vector<VariableTest> tests;
  tests.reserve(candidate_vars.size());
  for (std::size_t var : candidate_vars) {
    detail::gather(data, samples, var, ws.x);
    const auto order = sort_order(ws.x);
    auto candidates = enumerate_cutpoints(ws.x, order, params.eps1(), params.eps2());
    if (candidates.empty()) continue;
    const auto res = maximally_selected_statistic(scores, ws.x, order, candidates);
    tests.push_back({var, res.best_cutpoint, res.max_statistic, detail::pvalue_for(res, scores, params, rng),
                     candidates.size()});
  }
  return tests;
}

/// Two-step node split: p-values of the maximally selected rank statistic per
/// candidate variable, BH adjustment, alpha stop rule.
inline std::optional<Split> split_node_msr(const SurvivalDataset& data, std::span<const std::size_t> samples,
                                           std::span<const std::size_t> candidate_vars, const ForestParams& params,
                                           Rng& rng, NodeWorkspace& ws) {
  const std::size_t n = samples.size();
  if (n < 2 || n < 2 * params.min_node_size || candidate_vars.empty()) return std::nullopt;
  const auto scores = detail::node_scores(data, samples, ws);
  if (scores.degenerate()) return std::nullopt;

  const auto tests = test_variables(data, samples, scores, candidate_vars, params, rng, ws);
  if (tests.empty()) return std::nullopt;
  std::vector<double> pvalues(tests.size());
  for (std::size_t i = 0; i < tests.size(); ++i) pvalues[i] = tests[i].pvalue;
  const std::size_t hypotheses = params.bh_divisor == BhDivisor::mtry ? candidate_vars.size() : tests.size();
  const auto chosen = choose_split_variable(pvalues, params.alpha, hypotheses);
  if (!chosen) return std::nullopt;
  return Split{tests[*chosen].var, tests[*chosen].cutpoint};
}

inline std::optional<Split> split_node_msr(const SurvivalDataset& data, std::span<const std::size_t> samples,
                                           std::span<const std::size_t> candidate_vars, const ForestParams& params,
                                           Rng& rng) {
  NodeWorkspace ws;
  return split_node_msr(data, samples, candidate_vars, params, rng, ws);
}

/// Baseline splitter: maximises |T| over all variables and cutpoints that
/// leave at least min_node_size observations on each side.
inline std::optional<Split> split_node_logrank(const SurvivalDataset& data, std::span<const std::size_t> samples,
                                               std::span<const std::size_t> candidate_vars,
                                               const ForestParams& params, NodeWorkspace& ws) {
  const std::size_t n = samples.size();
  if (n < 2 || n < 2 * params.min_node_size || candidate_vars.empty()) return std::nullopt;
  const auto scores = detail::node_scores(data, samples, ws);
  if (scores.degenerate()) return std::nullopt;

  const std::size_t min_child = std::max<std::size_t>(1, params.min_node_size);
  std::optional<Split> best;
  double best_stat = -1.0;
  for (std::size_t var : candidate_vars) {
    detail::gather(data, samples, var, ws.x);
    const auto order = sort_order(ws.x);
    const auto candidates = cutpoints_in_range(ws.x, order, min_child, n - min_child);
    if (candidates.empty()) continue;
    const auto res = maximally_selected_statistic(scores, ws.x, order, candidates);
    if (res.max_statistic > best_stat) {
      best_stat = res.max_statistic;
      best = Split{var, res.best_cutpoint};
    }
  }
  return best;
}

inline std::optional<Split> split_node_logrank(const SurvivalDataset& data, std::span<const std::size_t> samples,
                                               std::span<const std::size_t> candidate_vars,
                                               const ForestParams& params) {
  NodeWorkspace ws;
  return split_node_logrank(data, samples, candidate_vars, params, ws);
}

struct TreeNode {
  std::int64_t split_var = -1;  // -1 marks a terminal node
  double split_value = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  StepFunction curve;

  bool terminal() const noexcept { return split_var < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class SurvivalTree {
 public:
  SurvivalTree() = default;
  SurvivalTree(std::vector<TreeNode> nodes, std::vector<std::uint32_t> in_bag_counts)
      : nodes_(std::move(nodes)), in_bag_counts_(std::move(in_bag_counts)) {}

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  const std::vector<std::uint32_t>& in_bag_counts() const noexcept { return in_bag_counts_; }
  const TreeNode& root() const noexcept { return nodes_.front(); }

  /// Index of the terminal node reached by a covariate row.
  template <typename ValueOf>
  std::size_t leaf_index(ValueOf&& value_of) const {
    std::size_t id = 0;
    while (!nodes_[id].terminal()) {
      const auto& node = nodes_[id];
      id = value_of(static_cast<std::size_t>(node.split_var)) <= node.split_value ? node.left : node.right;
    }
    return id;
  }

  const StepFunction& curve_for(std::span<const double> row) const {
    return nodes_[leaf_index([&](std::size_t j) { return row[j]; })].curve;
  }

  const StepFunction& curve_for(const SurvivalDataset& data, std::size_t i) const {
    return nodes_[leaf_index([&](std::size_t j) { return data.value(i, j); })].curve;
  }

  friend bool operator==(const SurvivalTree&, const SurvivalTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
  std::vector<std::uint32_t> in_bag_counts_;
};

/// Grows tree `tree_index` of a forest. The tree's random stream depends only
/// on (params.seed, tree_index).
inline SurvivalTree grow_tree(const SurvivalDataset& data, const ForestParams& params, std::size_t tree_index) {
  Rng rng(derive_seed(params.seed, tree_index));
  const std::size_t n = data.size();
  const std::size_t p = data.num_covariates();
  auto in_bag = draw_sample(n, params, rng);

  std::vector<std::size_t> root;
  for (std::size_t i = 0; i < n; ++i) root.insert(root.end(), in_bag[i], i);

  std::vector<TreeNode> nodes(1);
  std::vector<std::vector<std::size_t>> node_samples;
  node_samples.push_back(std::move(root));
  std::vector<std::size_t> depth{0};
  std::vector<std::size_t> var_pool(p);
  NodeWorkspace ws;

  for (std::size_t id = 0; id < nodes.size(); ++id) {
    const auto samples = std::move(node_samples[id]);
    std::optional<Split> split;
    const bool depth_ok = params.max_depth == 0 || depth[id] < params.max_depth;
    if (depth_ok && samples.size() >= 2 * params.min_node_size && samples.size() >= 2) {
      for (std::size_t j = 0; j < p; ++j) var_pool[j] = j;
      for (std::size_t j = 0; j < params.mtry; ++j) {
        std::swap(var_pool[j], var_pool[j + static_cast<std::size_t>(rng.below(p - j))]);
      }
      std::vector<std::size_t> vars(var_pool.begin(), var_pool.begin() + static_cast<std::ptrdiff_t>(params.mtry));
      std::sort(vars.begin(), vars.end());
      split = params.splitter == Splitter::msr ? split_node_msr(data, samples, vars, params, rng, ws)
                                               : split_node_logrank(data, samples, vars, params, ws);
    }

    if (split) {
      std::vector<std::size_t> left;
      std::vector<std::size_t> right;
      const auto& col = data.covariate(split->var);
      for (std::size_t s : samples) (col[s] <= split->value ? left : right).push_back(s);
      if (!left.empty() && !right.empty()) {
        const auto left_id = static_cast<std::uint32_t>(nodes.size());
        nodes[id].split_var = static_cast<std::int64_t>(split->var);
        nodes[id].split_value = split->value;
        nodes[id].left = left_id;
        nodes[id].right = left_id + 1;
        nodes.emplace_back();
        nodes.emplace_back();
        node_samples.push_back(std::move(left));
        node_samples.push_back(std::move(right));
        depth.push_back(depth[id] + 1);
        depth.push_back(depth[id] + 1);
        continue;
      }
    }

    ws.times.resize(samples.size());
    ws.status.resize(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
      ws.times[k] = data.times()[samples[k]];
      ws.status[k] = data.status()[samples[k]];
    }
    nodes[id].curve = samples.empty() ? StepFunction::constant(1.0) : kaplan_meier(ws.times, ws.status);
  }
  return SurvivalTree(std::move(nodes), std::move(in_bag));
}

/// Sorted distinct event times.
inline std::vector<double> event_time_grid(const SurvivalDataset& data) {
  std::vector<double> grid;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.status()[i]) grid.push_back(data.times()[i]);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

struct OobPredictions {
  std::vector<std::optional<StepFunction>> curves;
  std::size_t num_undefined = 0;
};

class SurvivalForest {
 public:
  SurvivalForest() = default;
  SurvivalForest(ForestParams params, std::vector<std::string> covariate_names, std::vector<double> time_grid,
                 std::vector<SurvivalTree> trees)
      : params_(params),
        names_(std::move(covariate_names)),
        grid_(std::move(time_grid)),
        trees_(std::move(trees)) {}

  const ForestParams& params() const noexcept { return params_; }
  const std::vector<std::string>& covariate_names() const noexcept { return names_; }
  const std::vector<double>& time_grid() const noexcept { return grid_; }
  const std::vector<SurvivalTree>& trees() const noexcept { return trees_; }
  std::size_t num_trees() const noexcept { return trees_.size(); }

  /// Averaged tree curves on a sorted grid.
  std::vector<double> predict_on_grid(std::span<const double> row, const std::vector<double>& grid) const {
    check_row(row.size());
    std::vector<double> sum(grid.size(), 0.0);
    std::vector<double> buf(grid.size());
    for (const auto& tree : trees_) {
      tree.curve_for(row).evaluate_into(grid, buf.data());
      for (std::size_t g = 0; g < grid.size(); ++g) sum[g] += buf[g];
    }
    for (double& v : sum) v /= static_cast<double>(trees_.size());
    return sum;
  }

  /// Forest survival curve for one covariate row, as a step function on the
  /// grid (defaults to the training event times).
  StepFunction predict_survival(std::span<const double> row, const std::vector<double>& grid) const {
    return StepFunction(grid, predict_on_grid(row, grid), 1.0);
  }
  StepFunction predict_survival(std::span<const double> row) const { return predict_survival(row, grid_); }

  /// Out-of-bag curves: each observation averages only the trees that did
  /// not use it. Observations in-bag everywhere are left undefined.
  OobPredictions predict_oob(const SurvivalDataset& data, std::size_t threads = 1) const {
    check_row(data.num_covariates());
    for (const auto& tree : trees_) {
      if (tree.in_bag_counts().size() != data.size()) {
        throw std::invalid_argument("predict_oob: dataset size does not match the training data");
      }
    }
    OobPredictions out;
    out.curves.resize(data.size());
    parallel_for(data.size(), threads, [&](std::size_t i) {
      std::vector<double> sum(grid_.size(), 0.0);
      std::vector<double> buf(grid_.size());
      std::size_t count = 0;
      for (const auto& tree : trees_) {
        if (tree.in_bag_counts()[i] != 0) continue;
        tree.curve_for(data, i).evaluate_into(grid_, buf.data());
        for (std::size_t g = 0; g < grid_.size(); ++g) sum[g] += buf[g];
        ++count;
      }
      if (count == 0) return;
      for (double& v : sum) v /= static_cast<double>(count);
      out.curves[i] = StepFunction(grid_, std::move(sum), 1.0);
    });
    for (const auto& c : out.curves) out.num_undefined += c ? 0 : 1;
    return out;
  }

  friend bool operator==(const SurvivalForest& a, const SurvivalForest& b) {
    return a.names_ == b.names_ && a.grid_ == b.grid_ && a.trees_ == b.trees_;
  }

 private:
  void check_row(std::size_t width) const {
    if (width != names_.size()) {
      throw std::invalid_argument("covariate row has " + std::to_string(width) + " values, model expects " +
                                  std::to_string(names_.size()));
    }
  }

  ForestParams params_;
  std::vector<std::string> names_;
  std::vector<double> grid_;
  std::vector<SurvivalTree> trees_;
};

inline SurvivalForest grow_forest(const SurvivalDataset& data, const ForestParams& params, std::size_t threads = 1) {
  if (data.size() < 2) throw std::invalid_argument("need at least 2 observations to grow a forest");
  params.validate(data.num_covariates());
  std::vector<SurvivalTree> trees(params.num_trees);
  parallel_for(params.num_trees, threads, [&](std::size_t b) { trees[b] = grow_tree(data, params, b); });
  return SurvivalForest(params, data.covariate_names(), event_time_grid(data), std::move(trees));
}

}  // namespace msrf
