#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "msrf/forest.hpp"
#include "msrf/multiple_testing.hpp"
#include "msrf/simgen.hpp"

namespace msrf {
namespace {

SurvivalDataset one_covariate(std::vector<double> times, std::vector<Status> status, std::vector<double> x) {
  return SurvivalDataset(std::move(times), std::move(status), {std::move(x)}, {"x"});
}

SurvivalDataset null_data(std::size_t n, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.n = n;
  spec.seed = seed;
  return gen_null_model(spec);
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

TEST(DrawSample, SubsampleSize) {
  ForestParams p;
  Rng rng(1);
  const auto counts = draw_sample(100, p, rng);
  EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), 0u), 63u);
  for (auto c : counts) EXPECT_LE(c, 1u);
}

TEST(DrawSample, BootstrapSize) {
  ForestParams p;
  p.replace = true;
  Rng rng(2);
  const auto counts = draw_sample(100, p, rng);
  EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), 0u), 100u);
  EXPECT_TRUE(std::any_of(counts.begin(), counts.end(), [](auto c) { return c > 1; }));
}

TEST(DrawSample, Deterministic) {
  ForestParams p;
  Rng a(3), b(3);
  EXPECT_EQ(draw_sample(50, p, a), draw_sample(50, p, b));
}

TEST(BenjaminiHochberg, Example) {
  const std::vector<double> p{0.01, 0.04, 0.03};
  const auto adj = benjamini_hochberg(p);
  EXPECT_NEAR(adj[0], 0.03, 1e-15);
  EXPECT_NEAR(adj[1], 0.04, 1e-15);
  EXPECT_NEAR(adj[2], 0.04, 1e-15);
}

TEST(BenjaminiHochberg, SingleHypothesisIsIdentity) {
  const std::vector<double> p{0.37};
  EXPECT_EQ(benjamini_hochberg(p)[0], 0.37);
}

TEST(BenjaminiHochberg, PaddedHypotheses) {
  const std::vector<double> p{0.01, 0.02};
  const auto adj = benjamini_hochberg(p, 4);
  EXPECT_NEAR(adj[0], 0.04, 1e-15);
  EXPECT_NEAR(adj[1], 0.04, 1e-15);
  EXPECT_THROW(benjamini_hochberg(p, 1), std::invalid_argument);
}

TEST(BenjaminiHochberg, MatchesDefinition) {
  Rng rng(4);
  for (int c = 0; c < 1000; ++c) {
    const std::size_t k = 1 + rng.below(12);
    std::vector<double> p(k);
    for (auto& v : p) v = rng.bernoulli(0.2) ? 0.05 : rng.uniform();
    const auto adj = benjamini_hochberg(p);
    // adjusted p_i = min over j with p_j >= p_i of k p_j / rank_j, capped at 1
    for (std::size_t i = 0; i < k; ++i) {
      double best = 1.0;
      for (std::size_t j = 0; j < k; ++j) {
        if (p[j] < p[i]) continue;
        const auto rank = static_cast<double>(std::count_if(p.begin(), p.end(), [&](double v) { return v <= p[j]; }));
        best = std::min(best, static_cast<double>(k) * p[j] / rank);
      }
      ASSERT_NEAR(adj[i], best, 1e-12);
      ASSERT_GE(adj[i], p[i] - 1e-15);
    }
  }
}

TEST(ChooseSplitVariable, AlphaStopRule) {
  const std::vector<double> p{0.2};
  EXPECT_FALSE(choose_split_variable(p, 0.1));
  EXPECT_EQ(choose_split_variable(p, 0.3), std::optional<std::size_t>{0});
}

TEST(ChooseSplitVariable, SmallestRawPFirstOnTies) {
  const std::vector<double> p{0.3, 0.01, 0.01, 0.5};
  EXPECT_EQ(choose_split_variable(p, 0.5), std::optional<std::size_t>{1});
}

TEST(SplitNodeMsr, ConstantCovariateGivesNoSplit) {
  const auto data = one_covariate({1, 2, 3, 4, 5, 6}, {1, 1, 1, 0, 1, 1}, {2, 2, 2, 2, 2, 2});
  ForestParams p;
  p.min_node_size = 1;
  p.alpha = 1.0;
  Rng rng(5);
  const std::vector<std::size_t> vars{0};
  EXPECT_FALSE(split_node_msr(data, all_rows(6), vars, p, rng));
  EXPECT_FALSE(split_node_logrank(data, all_rows(6), vars, p));
}

TEST(SplitNodeMsr, NoEventsGivesNoSplit) {
  const auto data = one_covariate({1, 2, 3, 4}, {0, 0, 0, 0}, {1, 2, 3, 4});
  ForestParams p;
  p.min_node_size = 1;
  p.alpha = 1.0;
  Rng rng(6);
  const std::vector<std::size_t> vars{0};
  EXPECT_FALSE(split_node_msr(data, all_rows(4), vars, p, rng));
}

TEST(SplitNodeMsr, AlphaBlocksWeakSplit) {
  // Perfect separation: one p-value, no adjustment; compare against alpha.
  const auto data = one_covariate({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, std::vector<Status>(10, 1),
                                  {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  ForestParams p;
  p.min_node_size = 1;
  p.pvalue_method = PValueMethod::lau94;
  const std::vector<std::size_t> vars{0};
  const auto scores = compute_logrank_scores(data.times(), data.status());
  const auto res = maximally_selected_statistic(scores, data.covariate(0),
                                                enumerate_cutpoints(data.covariate(0), p.eps1(), p.eps2()));
  const double pv = p_lau94(res.max_statistic, 10, res.candidates.group_sizes);
  Rng rng(7);
  p.alpha = pv * 0.99;
  EXPECT_FALSE(split_node_msr(data, all_rows(10), vars, p, rng));
  p.alpha = std::min(1.0, pv * 1.01);
  const auto split = split_node_msr(data, all_rows(10), vars, p, rng);
  ASSERT_TRUE(split);
  EXPECT_EQ(split->value, res.best_cutpoint);
}

TEST(SplitNodeLogrank, PicksGlobalArgmax) {
  Rng rng(8);
  for (int c = 0; c < 200; ++c) {
    const auto data = null_data(20 + rng.below(30), 100 + static_cast<std::uint64_t>(c));
    ForestParams p;
    p.min_node_size = 1 + rng.below(4);
    p.splitter = Splitter::logrank;
    const std::vector<std::size_t> vars{0, 1, 2, 3, 4};
    const auto rows = all_rows(data.size());
    const auto split = split_node_logrank(data, rows, vars, p);
    const auto scores = compute_logrank_scores(data.times(), data.status());
    if (scores.degenerate()) continue;
    // oracle: scan every variable and every observed value directly
    double best = -1.0;
    Split best_split;
    const double n = static_cast<double>(data.size());
    for (std::size_t v : vars) {
      auto values = data.covariate(v);
      std::sort(values.begin(), values.end());
      values.erase(std::unique(values.begin(), values.end()), values.end());
      for (double mu : values) {
        double s = 0.0, m = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i) {
          if (data.value(i, v) <= mu) {
            s += scores.scores[i];
            m += 1.0;
          }
        }
        if (m < static_cast<double>(p.min_node_size) || n - m < static_cast<double>(p.min_node_size)) continue;
        const double var = n / (n - 1) * (m / n) * ((n - m) / n) * scores.sum_sq_dev;
        const double t = std::abs((s - m * scores.mean) / std::sqrt(var));
        if (t > best + 1e-10) {
          best = t;
          best_split = {v, mu};
        }
      }
    }
    if (best < 0) {
      ASSERT_FALSE(split);
      continue;
    }
    ASSERT_TRUE(split);
    ASSERT_EQ(*split, best_split);
  }
}

TEST(GrowTree, StumpWhenNodeSizeCoversData) {
  const auto data = null_data(40, 9);
  ForestParams p;
  p.num_trees = 20;
  p.mtry = 2;
  p.min_node_size = 40;
  p.alpha = 1.0;
  const auto forest = grow_forest(data, p);
  for (const auto& tree : forest.trees()) {
    ASSERT_EQ(tree.nodes().size(), 1u);
    ASSERT_TRUE(tree.root().terminal());
  }
}

TEST(GrowForest, Deterministic) {
  const auto data = null_data(80, 10);
  ForestParams p;
  p.num_trees = 30;
  p.mtry = 2;
  p.alpha = 1.0;
  EXPECT_EQ(grow_forest(data, p), grow_forest(data, p));
  auto q = p;
  q.seed = 2;
  EXPECT_FALSE(grow_forest(data, p) == grow_forest(data, q));
}

TEST(GrowForest, IndependentOfThreadCount) {
  ScenarioSpec spec;
  spec.scenario = Scenario::scenario2;
  spec.n = 120;
  spec.seed = 11;
  const auto data = simulate(spec);
  for (auto method : {PValueMethod::minlau, PValueMethod::condmc}) {
    ForestParams p;
    p.num_trees = 24;
    p.mtry = 4;
    p.pvalue_method = method;
    p.n_permutations = 200;
    const auto f1 = grow_forest(data, p, 1);
    EXPECT_EQ(f1, grow_forest(data, p, 2));
    EXPECT_EQ(f1, grow_forest(data, p, 8));
  }
}

TEST(GrowForest, RejectsBadParameters) {
  const auto data = null_data(30, 12);
  ForestParams p;
  p.mtry = 6;
  try {
    grow_forest(data, p);
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("mtry"), std::string::npos);
  }
  p.mtry = 1;
  p.minprop = 0.5;
  EXPECT_THROW(grow_forest(data, p), std::invalid_argument);
}

TEST(GrowForest, StrictAlphaRarelySplitsNullData) {
  const auto data = null_data(100, 13);
  ForestParams p;
  p.num_trees = 500;
  p.mtry = 3;
  p.alpha = 1e-6;
  p.min_node_size = 1;
  const auto forest = grow_forest(data, p);
  std::size_t splits = 0;
  for (const auto& tree : forest.trees()) splits += tree.root().terminal() ? 0 : 1;
  EXPECT_LT(static_cast<double>(splits), 0.05 * 500);
}

TEST(Predict, SingleTreeEqualsLeafCurve) {
  const auto data = null_data(60, 14);
  ForestParams p;
  p.num_trees = 1;
  p.mtry = 3;
  p.alpha = 1.0;
  p.min_node_size = 2;
  const auto forest = grow_forest(data, p);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = data.row(i);
    const auto& leaf = forest.trees()[0].curve_for(row);
    const auto pred = forest.predict_survival(row);
    for (double t : forest.time_grid()) ASSERT_EQ(pred(t), leaf(t));
  }
}

TEST(Predict, AveragesTreeCurves) {
  const auto data = null_data(60, 15);
  ForestParams p;
  p.num_trees = 7;
  p.mtry = 2;
  p.alpha = 1.0;
  const auto forest = grow_forest(data, p);
  const auto row = data.row(3);
  const auto pred = forest.predict_survival(row);
  for (double t : forest.time_grid()) {
    double sum = 0.0;
    for (const auto& tree : forest.trees()) sum += tree.curve_for(row)(t);
    ASSERT_NEAR(pred(t), sum / 7.0, 1e-14);
  }
  EXPECT_THROW(forest.predict_survival(std::vector<double>{1.0}), std::invalid_argument);
}

TEST(Predict, OutOfBagUsesOnlyTreesWithoutTheObservation) {
  const auto data = null_data(50, 16);
  ForestParams p;
  p.num_trees = 15;
  p.mtry = 2;
  p.alpha = 1.0;
  const auto forest = grow_forest(data, p);
  const auto oob = forest.predict_oob(data);
  std::size_t undefined = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<const SurvivalTree*> out;
    for (const auto& tree : forest.trees()) {
      if (tree.in_bag_counts()[i] == 0) out.push_back(&tree);
    }
    if (out.empty()) {
      ASSERT_FALSE(oob.curves[i]);
      ++undefined;
      continue;
    }
    ASSERT_TRUE(oob.curves[i]);
    for (double t : forest.time_grid()) {
      double sum = 0.0;
      for (const auto* tree : out) sum += tree->curve_for(data, i)(t);
      ASSERT_NEAR((*oob.curves[i])(t), sum / static_cast<double>(out.size()), 1e-14);
    }
  }
  EXPECT_EQ(oob.num_undefined, undefined);
  EXPECT_EQ(oob.curves.size(), data.size());
}

TEST(Predict, InBagEverywhereIsUndefined) {
  const auto data = null_data(20, 17);
  ForestParams p;
  p.num_trees = 3;
  p.sample_fraction = 1.0;
  p.alpha = 1.0;
  const auto oob = grow_forest(data, p).predict_oob(data);
  EXPECT_EQ(oob.num_undefined, data.size());
}

// Leaf curves recomputed from the in-bag rows routed to each leaf.
void check_partition(const SurvivalTree& tree, const SurvivalDataset& data) {
  std::map<std::size_t, std::vector<std::size_t>> leaves;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto leaf = tree.leaf_index([&](std::size_t j) { return data.value(i, j); });
    for (std::uint32_t c = 0; c < tree.in_bag_counts()[i]; ++c) leaves[leaf].push_back(i);
  }
  std::size_t total = 0;
  for (const auto& [leaf, rows] : leaves) {
    ASSERT_TRUE(tree.nodes()[leaf].terminal());
    total += rows.size();
    std::vector<double> t;
    std::vector<Status> s;
    for (auto i : rows) {
      t.push_back(data.times()[i]);
      s.push_back(data.status()[i]);
    }
    ASSERT_EQ(tree.nodes()[leaf].curve, kaplan_meier(t, s));
    ASSERT_TRUE(tree.nodes()[leaf].curve.is_survival_curve());
  }
  ASSERT_EQ(total, std::accumulate(tree.in_bag_counts().begin(), tree.in_bag_counts().end(), std::size_t{0}));
  std::size_t splits = 0;
  for (const auto& node : tree.nodes()) splits += node.terminal() ? 0 : 1;
  ASSERT_EQ(tree.nodes().size(), 2 * splits + 1);
}

TEST(GrowTree, LeavesPartitionInBagSample) {
  Rng rng(18);
  for (int c = 0; c < 40; ++c) {
    ScenarioSpec spec;
    spec.scenario = c % 2 ? Scenario::scenario2 : Scenario::null_model;
    spec.n = 30 + rng.below(60);
    spec.seed = 200 + static_cast<std::uint64_t>(c);
    const auto data = simulate(spec);
    ForestParams p;
    p.num_trees = 5;
    p.mtry = 1 + rng.below(data.num_covariates());
    p.alpha = 0.9;
    p.min_node_size = 1 + rng.below(5);
    p.replace = c % 3 == 0;
    p.splitter = c % 4 == 0 ? Splitter::logrank : Splitter::msr;
    const auto forest = grow_forest(data, p);
    for (const auto& tree : forest.trees()) check_partition(tree, data);
  }
}

TEST(GrowTree, TopologyInvariantUnderMonotoneTransform) {
  // 100 datasets x 2 splitters x 5 trees
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    ScenarioSpec spec;
    spec.scenario = Scenario::scenario2;
    spec.n = 60;
    spec.seed = 300 + seed;
    const auto data = simulate(spec);
    const std::size_t p = data.num_covariates();
    std::vector<std::vector<double>> cols;
    for (std::size_t j = 0; j < p; ++j) {
      auto col = data.covariate(j);
      if (j % 2 == 0) {
        for (auto& v : col) v = std::exp(v) + 3.0;
      }
      cols.push_back(std::move(col));
    }
    const SurvivalDataset transformed(data.times(), data.status(), std::move(cols), data.covariate_names());
    for (auto splitter : {Splitter::msr, Splitter::logrank}) {
      ForestParams params;
      params.num_trees = 5;
      params.mtry = 5;
      params.alpha = 0.9;
      params.splitter = splitter;
      const auto f1 = grow_forest(data, params);
      const auto f2 = grow_forest(transformed, params);
      for (std::size_t b = 0; b < params.num_trees; ++b) {
        const auto& n1 = f1.trees()[b].nodes();
        const auto& n2 = f2.trees()[b].nodes();
        ASSERT_EQ(n1.size(), n2.size());
        for (std::size_t k = 0; k < n1.size(); ++k) {
          ASSERT_EQ(n1[k].split_var, n2[k].split_var);
          ASSERT_EQ(n1[k].left, n2[k].left);
          ASSERT_EQ(n1[k].curve, n2[k].curve);
          if (!n1[k].terminal() && n1[k].split_var % 2 == 0) {
            ASSERT_EQ(std::exp(n1[k].split_value) + 3.0, n2[k].split_value);
          } else {
            ASSERT_EQ(n1[k].split_value, n2[k].split_value);
          }
        }
      }
    }
  }
}

TEST(Predict, CurvesStayInUnitInterval) {
  Rng rng(20);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ScenarioSpec spec;
    spec.scenario = Scenario::scenario2;
    spec.n = 60;
    spec.seed = 400 + seed;
    const auto data = simulate(spec);
    ForestParams p;
    p.num_trees = 10;
    p.mtry = 4;
    p.alpha = 0.8;
    p.replace = seed % 2 == 1;
    const auto forest = grow_forest(data, p);
    for (int c = 0; c < 100; ++c) {
      std::vector<double> row(data.num_covariates());
      for (auto& v : row) v = 2.0 * rng.normal();
      const auto curve = forest.predict_survival(row);
      ASSERT_TRUE(curve.is_survival_curve());
      for (double v : curve.values()) {
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 1.0);
      }
    }
  }
}

TEST(GrowTree, MaxDepthOneGivesStumpsOrSingleSplits) {
  const auto data = null_data(60, 19);
  ForestParams p;
  p.num_trees = 20;
  p.mtry = 5;
  p.alpha = 1.0;
  p.max_depth = 1;
  const auto forest = grow_forest(data, p);
  for (const auto& tree : forest.trees()) ASSERT_LE(tree.nodes().size(), 3u);
}

}  // namespace
}  // namespace msrf
