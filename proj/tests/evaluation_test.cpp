#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "msrf/evaluation.hpp"
#include "msrf/simgen.hpp"

namespace msrf {
namespace {

TEST(CensoringSurvival, SmallExample) {
  const std::vector<double> z{1, 2, 3};
  const std::vector<Status> d{1, 0, 1};
  const auto G = censoring_survival(z, d);
  EXPECT_DOUBLE_EQ(G(1.5), 1.0);
  EXPECT_DOUBLE_EQ(G(2.0), 0.5);
  EXPECT_DOUBLE_EQ(G.left_limit(2.0), 1.0);
}

TEST(IpcwWeight, Cases) {
  const auto G = StepFunction({2.0}, {0.5}, 1.0);
  EXPECT_EQ(ipcw_weight(3.0, 2.0, 1, G), 1.0);   // event at the jump uses G(T-)
  EXPECT_EQ(ipcw_weight(3.0, 2.0, 0, G), 0.0);   // censored before t
  EXPECT_EQ(ipcw_weight(2.5, 4.0, 0, G), 2.0);   // still at risk
  const auto dead = StepFunction({1.0}, {0.0}, 1.0);
  EXPECT_THROW(ipcw_weight(2.0, 3.0, 1, dead), std::domain_error);
}

TEST(BrierScore, HandComputedExample) {
  // no censoring, G = 1; S = 0.5 for everybody at t = 1.5 where one of two has died
  const std::vector<double> z{1, 2};
  const std::vector<Status> d{1, 1};
  const auto G = StepFunction::constant(1.0);
  EXPECT_DOUBLE_EQ(brier_score(1.5, std::vector<double>{0.5, 0.5}, z, d, G), 0.25);
  EXPECT_DOUBLE_EQ(brier_score(1.5, std::vector<double>{0.0, 1.0}, z, d, G), 0.0);
  // (0.1^2 + 0.2^2) / 2
  EXPECT_DOUBLE_EQ(brier_score(1.5, std::vector<double>{0.1, 0.8}, z, d, G), 0.025);
}

TEST(BrierScore, WeightedExample) {
  const std::vector<double> z{1, 2, 3};
  const std::vector<Status> d{1, 0, 1};
  const auto G = censoring_survival(z, d);
  // t = 2.5: obs 1 dead (w 1), obs 2 censored (w 0), obs 3 alive (w 1/G(2.5) = 2)
  const std::vector<double> s{0.2, 0.5, 0.6};
  const double expected = (0.2 * 0.2 + 2.0 * 0.4 * 0.4) / 3.0;
  EXPECT_NEAR(brier_score(2.5, s, z, d, G), expected, 1e-15);
}

TEST(BrierScore, PerfectAndUninformative) {
  const auto data = gen_null_model({Scenario::null_model, 200, 4});
  const auto G = censoring_survival(data);
  const double t = default_t_star(data.times(), 0.5);
  std::vector<double> perfect(data.size());
  std::vector<double> half(data.size(), 0.5);
  for (std::size_t i = 0; i < data.size(); ++i) perfect[i] = data.times()[i] > t ? 1.0 : 0.0;
  EXPECT_EQ(brier_score(t, perfect, data.times(), data.status(), G), 0.0);
  // without censoring every weight is one and each residual is 1/2
  std::vector<Status> events(data.size(), 1);
  const auto G1 = censoring_survival(data.times(), events);
  EXPECT_DOUBLE_EQ(brier_score(t, half, data.times(), events, G1), 0.25);
}

TEST(BrierScore, WithoutCensoringIsMeanSquaredError) {
  Rng rng(5);
  for (int c = 0; c < 1000; ++c) {
    const std::size_t n = 2 + rng.below(30);
    std::vector<double> z(n), s(n);
    std::vector<Status> d(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = 0.1 + rng.exponential(1.0);
      s[i] = rng.uniform();
    }
    const double t = rng.exponential(1.0);
    const auto G = censoring_survival(z, d);
    double mse = 0.0;
    for (std::size_t i = 0; i < n; ++i) mse += std::pow((z[i] > t ? 1.0 : 0.0) - s[i], 2);
    ASSERT_NEAR(brier_score(t, s, z, d, G), mse / static_cast<double>(n), 1e-12);
  }
}

TEST(BrierScore, WeightsReproduceKaplanMeier) {
  // With G the censoring KM of the same sample, the weighted survivors and
  // deaths reproduce the Kaplan-Meier estimate exactly.
  Rng rng(6);
  for (int c = 0; c < 1000; ++c) {
    const std::size_t n = 5 + rng.below(40);
    std::vector<double> z(n);
    std::vector<Status> d(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double surv = rng.exponential(0.5);
      const double cens = rng.exponential(0.3);
      z[i] = std::min(surv, cens);
      d[i] = surv <= cens;
    }
    const auto G = censoring_survival(z, d);
    const auto S = kaplan_meier(z, d);
    std::vector<double> sorted = z;
    std::sort(sorted.begin(), sorted.end());
    const double t = sorted[rng.below(n - 1)];
    double w_dead = 0.0, w_alive = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      try {
        const double w = ipcw_weight(t, z[i], d[i], G);
        (z[i] <= t ? w_dead : w_alive) += w;
      } catch (const std::domain_error&) {
        ok = false;
      }
    }
    if (!ok) continue;
    // alive weights estimate n S(t); dead weights estimate n (1 - S(t))
    ASSERT_NEAR(w_alive / static_cast<double>(n), S(t), 1e-10);
    ASSERT_NEAR(w_dead / static_cast<double>(n), 1.0 - S(t), 1e-10);
  }
}

TEST(BrierIntegral, ConstantCurve) {
  const std::vector<double> grid{0.0, 1.0, 2.5, 4.0};
  const std::vector<double> bs(4, 0.2);
  EXPECT_NEAR(integrated_brier_score(grid, bs, 4.0), 0.2, 1e-15);
  EXPECT_NEAR(integrated_brier_score(grid, bs, 3.0), 0.2, 1e-15);
}

TEST(BrierIntegral, Triangle) {
  const std::vector<double> grid{0.0, 1.0, 2.0};
  const std::vector<double> bs{0.0, 0.2, 0.0};
  EXPECT_NEAR(brier_integral(grid, bs, 2.0), 0.2, 1e-15);
  EXPECT_NEAR(integrated_brier_score(grid, bs, 2.0), 0.1, 1e-15);
  // interpolated at t* = 1.5: 0.1 + (0.2 + 0.1) / 2 * 0.5
  EXPECT_NEAR(brier_integral(grid, bs, 1.5), 0.175, 1e-15);
}

TEST(BrierIntegral, HeldConstantBeforeFirstPoint) {
  const std::vector<double> grid{1.0, 2.0};
  const std::vector<double> bs{0.3, 0.3};
  EXPECT_NEAR(brier_integral(grid, bs, 2.0), 0.6, 1e-15);
  EXPECT_THROW(brier_integral(grid, bs, 3.0), std::invalid_argument);
  EXPECT_THROW(brier_integral(grid, bs, 0.0), std::invalid_argument);
}

TEST(BrierIntegral, MatchesDenseQuadrature) {
  Rng rng(7);
  for (int c = 0; c < 1000; ++c) {
    const std::size_t k = 2 + rng.below(10);
    std::vector<double> grid{0.0};
    for (std::size_t g = 1; g < k; ++g) grid.push_back(grid.back() + 0.05 + rng.uniform());
    std::vector<double> bs(k);
    for (auto& v : bs) v = 0.25 * rng.uniform();
    const double t_star = grid.back() * (0.3 + 0.7 * rng.uniform());
    // midpoint rule on a fine mesh of the piecewise-linear interpolant
    const std::size_t steps = 20000;
    const double h = t_star / static_cast<double>(steps);
    double area = 0.0;
    std::size_t seg = 0;
    for (std::size_t s = 0; s < steps; ++s) {
      const double t = (static_cast<double>(s) + 0.5) * h;
      while (grid[seg + 1] < t) ++seg;
      const double w = (t - grid[seg]) / (grid[seg + 1] - grid[seg]);
      area += h * (bs[seg] + w * (bs[seg + 1] - bs[seg]));
    }
    ASSERT_NEAR(integrated_brier_score(grid, bs, t_star), area / t_star, 1e-6);
  }
}

TEST(BrierIntegral, GridRefinementKeepsValue) {
  Rng rng(8);
  for (int c = 0; c < 1000; ++c) {
    std::vector<double> grid{0.0, 1.0 + rng.uniform(), 3.0 + rng.uniform()};
    std::vector<double> bs{0.1 * rng.uniform(), 0.2 * rng.uniform(), 0.2 * rng.uniform()};
    const double t_star = grid.back();
    const double base = integrated_brier_score(grid, bs, t_star);
    // insert a point on the linear interpolant between the first two nodes
    const double u = rng.uniform();
    std::vector<double> g2{grid[0], grid[0] + u * (grid[1] - grid[0]), grid[1], grid[2]};
    std::vector<double> b2{bs[0], bs[0] + u * (bs[1] - bs[0]), bs[1], bs[2]};
    ASSERT_NEAR(integrated_brier_score(g2, b2, t_star), base, 1e-12);
  }
}

TEST(DefaultTStar, Type7Quantile) {
  std::vector<double> t(21);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(20 - i);
  EXPECT_DOUBLE_EQ(default_t_star(t), 19.0);
  EXPECT_DOUBLE_EQ(default_t_star(std::vector<double>{1.0, 2.0}), 1.95);
}

TEST(EvaluatePredictions, ConstantPredictionsWithoutCensoring) {
  const std::vector<double> z{1, 2, 3, 4};
  const std::vector<Status> d{1, 1, 1, 1};
  std::vector<std::optional<StepFunction>> curves(4, StepFunction::constant(0.5));
  curves[2].reset();
  const auto res = evaluate_predictions(curves, z, d, StepFunction::constant(1.0), 3.5);
  EXPECT_EQ(res.n_excluded_oob, 1u);
  EXPECT_EQ(res.times, (std::vector<double>{0.0, 1.0, 2.0, 3.5}));
  for (double v : res.bs_values) EXPECT_DOUBLE_EQ(v, 0.25);
  EXPECT_NEAR(res.ibs, 0.25, 1e-15);
}

ForestParams small_forest() {
  ForestParams p;
  p.num_trees = 10;
  p.mtry = 2;
  p.alpha = 1.0;
  return p;
}

TEST(CrossValidate, LeaveOneOut) {
  const auto data = gen_null_model({Scenario::null_model, 12, 9});
  Rng rng(10);
  const auto folds = cross_validate(data, small_forest(), 12, rng);
  ASSERT_EQ(folds.size(), 12u);
  std::size_t no_events = 0;
  for (const auto& f : folds) {
    EXPECT_EQ(f.n_test, 1u);
    if (f.valid) {
      EXPECT_GE(f.ibs, 0.0);
    } else {
      EXPECT_FALSE(f.note.empty());
    }
    no_events += f.note == "no events in test fold";
  }
  EXPECT_EQ(no_events, data.size() - data.num_events());
}

TEST(CrossValidate, DeterministicAndThreadIndependent) {
  const auto data = gen_null_model({Scenario::null_model, 60, 11});
  Rng a(12), b(12), c(12);
  const auto f1 = cross_validate(data, small_forest(), 5, a, 1);
  const auto f2 = cross_validate(data, small_forest(), 5, b, 1);
  const auto f3 = cross_validate(data, small_forest(), 5, c, 4);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(f1[k].ibs, f2[k].ibs);
    EXPECT_EQ(f1[k].ibs, f3[k].ibs);
    EXPECT_EQ(f1[k].valid, f2[k].valid);
  }
  EXPECT_TRUE(std::isfinite(mean_valid_ibs(f1)));
}

TEST(AssignFolds, BalancedSizes) {
  Rng rng(13);
  const auto fold = assign_folds(23, 5, rng);
  std::vector<std::size_t> counts(5, 0);
  for (auto f : fold) ++counts[f];
  for (auto c : counts) {
    EXPECT_GE(c, 4u);
    EXPECT_LE(c, 5u);
  }
}

TEST(OobBrier, ReportsExcludedObservations) {
  const auto data = gen_null_model({Scenario::null_model, 80, 14});
  auto p = small_forest();
  p.num_trees = 3;
  const auto forest = grow_forest(data, p);
  const auto res = oob_brier(forest, data);
  EXPECT_EQ(res.n_excluded_oob, forest.predict_oob(data).num_undefined);
  EXPECT_GT(res.n_excluded_oob, 0u);
  EXPECT_GE(res.ibs, 0.0);
}

}  // namespace
}  // namespace msrf
