#pragma once

// Prediction error for censored outcomes: inverse-probability-of-censoring
// weighted Brier score, its time integral, and k-fold cross-validation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "msrf/forest.hpp"
#include "msrf/parallel.hpp"
#include "msrf/random.hpp"
#include "msrf/step_function.hpp"
#include "msrf/survival.hpp"

namespace msrf {

/// Kaplan-Meier estimate of the censoring distribution G (censoring treated
/// as the event).
inline StepFunction censoring_survival(std::span<const double> times, std::span<const Status> status) {
  std::vector<Status> flipped(status.size());
  for (std::size_t i = 0; i < status.size(); ++i) flipped[i] = status[i] ? 0 : 1;
  return kaplan_meier(times, flipped);
}

inline StepFunction censoring_survival(const SurvivalDataset& data) {
  return censoring_survival(data.times(), data.status());
}

/// IPCW weight of one observation at time t. Events up to t use G(T-),
/// survivors past t use G(t), observations censored by t get 0.
inline double ipcw_weight(double t, double time, Status status, const StepFunction& G) {
  double g;
  if (time <= t) {
    if (!status) return 0.0;
    g = G.left_limit(time);
  } else {
    g = G(t);
  }
  if (!(g > 0.0)) {
    throw std::domain_error("censoring survival is zero at t = " + std::to_string(t) +
                            "; choose a smaller evaluation horizon t*");
  }
  return 1.0 / g;
}

/// BS(t) = (1/n) sum_i W_i(t) (1{T_i > t} - S(t|x_i))^2.
inline double brier_score(double t, std::span<const double> predictions, std::span<const double> times,
                          std::span<const Status> status, const StepFunction& G) {
  if (predictions.size() != times.size() || times.size() != status.size()) {
    throw std::invalid_argument("brier_score: length mismatch");
  }
  if (times.empty()) throw std::invalid_argument("brier_score: no observations");
  double sum = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double w = ipcw_weight(t, times[i], status[i], G);
    if (w == 0.0) continue;
    const double residual = (times[i] > t ? 1.0 : 0.0) - predictions[i];
    sum += w * residual * residual;
  }
  return sum / static_cast<double>(times.size());
}

/// Trapezoidal integral of a Brier curve over [0, t_star]. The curve is held
/// constant before its first grid point and interpolated linearly at t_star.
inline double brier_integral(std::span<const double> grid, std::span<const double> bs, double t_star) {
  if (grid.size() != bs.size() || grid.empty()) throw std::invalid_argument("brier_integral: bad curve");
  if (!(t_star > 0.0)) throw std::invalid_argument("brier_integral: t_star must be positive");
  if (t_star > grid.back()) throw std::invalid_argument("brier_integral: t_star beyond the last grid point");
  for (std::size_t g = 0; g < bs.size(); ++g) {
    if (!std::isfinite(bs[g])) throw std::invalid_argument("brier_integral: non-finite Brier score");
  }
  double area = 0.0;
  double prev_t = 0.0;
  double prev_v = bs.front();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double t = grid[g];
    if (t <= prev_t) {
      prev_v = bs[g];
      continue;
    }
    if (t >= t_star) {
      const double v_star = prev_v + (bs[g] - prev_v) * (t_star - prev_t) / (t - prev_t);
      area += 0.5 * (prev_v + v_star) * (t_star - prev_t);
      return area;
    }
    area += 0.5 * (prev_v + bs[g]) * (t - prev_t);
    prev_t = t;
    prev_v = bs[g];
  }
  return area;
}

/// Integrated Brier score normalised by t_star, so a constant curve c gives c.
inline double integrated_brier_score(std::span<const double> grid, std::span<const double> bs, double t_star) {
  return brier_integral(grid, bs, t_star) / t_star;
}

/// 95th percentile of the observed times (linear interpolation between order
/// statistics).
inline double default_t_star(std::span<const double> times, double quantile = 0.95) {
  if (times.empty()) throw std::invalid_argument("default_t_star: no times");
  std::vector<double> sorted(times.begin(), times.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = quantile * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct BrierCurve {
  std::vector<double> times;
  std::vector<double> bs_values;
  double ibs = 0.0;
  double integral = 0.0;
  double t_star = 0.0;
  std::size_t n_excluded_oob = 0;
};

/// Brier curve and IBS of per-observation survival curves. Undefined curves
/// are dropped and counted. The curve is evaluated at 0, at every distinct
/// observed time below t_star, and at t_star.
inline BrierCurve evaluate_predictions(std::span<const std::optional<StepFunction>> curves,
                                       std::span<const double> times, std::span<const Status> status,
                                       const StepFunction& G, std::optional<double> t_star = std::nullopt) {
  if (curves.size() != times.size() || times.size() != status.size()) {
    throw std::invalid_argument("evaluate_predictions: length mismatch");
  }
  std::vector<std::size_t> included;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    if (curves[i]) included.push_back(i);
  }
  BrierCurve out;
  out.n_excluded_oob = curves.size() - included.size();
  if (included.empty()) throw std::invalid_argument("evaluate_predictions: no defined predictions");

  std::vector<double> t_in(included.size());
  std::vector<Status> s_in(included.size());
  for (std::size_t k = 0; k < included.size(); ++k) {
    t_in[k] = times[included[k]];
    s_in[k] = status[included[k]];
  }
  out.t_star = t_star ? *t_star : default_t_star(t_in);

  out.times.push_back(0.0);
  std::vector<double> sorted = t_in;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (double t : sorted) {
    if (t > 0.0 && t < out.t_star) out.times.push_back(t);
  }
  if (out.t_star > 0.0) out.times.push_back(out.t_star);

  std::vector<double> pred(included.size());
  out.bs_values.reserve(out.times.size());
  for (double t : out.times) {
    for (std::size_t k = 0; k < included.size(); ++k) pred[k] = (*curves[included[k]])(t);
    out.bs_values.push_back(brier_score(t, pred, t_in, s_in, G));
  }
  out.integral = brier_integral(out.times, out.bs_values, out.t_star);
  out.ibs = out.integral / out.t_star;
  return out;
}

/// Out-of-bag Brier curve of a forest on its own training data.
inline BrierCurve oob_brier(const SurvivalForest& forest, const SurvivalDataset& data, std::size_t threads = 1) {
  const auto oob = forest.predict_oob(data, threads);
  return evaluate_predictions(oob.curves, data.times(), data.status(), censoring_survival(data));
}

struct FoldResult {
  std::size_t fold = 0;
  std::size_t n_test = 0;
  double ibs = 0.0;
  double integral = 0.0;
  double t_star = 0.0;
  bool valid = false;
  std::string note;
};

/// Random equal-size fold labels 0..k-1.
inline std::vector<std::size_t> assign_folds(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  rng.shuffle(std::span<std::size_t>(perm));
  std::vector<std::size_t> fold(n);
  for (std::size_t pos = 0; pos < n; ++pos) fold[perm[pos]] = pos % k;
  return fold;
}

/// k-fold cross-validated IBS. Each fold's forest uses a seed derived from
/// `rng`; G is estimated on the training portion.
inline std::vector<FoldResult> cross_validate(const SurvivalDataset& data, const ForestParams& params, std::size_t k,
                                              Rng& rng, std::size_t threads = 1) {
  const std::size_t n = data.size();
  if (k < 2) throw std::invalid_argument("cross_validate: k must be at least 2");
  if (n < k) throw std::invalid_argument("cross_validate: fewer observations than folds");
  const auto fold = assign_folds(n, k, rng);
  const std::uint64_t base_seed = rng();

  std::vector<FoldResult> results(k);
  parallel_for(k, threads, [&](std::size_t f) {
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? test_rows : train_rows).push_back(i);
    FoldResult& r = results[f];
    r.fold = f;
    r.n_test = test_rows.size();
    const auto train = data.subset(train_rows);
    const auto test = data.subset(test_rows);
    if (test.num_events() == 0) {
      r.note = "no events in test fold";
      return;
    }
    if (train.size() < 2) {
      r.note = "training portion too small";
      return;
    }
    ForestParams fp = params;
    fp.seed = derive_seed(base_seed, f);
    const auto forest = grow_forest(train, fp, 1);
    std::vector<std::optional<StepFunction>> curves(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) curves[i] = forest.predict_survival(test.row(i));
    try {
      const auto curve = evaluate_predictions(curves, test.times(), test.status(), censoring_survival(train));
      r.ibs = curve.ibs;
      r.integral = curve.integral;
      r.t_star = curve.t_star;
      r.valid = true;
    } catch (const std::domain_error& e) {
      r.note = e.what();
    }
  });
  return results;
}

/// Mean IBS over valid folds (NaN when none is valid).
inline double mean_valid_ibs(std::span<const FoldResult> folds) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& f : folds) {
    if (!f.valid) continue;
    sum += f.ibs;
    ++count;
  }
  return count ? sum / static_cast<double>(count) : std::nan("");
}

}  // namespace msrf
