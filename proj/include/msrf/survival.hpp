#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "msrf/step_function.hpp"

namespace msrf {

using Status = std::uint8_t;

/// Right-censored survival data with a numeric covariate matrix stored by
/// column. Validated on construction and immutable afterwards.
class SurvivalDataset {
 public:
  SurvivalDataset() = default;

  SurvivalDataset(std::vector<double> times, std::vector<Status> status,
                  std::vector<std::vector<double>> columns, std::vector<std::string> names)
      : times_(std::move(times)),
        status_(std::move(status)),
        columns_(std::move(columns)),
        names_(std::move(names)) {
    const std::size_t n = times_.size();
    if (n == 0) throw std::invalid_argument("dataset has no observations");
    if (status_.size() != n) throw std::invalid_argument("time and status lengths differ");
    if (columns_.empty()) throw std::invalid_argument("dataset has no covariates");
    if (names_.size() != columns_.size()) throw std::invalid_argument("covariate names do not match columns");
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(times_[i]) || times_[i] <= 0.0) {
        throw std::invalid_argument("time must be positive and finite (row " + std::to_string(i + 1) + ")");
      }
      if (status_[i] > 1) throw std::invalid_argument("status must be 0 or 1 (row " + std::to_string(i + 1) + ")");
    }
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      if (columns_[j].size() != n) throw std::invalid_argument("covariate " + names_[j] + " has wrong length");
      for (double v : columns_[j]) {
        if (!std::isfinite(v)) throw std::invalid_argument("covariate " + names_[j] + " has a missing value");
      }
    }
  }

  std::size_t size() const noexcept { return times_.size(); }
  std::size_t num_covariates() const noexcept { return columns_.size(); }

  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<Status>& status() const noexcept { return status_; }
  const std::vector<double>& covariate(std::size_t j) const noexcept { return columns_[j]; }
  double value(std::size_t i, std::size_t j) const noexcept { return columns_[j][i]; }
  const std::vector<std::string>& covariate_names() const noexcept { return names_; }

  std::vector<double> row(std::size_t i) const {
    std::vector<double> r(columns_.size());
    for (std::size_t j = 0; j < columns_.size(); ++j) r[j] = columns_[j][i];
    return r;
  }

  std::size_t num_events() const noexcept {
    return static_cast<std::size_t>(std::count(status_.begin(), status_.end(), Status{1}));
  }

  /// Rows selected by index, in the given order.
  SurvivalDataset subset(std::span<const std::size_t> rows) const {
    std::vector<double> t;
    std::vector<Status> s;
    t.reserve(rows.size());
    s.reserve(rows.size());
    std::vector<std::vector<double>> cols(columns_.size());
    for (auto& c : cols) c.reserve(rows.size());
    for (std::size_t i : rows) {
      t.push_back(times_[i]);
      s.push_back(status_[i]);
      for (std::size_t j = 0; j < columns_.size(); ++j) cols[j].push_back(columns_[j][i]);
    }
    return SurvivalDataset(std::move(t), std::move(s), std::move(cols), names_);
  }

 private:
  std::vector<double> times_;
  std::vector<Status> status_;
  std::vector<std::vector<double>> columns_;
  std::vector<std::string> names_;
};

/// Log-rank scores of a sample together with their centring constants.
struct LogRankScores {
  std::vector<double> scores;
  double mean = 0.0;
  double sum_sq_dev = 0.0;

  std::size_t size() const noexcept { return scores.size(); }

  /// True when all scores coincide, i.e. no rank statistic can be standardised.
  bool degenerate() const noexcept {
    if (scores.empty()) return true;
    auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    return *hi - *lo <= 1e-12 * std::max(1.0, std::max(std::abs(*lo), std::abs(*hi)));
  }
};

namespace detail {

inline void check_survival_input(std::span<const double> times, std::span<const Status> status) {
  if (times.empty()) throw std::invalid_argument("empty survival sample");
  if (times.size() != status.size()) throw std::invalid_argument("time and status lengths differ");
}

/// Order by time ascending, events before censorings at tied times.
inline std::vector<std::size_t> survival_order(std::span<const double> times, std::span<const Status> status) {
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (times[a] != times[b]) return times[a] < times[b];
    return status[a] > status[b];
  });
  return order;
}

}  // namespace detail

/// a_i = delta_i - sum_{j <= gamma_i} delta_j / (n - gamma_j + 1), where gamma
/// counts observations with time <= Z_j (tied times share gamma) and the sum
/// runs over the time-ordered sample.
inline LogRankScores compute_logrank_scores(std::span<const double> times, std::span<const Status> status) {
  detail::check_survival_input(times, status);
  const std::size_t n = times.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (status[i] > 1) throw std::invalid_argument("status must be 0 or 1");
    if (!(times[i] > 0.0)) throw std::invalid_argument("time must be positive");
  }

  const auto order = detail::survival_order(times, status);

  // gamma for each sorted position: index one past the last tie.
  std::vector<std::size_t> gamma(n);
  for (std::size_t k = 0; k < n;) {
    std::size_t end = k + 1;
    while (end < n && times[order[end]] == times[order[k]]) ++end;
    for (std::size_t q = k; q < end; ++q) gamma[q] = end;
    k = end;
  }

  // prefix[k] = sum over sorted positions < k of delta / (n - gamma + 1)
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double term =
        status[order[k]] ? 1.0 / static_cast<double>(n - gamma[k] + 1) : 0.0;
    prefix[k + 1] = prefix[k] + term;
  }

  LogRankScores out;
  out.scores.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    out.scores[i] = static_cast<double>(status[i]) - prefix[gamma[k]];
  }
  double sum = 0.0;
  for (double a : out.scores) sum += a;
  out.mean = sum / static_cast<double>(n);
  for (double a : out.scores) out.sum_sq_dev += (a - out.mean) * (a - out.mean);
  return out;
}

/// Product-limit estimator. Jumps only at event times.
inline StepFunction kaplan_meier(std::span<const double> times, std::span<const Status> status) {
  detail::check_survival_input(times, status);
  const std::size_t n = times.size();
  const auto order = detail::survival_order(times, status);

  std::vector<double> jumps;
  std::vector<double> values;
  double surv = 1.0;
  std::size_t k = 0;
  while (k < n) {
    const double t = times[order[k]];
    const std::size_t at_risk = n - k;
    std::size_t deaths = 0;
    while (k < n && times[order[k]] == t) {
      deaths += status[order[k]];
      ++k;
    }
    if (deaths > 0) {
      surv *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
      jumps.push_back(t);
      values.push_back(surv);
    }
  }
  return StepFunction(std::move(jumps), std::move(values), 1.0);
}

}  // namespace msrf
