#pragma once

// Maximally selected rank statistics over a single covariate and the p-value
// approximations used to compare covariates on a common scale.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "msrf/random.hpp"
#include "msrf/survival.hpp"

namespace msrf {

enum class PValueMethod { lau92, lau94, minlau, condmc };

inline std::string_view to_string(PValueMethod m) noexcept {
  switch (m) {
    case PValueMethod::lau92: return "lau92";
    case PValueMethod::lau94: return "lau94";
    case PValueMethod::minlau: return "minlau";
    case PValueMethod::condmc: return "condmc";
  }
  return "?";
}

inline std::optional<PValueMethod> parse_pvalue_method(std::string_view s) noexcept {
  if (s == "lau92") return PValueMethod::lau92;
  if (s == "lau94") return PValueMethod::lau94;
  if (s == "minlau") return PValueMethod::minlau;
  if (s == "condmc") return PValueMethod::condmc;
  return std::nullopt;
}

/// Admissible cutpoints mu (observed values, split rule X <= mu) and the
/// left-group size m_mu of each.
struct CutpointCandidates {
  std::vector<double> values;
  std::vector<std::size_t> group_sizes;
  std::size_t n = 0;

  std::size_t size() const noexcept { return values.size(); }
  bool empty() const noexcept { return values.empty(); }
};

struct MaxStatResult {
  double best_cutpoint = 0.0;
  double max_statistic = 0.0;
  std::size_t best_index = 0;
  std::vector<double> per_cutpoint_statistics;
  CutpointCandidates candidates;
};

/// Relative tolerance when comparing a permuted statistic with the observed
/// one; permutations that regroup the same scores differ only by rounding.
inline constexpr double kStatisticTieTolerance = 1e-10;

/// Stable ascending order of a covariate.
inline std::vector<std::size_t> sort_order(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  return order;
}

/// Group-size bounds ceil(n*eps1) <= m <= floor(n*eps2), additionally m < n.
inline std::pair<std::size_t, std::size_t> group_size_bounds(std::size_t n, double eps1, double eps2) noexcept {
  const double nd = static_cast<double>(n);
  const auto lo = static_cast<std::size_t>(std::max(1.0, std::ceil(nd * eps1 - 1e-9)));
  auto hi = static_cast<std::size_t>(std::max(0.0, std::floor(nd * eps2 + 1e-9)));
  if (hi + 1 > n) hi = n - 1;
  return {lo, hi};
}

/// Distinct covariate values whose left-group size lies in [lo, hi].
inline CutpointCandidates cutpoints_in_range(std::span<const double> x, std::span<const std::size_t> order,
                                             std::size_t lo, std::size_t hi) {
  const std::size_t n = x.size();
  CutpointCandidates out;
  out.n = n;
  for (std::size_t k = 0; k < n;) {
    const double v = x[order[k]];
    std::size_t end = k + 1;
    while (end < n && x[order[end]] == v) ++end;
    if (end > hi) break;
    if (end >= lo) {
      out.values.push_back(v);
      out.group_sizes.push_back(end);
    }
    k = end;
  }
  return out;
}

inline CutpointCandidates enumerate_cutpoints(std::span<const double> x, std::span<const std::size_t> order,
                                              double eps1, double eps2) {
  if (x.empty()) throw std::invalid_argument("enumerate_cutpoints: empty covariate");
  if (!(eps1 >= 0.0 && eps1 < eps2 && eps2 <= 1.0)) {
    throw std::invalid_argument("enumerate_cutpoints: need 0 <= eps1 < eps2 <= 1");
  }
  const auto [lo, hi] = group_size_bounds(x.size(), eps1, eps2);
  return cutpoints_in_range(x, order, lo, hi);
}

inline CutpointCandidates enumerate_cutpoints(std::span<const double> x, double eps1, double eps2) {
  if (x.empty()) throw std::invalid_argument("enumerate_cutpoints: empty covariate");
  const auto order = sort_order(x);
  return enumerate_cutpoints(x, order, eps1, eps2);
}

namespace detail {

/// 1 / sqrt(Var_H0(S_m)) for each candidate group size.
inline void inverse_sd(const LogRankScores& scores, std::span<const std::size_t> group_sizes,
                       std::vector<double>& out) {
  const double n = static_cast<double>(scores.size());
  out.resize(group_sizes.size());
  for (std::size_t j = 0; j < group_sizes.size(); ++j) {
    const double m = static_cast<double>(group_sizes[j]);
    const double var = n / (n - 1.0) * (m / n) * ((n - m) / n) * scores.sum_sq_dev;
    out[j] = 1.0 / std::sqrt(var);
  }
}

inline void check_statistic_input(const LogRankScores& scores, std::size_t x_size, const CutpointCandidates& c) {
  if (scores.size() != x_size) throw std::invalid_argument("maximally_selected_statistic: length mismatch");
  if (c.empty()) throw std::invalid_argument("maximally_selected_statistic: no candidate cutpoints");
  if (c.n != x_size) throw std::invalid_argument("maximally_selected_statistic: candidates built for another sample");
  if (scores.degenerate()) throw std::domain_error("maximally_selected_statistic: scores have zero variance");
}

}  // namespace detail

/// Standardised linear rank statistics T at every candidate and their
/// maximum absolute value. One sweep over the covariate order.
inline MaxStatResult maximally_selected_statistic(const LogRankScores& scores, std::span<const double> x,
                                                  std::span<const std::size_t> order,
                                                  const CutpointCandidates& candidates) {
  detail::check_statistic_input(scores, x.size(), candidates);
  std::vector<double> inv_sd;
  detail::inverse_sd(scores, candidates.group_sizes, inv_sd);

  MaxStatResult out;
  out.per_cutpoint_statistics.resize(candidates.size());
  double running = 0.0;
  std::size_t pos = 0;
  double best = -1.0;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    const std::size_t m = candidates.group_sizes[j];
    for (; pos < m; ++pos) running += scores.scores[order[pos]];
    const double t = (running - static_cast<double>(m) * scores.mean) * inv_sd[j];
    out.per_cutpoint_statistics[j] = t;
    if (std::abs(t) > best) {
      best = std::abs(t);
      out.best_index = j;
    }
  }
  out.max_statistic = best;
  out.best_cutpoint = candidates.values[out.best_index];
  out.candidates = candidates;
  return out;
}

inline MaxStatResult maximally_selected_statistic(const LogRankScores& scores, std::span<const double> x,
                                                  const CutpointCandidates& candidates) {
  const auto order = sort_order(x);
  return maximally_selected_statistic(scores, x, order, candidates);
}

// --- normal distribution ----------------------------------------------------

inline double normal_pdf(double x) noexcept {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// 1 - Phi(x) without cancellation.
inline double normal_upper_tail(double x) noexcept { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

// --- p-value approximations -------------------------------------------------

/// Brownian-bridge approximation. It is a tail formula: below b = 1 it turns
/// back down (negative below b ~ 0.3), so small statistics get p = 1.
inline double p_lau92(double b, double eps1, double eps2) noexcept {
  if (!(b >= 1.0)) return 1.0;
  if (!(eps1 > 0.0) || !(eps2 < 1.0)) return 1.0;
  const double db = normal_pdf(b);
  const double p =
      4.0 * db / b + db * (b - 1.0 / b) * std::log((eps2 * (1.0 - eps1)) / ((1.0 - eps2) * eps1));
  return std::clamp(p, 0.0, 1.0);
}

/// Improved-Bonferroni approximation over the
/// actual candidate group sizes.
inline double p_lau94(double b, std::size_t n, std::span<const std::size_t> group_sizes) {
  if (group_sizes.empty()) throw std::invalid_argument("p_lau94: no candidate cutpoints");
  const double nd = static_cast<double>(n);
  double correction = 0.0;
  const double damping = std::exp(-0.5 * b * b) / std::numbers::pi;
  const double curvature = b * b / 4.0;
  for (std::size_t j = 0; j + 1 < group_sizes.size(); ++j) {
    const double m1 = static_cast<double>(group_sizes[j]);
    const double m2 = static_cast<double>(group_sizes[j + 1]);
    const double t = std::sqrt(1.0 - m1 * (nd - m2) / ((nd - m1) * m2));
    correction += damping * (t - curvature * t * t * t / 3.0);
  }
  const double p = 2.0 * normal_upper_tail(b) + correction;
  return std::clamp(p, 0.0, 1.0);
}

inline double p_min_lau(double b, double eps1, double eps2, std::size_t n, std::span<const std::size_t> group_sizes) {
  return std::min(p_lau92(b, eps1, eps2), p_lau94(b, n, group_sizes));
}

namespace detail {

/// True when some candidate of the arrangement `y` reaches |T| >= threshold.
inline bool exceeds(std::span<const double> y, std::span<const std::size_t> group_sizes,
                    std::span<const double> inv_sd, double mean, double threshold) noexcept {
  double running = 0.0;
  std::size_t pos = 0;
  for (std::size_t j = 0; j < group_sizes.size(); ++j) {
    const std::size_t m = group_sizes[j];
    for (; pos < m; ++pos) running += y[pos];
    const double t = (running - static_cast<double>(m) * mean) * inv_sd[j];
    if (std::abs(t) >= threshold) return true;
  }
  return false;
}

inline double exceedance_threshold(double b) noexcept {
  return b - kStatisticTieTolerance * std::max(1.0, std::abs(b));
}

}  // namespace detail

/// Conditional Monte Carlo p-value: the score vector is permuted uniformly
/// `n_permutations` times and the add-one estimator
/// (1 + #{M_perm >= b}) / (1 + n_permutations) is returned.
///
/// Only the first max(m) positions of a permutation enter any statistic, so
/// a partial Fisher-Yates pass per draw suffices.
inline double p_cond_mc(const LogRankScores& scores, const CutpointCandidates& candidates, double observed_b,
                        std::size_t n_permutations, Rng& rng) {
  if (n_permutations == 0) throw std::invalid_argument("p_cond_mc: n_permutations must be >= 1");
  if (candidates.empty()) throw std::invalid_argument("p_cond_mc: no candidate cutpoints");
  if (candidates.n != scores.size()) throw std::invalid_argument("p_cond_mc: candidates built for another sample");
  if (scores.degenerate()) return 1.0;

  std::vector<double> inv_sd;
  detail::inverse_sd(scores, candidates.group_sizes, inv_sd);
  std::vector<double> y = scores.scores;
  const std::size_t n = y.size();
  const std::size_t prefix_len = candidates.group_sizes.back();
  const double threshold = detail::exceedance_threshold(observed_b);

  std::size_t hits = 0;
  for (std::size_t r = 0; r < n_permutations; ++r) {
    for (std::size_t i = 0; i < prefix_len; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(y[i], y[j]);
    }
    if (detail::exceeds(y, candidates.group_sizes, inv_sd, scores.mean, threshold)) ++hits;
  }
  return static_cast<double>(hits + 1) / static_cast<double>(n_permutations + 1);
}

/// Exact permutation p-value by enumerating all n! assignments of scores to
/// positions: #{M_perm >= b} / n!. Only feasible for small samples.
inline double p_permutation_exact(const LogRankScores& scores, const CutpointCandidates& candidates,
                                  double observed_b) {
  const std::size_t n = scores.size();
  if (n > 10) throw std::invalid_argument("p_permutation_exact: n > 10 is not enumerable");
  if (candidates.empty()) throw std::invalid_argument("p_permutation_exact: no candidate cutpoints");
  if (scores.degenerate()) return 1.0;

  std::vector<double> inv_sd;
  detail::inverse_sd(scores, candidates.group_sizes, inv_sd);
  const double threshold = detail::exceedance_threshold(observed_b);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<double> y(n);
  std::uint64_t hits = 0;
  std::uint64_t total = 0;
  do {
    for (std::size_t i = 0; i < n; ++i) y[i] = scores.scores[perm[i]];
    if (detail::exceeds(y, candidates.group_sizes, inv_sd, scores.mean, threshold)) ++hits;
    ++total;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace msrf
