#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace msrf {

/// Benjamini-Hochberg step-up adjustment. `num_hypotheses` may exceed the
/// number of supplied p-values; the missing hypotheses count as p = 1.
inline std::vector<double> benjamini_hochberg(std::span<const double> pvalues, std::size_t num_hypotheses = 0) {
  const std::size_t k = pvalues.size();
  if (num_hypotheses == 0) num_hypotheses = k;
  if (num_hypotheses < k) throw std::invalid_argument("benjamini_hochberg: fewer hypotheses than p-values");
  std::vector<double> adjusted(k);
  if (k == 0) return adjusted;

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });

  const double m = static_cast<double>(num_hypotheses);
  double running_min = 1.0;
  for (std::size_t r = k; r-- > 0;) {
    const double candidate = m * pvalues[order[r]] / static_cast<double>(r + 1);
    running_min = std::min(running_min, candidate);
    adjusted[order[r]] = running_min;
  }
  return adjusted;
}

}  // namespace msrf
