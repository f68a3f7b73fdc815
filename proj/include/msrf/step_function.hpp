#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace msrf {

/// Right-continuous step function. Before the first jump it takes
/// `initial_value`; past the last jump it stays at the last value.
class StepFunction {
 public:
  StepFunction() = default;

  StepFunction(std::vector<double> jump_times, std::vector<double> values, double initial_value = 1.0)
      : jump_times_(std::move(jump_times)), values_(std::move(values)), initial_value_(initial_value) {
    if (jump_times_.size() != values_.size()) {
      throw std::invalid_argument("StepFunction: jump_times and values differ in length");
    }
    for (std::size_t i = 1; i < jump_times_.size(); ++i) {
      if (!(jump_times_[i - 1] < jump_times_[i])) {
        throw std::invalid_argument("StepFunction: jump_times must be strictly increasing");
      }
    }
  }

  /// Constant function.
  static StepFunction constant(double value) { return StepFunction({}, {}, value); }

  double operator()(double t) const noexcept {
    auto it = std::upper_bound(jump_times_.begin(), jump_times_.end(), t);
    if (it == jump_times_.begin()) return initial_value_;
    return values_[static_cast<std::size_t>(it - jump_times_.begin()) - 1];
  }

  /// Left limit f(t-): value of the last jump strictly before t.
  double left_limit(double t) const noexcept {
    auto it = std::lower_bound(jump_times_.begin(), jump_times_.end(), t);
    if (it == jump_times_.begin()) return initial_value_;
    return values_[static_cast<std::size_t>(it - jump_times_.begin()) - 1];
  }

  /// Evaluates on a sorted grid in a single merge pass.
  std::vector<double> evaluate(const std::vector<double>& sorted_grid) const {
    std::vector<double> out(sorted_grid.size());
    evaluate_into(sorted_grid, out.data());
    return out;
  }

  void evaluate_into(const std::vector<double>& sorted_grid, double* out) const noexcept {
    std::size_t j = 0;
    double current = initial_value_;
    for (std::size_t i = 0; i < sorted_grid.size(); ++i) {
      while (j < jump_times_.size() && jump_times_[j] <= sorted_grid[i]) current = values_[j++];
      out[i] = current;
    }
  }

  const std::vector<double>& jump_times() const noexcept { return jump_times_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double initial_value() const noexcept { return initial_value_; }
  bool empty() const noexcept { return jump_times_.empty(); }

  /// Starts at 1, non-increasing, stays in [0, 1].
  bool is_survival_curve(double tol = 1e-12) const noexcept {
    if (std::abs(initial_value_ - 1.0) > tol) return false;
    double prev = initial_value_;
    for (double v : values_) {
      if (!(v >= -tol && v <= 1.0 + tol) || v > prev + tol) return false;
      prev = v;
    }
    return true;
  }

  friend bool operator==(const StepFunction&, const StepFunction&) = default;

 private:
  std::vector<double> jump_times_;
  std::vector<double> values_;
  double initial_value_ = 1.0;
};

}  // namespace msrf
