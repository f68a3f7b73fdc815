#pragma once

// Simulated survival datasets: the uninformative null model with covariates
// of varying cardinality, and two prediction benchmark scenarios.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "msrf/random.hpp"
#include "msrf/survival.hpp"

namespace msrf {

enum class Scenario { null_model, scenario1, scenario2 };

inline std::string_view to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::null_model: return "null_model";
    case Scenario::scenario1: return "scenario1";
    case Scenario::scenario2: return "scenario2";
  }
  return "?";
}

inline std::optional<Scenario> parse_scenario(std::string_view s) noexcept {
  if (s == "null_model" || s == "null") return Scenario::null_model;
  if (s == "scenario1") return Scenario::scenario1;
  if (s == "scenario2") return Scenario::scenario2;
  return std::nullopt;
}

struct ScenarioSpec {
  Scenario scenario = Scenario::null_model;
  std::size_t n = 100;
  std::uint64_t seed = 1;
  double baseline_hazard = 0.5;
  double censoring_rate = 0.1;
  double beta_strong = 1.0;     // scenario 1: each of the 6 dichotomous effects
  double beta_nonlinear = 2.0;  // scenario 2: both uniform covariates
  double beta_linear = 0.5;     // scenario 2: both Bernoulli covariates
};

/// Non-linear effect shapes of scenario 2 on [0, 1]. Both are symmetric about
/// 1/2, so they are uncorrelated with the covariate itself.
inline double nonlinear_effect1(double u) noexcept { return std::sin(3.0 * std::numbers::pi * u); }
inline double nonlinear_effect2(double u) noexcept { return std::cos(2.0 * std::numbers::pi * u); }

namespace detail {

struct Outcome {
  std::vector<double> times;
  std::vector<Status> status;
};

inline void draw_outcome(Outcome& out, double hazard, double censoring_rate, Rng& rng) {
  const double survival = rng.exponential(hazard);
  const double censoring = rng.exponential(censoring_rate);
  out.times.push_back(std::min(survival, censoring));
  out.status.push_back(survival <= censoring ? 1 : 0);
}

inline std::vector<std::string> numbered_names(std::size_t p) {
  std::vector<std::string> names(p);
  for (std::size_t j = 0; j < p; ++j) names[j] = "x" + std::to_string(j + 1);
  return names;
}

}  // namespace detail

/// Null model: exponential survival (rate 0.5) and censoring (rate 0.1),
/// covariates x2, x4, x10, x20 uniform over 1..k and x_n standard normal, all
/// independent of the outcome.
inline SurvivalDataset gen_null_model(const ScenarioSpec& spec) {
  if (spec.n < 2) throw std::invalid_argument("gen_null_model: n must be at least 2");
  Rng rng(spec.seed);
  constexpr std::size_t kCategories[] = {2, 4, 10, 20};
  detail::Outcome y;
  std::vector<std::vector<double>> cols(5, std::vector<double>(spec.n));
  for (std::size_t i = 0; i < spec.n; ++i) {
    for (std::size_t j = 0; j < 4; ++j) cols[j][i] = static_cast<double>(1 + rng.below(kCategories[j]));
    cols[4][i] = rng.normal();
    detail::draw_outcome(y, spec.baseline_hazard, spec.censoring_rate, rng);
  }
  return SurvivalDataset(std::move(y.times), std::move(y.status), std::move(cols), {"x2", "x4", "x10", "x20", "xn"});
}

/// Scenario 1: six Bernoulli(1/2) covariates with log-hazard effect
/// beta_strong each, followed by 100 standard normal noise covariates.
inline SurvivalDataset gen_scenario1(const ScenarioSpec& spec) {
  if (spec.n < 2) throw std::invalid_argument("gen_scenario1: n must be at least 2");
  constexpr std::size_t kInformative = 6;
  constexpr std::size_t kNoise = 100;
  Rng rng(spec.seed);
  detail::Outcome y;
  std::vector<std::vector<double>> cols(kInformative + kNoise, std::vector<double>(spec.n));
  for (std::size_t i = 0; i < spec.n; ++i) {
    double lp = 0.0;
    for (std::size_t j = 0; j < kInformative; ++j) {
      cols[j][i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
      lp += spec.beta_strong * cols[j][i];
    }
    for (std::size_t j = kInformative; j < kInformative + kNoise; ++j) cols[j][i] = rng.normal();
    detail::draw_outcome(y, spec.baseline_hazard * std::exp(lp), spec.censoring_rate, rng);
  }
  return SurvivalDataset(std::move(y.times), std::move(y.status), std::move(cols),
                         detail::numbered_names(kInformative + kNoise));
}

/// Scenario 2: x1, x2 ~ U(0,1) with non-linear effects, x3, x4 ~ Bernoulli(1/2)
/// with linear effects, x5..x14 standard normal noise.
inline SurvivalDataset gen_scenario2(const ScenarioSpec& spec) {
  if (spec.n < 2) throw std::invalid_argument("gen_scenario2: n must be at least 2");
  constexpr std::size_t kP = 14;
  Rng rng(spec.seed);
  detail::Outcome y;
  std::vector<std::vector<double>> cols(kP, std::vector<double>(spec.n));
  for (std::size_t i = 0; i < spec.n; ++i) {
    cols[0][i] = rng.uniform();
    cols[1][i] = rng.uniform();
    cols[2][i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    cols[3][i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    for (std::size_t j = 4; j < kP; ++j) cols[j][i] = rng.normal();
    const double lp = spec.beta_nonlinear * (nonlinear_effect1(cols[0][i]) + nonlinear_effect2(cols[1][i])) +
                      spec.beta_linear * (cols[2][i] + cols[3][i]);
    detail::draw_outcome(y, spec.baseline_hazard * std::exp(lp), spec.censoring_rate, rng);
  }
  return SurvivalDataset(std::move(y.times), std::move(y.status), std::move(cols), detail::numbered_names(kP));
}

inline SurvivalDataset simulate(const ScenarioSpec& spec) {
  switch (spec.scenario) {
    case Scenario::null_model: return gen_null_model(spec);
    case Scenario::scenario1: return gen_scenario1(spec);
    case Scenario::scenario2: return gen_scenario2(spec);
  }
  throw std::invalid_argument("unknown scenario");
}

}  // namespace msrf
