// Command-line front end: train / predict / simulate / bias-study / benchmark.

#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "msrf/msrf.hpp"

namespace {

using namespace msrf;

struct GlobalOptions {
  std::size_t threads = 1;
  std::uint64_t seed = 1;
};

/// Writes to a file, or to stdout for "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw std::runtime_error("cannot open " + path + " for writing");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<MethodSpec> parse_methods(const std::string& list) {
  std::vector<MethodSpec> out;
  for (const auto& m : split_list(list)) {
    auto spec = parse_method(m);
    if (!spec) throw CLI::ValidationError("--methods", "unknown method '" + m + "'");
    out.push_back(*spec);
  }
  if (out.empty()) throw CLI::ValidationError("--methods", "no methods given");
  return out;
}

std::vector<bool> parse_resampling(const std::string& list) {
  std::vector<bool> out;
  for (const auto& r : split_list(list)) {
    if (r == "subsample") {
      out.push_back(false);
    } else if (r == "bootstrap") {
      out.push_back(true);
    } else {
      throw CLI::ValidationError("--resampling", "unknown scheme '" + r + "'");
    }
  }
  if (out.empty()) throw CLI::ValidationError("--resampling", "no resampling scheme given");
  return out;
}

// --- train -------------------------------------------------------------------

struct TrainOptions {
  std::string input;
  std::string output;
  ForestParams params;
  std::size_t mtry = 0;
  std::string resampling = "subsample";
  std::string pvalue = "minlau";
  std::string splitter = "msr";
  std::string bh_divisor = "tested";
  bool oob_error = false;
};

void add_train(CLI::App& app, const GlobalOptions& global) {
  auto opt = std::make_shared<TrainOptions>();
  auto* cmd = app.add_subcommand("train", "Grow a survival forest from a CSV file and save the model");
  cmd->add_option("--input,-i", opt->input, "CSV with columns time, status and numeric covariates")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--output,-o", opt->output, "Model file to write")->required();
  cmd->add_option("--num-trees", opt->params.num_trees, "Number of trees")->check(CLI::PositiveNumber);
  cmd->add_option("--mtry", opt->mtry, "Variables drawn per node (default floor(sqrt(p)))")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--min-node-size", opt->params.min_node_size, "Minimal node size")->check(CLI::PositiveNumber);
  cmd->add_option("--minprop", opt->params.minprop, "Lower covariate quantile eps1; eps2 = 1 - eps1")
      ->check(CLI::Range(0.0, 0.4999999));
  cmd->add_option("--alpha", opt->params.alpha, "Significance level for splitting")->check(CLI::Range(1e-300, 1.0));
  cmd->add_option("--pvalue", opt->pvalue, "lau92, lau94, minlau or condmc")
      ->check(CLI::IsMember({"lau92", "lau94", "minlau", "condmc"}));
  cmd->add_option("--splitter", opt->splitter, "msr or logrank")->check(CLI::IsMember({"msr", "logrank"}));
  cmd->add_option("--resampling", opt->resampling, "subsample or bootstrap")
      ->check(CLI::IsMember({"subsample", "bootstrap"}));
  cmd->add_option("--sample-fraction", opt->params.sample_fraction, "Subsample fraction")
      ->check(CLI::Range(1e-9, 1.0));
  cmd->add_option("--n-permutations", opt->params.n_permutations, "Permutations for condmc")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--bh-divisor", opt->bh_divisor, "tested or mtry")->check(CLI::IsMember({"tested", "mtry"}));
  cmd->add_flag("--oob-error", opt->oob_error, "Report the out-of-bag integrated Brier score");

  cmd->callback([opt, &global] {
    const auto data = read_dataset_file(opt->input);
    ForestParams params = opt->params;
    params.seed = global.seed;
    params.replace = opt->resampling == "bootstrap";
    params.pvalue_method = *parse_pvalue_method(opt->pvalue);
    params.splitter = *parse_splitter(opt->splitter);
    params.bh_divisor = *parse_bh_divisor(opt->bh_divisor);
    params.mtry = opt->mtry ? opt->mtry
                            : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(
                                                           std::sqrt(static_cast<double>(data.num_covariates())))));
    try {
      params.validate(data.num_covariates());
    } catch (const std::invalid_argument& e) {
      throw CLI::ValidationError(e.what());
    }
    const auto forest = grow_forest(data, params, global.threads);
    save_forest(forest, opt->output);
    std::cout << "trees=" << forest.num_trees() << " n=" << data.size() << " p=" << data.num_covariates()
              << " events=" << data.num_events() << " splitter=" << to_string(params.splitter);
    if (params.splitter == Splitter::msr) std::cout << " pvalue=" << to_string(params.pvalue_method);
    if (opt->oob_error) {
      const auto curve = oob_brier(forest, data, global.threads);
      std::cout << " oob_ibs=" << format_double(curve.ibs) << " t_star=" << format_double(curve.t_star)
                << " oob_excluded=" << curve.n_excluded_oob;
    }
    std::cout << '\n';
  });
}

// --- predict -----------------------------------------------------------------

void add_predict(CLI::App& app, const GlobalOptions& global) {
  struct Opts {
    std::string model;
    std::string input;
    std::string output = "-";
  };
  auto opt = std::make_shared<Opts>();
  auto* cmd = app.add_subcommand("predict", "Write forest survival curves for each row of a CSV file");
  cmd->add_option("--model,-m", opt->model, "Model file from train")->required()->check(CLI::ExistingFile);
  cmd->add_option("--input,-i", opt->input, "CSV with the model's covariate columns")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--output,-o", opt->output, "Long-format CSV (id,time,survival); '-' for stdout");
  cmd->callback([opt, &global] {
    const auto forest = load_forest(opt->model);
    const auto table = read_numeric_csv_file(opt->input);
    const auto rows = covariate_rows(table, forest.covariate_names(), opt->input);
    std::vector<std::vector<double>> curves(rows.size());
    parallel_for(rows.size(), global.threads,
                 [&](std::size_t i) { curves[i] = forest.predict_on_grid(rows[i], forest.time_grid()); });
    Output out(opt->output);
    auto& os = out.stream();
    os << "id,time,survival\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t g = 0; g < forest.time_grid().size(); ++g) {
        os << i + 1 << ',' << format_double(forest.time_grid()[g]) << ',' << format_double(curves[i][g]) << '\n';
      }
    }
  });
}

// --- simulate ----------------------------------------------------------------

void add_simulate(CLI::App& app, const GlobalOptions& global) {
  struct Opts {
    std::string scenario = "null_model";
    std::string output = "-";
    ScenarioSpec spec;
  };
  auto opt = std::make_shared<Opts>();
  auto* cmd = app.add_subcommand("simulate", "Write a simulated survival dataset as CSV");
  cmd->add_option("--scenario", opt->scenario, "null_model, scenario1 or scenario2")
      ->check(CLI::IsMember({"null_model", "null", "scenario1", "scenario2"}));
  cmd->add_option("--n", opt->spec.n, "Number of observations")->check(CLI::Range(2, 100000000));
  cmd->add_option("--output,-o", opt->output, "CSV to write; '-' for stdout");
  cmd->add_option("--baseline-hazard", opt->spec.baseline_hazard)->check(CLI::PositiveNumber);
  cmd->add_option("--censoring-rate", opt->spec.censoring_rate)->check(CLI::PositiveNumber);
  cmd->add_option("--beta-strong", opt->spec.beta_strong, "Scenario 1 effect of each dichotomous covariate");
  cmd->add_option("--beta-nonlinear", opt->spec.beta_nonlinear, "Scenario 2 non-linear effect size");
  cmd->add_option("--beta-linear", opt->spec.beta_linear, "Scenario 2 linear effect size");
  cmd->callback([opt, &global] {
    ScenarioSpec spec = opt->spec;
    spec.scenario = *parse_scenario(opt->scenario);
    spec.seed = global.seed;
    const auto data = simulate(spec);
    Output out(opt->output);
    write_dataset(out.stream(), data);
  });
}

// --- bias-study --------------------------------------------------------------

void add_bias_study(CLI::App& app, const GlobalOptions& global) {
  struct Opts {
    BiasStudyConfig cfg;
    std::string methods = "lau92,lau94,minlau,condmc,logrank";
    std::string resampling = "subsample,bootstrap";
    std::string output = "-";
  };
  auto opt = std::make_shared<Opts>();
  auto* cmd = app.add_subcommand("bias-study", "Root-split variable frequencies on null-model data");
  cmd->add_option("--n", opt->cfg.n, "Observations per dataset")->check(CLI::Range(2, 100000000));
  cmd->add_option("--replications", opt->cfg.replications, "Datasets per method")->check(CLI::PositiveNumber);
  cmd->add_option("--num-trees", opt->cfg.num_trees, "Trees per dataset")->check(CLI::PositiveNumber);
  cmd->add_option("--mtry", opt->cfg.mtry, "Variables drawn at the root")->check(CLI::Range(1, 5));
  cmd->add_option("--minprop", opt->cfg.minprop)->check(CLI::Range(0.0, 0.4999999));
  cmd->add_option("--alpha", opt->cfg.alpha)->check(CLI::Range(1e-300, 1.0));
  cmd->add_option("--n-permutations", opt->cfg.n_permutations)->check(CLI::PositiveNumber);
  cmd->add_option("--methods", opt->methods, "Comma list of lau92,lau94,minlau,condmc,logrank");
  cmd->add_option("--resampling", opt->resampling, "Comma list of subsample,bootstrap");
  cmd->add_option("--output,-o", opt->output, "CSV to write; '-' for stdout");
  cmd->callback([opt, &global] {
    BiasStudyConfig cfg = opt->cfg;
    cfg.methods = parse_methods(opt->methods);
    cfg.resampling = parse_resampling(opt->resampling);
    cfg.seed = global.seed;
    cfg.threads = global.threads;
    const auto tallies = run_bias_study(cfg);
    Output out(opt->output);
    write_bias_csv(out.stream(), tallies);
  });
}

// --- benchmark ---------------------------------------------------------------

void add_benchmark(CLI::App& app, const GlobalOptions& global) {
  struct Opts {
    BenchmarkConfig cfg;
    TimingConfig timing;
    std::string scenarios = "scenario1,scenario2";
    std::string methods = "lau92,lau94,minlau,condmc,logrank";
    std::string resampling = "subsample,bootstrap";
    std::string output = "-";
    std::string timing_output;
    bool skip_timing = false;
  };
  auto opt = std::make_shared<Opts>();
  auto* cmd = app.add_subcommand("benchmark", "Cross-validated IBS per method and scenario, plus p-value timing");
  cmd->add_option("--scenarios", opt->scenarios, "Comma list of scenario1,scenario2");
  cmd->add_option("--n", opt->cfg.n, "Observations per dataset")->check(CLI::Range(10, 100000000));
  cmd->add_option("--replications", opt->cfg.replications)->check(CLI::PositiveNumber);
  cmd->add_option("--folds", opt->cfg.folds)->check(CLI::Range(2, 1000000));
  cmd->add_option("--num-trees", opt->cfg.num_trees)->check(CLI::PositiveNumber);
  cmd->add_option("--mtry", opt->cfg.mtry, "0 means p/2");
  cmd->add_option("--minprop", opt->cfg.minprop)->check(CLI::Range(0.0, 0.4999999));
  cmd->add_option("--n-permutations", opt->cfg.n_permutations)->check(CLI::PositiveNumber);
  cmd->add_option("--methods", opt->methods, "Comma list of lau92,lau94,minlau,condmc,logrank");
  cmd->add_option("--resampling", opt->resampling, "Comma list of subsample,bootstrap");
  cmd->add_option("--tune-seed", opt->cfg.tune_seed, "Seed for the tuning cross-validation");
  cmd->add_option("--final-seed", opt->cfg.final_seed, "Seed for the final cross-validation");
  cmd->add_option("--output,-o", opt->output, "Per-fold IBS CSV; '-' for stdout");
  cmd->add_option("--timing-output", opt->timing_output, "Per-node timing CSV (default: none)");
  cmd->add_option("--timing-reps", opt->timing.repetitions)->check(CLI::Range(30, 1000000));
  cmd->add_flag("--skip-timing", opt->skip_timing, "Do not run the timing sweep");
  cmd->callback([opt, &global] {
    BenchmarkConfig cfg = opt->cfg;
    cfg.methods = parse_methods(opt->methods);
    cfg.resampling = parse_resampling(opt->resampling);
    cfg.data_seed = global.seed;
    cfg.threads = global.threads;
    std::vector<BenchmarkRow> rows;
    for (const auto& s : split_list(opt->scenarios)) {
      auto scenario = parse_scenario(s);
      if (!scenario || *scenario == Scenario::null_model) {
        throw CLI::ValidationError("--scenarios", "unknown benchmark scenario '" + s + "'");
      }
      cfg.scenario = *scenario;
      auto part = run_benchmark(cfg);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    {
      Output out(opt->output);
      write_benchmark_csv(out.stream(), rows);
    }
    if (!opt->skip_timing && !opt->timing_output.empty()) {
      TimingConfig timing = opt->timing;
      timing.seed = global.seed;
      timing.n_permutations = cfg.n_permutations;
      timing.minprop = cfg.minprop;
      Output out(opt->timing_output);
      write_timing_csv(out.stream(), run_timing(timing));
    }
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random survival forests with maximally selected rank statistics"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions global;
  app.add_option("--threads", global.threads, "Worker threads (0 = all cores)");
  app.add_option("--seed", global.seed, "Random seed");

  add_train(app, global);
  add_predict(app, global);
  add_simulate(app, global);
  add_bias_study(app, global);
  add_benchmark(app, global);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
