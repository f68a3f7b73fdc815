#pragma once

// Forest persistence as a JSON document tagged with a format version.
// Doubles are written in shortest round-trip form, so save -> load is exact.

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "msrf/forest.hpp"

namespace msrf {

inline constexpr const char* kModelFormat = "msrf-forest/1";

inline nlohmann::json params_to_json(const ForestParams& p) {
  return {
      {"num_trees", p.num_trees},
      {"mtry", p.mtry},
      {"min_node_size", p.min_node_size},
      {"minprop", p.minprop},
      {"alpha", p.alpha},
      {"pvalue_method", std::string(to_string(p.pvalue_method))},
      {"splitter", std::string(to_string(p.splitter))},
      {"replace", p.replace},
      {"sample_fraction", p.sample_fraction},
      {"seed", p.seed},
      {"n_permutations", p.n_permutations},
      {"bh_divisor", std::string(to_string(p.bh_divisor))},
      {"max_depth", p.max_depth},
  };
}

inline ForestParams params_from_json(const nlohmann::json& j) {
  ForestParams p;
  p.num_trees = j.at("num_trees").get<std::size_t>();
  p.mtry = j.at("mtry").get<std::size_t>();
  p.min_node_size = j.at("min_node_size").get<std::size_t>();
  p.minprop = j.at("minprop").get<double>();
  p.alpha = j.at("alpha").get<double>();
  auto method = parse_pvalue_method(j.at("pvalue_method").get<std::string>());
  auto splitter = parse_splitter(j.at("splitter").get<std::string>());
  auto divisor = parse_bh_divisor(j.at("bh_divisor").get<std::string>());
  if (!method || !splitter || !divisor) throw std::runtime_error("model file: unknown enumeration value in params");
  p.pvalue_method = *method;
  p.splitter = *splitter;
  p.bh_divisor = *divisor;
  p.replace = j.at("replace").get<bool>();
  p.sample_fraction = j.at("sample_fraction").get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.n_permutations = j.at("n_permutations").get<std::size_t>();
  p.max_depth = j.at("max_depth").get<std::size_t>();
  return p;
}

inline nlohmann::json forest_to_json(const SurvivalForest& forest) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : forest.trees()) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& node : tree.nodes()) {
      if (node.terminal()) {
        nodes.push_back({{"jump_times", node.curve.jump_times()}, {"values", node.curve.values()}});
      } else {
        nodes.push_back({{"split_var", node.split_var},
                         {"split_value", node.split_value},
                         {"left", node.left},
                         {"right", node.right}});
      }
    }
    trees.push_back({{"in_bag", tree.in_bag_counts()}, {"nodes", std::move(nodes)}});
  }
  return {{"format", kModelFormat},
          {"params", params_to_json(forest.params())},
          {"covariate_names", forest.covariate_names()},
          {"time_grid", forest.time_grid()},
          {"trees", std::move(trees)}};
}

inline SurvivalForest forest_from_json(const nlohmann::json& j) {
  if (!j.contains("format") || j.at("format") != kModelFormat) {
    throw std::runtime_error(std::string("model file: expected format tag ") + kModelFormat);
  }
  auto params = params_from_json(j.at("params"));
  auto names = j.at("covariate_names").get<std::vector<std::string>>();
  auto grid = j.at("time_grid").get<std::vector<double>>();
  std::vector<SurvivalTree> trees;
  for (const auto& jt : j.at("trees")) {
    std::vector<TreeNode> nodes;
    const auto& jn = jt.at("nodes");
    for (const auto& n : jn) {
      TreeNode node;
      if (n.contains("split_var")) {
        node.split_var = n.at("split_var").get<std::int64_t>();
        node.split_value = n.at("split_value").get<double>();
        node.left = n.at("left").get<std::uint32_t>();
        node.right = n.at("right").get<std::uint32_t>();
        if (node.split_var < 0 || static_cast<std::size_t>(node.split_var) >= names.size() ||
            node.left >= jn.size() || node.right >= jn.size()) {
          throw std::runtime_error("model file: node references out of range");
        }
      } else {
        node.curve = StepFunction(n.at("jump_times").get<std::vector<double>>(),
                                  n.at("values").get<std::vector<double>>(), 1.0);
      }
      nodes.push_back(std::move(node));
    }
    if (nodes.empty()) throw std::runtime_error("model file: tree without nodes");
    trees.emplace_back(std::move(nodes), jt.at("in_bag").get<std::vector<std::uint32_t>>());
  }
  return SurvivalForest(params, std::move(names), std::move(grid), std::move(trees));
}

inline void save_forest(const SurvivalForest& forest, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << forest_to_json(forest).dump() << '\n';
  if (!out) throw std::runtime_error("failed writing " + path);
}

inline SurvivalForest load_forest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("model file " + path + " is not valid JSON: " + e.what());
  }
  return forest_from_json(j);
}

}  // namespace msrf
