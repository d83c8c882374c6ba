// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

// Random-forest classifier grown with CART/Gini splits. Every node keeps its
// training cover (bootstrap-weighted sample count), which path-dependent
// TreeSHAP uses as the background distribution.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vrisk/factors.hpp"
#include <json.hpp>

namespace vrisk {

// Non-owning row-major matrix.
struct MatrixView {
  const double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::span<const double> row(std::size_t i) const { return {data + i * cols, cols}; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  static MatrixView of(const LabeledDataset& d) { return {d.values.data(), d.n_samples(), d.n_factors()}; }
};

struct ForestConfig {
  int n_trees = 500;
  int max_depth = 16;  // 0 = unlimited
  int min_samples_leaf = 5;
  int mtry = 0;  // 0 = ceil(sqrt(n_features))
  bool bootstrap = true;
  std::uint64_t seed = 0;

  void validate() const;
  int resolved_mtry(std::size_t n_features) const;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  double cover = 0;
  std::vector<double> distribution;  // leaves only; sums to 1

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  std::size_t leaf_for(std::span<const double> x) const;
  int depth() const;
};

struct RandomForestModel {
  std::vector<DecisionTree> trees;
  int n_classes = 0;
  std::size_t n_features = 0;
  ForestConfig config;
  std::vector<std::string> feature_ids;  // optional, for serialization

  // Mean of per-tree leaf distributions. Throws on dimension mismatch or
  // non-finite input.
  std::vector<double> predict_proba(std::span<const double> x) const;
  // argmax of predict_proba, lowest class index on ties.
  int predict(std::span<const double> x) const;
  void validate() const;
};

// 1 - sum (c_i / N)^2. Throws when all counts are zero.
double gini_impurity(std::span<const double> class_counts);

RandomForestModel fit_forest(MatrixView x, std::span<const int> labels, int n_classes, const ForestConfig& config);
RandomForestModel fit_forest(const LabeledDataset& data, const ForestConfig& config);

// Versioned JSON document with nested nodes and the embedded config.
nlohmann::json forest_to_json(const RandomForestModel& model);
RandomForestModel forest_from_json(const nlohmann::json& doc);
void save_forest(const RandomForestModel& model, const std::filesystem::path& path);
RandomForestModel load_forest(const std::filesystem::path& path);

nlohmann::json to_json(const ForestConfig& c);
ForestConfig forest_config_from_json(const nlohmann::json& j, ForestConfig defaults = {});

}  // namespace vrisk
