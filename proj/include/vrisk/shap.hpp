// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

// Per-sample, per-class Shapley attributions for a random forest, computed
// exactly with path-dependent TreeSHAP, plus a subset-enumeration oracle and
// importance aggregation.

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vrisk/factors.hpp"
#include "vrisk/forest.hpp"

namespace vrisk {

// Attributions for one sample. phi is feature-major: phi[i * n_classes + c].
struct ShapVector {
  std::size_t n_features = 0;
  int n_classes = 0;
  std::vector<double> phi;
  std::vector<double> base_values;  // per class

  double at(std::size_t feature, int c) const { return phi[feature * static_cast<std::size_t>(n_classes) + c]; }
};

// values[(j * n_factors + i) * n_classes + c] = phi for sample j, factor i, class c.
struct ShapMatrix {
  std::size_t n_samples = 0;
  std::size_t n_factors = 0;
  int n_classes = 0;
  std::vector<double> values;
  std::vector<double> base_values;

  double at(std::size_t j, std::size_t i, int c) const {
    return values[(j * n_factors + i) * static_cast<std::size_t>(n_classes) + c];
  }
  double& at(std::size_t j, std::size_t i, int c) {
    return values[(j * n_factors + i) * static_cast<std::size_t>(n_classes) + c];
  }
};

// Cover-weighted mean leaf distribution over the forest (phi_0 per class).
std::vector<double> expected_value(const RandomForestModel& model);

ShapVector tree_shap(const RandomForestModel& model, std::span<const double> x);

// Direct Shapley summation over every feature subset, with features outside
// the subset marginalized by cover-weighted descent. At most 15 features.
ShapVector brute_force_shapley(const RandomForestModel& model, std::span<const double> x);

// tree_shap for every row, in parallel.
ShapMatrix explain(const RandomForestModel& model, MatrixView x);

struct RankEntry {
  std::size_t index = 0;  // catalog index
  std::string id;
  double importance = 0;
};

// Descending importance; ties keep catalog order.
struct ImportanceRank {
  std::vector<RankEntry> entries;

  std::size_t size() const { return entries.size(); }
  std::vector<std::string> ids() const;
  ImportanceRank head(std::size_t n) const;
};

// Mean |phi| over samples and classes, or over samples for one class.
std::vector<double> mean_abs_shap(const ShapMatrix& m, std::optional<int> class_index = std::nullopt);
ImportanceRank rank_by_importance(std::span<const double> importance, const std::vector<std::string>& ids);
ImportanceRank aggregate_importance(const ShapMatrix& m, const std::vector<std::string>& ids,
                                    std::optional<int> class_index = std::nullopt);

// Per primary category share of the summed importance of `factors`. When every
// importance is zero the shares fall back to factor counts.
std::array<double, kPrimaryCategoryCount> category_shares(std::span<const RankEntry> factors,
                                                          const FactorCatalog& catalog);

nlohmann::json to_json(const ImportanceRank& rank);
ImportanceRank importance_rank_from_json(const nlohmann::json& j);

// Columns: factor_id, sample_id, class, shap_value, factor_value. `rows` maps
// ShapMatrix sample j to the dataset row it explains.
void write_beeswarm_csv(const ShapMatrix& m, const LabeledDataset& data, std::span<const std::size_t> rows,
                        const std::filesystem::path& path);
// Only the listed factor columns, in the given order.
void write_beeswarm_csv(const ShapMatrix& m, const LabeledDataset& data, std::span<const std::size_t> rows,
                        std::span<const std::size_t> factors, const std::filesystem::path& path);

}  // namespace vrisk
