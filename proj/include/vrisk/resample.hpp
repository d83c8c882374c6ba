// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

// Class rebalancing: random undersampling, SMOTE oversampling and Tomek-link
// cleaning on z-score standardized factors.

#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vrisk/factors.hpp"
#include <json.hpp>

namespace vrisk {

using ClassCounts = std::array<std::size_t, kRiskLevelCount>;

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // standard deviation, 1 for constant columns

  static Standardizer fit(const LabeledDataset& data);
  void apply(std::span<const double> x, std::span<double> out) const;
  // Standardized copy of the whole matrix, row-major.
  std::vector<double> transform(const LabeledDataset& data) const;
};

struct ResampleConfig {
  int k_neighbors = 5;
  // Explicit per-class targets; when absent, targets follow target_ratio.
  std::optional<ClassCounts> target_counts;
  std::array<double, kRiskLevelCount> target_ratio{9500, 5104, 1445};
  bool undersample_majority = true;
  // A class may grow to at most this multiple of its original size.
  double max_oversample_ratio = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

// Per-class targets. Ratio targets are scaled so that no class below the
// largest one shrinks: scale = max over those classes of count / ratio.
// Absent classes get a target of 0.
ClassCounts resolve_targets(const ClassCounts& counts, const ResampleConfig& config);

struct ResampleReport {
  ClassCounts original{};
  ClassCounts targets{};
  ClassCounts after_undersample{};
  ClassCounts synthesized{};
  ClassCounts tomek_removed{};
  ClassCounts final_counts{};
  std::array<int, kRiskLevelCount> k_used{};
  std::size_t tomek_links = 0;
  std::vector<std::string> warnings;
};

// Synthetic rows carry provenance indices into the input dataset.
struct ResampledDataset {
  LabeledDataset data;
  ResampleReport report;
};

// n_synthetic new rows of class `cls`. Each row interpolates a uniformly
// chosen class member toward one of its k nearest same-class neighbors.
// Provenance indices refer to `data`. k is clamped to class size - 1.
LabeledDataset smote(const LabeledDataset& data, int cls, std::size_t n_synthetic, int k, std::uint64_t seed,
                     std::vector<std::string>* warnings = nullptr);
LabeledDataset smote(const LabeledDataset& data, const Standardizer& z, int cls, std::size_t n_synthetic, int k,
                     std::uint64_t seed, std::vector<std::string>* warnings = nullptr);

// Unordered mutual 1-NN pairs (a < b) with different labels. Nearest-neighbor
// ties go to the lowest index.
std::vector<std::pair<std::size_t, std::size_t>> tomek_links(const LabeledDataset& data);
std::vector<std::pair<std::size_t, std::size_t>> tomek_links(const LabeledDataset& data, const Standardizer& z);

// Undersample classes above target, SMOTE classes below target, then drop the
// member of each Tomek link that belongs to the larger class.
ResampledDataset smote_tomek(const LabeledDataset& data, const ResampleConfig& config);

nlohmann::json to_json(const ResampleConfig& c);
ResampleConfig resample_config_from_json(const nlohmann::json& j, ResampleConfig defaults = {});
nlohmann::json to_json(const ResampleReport& r);

}  // namespace vrisk
