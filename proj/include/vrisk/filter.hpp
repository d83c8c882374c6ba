// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

// Pearson correlation matrices and the sliding-window redundancy filter over
// an importance rank.

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vrisk/factors.hpp"
#include "vrisk/shap.hpp"

namespace vrisk {

enum class CorrelationScope : std::uint8_t { kWithinCategory, kGlobal };
const char* to_string(CorrelationScope s);
CorrelationScope parse_correlation_scope(const std::string& s);

// Pearson correlation; 0 when either series is constant.
double pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationMatrix {
  std::vector<std::string> ids;
  CorrelationScope scope = CorrelationScope::kWithinCategory;
  std::vector<double> r;  // row-major, ids.size() squared

  std::size_t size() const { return ids.size(); }
  double operator()(std::size_t i, std::size_t j) const { return r[i * ids.size() + j]; }
};

// Pairwise Pearson over the dataset columns. Under kWithinCategory, pairs in
// different scope groups are stored as 0.
CorrelationMatrix correlation_matrix(const LabeledDataset& data, CorrelationScope scope);

void write_correlation_csv(const CorrelationMatrix& m, const std::filesystem::path& path);

struct FilterConfig {
  double r_tau = 0.2;
  int window = 15;  // includes the anchor
  CorrelationScope scope = CorrelationScope::kWithinCategory;
  bool use_absolute = true;

  void validate() const;
};

struct FilterRound {
  int round = 0;  // 1-based
  std::string anchor;
  std::vector<std::string> window;  // followers examined, in rank order
  std::vector<double> r;            // correlation of each follower with the anchor
  std::vector<std::string> removed;
};

struct FilterResult {
  ImportanceRank filtered;
  std::vector<FilterRound> trace;
};

// Single pass: each retained factor, in rank order, becomes the anchor once
// and removes the followers within window-1 positions of the current rank
// whose correlation with it exceeds r_tau. Rank entries index the matrix.
FilterResult sliding_filter(const ImportanceRank& rank, const CorrelationMatrix& corr, const FilterConfig& config);

nlohmann::json to_json(const FilterConfig& c);
FilterConfig filter_config_from_json(const nlohmann::json& j, FilterConfig defaults = {});
nlohmann::json to_json(const FilterResult& r);

}  // namespace vrisk
