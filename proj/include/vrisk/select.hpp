// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

// Cross-validated evaluation, importance ranking, the filter-parameter grid
// search, top-n key-factor selection and the unfiltered baseline.

#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vrisk/filter.hpp"
#include "vrisk/forest.hpp"
#include "vrisk/resample.hpp"
#include "vrisk/shap.hpp"

namespace vrisk {

// One-against-all metrics with support-weighted aggregates.
struct MetricSet {
  double accuracy = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double auc = 0;  // over classes with a defined AUC; 0 if none
  std::array<double, kRiskLevelCount> class_precision{};
  std::array<double, kRiskLevelCount> class_recall{};
  std::array<double, kRiskLevelCount> class_f1{};
  std::array<std::optional<double>, kRiskLevelCount> class_auc{};  // empty when undefined
  std::array<std::size_t, kRiskLevelCount> support{};
  std::vector<std::string> warnings;
};

// Rank-statistic ROC AUC with ties counted as one half. Empty when either
// side is empty.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::uint8_t> positive);

// proba is row-major, n x kRiskLevelCount.
MetricSet compute_metrics(std::span<const int> y_true, std::span<const int> y_pred, std::span<const double> proba);

// Fold id per sample. Each class is shuffled and dealt round-robin, the deal
// continuing where the previous class stopped.
std::vector<int> stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed);

struct MetricSummary {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0, auc = 0;
};

struct CvResult {
  MetricSummary mean;
  MetricSummary stdev;  // sample standard deviation over folds
  std::vector<MetricSet> folds;
};

// Weighted F1, then AUC.
bool better_score(const MetricSummary& a, const MetricSummary& b);

enum class PipelineMode : std::uint8_t { kFaithful, kNested };
const char* to_string(PipelineMode m);
PipelineMode parse_pipeline_mode(const std::string& s);

struct CvConfig {
  int folds = 5;
  std::uint64_t seed = 0;
  int max_n = 0;  // cap on the top-n loop; 0 = whole rank
  ForestConfig forest;

  void validate() const;
};

struct RankConfig {
  ForestConfig forest;
  std::size_t explain_samples = 0;  // rows explained by SHAP; 0 = all
  std::uint64_t seed = 0;
};

struct RankOutput {
  RandomForestModel model;
  ShapMatrix shap;
  std::vector<std::size_t> explained_rows;
  ImportanceRank rank;
  std::array<ImportanceRank, kRiskLevelCount> class_ranks;
};

// Sorted seeded subsample of k row indices out of n; every row when k is 0 or
// at least n.
std::vector<std::size_t> explain_rows(std::size_t n, std::size_t k, std::uint64_t seed);

// Fits a forest on `data` and ranks factors by mean |SHAP| over a seeded row
// subsample.
RankOutput rank_factors(const LabeledDataset& data, const RankConfig& config);
// Ranking with an already fitted model; config.forest is unused.
RankOutput rank_with_model(RandomForestModel model, const LabeledDataset& data, const RankConfig& config);

// Fold-wise evaluator with a cache keyed by (fold, sorted factor subset).
//
// Faithful: folds split `data` as given (already resampled).
// Nested: folds split the original data; each training part is resampled,
// ranked and correlated on its own, and validation uses original rows only.
class CrossValidator {
 public:
  static CrossValidator faithful(LabeledDataset data, const CvConfig& cv);
  static CrossValidator nested(LabeledDataset original, const CvConfig& cv, const ResampleConfig& resample,
                               const RankConfig& rank, CorrelationScope scope);

  PipelineMode mode() const { return mode_; }
  int folds() const { return cv_.folds; }
  const CvConfig& config() const { return cv_; }
  std::size_t n_factors() const { return data_.n_factors(); }
  const std::vector<std::string>& factor_ids() const { return ids_; }
  // Nested mode only.
  const ImportanceRank& fold_rank(int fold) const;
  const CorrelationMatrix& fold_correlation(int fold) const;

  MetricSet evaluate_fold(int fold, std::vector<std::size_t> subset);
  CvResult evaluate(std::span<const std::size_t> subset);
  // Per-fold subsets (nested selection).
  CvResult evaluate(const std::vector<std::vector<std::size_t>>& fold_subsets);

  std::size_t cache_size() const { return cache_.size(); }
  std::size_t fits() const { return fits_; }

 private:
  struct Fold {
    LabeledDataset train;
    LabeledDataset valid;
    std::optional<ImportanceRank> rank;
    std::optional<CorrelationMatrix> corr;
  };

  PipelineMode mode_ = PipelineMode::kFaithful;
  CvConfig cv_;
  LabeledDataset data_;
  std::vector<std::string> ids_;
  std::vector<Fold> folds_;
  std::map<std::pair<int, std::vector<std::size_t>>, MetricSet> cache_;
  std::size_t fits_ = 0;
};

CvResult evaluate_cv(const LabeledDataset& data, std::span<const std::size_t> subset, const CvConfig& cv);

struct NPoint {
  int n = 0;
  CvResult cv;
};

struct TopNResult {
  int n = 0;
  std::vector<std::string> key_factors;
  std::vector<NPoint> trace;
  const NPoint& best() const;
};

// Evaluates the first n factors for n = 1..N and picks the best n (smallest on
// ties). `fold_ranks` gives each fold's ordered catalog indices (all equal in
// faithful mode); N is the shortest fold rank, capped by max_n. Key factors
// are the first n of `reported`.
TopNResult top_n_selection(CrossValidator& cv, const std::vector<std::vector<std::size_t>>& fold_ranks,
                           const ImportanceRank& reported);
// Same rank for every fold.
TopNResult top_n_selection(CrossValidator& cv, const ImportanceRank& rank);

struct GridSpec {
  std::vector<double> taus{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
  std::vector<int> windows{5, 10, 15, 20, 25};
  void validate() const;
};

struct GridCell {
  double tau = 0;
  int window = 0;
  std::size_t filtered_size = 0;  // dataset-level filtered rank length
  TopNResult top;
};

struct GridResult {
  std::vector<GridCell> cells;  // tau-major order
  std::size_t best = 0;
};

// Weighted F1, then AUC, then smaller window, smaller tau, smaller n.
bool better_cell(const GridCell& a, const GridCell& b);

// For every (tau, window): filter the rank, run the top-n loop, keep the
// best n. In nested mode each fold filters its own rank and correlations.
GridResult grid_search(CrossValidator& cv, const ImportanceRank& rank, const CorrelationMatrix& corr,
                       const GridSpec& grid, const FilterConfig& base);

struct SelectionResult {
  FilterConfig filter;
  FilterResult filtered;
  TopNResult top;
  MetricSummary criterion;
};

SelectionResult select_key_factors(const GridResult& grid, const ImportanceRank& rank, const CorrelationMatrix& corr,
                                   const FilterConfig& base);

// Top-n loop on the unfiltered rank.
TopNResult conventional_baseline(CrossValidator& cv, const ImportanceRank& rank);

nlohmann::json to_json(const MetricSummary& m);
nlohmann::json to_json(const MetricSet& m);
nlohmann::json to_json(const CvResult& r);
nlohmann::json to_json(const TopNResult& r);
TopNResult top_n_from_json(const nlohmann::json& j);  // fold entries carry aggregates only
nlohmann::json to_json(const GridResult& g);
nlohmann::json to_json(const SelectionResult& s);
nlohmann::json to_json(const CvConfig& c);
CvConfig cv_config_from_json(const nlohmann::json& j, CvConfig defaults = {});
nlohmann::json to_json(const GridSpec& g);
GridSpec grid_spec_from_json(const nlohmann::json& j, GridSpec defaults = {});

// Long-form traces: tau, window, n, fold, metric, value. fold is "mean",
// "std" or a fold index.
void write_grid_trace_csv(const GridResult& g, const std::filesystem::path& path);
void write_n_trace_csv(const TopNResult& r, const std::filesystem::path& path, std::optional<double> tau,
                       std::optional<int> window);

}  // namespace vrisk
