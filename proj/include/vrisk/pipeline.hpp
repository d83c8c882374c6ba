// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

// Stage orchestration over an output directory. Every stage reads its inputs
// from the directory (or from memory when an earlier stage of the same
// Pipeline produced them) and writes versioned artifacts back.

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vrisk/events.hpp"
#include "vrisk/factors.hpp"
#include "vrisk/filter.hpp"
#include "vrisk/forest.hpp"
#include "vrisk/resample.hpp"
#include "vrisk/select.hpp"
#include "vrisk/synth.hpp"
#include <json.hpp>

namespace vrisk {

struct InputConfig {
  StorePaths paths;
  std::optional<DateRange> span;
};

struct CatalogConfig {
  CatalogSpec spec;
  DecaySchedule decay;
  SeverityWeights severity;
  AssemblyOptions assembly;
  std::vector<Date> datestamps;  // empty: taken from the synth spec
};

struct RunConfig {
  std::optional<InputConfig> inputs;
  std::optional<SynthConfig> synth;
  CatalogConfig catalog;
  ResampleConfig resample;
  ForestConfig forest;  // dataset-level model, also the per-fold ranker in nested mode
  std::size_t explain_samples = 1000;
  std::size_t beeswarm_factors = 20;
  FilterConfig filter;
  GridSpec grid;
  CvConfig cv;
  PipelineMode mode = PipelineMode::kFaithful;
  std::uint64_t seed = 0;

  // Input files must exist; inputs and synth are mutually exclusive.
  void validate() const;
  // Copy whose stage seeds are derived from `seed`.
  RunConfig with_stage_seeds() const;
  RankConfig rank_config() const;
};

// Relative input paths resolve against base_dir. Stage configs may not carry
// their own seed.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const RunConfig& c);

enum class Stage : std::uint8_t {
  kIngest,
  kBuildDataset,
  kResample,
  kTrain,
  kRank,
  kFilter,
  kSearch,
  kSelect,
  kBaseline,
  kSynth,
  kRunAll,
  kReport,
};
const char* to_string(Stage s);
Stage parse_stage(const std::string& s);

class Pipeline {
 public:
  Pipeline(RunConfig config, std::filesystem::path out_dir, bool force = false);
  ~Pipeline();
  Pipeline(Pipeline&&) noexcept;
  Pipeline& operator=(Pipeline&&) noexcept;

  // Runs one stage (run-all runs every stage) and returns a short summary.
  // Refuses to overwrite existing outputs unless constructed with force.
  nlohmann::json run(Stage stage);

  const RunConfig& config() const { return config_; }
  const std::filesystem::path& out_dir() const { return out_; }

 private:
  struct State;

  RunConfig config_;
  std::filesystem::path out_;
  bool force_ = false;
  std::unique_ptr<State> state_;
};

// Report payload assembled from the artifacts of a completed run; contains no
// timings.
nlohmann::json report_payload(const std::filesystem::path& out_dir, const RunConfig& config);

// Markdown table: rank, factor, category, description, importance.
std::string key_factor_markdown(const std::vector<RankEntry>& factors);

}  // namespace vrisk
