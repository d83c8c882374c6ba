// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic fleets with planted risk drivers. Incident rates after the first
// datestamp follow exp(latent), where the latent score is a linear function
// of standardized, log1p-compressed planted factor values plus noise.

#pragma once

#include <string>
#include <vector>

#include "vrisk/events.hpp"
#include "vrisk/factors.hpp"
#include <json.hpp>

namespace vrisk {

struct PlantedEffect {
  std::string factor_id;
  double coefficient = 1;
};

struct SynthConfig {
  int n_vessels = 800;
  int n_doc_companies = 60;
  int n_flags = 20;
  int n_datestamps = 3;  // one year apart; span = 5 + n_datestamps years
  Date start = Date::from_ymd(2012, 1, 1);
  std::vector<PlantedEffect> effects = default_effects();
  double noise_scale = 0.5;
  double base_incident_rate = 0.2;  // per vessel-year at latent 0
  double switch_probability = 0.2;  // per vessel, for DOC and flag separately
  std::uint64_t seed = 0;

  static std::vector<PlantedEffect> default_effects();
  void validate() const;
  int span_years() const { return 5 + n_datestamps; }
  DateRange span() const;
  std::vector<Date> datestamps() const;
};

struct LatentRecord {
  std::string vessel_id;
  Date datestamp;
  double latent = 0;
};

struct GroundTruth {
  std::vector<std::string> informative;
  std::vector<LatentRecord> latent;
};

struct SynthOutput {
  RawRecords records;
  DateRange span;
  std::vector<Date> datestamps;
  GroundTruth truth;
};

SynthOutput generate(const SynthConfig& config);

// Appends, for each id, a copy column "<id>#1" equal to the original plus
// Gaussian noise of `relative_noise` times the column's standard deviation.
LabeledDataset plant_duplicates(const LabeledDataset& data, const std::vector<std::string>& ids,
                                double relative_noise, std::uint64_t seed);

nlohmann::json to_json(const SynthConfig& c);
SynthConfig synth_config_from_json(const nlohmann::json& j, SynthConfig defaults = {});
nlohmann::json to_json(const GroundTruth& t);

}  // namespace vrisk
