// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

// Candidate risk factors: the catalog of (category, measure, format)
// descriptors, the arithmetic that evaluates them against an EventStore, and
// the labeled sample matrix built from (vessel, datestamp) pairs.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vrisk/common.hpp"
#include "vrisk/events.hpp"

namespace vrisk {

enum class PrimaryCategory : std::uint8_t {
  kIncidents,
  kPscDeficiencies,
  kDetentions,
  kSailing,
  kDocPerformance,
  kFlagPerformance,
  kProfile,
};
inline constexpr std::size_t kPrimaryCategoryCount = 7;

enum class Measure : std::uint8_t {
  kIncidentsA,
  kIncidentsB,
  kIncidentsC,
  kSeverity,
  kDeficiencies,
  kDetentions,
  kSailingDistance,
  kSailingDays,
  kAvgDailyDistance,
  kDocAvgSeverity,
  kDocAvgDeficiencies,
  kDocAvgDetentions,
  kDocTotalSeverity,
  kDocTotalDeficiencies,
  kDocTotalDetentions,
  kRedFlags,
  kPf1,
  kPf2,
  kPf3,
  kPf4,
  kPf5,
  kPf6,
  kPf7,
  kPf8,
};
inline constexpr std::size_t kMeasureCount = 24;

PrimaryCategory category_of(Measure m);
bool is_profile(Measure m);
// Additive measures satisfy value(window) = sum of value(sub-windows).
// Ratio measures (averages) do not.
bool is_additive(Measure m);

const char* category_name(PrimaryCategory c);  // "PSC deficiencies"
const char* category_slug(PrimaryCategory c);  // "psc"
const char* measure_slug(Measure m);           // "deficiencies"

enum class FormatKind : std::uint8_t { kNone, kAnnual, kCumulative, kDecayedCumulative };

struct FactorFormat {
  FormatKind kind = FormatKind::kNone;
  int years = 0;  // past-year index k for Annual, window length n otherwise
  auto operator<=>(const FactorFormat&) const = default;
};

struct FactorDescriptor {
  std::string id;
  Measure measure = Measure::kPf1;
  FactorFormat format;
  // Non-zero for planted copies of another factor (test harnesses only).
  int copy = 0;

  PrimaryCategory category() const { return category_of(measure); }
  // Correlation scoping group: the primary category, except DOC performance
  // which splits into its incident / deficiency / detention sub-groups.
  std::string scope_group() const;
  // Human-readable description, e.g. "Decayed sum of PSC deficiencies in the
  // past two years".
  std::string description() const;
};

// Canonical id "<category>.<measure>[.<format>][#copy]", e.g. "psc.deficiencies.dcum2".
std::string make_factor_id(Measure m, FactorFormat f, int copy = 0);
FactorDescriptor parse_factor_id(const std::string& id);

struct DecaySchedule {
  std::array<double, 5> weights{5, 4, 3, 3, 2};
  void validate() const;
};

struct SeverityWeights {
  double a = 6;
  double b = 2;
  double c = 1;
  void validate() const;
};

struct LabelThresholds {
  double high = 3;  // {0} Low, (0, high) Medium, [high, inf) High
  void validate() const;
};

enum class RiskLevel : std::uint8_t { kLow = 0, kMedium = 1, kHigh = 2 };
inline constexpr int kRiskLevelCount = 3;
const char* to_string(RiskLevel r);

// Which formats the catalog builder enumerates per non-profile measure.
struct CatalogSpec {
  std::vector<Measure> measures;  // empty = every measure
  std::vector<int> annual_years{1, 2, 3, 4, 5};
  std::vector<int> cumulative_years{1, 2, 3, 4, 5};
  std::vector<int> decayed_years{2, 3, 4, 5};
};

struct FactorCatalog {
  std::vector<FactorDescriptor> factors;
  DecaySchedule decay;
  SeverityWeights severity;

  std::size_t size() const { return factors.size(); }
  std::optional<std::size_t> index_of(const std::string& id) const;
  std::vector<std::string> ids() const;
  // Throws kInvariant on duplicate ids.
  void validate() const;
};

FactorCatalog build_catalog(const CatalogSpec& spec = {}, const DecaySchedule& decay = {},
                            const SeverityWeights& severity = {});

// ---------------------------------------------------------------------------
// Factor arithmetic

// sum_{i=1..n} k_i * M_i with annual_values[i-1] = M_i. Requires 1 <= n <= 5
// and n <= annual_values.size().
double decayed_cumulative(std::span<const double> annual_values, const DecaySchedule& schedule, int n);

double severity_sum(std::int64_t count_a, std::int64_t count_b, std::int64_t count_c, const SeverityWeights& w);

// Duration-weighted mean number of member vessels over `window`, from the
// entity's membership intervals. Throws kCoverage when no member overlaps.
double fleet_size(std::span<const MembershipInterval> members, DateRange window);

// sum over the vessel's membership segments inside `window` of
// (segment_days / window_days) * metric(entity, segment). Throws kCoverage,
// naming the first uncovered sub-window, if the memberships leave a gap.
double entity_weighted_metric(const EventStore& store, const std::string& vessel, DateRange window, EntityKind kind,
                              const std::function<double(const std::string& entity, DateRange segment)>& metric);

struct SailingSummary {
  double cumulative_distance = 0;
  std::int64_t sailing_days = 0;
  double avg_daily = 0;  // 0 when sailing_days == 0
  auto operator<=>(const SailingSummary&) const = default;
};
SailingSummary sailing_factors(const EventStore& store, const std::string& vessel, DateRange window);

// Throws kInvalidArgument for negative or non-finite severity.
RiskLevel grade_label(double severity, const LabelThresholds& thresholds = {});

// Past k-th year relative to a datestamp: [d - k*365, d - (k-1)*365).
DateRange past_year(Date datestamp, int k);
// The n most recent 365-day years: [d - n*365, d).
DateRange past_years(Date datestamp, int n);

// Value of one measure over one window for a vessel (no format applied).
double measure_value(const EventStore& store, const std::string& vessel, Measure m, DateRange window,
                     const SeverityWeights& severity);

// Every catalog factor for (vessel, datestamp), in catalog order.
std::vector<double> evaluate_factors(const EventStore& store, const FactorCatalog& catalog, const std::string& vessel,
                                     Date datestamp);

// ---------------------------------------------------------------------------
// Labeled dataset

struct SampleKey {
  std::string vessel_id;
  Date datestamp;
  auto operator<=>(const SampleKey&) const = default;
};

// A synthetic row's origin: row = parent + u * (neighbor - parent), indices
// into the dataset the sample was synthesized from.
struct Provenance {
  std::size_t parent = 0;
  std::size_t neighbor = 0;
  double u = 0;
};

struct AssemblyStats {
  std::size_t candidates = 0;       // (vessel, datestamp) pairs considered
  std::size_t coverage_gaps = 0;    // dropped: DOC/flag membership gap
  std::size_t non_finite = 0;       // dropped: non-finite factor value
  std::size_t constant_factors = 0; // removed by the zero-variance screen
};

// Row-major sample matrix with risk labels. Synthetic rows (from
// resampling) carry provenance; `provenance` is indexed by row and empty
// for original rows.
struct LabeledDataset {
  FactorCatalog catalog;
  std::vector<SampleKey> keys;
  std::vector<double> values;
  std::vector<int> labels;
  std::vector<std::uint8_t> synthetic;
  std::vector<std::optional<Provenance>> provenance;
  AssemblyStats stats;

  std::size_t n_samples() const { return labels.size(); }
  std::size_t n_factors() const { return catalog.size(); }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * n_factors(), n_factors()}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * n_factors(), n_factors()}; }
  double at(std::size_t i, std::size_t j) const { return values[i * n_factors() + j]; }
  std::vector<double> column(std::size_t j) const;
  std::array<std::size_t, kRiskLevelCount> class_counts() const;

  void push_back(SampleKey key, std::span<const double> row, int label, bool is_synthetic = false,
                 std::optional<Provenance> prov = std::nullopt);
  LabeledDataset select_rows(std::span<const std::size_t> rows) const;
  LabeledDataset select_factors(std::span<const std::size_t> factors) const;
  // Checks shapes, label range and finiteness. Throws kInvariant.
  void validate() const;
};

struct AssemblyOptions {
  int factor_years = 5;
  int label_years = 1;
  LabelThresholds thresholds;
};

// One sample per (vessel, datestamp). Pairs whose factor window is not fully
// covered by DOC/flag memberships, or that yield non-finite values, are
// dropped and counted. Output order: datestamp, then vessel id.
LabeledDataset assemble_dataset(const EventStore& store, const FactorCatalog& catalog,
                                std::span<const Date> datestamps, const AssemblyOptions& options = {});

// Removes factors whose column is constant over the dataset.
LabeledDataset drop_constant_factors(const LabeledDataset& data);

// CSV: vessel_id, datestamp, <factor ids...>, label[, synthetic].
void write_dataset_csv(const LabeledDataset& data, const std::filesystem::path& path);
LabeledDataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace vrisk
