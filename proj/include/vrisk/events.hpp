// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

// Vessel event history: incident, PSC deficiency, detention, sailing,
// DOC/flag membership, flag demerit and profile records, validated and
// indexed by vessel and date.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vrisk/common.hpp"

namespace vrisk {

enum class IncidentCategory : std::uint8_t { kA = 0, kB = 1, kC = 2 };
enum class EntityKind : std::uint8_t { kDoc = 0, kFlag = 1 };

enum class RecordKind : std::uint8_t {
  kIncident,
  kDeficiency,
  kDetention,
  kSailing,
  kMembership,
  kFlagDemerit,
  kProfile,
};
inline constexpr std::size_t kRecordKindCount = 7;

const char* to_string(IncidentCategory c);
const char* to_string(EntityKind k);
const char* to_string(RecordKind k);

struct IncidentRecord {
  std::string vessel_id;
  Date date;
  IncidentCategory category = IncidentCategory::kC;
  auto operator<=>(const IncidentRecord&) const = default;
};

struct DeficiencyRecord {
  std::string vessel_id;
  Date date;
  std::int64_t count = 0;
  auto operator<=>(const DeficiencyRecord&) const = default;
};

struct DetentionRecord {
  std::string vessel_id;
  Date date;
  auto operator<=>(const DetentionRecord&) const = default;
};

struct SailingDay {
  std::string vessel_id;
  Date date;
  double distance = 0;
  auto operator<=>(const SailingDay&) const = default;
};

struct MembershipInterval {
  std::string vessel_id;
  EntityKind kind = EntityKind::kDoc;
  std::string entity_id;
  Date start;  // inclusive
  Date end;    // exclusive
  DateRange range() const { return {start, end}; }
  auto operator<=>(const MembershipInterval&) const = default;
};

struct FlagDemeritRecord {
  std::string flag_id;
  int year = 0;
  std::int64_t red_flags = 0;
  auto operator<=>(const FlagDemeritRecord&) const = default;
};

// PF1..PF8 in this order.
inline constexpr std::array<const char*, 8> kProfileFields = {
    "dwt", "max_dwt", "depth", "draught", "gross_tonnage", "length_bp", "length_oa", "net_tonnage"};

struct VesselProfile {
  std::string vessel_id;
  std::array<double, 8> values{};
  auto operator<=>(const VesselProfile&) const = default;
};

// Flat record collections; the input to EventStore::build and the output of
// EventStore::records().
struct RawRecords {
  std::vector<IncidentRecord> incidents;
  std::vector<DeficiencyRecord> deficiencies;
  std::vector<DetentionRecord> detentions;
  std::vector<SailingDay> sailing;
  std::vector<MembershipInterval> memberships;
  std::vector<FlagDemeritRecord> flag_demerits;
  std::vector<VesselProfile> profiles;
  // Vessel ids whose profile row was present but missing/abnormal. Rows for
  // these vessels are dropped at build time.
  std::vector<std::string> invalid_profiles;
};

struct StorePaths {
  std::optional<std::filesystem::path> incidents, deficiencies, detentions, sailing, memberships, flag_demerits,
      profiles;

  // Conventional file names inside one directory.
  static StorePaths in_directory(const std::filesystem::path& dir);
};

struct LoadReport {
  std::array<std::size_t, kRecordKindCount> rows{};  // rows retained per kind
  std::vector<std::string> rejected_vessels;          // no valid profile
  std::size_t dropped_rows = 0;                       // rows of rejected vessels
};

class EventStore {
 public:
  EventStore() = default;

  // Validates and indexes. Throws kInvariant on overlapping memberships,
  // duplicate sailing days, duplicate flag-years, negative counts or
  // out-of-span dates.
  static EventStore build(RawRecords records, std::optional<DateRange> declared_span = std::nullopt);

  const LoadReport& report() const { return report_; }
  // Declared span, or the tightest range covering every dated record.
  DateRange span() const { return span_; }

  const std::vector<std::string>& vessel_ids() const { return vessel_ids_; }  // sorted
  bool has_vessel(const std::string& id) const { return index_.count(id) != 0; }
  const VesselProfile& profile(const std::string& vessel) const;

  // Records with date in `window`, in date order. Throws kNotFound for an
  // unknown vessel.
  std::span<const IncidentRecord> incidents(const std::string& vessel, DateRange window) const;
  std::span<const DeficiencyRecord> deficiencies(const std::string& vessel, DateRange window) const;
  std::span<const DetentionRecord> detentions(const std::string& vessel, DateRange window) const;
  std::span<const SailingDay> sailing(const std::string& vessel, DateRange window) const;

  // Prefix-summed sailing totals over a window: (distance, days with distance > 0).
  std::pair<double, std::int64_t> sailing_totals(const std::string& vessel, DateRange window) const;

  // Membership intervals of a vessel for one entity kind, sorted by start.
  std::span<const MembershipInterval> memberships(const std::string& vessel, EntityKind kind) const;
  // All intervals naming an entity (the entity's fleet history).
  std::span<const MembershipInterval> members_of(EntityKind kind, const std::string& entity) const;
  // Entity governing the vessel on a date, if any.
  std::optional<std::string> entity_at(const std::string& vessel, EntityKind kind, Date d) const;

  std::optional<std::int64_t> red_flags(const std::string& flag, int year) const;

  // Fleet event totals of a DOC company over a window: events of vessels
  // while they were members of the company.
  struct FleetTotals {
    std::array<double, 3> incidents{};  // categories A, B, C
    double deficiencies = 0;
    double detentions = 0;
  };
  FleetTotals doc_fleet_totals(const std::string& doc, DateRange window) const;

  RawRecords records() const;

 private:
  struct VesselData {
    VesselProfile profile;
    std::vector<IncidentRecord> incidents;
    std::vector<DeficiencyRecord> deficiencies;
    std::vector<DetentionRecord> detentions;
    std::vector<SailingDay> sailing;
    std::vector<double> sailing_distance_prefix;     // size n+1
    std::vector<std::int64_t> sailing_days_prefix;   // size n+1
    std::array<std::vector<MembershipInterval>, 2> memberships;
  };
  // Dated fleet events of one DOC company with running sums.
  struct FleetEvents {
    std::vector<Date> dates;
    // prefix[k][i] = sum of channel k over events [0, i); channels: A, B, C,
    // deficiencies, detentions.
    std::array<std::vector<double>, 5> prefix;
  };

  const VesselData& vessel(const std::string& id) const;
  void build_fleet_index();

  LoadReport report_;
  DateRange span_;
  std::vector<std::string> vessel_ids_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<VesselData> vessels_;
  std::array<std::map<std::string, std::vector<MembershipInterval>>, 2> entity_members_;
  std::map<std::string, FleetEvents> fleet_events_;
  std::map<std::pair<std::string, int>, std::int64_t> red_flags_;
};

// Reads the CSV files named in `paths`; an absent path means no records of
// that kind. Parse errors identify file, line and column.
RawRecords read_records(const StorePaths& paths);
EventStore load_store(const StorePaths& paths, std::optional<DateRange> declared_span = std::nullopt);

// Writes one CSV per kind using the conventional file names.
void write_records(const RawRecords& records, const std::filesystem::path& dir);

}  // namespace vrisk
