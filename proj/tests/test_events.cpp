// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>

#include "test_util.hpp"
#include "vrisk/events.hpp"

namespace vrisk {
namespace {

using testing::d;

VesselProfile profile(const std::string& id) {
  VesselProfile p;
  p.vessel_id = id;
  p.values = {1000, 1100, 10, 8, 900, 90, 95, 500};
  return p;
}

// Checks pairwise disjointness the slow way.
bool intervals_overlap(std::vector<MembershipInterval> v) {
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j)
      if (v[i].vessel_id == v[j].vessel_id && v[i].kind == v[j].kind && v[i].start < v[j].end &&
          v[j].start < v[i].end)
        return true;
  return false;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

StorePaths write_empty_files(const std::filesystem::path& dir) {
  write_file(dir / "incidents.csv", "vessel_id,date,category\n");
  write_file(dir / "deficiencies.csv", "vessel_id,date,count\n");
  write_file(dir / "detentions.csv", "vessel_id,date\n");
  write_file(dir / "sailing.csv", "vessel_id,date,distance\n");
  write_file(dir / "membership.csv", "vessel_id,kind,entity_id,start,end\n");
  write_file(dir / "flag_demerits.csv", "flag_id,year,red_flags\n");
  write_file(dir / "profiles.csv",
             "vessel_id,dwt,max_dwt,depth,draught,gross_tonnage,length_bp,length_oa,net_tonnage\n");
  return StorePaths::in_directory(dir);
}

TEST(EventStore, EmptyFilesGiveEmptyStore) {
  testing::TempDir dir("events_empty");
  const auto store = load_store(write_empty_files(dir.path()));
  EXPECT_TRUE(store.vessel_ids().empty());
  for (auto n : store.report().rows) EXPECT_EQ(n, 0u);
  EXPECT_TRUE(store.span().empty());
}

TEST(EventStore, SingleIncidentRoundTrip) {
  RawRecords r;
  r.profiles.push_back(profile("V1"));
  r.incidents.push_back({"V1", d(2020, 3, 1), IncidentCategory::kA});
  const auto store = EventStore::build(r);
  const auto hits = store.incidents("V1", {d(2020, 1, 1), d(2021, 1, 1)});
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].category, IncidentCategory::kA);
  EXPECT_EQ(hits[0].date, d(2020, 3, 1));
  EXPECT_EQ(store.report().rows[static_cast<int>(RecordKind::kIncident)], 1u);
}

TEST(EventStore, OverlappingDocIntervalsRejected) {
  RawRecords r;
  r.profiles.push_back(profile("V1"));
  r.memberships.push_back({"V1", EntityKind::kDoc, "D1", d(2019, 1, 1), d(2020, 1, 1)});
  r.memberships.push_back({"V1", EntityKind::kDoc, "D2", d(2019, 6, 1), d(2021, 1, 1)});
  ASSERT_TRUE(intervals_overlap(r.memberships));
  try {
    EventStore::build(r);
    FAIL() << "overlap accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvariant);
    EXPECT_NE(std::string(e.what()).find("overlap"), std::string::npos);
  }
}

TEST(EventStore, AdjacentIntervalsAndOtherKindAccepted) {
  RawRecords r;
  r.profiles.push_back(profile("V1"));
  r.memberships.push_back({"V1", EntityKind::kDoc, "D1", d(2019, 1, 1), d(2020, 1, 1)});
  r.memberships.push_back({"V1", EntityKind::kDoc, "D2", d(2020, 1, 1), d(2021, 1, 1)});
  r.memberships.push_back({"V1", EntityKind::kFlag, "F1", d(2019, 6, 1), d(2021, 1, 1)});
  ASSERT_FALSE(intervals_overlap(r.memberships));
  const auto store = EventStore::build(r);
  EXPECT_EQ(store.entity_at("V1", EntityKind::kDoc, d(2019, 12, 31)), "D1");
  EXPECT_EQ(store.entity_at("V1", EntityKind::kDoc, d(2020, 1, 1)), "D2");
  EXPECT_FALSE(store.entity_at("V1", EntityKind::kDoc, d(2021, 1, 1)).has_value());
  EXPECT_FALSE(store.entity_at("V1", EntityKind::kFlag, d(2019, 1, 1)).has_value());
  EXPECT_EQ(store.members_of(EntityKind::kDoc, "D2").size(), 1u);
}

TEST(EventStore, InvalidRecordsRejected) {
  {
    RawRecords r;
    r.profiles.push_back(profile("V1"));
    r.deficiencies.push_back({"V1", d(2020, 1, 1), -1});
    EXPECT_THROW(EventStore::build(r), Error);
  }
  {
    RawRecords r;
    r.profiles.push_back(profile("V1"));
    r.sailing.push_back({"V1", d(2020, 1, 1), 3});
    r.sailing.push_back({"V1", d(2020, 1, 1), 4});
    EXPECT_THROW(EventStore::build(r), Error);
  }
  {
    RawRecords r;
    r.flag_demerits.push_back({"F", 2020, 1});
    r.flag_demerits.push_back({"F", 2020, 2});
    EXPECT_THROW(EventStore::build(r), Error);
  }
  {
    RawRecords r;
    r.profiles.push_back(profile("V1"));
    r.incidents.push_back({"V1", d(2030, 1, 1), IncidentCategory::kC});
    EXPECT_THROW(EventStore::build(r, DateRange{d(2019, 1, 1), d(2021, 1, 1)}), Error);
  }
}

TEST(EventStore, AbnormalProfileDropsVessel) {
  RawRecords r;
  r.profiles.push_back(profile("V1"));
  auto bad = profile("V2");
  bad.values[3] = 0;
  r.profiles.push_back(bad);
  r.incidents.push_back({"V2", d(2020, 1, 1), IncidentCategory::kA});
  r.incidents.push_back({"V3", d(2020, 1, 1), IncidentCategory::kA});  // no profile at all
  const auto store = EventStore::build(r);
  EXPECT_EQ(store.vessel_ids(), std::vector<std::string>{"V1"});
  EXPECT_EQ(store.report().rejected_vessels, (std::vector<std::string>{"V2", "V3"}));
  EXPECT_EQ(store.report().dropped_rows, 2u);
  EXPECT_FALSE(store.has_vessel("V2"));
  EXPECT_THROW(store.incidents("V2", {d(2020, 1, 1), d(2021, 1, 1)}), Error);
}

TEST(QueryWindow, HalfOpenBoundaries) {
  RawRecords r;
  r.profiles.push_back(profile("V1"));
  r.detentions.push_back({"V1", d(2020, 1, 1)});
  r.detentions.push_back({"V1", d(2020, 2, 1)});
  const auto store = EventStore::build(r);
  EXPECT_TRUE(store.detentions("V1", {d(2019, 1, 1), d(2019, 12, 31)}).empty());
  const auto hits = store.detentions("V1", {d(2020, 1, 1), d(2020, 2, 1)});
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].date, d(2020, 1, 1));
}

TEST(QueryWindow, MatchesLinearScanAndSplitsAdditively) {
  Rng rng(11);
  RawRecords r;
  for (int v = 0; v < 5; ++v) r.profiles.push_back(profile("V" + std::to_string(v)));
  const Date base = d(2015, 1, 1);
  for (int i = 0; i < 400; ++i) {
    r.deficiencies.push_back({"V" + std::to_string(uniform_index(rng, 5)),
                              base + static_cast<std::int32_t>(uniform_index(rng, 2000)),
                              static_cast<std::int64_t>(uniform_index(rng, 6))});
  }
  const auto all = r.deficiencies;
  const auto store = EventStore::build(r);
  for (int trial = 0; trial < 200; ++trial) {
    const std::string v = "V" + std::to_string(uniform_index(rng, 5));
    std::int32_t a = static_cast<std::int32_t>(uniform_index(rng, 2100)) - 50;
    std::int32_t b = a + static_cast<std::int32_t>(uniform_index(rng, 600));
    std::int32_t c = b + static_cast<std::int32_t>(uniform_index(rng, 600));
    const DateRange ac{base + a, base + c};
    std::vector<DeficiencyRecord> scan;
    for (const auto& rec : all)
      if (rec.vessel_id == v && ac.contains(rec.date)) scan.push_back(rec);
    std::sort(scan.begin(), scan.end());
    const auto got = store.deficiencies(v, ac);
    std::vector<DeficiencyRecord> got_v(got.begin(), got.end());
    std::sort(got_v.begin(), got_v.end());
    EXPECT_EQ(got_v, scan);

    auto left = store.deficiencies(v, {base + a, base + b});
    auto right = store.deficiencies(v, {base + b, base + c});
    std::vector<DeficiencyRecord> joined(left.begin(), left.end());
    joined.insert(joined.end(), right.begin(), right.end());
    std::sort(joined.begin(), joined.end());
    EXPECT_EQ(joined, scan);
  }
}

TEST(EventStore, SailingTotalsUsePrefixSums) {
  RawRecords r;
  r.profiles.push_back(profile("V1"));
  r.sailing.push_back({"V1", d(2020, 1, 1), 10});
  r.sailing.push_back({"V1", d(2020, 1, 2), 0});
  r.sailing.push_back({"V1", d(2020, 1, 3), 20});
  const auto store = EventStore::build(r);
  const auto [dist, days] = store.sailing_totals("V1", {d(2020, 1, 1), d(2020, 1, 4)});
  EXPECT_DOUBLE_EQ(dist, 30);
  EXPECT_EQ(days, 2);
  const auto [d2, n2] = store.sailing_totals("V1", {d(2020, 1, 2), d(2020, 1, 3)});
  EXPECT_DOUBLE_EQ(d2, 0);
  EXPECT_EQ(n2, 0);
}

TEST(EventStore, WriteThenLoadRoundTrip) {
  RawRecords r;
  for (int v = 0; v < 3; ++v) r.profiles.push_back(profile("V" + std::to_string(v)));
  r.incidents = {{"V0", d(2019, 5, 5), IncidentCategory::kB}, {"V2", d(2020, 1, 1), IncidentCategory::kC}};
  r.deficiencies = {{"V1", d(2019, 3, 3), 4}, {"V1", d(2019, 3, 4), 0}};
  r.detentions = {{"V1", d(2019, 3, 3)}};
  r.sailing = {{"V0", d(2019, 1, 1), 12.5}, {"V0", d(2019, 1, 2), 0.25}};
  r.memberships = {{"V0", EntityKind::kDoc, "D1", d(2018, 1, 1), d(2021, 1, 1)},
                   {"V0", EntityKind::kFlag, "F,1", d(2018, 1, 1), d(2021, 1, 1)}};
  r.flag_demerits = {{"F,1", 2019, 3}};
  testing::TempDir dir("events_rt");
  write_records(r, dir.path());
  const auto store = load_store(StorePaths::in_directory(dir.path()));
  const auto back = store.records();
  auto sorted = [](auto v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  EXPECT_EQ(sorted(back.incidents), sorted(r.incidents));
  EXPECT_EQ(sorted(back.deficiencies), sorted(r.deficiencies));
  EXPECT_EQ(sorted(back.detentions), sorted(r.detentions));
  EXPECT_EQ(sorted(back.sailing), sorted(r.sailing));
  EXPECT_EQ(sorted(back.memberships), sorted(r.memberships));
  EXPECT_EQ(sorted(back.flag_demerits), sorted(r.flag_demerits));
  EXPECT_EQ(sorted(back.profiles), sorted(r.profiles));
  EXPECT_EQ(store.red_flags("F,1", 2019), 3);
  EXPECT_FALSE(store.red_flags("F,1", 2020).has_value());
}

TEST(ReadRecords, ParseErrorsNameFileAndLine) {
  testing::TempDir dir("events_parse");
  auto paths = write_empty_files(dir.path());
  write_file(dir.path() / "incidents.csv", "vessel_id,date,category\nV1,2020-01-01,A\nV1,2020-13-01,B\n");
  try {
    read_records(paths);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("incidents.csv"), std::string::npos) << msg;
    EXPECT_NE(msg.find(":3"), std::string::npos) << msg;
  }
  write_file(dir.path() / "incidents.csv", "vessel_id,date,category\nV1,2020-01-01,D\n");
  EXPECT_THROW(read_records(paths), Error);
  write_file(dir.path() / "incidents.csv", "vessel_id,date\n");
  EXPECT_THROW(read_records(paths), Error);
}

TEST(ReadRecords, AbsentPathMeansNoRecords) {
  testing::TempDir dir("events_absent");
  write_empty_files(dir.path());
  StorePaths p;
  p.profiles = dir.path() / "profiles.csv";
  const auto r = read_records(p);
  EXPECT_TRUE(r.incidents.empty());
  EXPECT_TRUE(r.profiles.empty());
}

}  // namespace
}  // namespace vrisk
