// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <set>

#include "test_util.hpp"
#include "vrisk/csv.hpp"
#include "vrisk/parallel.hpp"

namespace vrisk {
namespace {

TEST(Date, EpochAndRoundTrip) {
  EXPECT_EQ(Date::from_ymd(1970, 1, 1).days, 0);
  EXPECT_EQ(Date::from_ymd(2020, 3, 1).to_string(), "2020-03-01");
  EXPECT_EQ(parse_date("2020-02-29"), Date::from_ymd(2020, 2, 29));
  EXPECT_EQ(Date::from_ymd(2021, 12, 31).year(), 2021);
  for (int d = -1000; d < 30000; d += 37) EXPECT_EQ(parse_date(Date{d}.to_string()).days, d);
}

TEST(Date, RejectsMalformedText) {
  for (const char* bad : {"2021-02-29", "2020-13-01", "2020-1-01", "20200101", "2020-01-01T00:00", "", "abcd-ef-gh"}) {
    try {
      parse_date(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kParse) << bad;
    }
  }
}

TEST(DateRange, HalfOpen) {
  const DateRange r{testing::d(2020, 1, 1), testing::d(2020, 1, 11)};
  EXPECT_EQ(r.days(), 10);
  EXPECT_TRUE(r.contains(r.start));
  EXPECT_FALSE(r.contains(r.end));
  EXPECT_TRUE((DateRange{r.start, r.start}.empty()));
  const auto i = intersect(r, DateRange{testing::d(2020, 1, 5), testing::d(2021, 1, 1)});
  EXPECT_EQ(i.start, testing::d(2020, 1, 5));
  EXPECT_EQ(i.end, r.end);
  EXPECT_TRUE(intersect(r, DateRange{testing::d(2022, 1, 1), testing::d(2023, 1, 1)}).empty());
  EXPECT_EQ(calendar_year(2020).days(), 366);
}

TEST(Seeds, DerivationIsStableAndSpreads) {
  static_assert(derive_seed(1, 2) == derive_seed(1, 2));
  std::set<std::uint64_t> seen;
  for (std::uint64_t master = 0; master < 20; ++master)
    for (std::uint64_t s = 0; s < 20; ++s) seen.insert(derive_seed(master, s));
  EXPECT_EQ(seen.size(), 400u);
  EXPECT_EQ(derive_seed(3, 4, 5), derive_seed(derive_seed(3, 4), 5));
}

TEST(Csv, QuotedFieldsAndLineNumbers) {
  testing::TempDir dir("csv");
  const auto path = dir.path() / "x.csv";
  {
    csv::Writer w(path);
    w.row({"a", "b"});
    w.row({"1", "has,comma"});
    w.row({"2", "has \"quote\""});
    w.close();
  }
  csv::Reader r(path);
  EXPECT_EQ(r.column("b"), 1u);
  std::vector<std::string> f;
  ASSERT_TRUE(r.next(f));
  EXPECT_EQ(f[1], "has,comma");
  ASSERT_TRUE(r.next(f));
  EXPECT_EQ(f[1], "has \"quote\"");
  EXPECT_EQ(r.line(), 3u);
  try {
    r.parse_int(f, 1);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos) << e.what();
  }
  EXPECT_FALSE(r.next(f));
}

TEST(Csv, FormatDoubleRoundTrips) {
  for (double v : {0.0, 1.0, -2.5, 0.1, 1e-300, 123456789.123456789, 2.0 / 3.0}) {
    EXPECT_EQ(std::stod(csv::format_double(v)), v);
  }
}

TEST(Parallel, CoversEveryIndexOnce) {
  for (unsigned w : {1u, 3u}) {
    set_worker_count(w);
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) EXPECT_EQ(h, 1);
  }
  set_worker_count(0);
}

}  // namespace
}  // namespace vrisk
