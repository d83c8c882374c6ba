// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "filter_oracle.hpp"
#include "test_util.hpp"
#include "vrisk/csv.hpp"
#include "vrisk/filter.hpp"

namespace vrisk {
namespace {

using testing::numbered_matrix;
using testing::numbered_rank;

TEST(Pearson, HandValues) {
  const std::vector<double> a = {1, 2, 3}, b = {3, 2, 1}, c = {1, 2, 4};
  EXPECT_NEAR(pearson(a, a), 1.0, 1e-15);
  EXPECT_NEAR(pearson(a, b), -1.0, 1e-15);
  // Co-deviation sums: 3, 2 and 42/9.
  const double r = 3.0 / std::sqrt(2.0 * (42.0 / 9.0));
  EXPECT_NEAR(pearson(a, c), r, 1e-12);
  EXPECT_NEAR(pearson(a, c), 0.98198, 1e-5);
  EXPECT_EQ(pearson(a, std::vector<double>{5, 5, 5}), 0.0);
  EXPECT_THROW(pearson(a, std::vector<double>{1, 2}), Error);
}

LabeledDataset dataset_with_ids(const std::vector<std::string>& ids, const std::vector<std::vector<double>>& cols) {
  LabeledDataset d;
  for (const auto& id : ids) d.catalog.factors.push_back(parse_factor_id(id));
  for (std::size_t i = 0; i < cols[0].size(); ++i) {
    std::vector<double> row;
    for (const auto& c : cols) row.push_back(c[i]);
    d.push_back({"v" + std::to_string(i), Date{0}}, row, static_cast<int>(i % 3));
  }
  return d;
}

TEST(CorrelationMatrix, HandDatasetAndScoping) {
  const std::vector<double> x = {1, 2, 3, 4, 5}, y = {2, 1, 4, 3, 6}, z = {5, 3, 4, 1, 2};
  const auto d = dataset_with_ids({"psc.deficiencies.y1", "psc.deficiencies.y2", "profile.pf1", "psc.deficiencies.y3"},
                                  {x, y, x, x});
  const auto m = correlation_matrix(d, CorrelationScope::kWithinCategory);
  EXPECT_EQ(m.size(), 4u);
  EXPECT_NEAR(m(0, 1), pearson(x, y), 1e-15);
  EXPECT_NEAR(m(0, 3), 1.0, 1e-12);   // duplicated column, same group
  EXPECT_EQ(m(0, 2), 0.0);            // identical data, different group
  EXPECT_EQ(m(2, 1), 0.0);
  EXPECT_NEAR(m(1, 1), 1.0, 1e-12);
  const auto g = correlation_matrix(d, CorrelationScope::kGlobal);
  EXPECT_NEAR(g(0, 2), 1.0, 1e-12);

  const auto three = dataset_with_ids({"sailing.days.y1", "sailing.days.y2", "sailing.days.y3"}, {x, y, z});
  const auto t = correlation_matrix(three, CorrelationScope::kWithinCategory);
  EXPECT_NEAR(t(0, 1), pearson(x, y), 1e-15);
  EXPECT_NEAR(t(0, 2), pearson(x, z), 1e-15);
  EXPECT_NEAR(t(1, 2), pearson(y, z), 1e-15);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b) EXPECT_EQ(t(a, b), t(b, a));
}

TEST(CorrelationMatrix, CsvExport) {
  const auto d = dataset_with_ids({"sailing.days.y1", "sailing.days.y2"}, {{1, 2, 3}, {1, 3, 2}});
  testing::TempDir dir("corr");
  write_correlation_csv(correlation_matrix(d, CorrelationScope::kWithinCategory), dir.path() / "c.csv");
  csv::Reader r(dir.path() / "c.csv");
  EXPECT_EQ(r.header().size(), 3u);
  std::vector<std::string> f;
  ASSERT_TRUE(r.next(f));
  EXPECT_EQ(f[0], "sailing.days.y1");
  EXPECT_DOUBLE_EQ(std::stod(f[2]), 0.5);
}

TEST(SlidingFilter, TwoOverThresholdFollowersInWindowSix) {
  const auto rank = numbered_rank(10);
  const auto corr = numbered_matrix(10, {{{1, 2}, 0.5}, {{1, 3}, -0.6}, {{1, 8}, 0.9}, {{4, 5}, 0.1}});
  FilterConfig cfg;
  cfg.window = 6;
  cfg.r_tau = 0.2;
  const auto res = sliding_filter(rank, corr, cfg);
  ASSERT_GE(res.trace.size(), 2u);
  EXPECT_EQ(res.trace[0].anchor, "F1");
  EXPECT_EQ(res.trace[0].window, (std::vector<std::string>{"F2", "F3", "F4", "F5", "F6"}));
  EXPECT_EQ(res.trace[0].removed, (std::vector<std::string>{"F2", "F3"}));
  EXPECT_EQ(res.trace[1].anchor, "F4");
  // F8 was outside F1's window and survives.
  EXPECT_EQ(res.filtered.ids(), (std::vector<std::string>{"F1", "F4", "F5", "F6", "F7", "F8", "F9", "F10"}));
  EXPECT_EQ(testing::replay_trace(rank, corr, cfg, res), "");
}

TEST(SlidingFilter, ZeroCorrelationIsNoOp) {
  const auto rank = numbered_rank(12);
  const auto res = sliding_filter(rank, numbered_matrix(12, {}), FilterConfig{});
  EXPECT_EQ(res.filtered.ids(), rank.ids());
  for (const auto& r : res.trace) EXPECT_TRUE(r.removed.empty());
}

TEST(SlidingFilter, SinglePassLeavesLateNeighborOfClosedAnchor) {
  // Round 1 (F1) drops F2, F3; round 2 (F4) drops F5, F6, pulling F7 to
  // within two places of F1 after F1's round has closed.
  const auto rank = numbered_rank(8);
  const auto corr = numbered_matrix(8, {{{1, 2}, 0.9}, {{1, 3}, 0.9}, {{4, 5}, 0.9}, {{4, 6}, 0.9}, {{1, 7}, 0.95}});
  FilterConfig cfg;
  cfg.window = 3;
  cfg.r_tau = 0.5;
  const auto res = sliding_filter(rank, corr, cfg);
  EXPECT_EQ(res.filtered.ids(), (std::vector<std::string>{"F1", "F4", "F7", "F8"}));
  EXPECT_EQ(testing::replay_trace(rank, corr, cfg, res), "");
  // Not idempotent: a second pass removes F7.
  const auto again = sliding_filter(res.filtered, corr, cfg);
  EXPECT_EQ(again.filtered.ids(), (std::vector<std::string>{"F1", "F4", "F8"}));
}

TEST(SlidingFilter, ReplayOracleOnRandomInstances) {
  Rng rng(77);
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = 2 + uniform_index(rng, 40);
    const auto corr = testing::random_matrix(n, rng);
    auto rank = numbered_rank(n);
    std::shuffle(rank.entries.begin(), rank.entries.end(), rng);
    FilterConfig cfg;
    cfg.window = 2 + static_cast<int>(uniform_index(rng, 12));
    cfg.r_tau = 0.1 + 0.1 * static_cast<double>(uniform_index(rng, 7));
    cfg.use_absolute = uniform_index(rng, 4) != 0;
    const auto res = sliding_filter(rank, corr, cfg);
    EXPECT_EQ(testing::replay_trace(rank, corr, cfg, res), "") << "instance " << inst;
    // Subsequence of the input, first factor kept.
    EXPECT_EQ(res.filtered.entries.front().id, rank.entries.front().id);
    std::size_t k = 0;
    for (const auto& e : rank.entries)
      if (k < res.filtered.size() && res.filtered.entries[k].id == e.id) ++k;
    EXPECT_EQ(k, res.filtered.size());
  }
}

TEST(SlidingFilter, FirstRoundRemovalsShrinkAsTauGrows) {
  Rng rng(78);
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = 5 + uniform_index(rng, 30);
    const auto corr = testing::random_matrix(n, rng);
    const auto rank = numbered_rank(n);
    FilterConfig cfg;
    cfg.window = 2 + static_cast<int>(uniform_index(rng, 20));
    std::set<std::string> prev;
    bool first = true;
    for (double tau = 0.1; tau <= 1.0; tau += 0.1) {
      cfg.r_tau = tau;
      const auto res = sliding_filter(rank, corr, cfg);
      const std::set<std::string> removed(res.trace[0].removed.begin(), res.trace[0].removed.end());
      if (!first) {
        EXPECT_TRUE(std::includes(prev.begin(), prev.end(), removed.begin(), removed.end()));
      }
      prev = removed;
      first = false;
    }
  }
}

TEST(SlidingFilter, TauOneRemovesOnlyPerfectCorrelation) {
  const auto rank = numbered_rank(6);
  FilterConfig cfg;
  cfg.r_tau = 1.0;
  cfg.window = 6;
  const auto none = sliding_filter(rank, numbered_matrix(6, {{{1, 2}, 0.999999}, {{3, 4}, -0.99}}), cfg);
  EXPECT_EQ(none.filtered.ids(), rank.ids());
  const auto exact = sliding_filter(rank, numbered_matrix(6, {{{1, 2}, 1.0 + 1e-13}}), cfg);
  EXPECT_EQ(exact.filtered.size(), 5u);
}

TEST(SlidingFilter, SignedReadingKeepsNegativePartners) {
  const auto rank = numbered_rank(3);
  const auto corr = numbered_matrix(3, {{{1, 2}, -0.9}, {{1, 3}, 0.9}});
  FilterConfig cfg;
  cfg.use_absolute = false;
  EXPECT_EQ(sliding_filter(rank, corr, cfg).filtered.ids(), (std::vector<std::string>{"F1", "F2"}));
  cfg.use_absolute = true;
  EXPECT_EQ(sliding_filter(rank, corr, cfg).filtered.ids(), (std::vector<std::string>{"F1"}));
}

TEST(FilterConfig, Validation) {
  FilterConfig c;
  c.window = 1;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.r_tau = 0;
  EXPECT_THROW(c.validate(), Error);
  c.r_tau = 1.5;
  EXPECT_THROW(c.validate(), Error);
  const auto j = to_json(FilterConfig{});
  const auto back = filter_config_from_json(j);
  EXPECT_EQ(back.window, 15);
  EXPECT_EQ(back.r_tau, 0.2);
  EXPECT_THROW(filter_config_from_json(nlohmann::json{{"tau", 0.3}}), Error);
}

}  // namespace
}  // namespace vrisk
