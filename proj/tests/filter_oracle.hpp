// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

// Fixtures and a trace-replay oracle for the sliding-window filter.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "vrisk/common.hpp"
#include "vrisk/filter.hpp"
#include "vrisk/shap.hpp"

namespace vrisk::testing {

// Rank F1..Fn in order; entry k indexes matrix row k.
inline ImportanceRank numbered_rank(std::size_t n) {
  ImportanceRank r;
  for (std::size_t k = 0; k < n; ++k) r.entries.push_back({k, "F" + std::to_string(k + 1), double(n - k)});
  return r;
}

// Identity matrix with the given symmetric off-diagonal entries (1-based ids).
inline CorrelationMatrix numbered_matrix(std::size_t n, const std::vector<std::pair<std::pair<int, int>, double>>& r) {
  CorrelationMatrix m;
  for (std::size_t k = 0; k < n; ++k) m.ids.push_back("F" + std::to_string(k + 1));
  m.r.assign(n * n, 0.0);
  for (std::size_t k = 0; k < n; ++k) m.r[k * n + k] = 1.0;
  for (const auto& [p, v] : r) {
    m.r[(p.first - 1) * n + (p.second - 1)] = v;
    m.r[(p.second - 1) * n + (p.first - 1)] = v;
  }
  return m;
}

// Random symmetric matrix with a sprinkling of strong entries of either sign.
inline CorrelationMatrix random_matrix(std::size_t n, Rng& rng) {
  CorrelationMatrix m;
  for (std::size_t k = 0; k < n; ++k) m.ids.push_back("F" + std::to_string(k + 1));
  m.r.assign(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    m.r[a * n + a] = 1.0;
    for (std::size_t b = a + 1; b < n; ++b) {
      double v = uniform01(rng) * 0.4 - 0.2;
      if (uniform01(rng) < 0.25) v = (uniform01(rng) < 0.5 ? -1 : 1) * (0.3 + 0.7 * uniform01(rng));
      m.r[a * n + b] = m.r[b * n + a] = v;
    }
  }
  return m;
}

// Re-executes the filter from its trace, checking each round against the
// rank as it stood before that round. Returns an empty string on success.
inline std::string replay_trace(const ImportanceRank& rank, const CorrelationMatrix& corr, const FilterConfig& cfg,
                                const FilterResult& result) {
  std::vector<RankEntry> cur = rank.entries;
  std::size_t pos = 0;
  for (const auto& round : result.trace) {
    if (pos >= cur.size()) return "trace has more rounds than anchors";
    if (round.anchor != cur[pos].id) return "round " + std::to_string(round.round) + " anchor mismatch";
    const std::size_t end = std::min(cur.size(), pos + static_cast<std::size_t>(cfg.window));
    std::vector<std::string> window, removed;
    std::vector<RankEntry> next(cur.begin(), cur.begin() + static_cast<long>(pos) + 1);
    for (std::size_t q = pos + 1; q < cur.size(); ++q) {
      if (q < end) {
        window.push_back(cur[q].id);
        double r = corr(cur[pos].index, cur[q].index);
        if (cfg.use_absolute) r = std::abs(r);
        if (r > cfg.r_tau) {
          removed.push_back(cur[q].id);
          continue;
        }
      }
      next.push_back(cur[q]);
    }
    if (window != round.window) return "round " + std::to_string(round.round) + " window mismatch";
    if (removed != round.removed) return "round " + std::to_string(round.round) + " removal mismatch";
    // Round-local guarantee: no examined follower left in place exceeds tau.
    for (std::size_t q = pos + 1; q < end; ++q) {
      if (std::find(removed.begin(), removed.end(), cur[q].id) != removed.end()) continue;
      double r = corr(cur[pos].index, cur[q].index);
      if (cfg.use_absolute) r = std::abs(r);
      if (r > cfg.r_tau) return "round " + std::to_string(round.round) + " leaves a correlated follower";
    }
    cur = std::move(next);
    ++pos;
  }
  if (pos + 1 < cur.size()) return "trace ends before the last anchor";
  if (cur.size() != result.filtered.size()) return "final rank length mismatch";
  for (std::size_t k = 0; k < cur.size(); ++k)
    if (cur[k].id != result.filtered.entries[k].id) return "final rank mismatch";
  return {};
}

}  // namespace vrisk::testing
