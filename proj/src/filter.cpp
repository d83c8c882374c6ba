// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

#include "vrisk/filter.hpp"

#include <algorithm>
#include <cmath>

#include "vrisk/csv.hpp"
#include "vrisk/parallel.hpp"

namespace vrisk {

const char* to_string(CorrelationScope s) {
  return s == CorrelationScope::kGlobal ? "global" : "within_category";
}

CorrelationScope parse_correlation_scope(const std::string& s) {
  if (s == "global") return CorrelationScope::kGlobal;
  if (s == "within_category") return CorrelationScope::kWithinCategory;
  fail(ErrorKind::kInvalidArgument, "unknown correlation scope '" + s + "' (expected within_category or global)");
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "pearson: series lengths differ");
  require(x.size() >= 2, "pearson: need at least two values");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) return 0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationMatrix correlation_matrix(const LabeledDataset& data, CorrelationScope scope) {
  require(data.n_samples() >= 2, "correlation needs at least two samples");
  const std::size_t m = data.n_factors(), n = data.n_samples();
  CorrelationMatrix out;
  out.ids = data.catalog.ids();
  out.scope = scope;
  out.r.assign(m * m, 0.0);

  // Centered columns and their norms, column-major for contiguous dots.
  std::vector<double> centered(m * n);
  std::vector<double> norm(m);
  std::vector<std::string> group(m);
  parallel_for(m, [&](std::size_t j) {
    double mean = 0;
    for (std::size_t i = 0; i < n; ++i) mean += data.at(i, j);
    mean /= static_cast<double>(n);
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = data.at(i, j) - mean;
      centered[j * n + i] = d;
      ss += d * d;
    }
    norm[j] = std::sqrt(ss);
    group[j] = data.catalog.factors[j].scope_group();
  });
  parallel_for(m, [&](std::size_t a) {
    for (std::size_t b = 0; b < m; ++b) {
      if (scope == CorrelationScope::kWithinCategory && group[a] != group[b]) continue;
      if (norm[a] == 0 || norm[b] == 0) continue;
      if (a == b) {
        out.r[a * m + b] = 1;
        continue;
      }
      const double* x = centered.data() + a * n;
      const double* y = centered.data() + b * n;
      double dot = 0;
      for (std::size_t i = 0; i < n; ++i) dot += x[i] * y[i];
      out.r[a * m + b] = std::clamp(dot / (norm[a] * norm[b]), -1.0, 1.0);
    }
  });
  // Make exact symmetry independent of summation order.
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) out.r[b * m + a] = out.r[a * m + b];
  }
  return out;
}

void write_correlation_csv(const CorrelationMatrix& m, const std::filesystem::path& path) {
  csv::Writer w(path);
  std::vector<std::string> row{"factor_id"};
  row.insert(row.end(), m.ids.begin(), m.ids.end());
  w.row(row);
  for (std::size_t i = 0; i < m.size(); ++i) {
    row.assign(1, m.ids[i]);
    for (std::size_t j = 0; j < m.size(); ++j) row.push_back(csv::format_double(m(i, j)));
    w.row(row);
  }
  w.close();
}

void FilterConfig::validate() const {
  require(r_tau > 0 && r_tau <= 1, "r_tau must be in (0, 1]");
  require(window >= 2, "window must be >= 2");
}

FilterResult sliding_filter(const ImportanceRank& rank, const CorrelationMatrix& corr, const FilterConfig& cfg) {
  cfg.validate();
  require(!rank.entries.empty(), "cannot filter an empty rank");
  for (const auto& e : rank.entries) {
    require(e.index < corr.size(), "rank entry '" + e.id + "' is outside the correlation matrix");
  }
  FilterResult out;
  std::vector<RankEntry> cur = rank.entries;
  const auto followers = static_cast<std::size_t>(cfg.window - 1);
  int round = 0;
  for (std::size_t pos = 0; pos + 1 < cur.size(); ++pos) {
    FilterRound fr;
    fr.round = ++round;
    fr.anchor = cur[pos].id;
    const std::size_t end = std::min(cur.size(), pos + 1 + followers);
    std::vector<bool> drop(end - pos - 1, false);
    for (std::size_t q = pos + 1; q < end; ++q) {
      double r = corr(cur[pos].index, cur[q].index);
      fr.window.push_back(cur[q].id);
      fr.r.push_back(r);
      if (cfg.use_absolute) r = std::abs(r);
      if (r > cfg.r_tau) {
        drop[q - pos - 1] = true;
        fr.removed.push_back(cur[q].id);
      }
    }
    std::size_t write = pos + 1;
    for (std::size_t q = pos + 1; q < cur.size(); ++q) {
      if (q < end && drop[q - pos - 1]) continue;
      if (write != q) cur[write] = std::move(cur[q]);
      ++write;
    }
    cur.resize(write);
    out.trace.push_back(std::move(fr));
  }
  out.filtered.entries = std::move(cur);
  return out;
}

nlohmann::json to_json(const FilterConfig& c) {
  return {{"r_tau", c.r_tau}, {"window", c.window}, {"scope", to_string(c.scope)}, {"use_absolute", c.use_absolute}};
}

FilterConfig filter_config_from_json(const nlohmann::json& j, FilterConfig c) {
  if (j.is_null()) return c;
  require(j.is_object(), "filter config must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k == "r_tau") c.r_tau = it->get<double>();
    else if (k == "window") c.window = it->get<int>();
    else if (k == "scope") c.scope = parse_correlation_scope(it->get<std::string>());
    else if (k == "use_absolute") c.use_absolute = it->get<bool>();
    else fail(ErrorKind::kInvalidArgument, "unknown filter config key '" + k + "'");
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const FilterResult& r) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& f : r.trace) {
    rounds.push_back({{"round", f.round}, {"anchor", f.anchor}, {"window", f.window}, {"r", f.r},
                      {"removed", f.removed}});
  }
  return {{"filtered", to_json(r.filtered)}, {"trace", std::move(rounds)}};
}

}  // namespace vrisk
