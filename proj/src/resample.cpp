// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

#include "vrisk/resample.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vrisk/parallel.hpp"

namespace vrisk {

namespace {

constexpr std::uint64_t kSmoteStream = 0x5307E;
constexpr std::uint64_t kUndersampleStream = 0x0DE5;

double squared_distance(const double* a, const double* b, std::size_t m, double bound) {
  double s = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const double d = a[j] - b[j];
    s += d * d;
    if (s > bound) return s;
  }
  return s;
}

}  // namespace

Standardizer Standardizer::fit(const LabeledDataset& data) {
  require(data.n_samples() > 0, "cannot standardize an empty dataset");
  const std::size_t m = data.n_factors(), n = data.n_samples();
  Standardizer z;
  z.mean.assign(m, 0.0);
  z.scale.assign(m, 1.0);
  for (std::size_t j = 0; j < m; ++j) {
    double mean = 0;
    for (std::size_t i = 0; i < n; ++i) mean += data.at(i, j);
    mean /= static_cast<double>(n);
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) ss += (data.at(i, j) - mean) * (data.at(i, j) - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    z.mean[j] = mean;
    z.scale[j] = sd > 0 ? sd : 1.0;
  }
  return z;
}

void Standardizer::apply(std::span<const double> x, std::span<double> out) const {
  require(x.size() == mean.size() && out.size() == mean.size(), "standardizer width mismatch");
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / scale[j];
}

std::vector<double> Standardizer::transform(const LabeledDataset& data) const {
  std::vector<double> out(data.values.size());
  const std::size_t m = data.n_factors();
  for (std::size_t i = 0; i < data.n_samples(); ++i) apply(data.row(i), std::span<double>(out.data() + i * m, m));
  return out;
}

void ResampleConfig::validate() const {
  require(k_neighbors >= 1, "k_neighbors must be >= 1");
  if (target_counts) {
    for (auto c : *target_counts) require(c > 0, "target counts must be positive");
  } else {
    for (double r : target_ratio) require(r > 0 && std::isfinite(r), "target ratios must be positive");
  }
  require(max_oversample_ratio >= 1, "max_oversample_ratio must be >= 1");
}

ClassCounts resolve_targets(const ClassCounts& counts, const ResampleConfig& cfg) {
  cfg.validate();
  if (cfg.target_counts) return *cfg.target_counts;
  const auto largest = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  double scale = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (c != largest) scale = std::max(scale, static_cast<double>(counts[c]) / cfg.target_ratio[c]);
  }
  if (scale == 0) scale = static_cast<double>(counts[largest]) / cfg.target_ratio[largest];
  ClassCounts t{};
  for (std::size_t c = 0; c < counts.size(); ++c) {
    t[c] = counts[c] == 0 ? 0
                          : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(scale * cfg.target_ratio[c])));
  }
  return t;
}

LabeledDataset smote(const LabeledDataset& data, int cls, std::size_t n_synthetic, int k, std::uint64_t seed,
                     std::vector<std::string>* warnings) {
  return smote(data, Standardizer::fit(data), cls, n_synthetic, k, seed, warnings);
}

LabeledDataset smote(const LabeledDataset& data, const Standardizer& z, int cls, std::size_t n_synthetic, int k,
                     std::uint64_t seed, std::vector<std::string>* warnings) {
  require(k >= 1, "k_neighbors must be >= 1");
  LabeledDataset out;
  out.catalog = data.catalog;
  if (n_synthetic == 0) return out;

  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < data.n_samples(); ++i) {
    if (data.labels[i] == cls) members.push_back(i);
  }
  if (members.size() < 2) {
    fail(ErrorKind::kInvalidArgument, "SMOTE needs at least 2 samples of class " +
                                          std::string(to_string(static_cast<RiskLevel>(cls))) + ", found " +
                                          std::to_string(members.size()));
  }
  if (static_cast<std::size_t>(k) > members.size() - 1) {
    const int clamped = static_cast<int>(members.size() - 1);
    if (warnings) {
      warnings->push_back("class " + std::string(to_string(static_cast<RiskLevel>(cls))) + " has " +
                          std::to_string(members.size()) + " samples; k_neighbors clamped from " +
                          std::to_string(k) + " to " + std::to_string(clamped));
    }
    k = clamped;
  }

  const std::size_t m = data.n_factors(), nc = members.size();
  std::vector<double> zs(nc * m);
  for (std::size_t a = 0; a < nc; ++a) z.apply(data.row(members[a]), std::span<double>(zs.data() + a * m, m));

  // k nearest same-class neighbors of each member, by (distance, index).
  const auto kk = static_cast<std::size_t>(k);
  std::vector<std::size_t> knn(nc * kk);
  parallel_for(nc, [&](std::size_t a) {
    std::vector<std::pair<double, std::size_t>> best;
    best.reserve(kk + 1);
    for (std::size_t b = 0; b < nc; ++b) {
      if (b == a) continue;
      const double bound = best.size() == kk ? best.back().first : std::numeric_limits<double>::infinity();
      const double d = squared_distance(zs.data() + a * m, zs.data() + b * m, m, bound);
      if (best.size() == kk && !(d < bound)) continue;
      best.insert(std::upper_bound(best.begin(), best.end(), std::make_pair(d, b)), {d, b});
      if (best.size() > kk) best.pop_back();
    }
    for (std::size_t t = 0; t < kk; ++t) knn[a * kk + t] = best[t].second;
  });

  out.values.resize(n_synthetic * m);
  out.keys.resize(n_synthetic);
  out.labels.assign(n_synthetic, cls);
  out.synthetic.assign(n_synthetic, 1);
  out.provenance.resize(n_synthetic);
  const std::uint64_t base = derive_seed(seed, kSmoteStream, static_cast<std::uint64_t>(cls));
  parallel_for(n_synthetic, [&](std::size_t s) {
    Rng rng(derive_seed(base, s));
    const std::size_t a = uniform_index(rng, nc);
    const std::size_t b = knn[a * kk + uniform_index(rng, kk)];
    const double u = uniform01(rng);
    const auto p = data.row(members[a]);
    const auto q = data.row(members[b]);
    double* dst = out.values.data() + s * m;
    for (std::size_t j = 0; j < m; ++j) dst[j] = p[j] + u * (q[j] - p[j]);
    out.keys[s] = data.keys[members[a]];
    out.provenance[s] = Provenance{members[a], members[b], u};
  });
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> tomek_links(const LabeledDataset& data) {
  return tomek_links(data, Standardizer::fit(data));
}

std::vector<std::pair<std::size_t, std::size_t>> tomek_links(const LabeledDataset& data, const Standardizer& z) {
  const std::size_t n = data.n_samples(), m = data.n_factors();
  if (n < 2) return {};
  const auto zs = z.transform(data);
  std::vector<std::size_t> nn(n);
  parallel_for(n, [&](std::size_t a) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = a;
    for (std::size_t b = 0; b < n; ++b) {
      if (b == a) continue;
      const double d = squared_distance(zs.data() + a * m, zs.data() + b * m, m, best);
      if (d < best) {
        best = d;
        arg = b;
      }
    }
    nn[a] = arg;
  });
  std::vector<std::pair<std::size_t, std::size_t>> links;
  for (std::size_t a = 0; a < n; ++a) {
    const std::size_t b = nn[a];
    if (a < b && nn[b] == a && data.labels[a] != data.labels[b]) links.emplace_back(a, b);
  }
  return links;
}

ResampledDataset smote_tomek(const LabeledDataset& data, const ResampleConfig& cfg) {
  cfg.validate();
  require(data.n_samples() > 0, "cannot resample an empty dataset");
  ResampledDataset out;
  auto& rep = out.report;
  rep.original = data.class_counts();
  const int present = static_cast<int>(std::count_if(rep.original.begin(), rep.original.end(),
                                                     [](std::size_t c) { return c > 0; }));
  require(present >= 2, "resampling needs at least two classes present");
  rep.targets = resolve_targets(rep.original, cfg);

  for (std::size_t c = 0; c < rep.original.size(); ++c) {
    if (rep.targets[c] > rep.original[c]) {
      const double cap = cfg.max_oversample_ratio * static_cast<double>(rep.original[c]);
      if (rep.original[c] == 0 || static_cast<double>(rep.targets[c]) > cap) {
        fail(ErrorKind::kInvalidArgument,
             "infeasible resampling target for class " + std::string(to_string(static_cast<RiskLevel>(c))) + ": " +
                 std::to_string(rep.targets[c]) + " from " + std::to_string(rep.original[c]) +
                 " samples exceeds max_oversample_ratio " + std::to_string(cfg.max_oversample_ratio));
      }
    }
  }

  // Random undersampling of classes above target, keeping original order.
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < rep.original.size(); ++c) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < data.n_samples(); ++i) {
      if (static_cast<std::size_t>(data.labels[i]) == c) rows.push_back(i);
    }
    if (cfg.undersample_majority && rows.size() > rep.targets[c]) {
      Rng rng(derive_seed(cfg.seed, kUndersampleStream, c));
      for (std::size_t i = 0; i < rep.targets[c]; ++i) std::swap(rows[i], rows[i + uniform_index(rng, rows.size() - i)]);
      rows.resize(rep.targets[c]);
    }
    rep.after_undersample[c] = rows.size();
    keep.insert(keep.end(), rows.begin(), rows.end());
  }
  std::sort(keep.begin(), keep.end());

  const Standardizer z = Standardizer::fit(data);
  LabeledDataset combined = data.select_rows(keep);
  for (std::size_t c = 0; c < rep.original.size(); ++c) {
    rep.k_used[c] = cfg.k_neighbors;
    if (rep.targets[c] <= rep.after_undersample[c]) continue;
    const std::size_t need = rep.targets[c] - rep.after_undersample[c];
    rep.k_used[c] = std::min<int>(cfg.k_neighbors, static_cast<int>(rep.original[c]) - 1);
    const auto syn = smote(data, z, static_cast<int>(c), need, cfg.k_neighbors, cfg.seed, &rep.warnings);
    for (std::size_t s = 0; s < syn.n_samples(); ++s) {
      combined.push_back(syn.keys[s], syn.row(s), syn.labels[s], true, syn.provenance[s]);
    }
    rep.synthesized[c] = need;
  }

  const auto pre = combined.class_counts();
  const auto links = tomek_links(combined, z);
  rep.tomek_links = links.size();
  std::vector<std::uint8_t> drop(combined.n_samples(), 0);
  for (auto [a, b] : links) {
    const auto la = static_cast<std::size_t>(combined.labels[a]), lb = static_cast<std::size_t>(combined.labels[b]);
    // Larger class loses its member; on equal sizes the lower class index does.
    const bool drop_a = pre[la] > pre[lb] || (pre[la] == pre[lb] && la < lb);
    drop[drop_a ? a : b] = 1;
  }
  std::vector<std::size_t> retained;
  for (std::size_t i = 0; i < combined.n_samples(); ++i) {
    if (drop[i]) ++rep.tomek_removed[static_cast<std::size_t>(combined.labels[i])];
    else retained.push_back(i);
  }
  out.data = combined.select_rows(retained);
  out.data.stats = data.stats;
  rep.final_counts = out.data.class_counts();
  return out;
}

nlohmann::json to_json(const ResampleConfig& c) {
  nlohmann::json j{{"k_neighbors", c.k_neighbors},
                   {"target_ratio", c.target_ratio},
                   {"undersample_majority", c.undersample_majority},
                   {"max_oversample_ratio", c.max_oversample_ratio},
                   {"seed", c.seed}};
  j["target_counts"] = c.target_counts ? nlohmann::json(*c.target_counts) : nlohmann::json(nullptr);
  return j;
}

ResampleConfig resample_config_from_json(const nlohmann::json& j, ResampleConfig c) {
  if (j.is_null()) return c;
  require(j.is_object(), "resample config must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k == "k_neighbors") c.k_neighbors = it->get<int>();
    else if (k == "target_counts") {
      if (it->is_null()) c.target_counts.reset();
      else c.target_counts = it->get<ClassCounts>();
    } else if (k == "target_ratio") c.target_ratio = it->get<std::array<double, kRiskLevelCount>>();
    else if (k == "undersample_majority") c.undersample_majority = it->get<bool>();
    else if (k == "max_oversample_ratio") c.max_oversample_ratio = it->get<double>();
    else if (k == "seed") c.seed = it->get<std::uint64_t>();
    else fail(ErrorKind::kInvalidArgument, "unknown resample config key '" + k + "'");
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const ResampleReport& r) {
  return {{"original", r.original},
          {"targets", r.targets},
          {"after_undersample", r.after_undersample},
          {"synthesized", r.synthesized},
          {"tomek_links", r.tomek_links},
          {"tomek_removed", r.tomek_removed},
          {"final", r.final_counts},
          {"k_used", r.k_used},
          {"warnings", r.warnings}};
}

}  // namespace vrisk
