// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "vrisk/csv.hpp"
#include "vrisk/factors.hpp"

namespace vrisk {

std::vector<double> LabeledDataset::column(std::size_t j) const {
  std::vector<double> c(n_samples());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = at(i, j);
  return c;
}

std::array<std::size_t, kRiskLevelCount> LabeledDataset::class_counts() const {
  std::array<std::size_t, kRiskLevelCount> c{};
  for (int l : labels) ++c[static_cast<std::size_t>(l)];
  return c;
}

void LabeledDataset::push_back(SampleKey key, std::span<const double> r, int label, bool is_synthetic,
                               std::optional<Provenance> prov) {
  require(r.size() == n_factors(), "sample width does not match the catalog");
  require(label >= 0 && label < kRiskLevelCount, "label out of range");
  keys.push_back(std::move(key));
  values.insert(values.end(), r.begin(), r.end());
  labels.push_back(label);
  synthetic.push_back(is_synthetic ? 1 : 0);
  provenance.push_back(prov);
}

LabeledDataset LabeledDataset::select_rows(std::span<const std::size_t> rows) const {
  LabeledDataset out;
  out.catalog = catalog;
  out.stats = stats;
  out.values.reserve(rows.size() * n_factors());
  for (std::size_t r : rows) {
    require(r < n_samples(), "row index out of range");
    out.push_back(keys[r], row(r), labels[r], synthetic[r] != 0, provenance[r]);
  }
  return out;
}

LabeledDataset LabeledDataset::select_factors(std::span<const std::size_t> cols) const {
  LabeledDataset out;
  out.catalog.decay = catalog.decay;
  out.catalog.severity = catalog.severity;
  for (std::size_t c : cols) {
    require(c < n_factors(), "factor index out of range");
    out.catalog.factors.push_back(catalog.factors[c]);
  }
  out.keys = keys;
  out.labels = labels;
  out.synthetic = synthetic;
  out.provenance = provenance;
  out.stats = stats;
  out.values.resize(n_samples() * cols.size());
  for (std::size_t i = 0; i < n_samples(); ++i) {
    for (std::size_t k = 0; k < cols.size(); ++k) out.values[i * cols.size() + k] = at(i, cols[k]);
  }
  return out;
}

void LabeledDataset::validate() const {
  const std::size_t n = labels.size();
  if (keys.size() != n || synthetic.size() != n || provenance.size() != n || values.size() != n * n_factors()) {
    fail(ErrorKind::kInvariant, "dataset columns have inconsistent lengths");
  }
  for (int l : labels) {
    if (l < 0 || l >= kRiskLevelCount) fail(ErrorKind::kInvariant, "label out of range");
  }
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorKind::kInvariant, "dataset contains a non-finite value");
  }
}

LabeledDataset drop_constant_factors(const LabeledDataset& data) {
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < data.n_factors(); ++j) {
    bool constant = true;
    for (std::size_t i = 1; i < data.n_samples() && constant; ++i) constant = data.at(i, j) == data.at(0, j);
    if (!constant) keep.push_back(j);
  }
  LabeledDataset out = data.select_factors(keep);
  out.stats.constant_factors += data.n_factors() - keep.size();
  return out;
}

void write_dataset_csv(const LabeledDataset& data, const std::filesystem::path& path) {
  const bool any_synthetic = std::any_of(data.synthetic.begin(), data.synthetic.end(), [](auto s) { return s != 0; });
  csv::Writer w(path);
  std::vector<std::string> header{"vessel_id", "datestamp"};
  for (const auto& f : data.catalog.factors) header.push_back(f.id);
  header.push_back("label");
  if (any_synthetic) header.push_back("synthetic");
  w.row(header);
  std::vector<std::string> row;
  for (std::size_t i = 0; i < data.n_samples(); ++i) {
    row.clear();
    row.push_back(data.keys[i].vessel_id);
    row.push_back(data.keys[i].datestamp.to_string());
    for (double v : data.row(i)) row.push_back(csv::format_double(v));
    row.push_back(to_string(static_cast<RiskLevel>(data.labels[i])));
    if (any_synthetic) row.push_back(data.synthetic[i] ? "true" : "false");
    w.row(row);
  }
  w.close();
}

LabeledDataset read_dataset_csv(const std::filesystem::path& path) {
  csv::Reader r(path);
  const auto& h = r.header();
  const std::size_t cv = r.column("vessel_id"), cd = r.column("datestamp"), cl = r.column("label");
  std::optional<std::size_t> cs;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i] == "synthetic") cs = i;
  }
  LabeledDataset out;
  std::vector<std::size_t> factor_cols;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (i == cv || i == cd || i == cl || (cs && i == *cs)) continue;
    out.catalog.factors.push_back(parse_factor_id(h[i]));
    factor_cols.push_back(i);
  }
  out.catalog.validate();
  std::vector<std::string> f;
  std::vector<double> row(factor_cols.size());
  while (r.next(f)) {
    SampleKey key{f[cv], {}};
    try {
      key.datestamp = parse_date(f[cd]);
    } catch (const Error& e) {
      r.fail_at(cd, e.what());
    }
    for (std::size_t k = 0; k < factor_cols.size(); ++k) {
      row[k] = r.parse_double(f, factor_cols[k]);
      if (!std::isfinite(row[k])) r.fail_at(factor_cols[k], "factor value must be finite");
    }
    int label = -1;
    for (int c = 0; c < kRiskLevelCount; ++c) {
      if (f[cl] == to_string(static_cast<RiskLevel>(c)) || f[cl] == std::to_string(c)) label = c;
    }
    if (label < 0) r.fail_at(cl, "label must be Low, Medium or High");
    bool syn = false;
    if (cs) {
      if (f[*cs] == "true" || f[*cs] == "1") syn = true;
      else if (f[*cs] != "false" && f[*cs] != "0") r.fail_at(*cs, "synthetic must be true or false");
    }
    out.push_back(std::move(key), row, label, syn);
  }
  return out;
}

}  // namespace vrisk
