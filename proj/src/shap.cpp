// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

#include "vrisk/shap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "vrisk/csv.hpp"
#include "vrisk/parallel.hpp"

namespace vrisk {

namespace {

void check_input(const RandomForestModel& model, std::span<const double> x) {
  require(x.size() == model.n_features, "expected " + std::to_string(model.n_features) + " features, got " +
                                            std::to_string(x.size()));
  for (double v : x) require(std::isfinite(v), "non-finite feature value");
}

void add_expected(const DecisionTree& t, std::size_t i, double weight, std::vector<double>& out) {
  const auto& n = t.nodes[i];
  if (n.is_leaf()) {
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += weight * n.distribution[c];
    return;
  }
  const auto& l = t.nodes[static_cast<std::size_t>(n.left)];
  const auto& r = t.nodes[static_cast<std::size_t>(n.right)];
  add_expected(t, static_cast<std::size_t>(n.left), weight * l.cover / n.cover, out);
  add_expected(t, static_cast<std::size_t>(n.right), weight * r.cover / n.cover, out);
}

// Path-dependent TreeSHAP state. Each path element tracks the fraction of
// zero (feature absent) and one (feature present) paths flowing through it
// and the permutation weight of the subsets of that size.
struct PathElement {
  int feature;
  double zero;
  double one;
  double pweight;
};

void extend_path(PathElement* path, int depth, double zero, double one, int feature) {
  path[depth] = {feature, zero, one, depth == 0 ? 1.0 : 0.0};
  for (int i = depth - 1; i >= 0; --i) {
    path[i + 1].pweight += one * path[i].pweight * (i + 1) / static_cast<double>(depth + 1);
    path[i].pweight = zero * path[i].pweight * (depth - i) / static_cast<double>(depth + 1);
  }
}

void unwind_path(PathElement* path, int depth, int index) {
  const double one = path[index].one, zero = path[index].zero;
  double next = path[depth].pweight;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0) {
      const double tmp = path[i].pweight;
      path[i].pweight = next * (depth + 1) / ((i + 1) * one);
      next = tmp - path[i].pweight * zero * (depth - i) / static_cast<double>(depth + 1);
    } else {
      path[i].pweight = path[i].pweight * (depth + 1) / (zero * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero = path[i + 1].zero;
    path[i].one = path[i + 1].one;
  }
}

double unwound_path_sum(const PathElement* path, int depth, int index) {
  const double one = path[index].one, zero = path[index].zero;
  double next = path[depth].pweight;
  double total = 0;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0) {
      const double tmp = next * (depth + 1) / ((i + 1) * one);
      total += tmp;
      next = path[i].pweight - tmp * zero * (depth - i) / static_cast<double>(depth + 1);
    } else if (zero != 0) {
      total += path[i].pweight * (depth + 1) / (zero * (depth - i));
    }
  }
  return total;
}

class TreeShapRunner {
 public:
  TreeShapRunner(const DecisionTree& tree, std::span<const double> x, int n_classes, std::vector<double>& phi)
      : tree_(tree), x_(x), k_(static_cast<std::size_t>(n_classes)), phi_(phi) {
    const int max_depth = tree.depth() + 2;
    storage_.resize(static_cast<std::size_t>((max_depth * (max_depth + 1)) / 2 + max_depth));
  }

  void run() { recurse(0, storage_.data(), 0, 1.0, 1.0, -1); }

 private:
  void recurse(std::size_t node, PathElement* parent_path, int depth, double zero, double one, int feature) {
    PathElement* path = parent_path + depth;
    if (depth > 0) std::copy(parent_path, parent_path + depth, path);
    extend_path(path, depth, zero, one, feature);

    const auto& n = tree_.nodes[node];
    if (n.is_leaf()) {
      for (int i = 1; i <= depth; ++i) {
        const double w = unwound_path_sum(path, depth, i);
        const auto& el = path[i];
        const double scale = w * (el.one - el.zero);
        double* out = phi_.data() + static_cast<std::size_t>(el.feature) * k_;
        for (std::size_t c = 0; c < k_; ++c) out[c] += scale * n.distribution[c];
      }
      return;
    }

    const bool go_left = x_[static_cast<std::size_t>(n.feature)] <= n.threshold;
    const auto hot = static_cast<std::size_t>(go_left ? n.left : n.right);
    const auto cold = static_cast<std::size_t>(go_left ? n.right : n.left);
    const double hot_zero = tree_.nodes[hot].cover / n.cover;
    const double cold_zero = tree_.nodes[cold].cover / n.cover;

    double incoming_zero = 1, incoming_one = 1;
    int k = 0;
    while (k <= depth && path[k].feature != n.feature) ++k;
    if (k <= depth) {
      incoming_zero = path[k].zero;
      incoming_one = path[k].one;
      unwind_path(path, depth, k);
      --depth;
    }
    recurse(hot, path, depth + 1, hot_zero * incoming_zero, incoming_one, n.feature);
    recurse(cold, path, depth + 1, cold_zero * incoming_zero, 0.0, n.feature);
  }

  const DecisionTree& tree_;
  std::span<const double> x_;
  std::size_t k_;
  std::vector<double>& phi_;
  std::vector<PathElement> storage_;
};

// Cover-weighted conditional expectation of the tree given the features in
// `present` (bitmask).
void conditional_expectation(const DecisionTree& t, std::size_t i, std::span<const double> x, std::uint32_t present,
                             double weight, std::vector<double>& out) {
  const auto& n = t.nodes[i];
  if (n.is_leaf()) {
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += weight * n.distribution[c];
    return;
  }
  if (present & (1u << n.feature)) {
    const int next = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    conditional_expectation(t, static_cast<std::size_t>(next), x, present, weight, out);
    return;
  }
  const auto l = static_cast<std::size_t>(n.left), r = static_cast<std::size_t>(n.right);
  conditional_expectation(t, l, x, present, weight * t.nodes[l].cover / n.cover, out);
  conditional_expectation(t, r, x, present, weight * t.nodes[r].cover / n.cover, out);
}

}  // namespace

std::vector<double> expected_value(const RandomForestModel& model) {
  std::vector<double> e(static_cast<std::size_t>(model.n_classes), 0.0);
  const double w = 1.0 / static_cast<double>(model.trees.size());
  for (const auto& t : model.trees) add_expected(t, 0, w, e);
  return e;
}

ShapVector tree_shap(const RandomForestModel& model, std::span<const double> x) {
  check_input(model, x);
  ShapVector out;
  out.n_features = model.n_features;
  out.n_classes = model.n_classes;
  out.phi.assign(model.n_features * static_cast<std::size_t>(model.n_classes), 0.0);
  out.base_values = expected_value(model);
  for (const auto& t : model.trees) TreeShapRunner(t, x, model.n_classes, out.phi).run();
  const double inv = 1.0 / static_cast<double>(model.trees.size());
  for (double& v : out.phi) v *= inv;
  return out;
}

ShapVector brute_force_shapley(const RandomForestModel& model, std::span<const double> x) {
  check_input(model, x);
  const std::size_t m = model.n_features;
  if (m > 15) fail(ErrorKind::kInvalidArgument, "brute-force Shapley supports at most 15 features");
  const auto k = static_cast<std::size_t>(model.n_classes);
  const std::uint32_t subsets = 1u << m;

  std::vector<double> value(subsets * k, 0.0);
  std::vector<double> tmp(k);
  for (std::uint32_t s = 0; s < subsets; ++s) {
    std::fill(tmp.begin(), tmp.end(), 0.0);
    for (const auto& t : model.trees) conditional_expectation(t, 0, x, s, 1.0, tmp);
    for (std::size_t c = 0; c < k; ++c) value[s * k + c] = tmp[c] / static_cast<double>(model.trees.size());
  }

  std::vector<double> fact(m + 1, 1.0);
  for (std::size_t i = 1; i <= m; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);

  ShapVector out;
  out.n_features = m;
  out.n_classes = model.n_classes;
  out.phi.assign(m * k, 0.0);
  out.base_values.assign(value.begin(), value.begin() + static_cast<std::ptrdiff_t>(k));
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint32_t bit = 1u << i;
    for (std::uint32_t s = 0; s < subsets; ++s) {
      if (s & bit) continue;
      const auto size = static_cast<std::size_t>(std::popcount(s));
      const double w = fact[size] * fact[m - size - 1] / fact[m];
      for (std::size_t c = 0; c < k; ++c) out.phi[i * k + c] += w * (value[(s | bit) * k + c] - value[s * k + c]);
    }
  }
  return out;
}

ShapMatrix explain(const RandomForestModel& model, MatrixView x) {
  require(x.cols == model.n_features, "explain: feature count does not match the model");
  ShapMatrix out;
  out.n_samples = x.rows;
  out.n_factors = x.cols;
  out.n_classes = model.n_classes;
  out.base_values = expected_value(model);
  const std::size_t stride = x.cols * static_cast<std::size_t>(model.n_classes);
  out.values.assign(x.rows * stride, 0.0);
  parallel_for(x.rows, [&](std::size_t j) {
    const auto v = tree_shap(model, x.row(j));
    std::copy(v.phi.begin(), v.phi.end(), out.values.begin() + static_cast<std::ptrdiff_t>(j * stride));
  });
  return out;
}

std::vector<std::string> ImportanceRank::ids() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.id);
  return out;
}

ImportanceRank ImportanceRank::head(std::size_t n) const {
  ImportanceRank r;
  r.entries.assign(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(std::min(n, entries.size())));
  return r;
}

std::vector<double> mean_abs_shap(const ShapMatrix& m, std::optional<int> class_index) {
  require(m.n_samples > 0, "empty SHAP matrix");
  if (class_index) require(*class_index >= 0 && *class_index < m.n_classes, "class index out of range");
  std::vector<double> imp(m.n_factors, 0.0);
  for (std::size_t j = 0; j < m.n_samples; ++j) {
    for (std::size_t i = 0; i < m.n_factors; ++i) {
      if (class_index) {
        imp[i] += std::abs(m.at(j, i, *class_index));
      } else {
        for (int c = 0; c < m.n_classes; ++c) imp[i] += std::abs(m.at(j, i, c));
      }
    }
  }
  const double denom = static_cast<double>(m.n_samples) * (class_index ? 1 : m.n_classes);
  for (double& v : imp) v /= denom;
  return imp;
}

ImportanceRank rank_by_importance(std::span<const double> importance, const std::vector<std::string>& ids) {
  require(importance.size() == ids.size(), "importance and id counts differ");
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return importance[a] > importance[b]; });
  ImportanceRank r;
  for (std::size_t i : order) r.entries.push_back({i, ids[i], importance[i]});
  return r;
}

ImportanceRank aggregate_importance(const ShapMatrix& m, const std::vector<std::string>& ids,
                                    std::optional<int> class_index) {
  const auto imp = mean_abs_shap(m, class_index);
  return rank_by_importance(imp, ids);
}

std::array<double, kPrimaryCategoryCount> category_shares(std::span<const RankEntry> factors,
                                                          const FactorCatalog& catalog) {
  require(!factors.empty(), "category shares need at least one factor");
  std::array<double, kPrimaryCategoryCount> sum{}, count{};
  double total = 0;
  for (const auto& e : factors) {
    require(e.index < catalog.size(), "rank entry outside the catalog");
    const auto c = static_cast<std::size_t>(catalog.factors[e.index].category());
    sum[c] += e.importance;
    count[c] += 1;
    total += e.importance;
  }
  auto& src = total > 0 ? sum : count;
  const double denom = total > 0 ? total : static_cast<double>(factors.size());
  std::array<double, kPrimaryCategoryCount> out{};
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = src[c] / denom;
  return out;
}

nlohmann::json to_json(const ImportanceRank& rank) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& e : rank.entries) a.push_back({{"index", e.index}, {"id", e.id}, {"importance", e.importance}});
  return a;
}

ImportanceRank importance_rank_from_json(const nlohmann::json& j) {
  try {
    ImportanceRank r;
    for (const auto& e : j) {
      r.entries.push_back(
          {e.at("index").get<std::size_t>(), e.at("id").get<std::string>(), e.at("importance").get<double>()});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, std::string("malformed importance rank: ") + e.what());
  }
}

void write_beeswarm_csv(const ShapMatrix& m, const LabeledDataset& data, std::span<const std::size_t> rows,
                        const std::filesystem::path& path) {
  std::vector<std::size_t> all(m.n_factors);
  std::iota(all.begin(), all.end(), std::size_t{0});
  write_beeswarm_csv(m, data, rows, all, path);
}

void write_beeswarm_csv(const ShapMatrix& m, const LabeledDataset& data, std::span<const std::size_t> rows,
                        std::span<const std::size_t> factors, const std::filesystem::path& path) {
  require(rows.size() == m.n_samples, "beeswarm row map does not match the SHAP matrix");
  require(data.n_factors() == m.n_factors, "beeswarm dataset width does not match the SHAP matrix");
  csv::Writer w(path);
  w.row({"factor_id", "sample_id", "class", "shap_value", "factor_value"});
  for (std::size_t i : factors) {
    require(i < m.n_factors, "beeswarm factor index out of range");
    const auto& id = data.catalog.factors[i].id;
    for (std::size_t j = 0; j < m.n_samples; ++j) {
      for (int c = 0; c < m.n_classes; ++c) {
        w.row({id, std::to_string(rows[j]), to_string(static_cast<RiskLevel>(c)), csv::format_double(m.at(j, i, c)),
               csv::format_double(data.at(rows[j], i))});
      }
    }
  }
  w.close();
}

}  // namespace vrisk
