// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

#include "vrisk/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "vrisk/parallel.hpp"

namespace vrisk {

void ForestConfig::validate() const {
  require(n_trees >= 1, "n_trees must be >= 1");
  require(max_depth >= 0, "max_depth must be >= 1 (0 = unlimited)");
  require(min_samples_leaf >= 1, "min_samples_leaf must be >= 1");
  require(mtry >= 0, "mtry must be >= 1 (0 = sqrt rule)");
}

int ForestConfig::resolved_mtry(std::size_t n_features) const {
  int m = mtry > 0 ? mtry : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_features))));
  return std::clamp(m, 1, static_cast<int>(std::max<std::size_t>(n_features, 1)));
}

double gini_impurity(std::span<const double> counts) {
  double n = 0;
  for (double c : counts) {
    require(c >= 0, "class counts must be non-negative");
    n += c;
  }
  require(n > 0, "gini impurity of an empty node");
  double s = 0;
  for (double c : counts) s += (c / n) * (c / n);
  return 1.0 - s;
}

std::size_t DecisionTree::leaf_for(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return i;
}

int DecisionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

std::vector<double> RandomForestModel::predict_proba(std::span<const double> x) const {
  require(x.size() == n_features, "expected " + std::to_string(n_features) + " features, got " +
                                      std::to_string(x.size()));
  for (double v : x) require(std::isfinite(v), "non-finite feature value");
  std::vector<double> p(static_cast<std::size_t>(n_classes), 0.0);
  for (const auto& t : trees) {
    const auto& leaf = t.nodes[t.leaf_for(x)];
    for (int c = 0; c < n_classes; ++c) p[c] += leaf.distribution[c];
  }
  for (double& v : p) v /= static_cast<double>(trees.size());
  return p;
}

int RandomForestModel::predict(std::span<const double> x) const {
  const auto p = predict_proba(x);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

void RandomForestModel::validate() const {
  require(n_classes >= 1 && !trees.empty(), "forest has no trees");
  for (const auto& t : trees) {
    require(!t.nodes.empty(), "empty tree");
    for (const auto& n : t.nodes) {
      if (n.is_leaf()) {
        require(n.distribution.size() == static_cast<std::size_t>(n_classes), "leaf distribution width mismatch");
        double s = std::accumulate(n.distribution.begin(), n.distribution.end(), 0.0);
        if (std::abs(s - 1.0) > 1e-9) fail(ErrorKind::kInvariant, "leaf distribution does not sum to 1");
      } else {
        require(static_cast<std::size_t>(n.feature) < n_features, "split feature out of range");
        require(n.left > 0 && n.right > 0 && static_cast<std::size_t>(n.left) < t.nodes.size() &&
                    static_cast<std::size_t>(n.right) < t.nodes.size(),
                "child index out of range");
      }
    }
  }
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(MatrixView x, std::span<const int> labels, int n_classes, const ForestConfig& cfg, std::uint64_t seed)
      : x_(x), labels_(labels), k_(n_classes), cfg_(cfg), rng_(seed), mtry_(cfg.resolved_mtry(x.cols)) {}

  DecisionTree grow() {
    weight_.assign(x_.rows, 0.0);
    if (cfg_.bootstrap) {
      for (std::size_t i = 0; i < x_.rows; ++i) weight_[uniform_index(rng_, x_.rows)] += 1.0;
    } else {
      std::fill(weight_.begin(), weight_.end(), 1.0);
    }
    idx_.clear();
    for (std::size_t i = 0; i < x_.rows; ++i) {
      if (weight_[i] > 0) idx_.push_back(i);
    }
    features_.resize(x_.cols);
    std::iota(features_.begin(), features_.end(), std::size_t{0});
    build(0, idx_.size(), 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0;
    double score = 0;
  };

  int build(std::size_t begin, std::size_t end, int depth) {
    std::vector<double> counts(static_cast<std::size_t>(k_), 0.0);
    double cover = 0;
    for (std::size_t p = begin; p < end; ++p) {
      counts[static_cast<std::size_t>(labels_[idx_[p]])] += weight_[idx_[p]];
      cover += weight_[idx_[p]];
    }
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes[id].cover = cover;

    const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) <= 1;
    const bool depth_limited = cfg_.max_depth > 0 && depth >= cfg_.max_depth;
    Split s;
    if (!pure && !depth_limited && cover >= 2.0 * cfg_.min_samples_leaf) s = best_split(begin, end, counts, cover);
    if (!s.found) {
      auto& leaf = tree_.nodes[id];
      leaf.distribution.resize(counts.size());
      for (std::size_t c = 0; c < counts.size(); ++c) leaf.distribution[c] = counts[c] / cover;
      return id;
    }
    auto mid = std::stable_partition(idx_.begin() + static_cast<std::ptrdiff_t>(begin),
                                     idx_.begin() + static_cast<std::ptrdiff_t>(end),
                                     [&](std::size_t i) { return x_(i, s.feature) <= s.threshold; });
    const auto split_at = static_cast<std::size_t>(mid - idx_.begin());
    const int left = build(begin, split_at, depth + 1);
    const int right = build(split_at, end, depth + 1);
    auto& node = tree_.nodes[id];
    node.feature = static_cast<int>(s.feature);
    node.threshold = s.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  // Maximizes sum_child sum_c n_c^2 / n_child, which is equivalent to
  // minimizing the weighted Gini impurity of the children.
  Split best_split(std::size_t begin, std::size_t end, const std::vector<double>& counts, double cover) {
    double parent_score = 0;
    for (double c : counts) parent_score += c * c / cover;

    // Partial Fisher-Yates: the first mtry entries become the candidates.
    const std::size_t m = features_.size();
    for (std::size_t i = 0; i < static_cast<std::size_t>(mtry_); ++i) {
      std::swap(features_[i], features_[i + uniform_index(rng_, m - i)]);
    }

    Split best;
    const double msl = cfg_.min_samples_leaf;
    std::vector<double> left(static_cast<std::size_t>(k_));
    for (int t = 0; t < mtry_; ++t) {
      const std::size_t f = features_[static_cast<std::size_t>(t)];
      sorted_.clear();
      for (std::size_t p = begin; p < end; ++p) sorted_.emplace_back(x_(idx_[p], f), idx_[p]);
      std::sort(sorted_.begin(), sorted_.end());
      if (sorted_.front().first == sorted_.back().first) continue;
      std::fill(left.begin(), left.end(), 0.0);
      double lw = 0;
      for (std::size_t i = 0; i + 1 < sorted_.size(); ++i) {
        const std::size_t s = sorted_[i].second;
        left[static_cast<std::size_t>(labels_[s])] += weight_[s];
        lw += weight_[s];
        const double v = sorted_[i].first, next = sorted_[i + 1].first;
        if (v == next) continue;
        const double rw = cover - lw;
        if (lw < msl) continue;
        if (rw < msl) break;
        double score = 0;
        for (std::size_t c = 0; c < left.size(); ++c) {
          const double r = counts[c] - left[c];
          score += left[c] * left[c] / lw + r * r / rw;
        }
        double thr = v + (next - v) / 2;
        if (!(thr < next)) thr = v;
        const bool better = !best.found || score > best.score ||
                            (score == best.score &&
                             (f < best.feature || (f == best.feature && thr < best.threshold)));
        if (better) best = {true, f, thr, score};
      }
    }
    if (best.found && !(best.score > parent_score * (1.0 + 1e-12))) best.found = false;
    return best;
  }

  MatrixView x_;
  std::span<const int> labels_;
  int k_;
  const ForestConfig& cfg_;
  Rng rng_;
  int mtry_;
  std::vector<double> weight_;
  std::vector<std::size_t> idx_;
  std::vector<std::size_t> features_;
  std::vector<std::pair<double, std::size_t>> sorted_;
  DecisionTree tree_;
};

}  // namespace

RandomForestModel fit_forest(MatrixView x, std::span<const int> labels, int n_classes, const ForestConfig& cfg) {
  cfg.validate();
  require(x.rows > 0 && x.cols > 0, "cannot fit a forest on an empty dataset");
  require(labels.size() == x.rows, "label count does not match rows");
  require(n_classes >= 2, "need at least two classes");
  std::vector<int> seen(static_cast<std::size_t>(n_classes), 0);
  for (int l : labels) {
    require(l >= 0 && l < n_classes, "label out of range");
    seen[static_cast<std::size_t>(l)] = 1;
  }
  if (std::accumulate(seen.begin(), seen.end(), 0) < 2) {
    fail(ErrorKind::kInvalidArgument, "training data contains a single class");
  }
  for (std::size_t i = 0; i < x.rows * x.cols; ++i) require(std::isfinite(x.data[i]), "non-finite training value");

  RandomForestModel model;
  model.n_classes = n_classes;
  model.n_features = x.cols;
  model.config = cfg;
  model.trees.resize(static_cast<std::size_t>(cfg.n_trees));
  parallel_for(model.trees.size(), [&](std::size_t t) {
    TreeBuilder b(x, labels, n_classes, cfg, derive_seed(cfg.seed, t));
    model.trees[t] = b.grow();
  });
  return model;
}

RandomForestModel fit_forest(const LabeledDataset& data, const ForestConfig& cfg) {
  auto m = fit_forest(MatrixView::of(data), data.labels, kRiskLevelCount, cfg);
  m.feature_ids = data.catalog.ids();
  return m;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const ForestConfig& c) {
  return {{"n_trees", c.n_trees},         {"max_depth", c.max_depth}, {"min_samples_leaf", c.min_samples_leaf},
          {"mtry", c.mtry},               {"bootstrap", c.bootstrap}, {"seed", c.seed}};
}

ForestConfig forest_config_from_json(const nlohmann::json& j, ForestConfig c) {
  if (j.is_null()) return c;
  require(j.is_object(), "forest config must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k == "n_trees") c.n_trees = it->get<int>();
    else if (k == "max_depth") c.max_depth = it->get<int>();
    else if (k == "min_samples_leaf") c.min_samples_leaf = it->get<int>();
    else if (k == "mtry") c.mtry = it->get<int>();
    else if (k == "bootstrap") c.bootstrap = it->get<bool>();
    else if (k == "seed") c.seed = it->get<std::uint64_t>();
    else fail(ErrorKind::kInvalidArgument, "unknown forest config key '" + k + "'");
  }
  c.validate();
  return c;
}

namespace {

constexpr int kForestFormatVersion = 1;

nlohmann::json node_to_json(const DecisionTree& t, int i) {
  const auto& n = t.nodes[static_cast<std::size_t>(i)];
  if (n.is_leaf()) return {{"cover", n.cover}, {"distribution", n.distribution}};
  return {{"feature", n.feature}, {"threshold", n.threshold}, {"cover", n.cover},
          {"left", node_to_json(t, n.left)}, {"right", node_to_json(t, n.right)}};
}

int node_from_json(DecisionTree& t, const nlohmann::json& j) {
  const int id = static_cast<int>(t.nodes.size());
  t.nodes.emplace_back();
  t.nodes[id].cover = j.at("cover").get<double>();
  if (j.contains("distribution")) {
    t.nodes[id].distribution = j.at("distribution").get<std::vector<double>>();
    return id;
  }
  const int feature = j.at("feature").get<int>();
  const double threshold = j.at("threshold").get<double>();
  const int left = node_from_json(t, j.at("left"));
  const int right = node_from_json(t, j.at("right"));
  auto& n = t.nodes[id];
  n.feature = feature;
  n.threshold = threshold;
  n.left = left;
  n.right = right;
  return id;
}

}  // namespace

nlohmann::json forest_to_json(const RandomForestModel& m) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : m.trees) trees.push_back(node_to_json(t, 0));
  return {{"format", "vrisk-forest"},  {"version", kForestFormatVersion}, {"n_classes", m.n_classes},
          {"n_features", m.n_features}, {"feature_ids", m.feature_ids},   {"config", to_json(m.config)},
          {"trees", std::move(trees)}};
}

RandomForestModel forest_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format") != "vrisk-forest") fail(ErrorKind::kParse, "not a vrisk forest document");
    if (doc.at("version").get<int>() != kForestFormatVersion) {
      fail(ErrorKind::kParse, "unsupported forest format version " + doc.at("version").dump());
    }
    RandomForestModel m;
    m.n_classes = doc.at("n_classes").get<int>();
    m.n_features = doc.at("n_features").get<std::size_t>();
    m.feature_ids = doc.at("feature_ids").get<std::vector<std::string>>();
    m.config = forest_config_from_json(doc.at("config"));
    for (const auto& tj : doc.at("trees")) {
      DecisionTree t;
      node_from_json(t, tj);
      m.trees.push_back(std::move(t));
    }
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, std::string("malformed forest document: ") + e.what());
  }
}

void save_forest(const RandomForestModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << forest_to_json(model).dump() << '\n';
  if (!out) fail(ErrorKind::kIo, "failed writing " + path.string());
}

RandomForestModel load_forest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  return forest_from_json(doc);
}

}  // namespace vrisk
