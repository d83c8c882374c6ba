// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

#include "vrisk/select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vrisk/csv.hpp"

namespace vrisk {

namespace {

constexpr std::uint64_t kFoldStream = 0xF01D;
constexpr std::uint64_t kExplainStream = 0xE5A1;

const char* class_name(std::size_t c) { return to_string(static_cast<RiskLevel>(c)); }

MetricSummary summary_of(const MetricSet& m) { return {m.accuracy, m.precision, m.recall, m.f1, m.auc}; }

}  // namespace

std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::uint8_t> positive) {
  require(scores.size() == positive.size(), "roc_auc: length mismatch");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (auto p : positive) n_pos += p ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) {
      if (positive[order[t]]) rank_sum += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum - np * (np + 1) / 2.0) / (np * nn);
}

MetricSet compute_metrics(std::span<const int> y_true, std::span<const int> y_pred, std::span<const double> proba) {
  constexpr auto K = static_cast<std::size_t>(kRiskLevelCount);
  const std::size_t n = y_true.size();
  require(n > 0, "compute_metrics: no samples");
  require(y_pred.size() == n && proba.size() == n * K, "compute_metrics: misaligned inputs");
  MetricSet m;
  std::array<std::size_t, K> tp{}, fp{}, fn{};
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = static_cast<std::size_t>(y_true[i]), p = static_cast<std::size_t>(y_pred[i]);
    require(t < K && p < K, "compute_metrics: label out of range");
    ++m.support[t];
    if (t == p) {
      ++tp[t];
      ++correct;
    } else {
      ++fp[p];
      ++fn[t];
    }
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(n);

  std::vector<double> scores(n);
  std::vector<std::uint8_t> pos(n);
  double auc_weight = 0;
  for (std::size_t c = 0; c < K; ++c) {
    const double P = static_cast<double>(tp[c] + fp[c]), R = static_cast<double>(tp[c] + fn[c]);
    const double prec = P > 0 ? static_cast<double>(tp[c]) / P : 0.0;
    const double rec = R > 0 ? static_cast<double>(tp[c]) / R : 0.0;
    m.class_precision[c] = prec;
    m.class_recall[c] = rec;
    m.class_f1[c] = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    const double w = static_cast<double>(m.support[c]) / static_cast<double>(n);
    m.precision += w * prec;
    m.recall += w * rec;
    m.f1 += w * m.class_f1[c];

    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = proba[i * K + c];
      pos[i] = static_cast<std::size_t>(y_true[i]) == c ? 1 : 0;
    }
    m.class_auc[c] = roc_auc(scores, pos);
    if (m.class_auc[c]) {
      m.auc += static_cast<double>(m.support[c]) * *m.class_auc[c];
      auc_weight += static_cast<double>(m.support[c]);
    } else {
      m.warnings.push_back(std::string("AUC undefined for class ") + class_name(c) + "; excluded from the mean");
    }
  }
  m.auc = auc_weight > 0 ? m.auc / auc_weight : 0.0;
  return m;
}

std::vector<int> stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed) {
  require(k >= 2, "folds must be >= 2");
  std::array<std::vector<std::size_t>, kRiskLevelCount> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < kRiskLevelCount, "label out of range");
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::vector<int> fold(labels.size(), -1);
  std::size_t offset = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& rows = by_class[c];
    if (rows.empty()) continue;
    if (rows.size() < static_cast<std::size_t>(k)) {
      fail(ErrorKind::kInvalidArgument, std::string("class ") + class_name(c) + " has " +
                                            std::to_string(rows.size()) + " samples, fewer than " +
                                            std::to_string(k) + " folds");
    }
    Rng rng(derive_seed(seed, kFoldStream, c));
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t t = 0; t < rows.size(); ++t) fold[rows[t]] = static_cast<int>((offset + t) % k);
    offset = (offset + rows.size()) % static_cast<std::size_t>(k);
  }
  return fold;
}

bool better_score(const MetricSummary& a, const MetricSummary& b) {
  if (a.f1 != b.f1) return a.f1 > b.f1;
  return a.auc > b.auc;
}

const char* to_string(PipelineMode m) { return m == PipelineMode::kNested ? "nested" : "faithful"; }

PipelineMode parse_pipeline_mode(const std::string& s) {
  if (s == "faithful") return PipelineMode::kFaithful;
  if (s == "nested") return PipelineMode::kNested;
  fail(ErrorKind::kInvalidArgument, "unknown mode '" + s + "' (expected faithful or nested)");
}

void CvConfig::validate() const {
  require(folds >= 2, "cv folds must be >= 2");
  require(max_n >= 0, "max_n must be >= 0");
  forest.validate();
}

std::vector<std::size_t> explain_rows(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  if (k == 0 || k >= n) return rows;
  Rng rng(derive_seed(seed, kExplainStream));
  for (std::size_t i = 0; i < k; ++i) std::swap(rows[i], rows[i + uniform_index(rng, n - i)]);
  rows.resize(k);
  std::sort(rows.begin(), rows.end());
  return rows;
}

RankOutput rank_factors(const LabeledDataset& data, const RankConfig& config) {
  return rank_with_model(fit_forest(data, config.forest), data, config);
}

RankOutput rank_with_model(RandomForestModel model, const LabeledDataset& data, const RankConfig& config) {
  require(model.n_features == data.n_factors(), "model width does not match the dataset");
  RankOutput out;
  out.model = std::move(model);
  out.explained_rows = explain_rows(data.n_samples(), config.explain_samples, config.seed);
  std::vector<double> x;
  x.reserve(out.explained_rows.size() * data.n_factors());
  for (std::size_t r : out.explained_rows) {
    const auto row = data.row(r);
    x.insert(x.end(), row.begin(), row.end());
  }
  out.shap = explain(out.model, MatrixView{x.data(), out.explained_rows.size(), data.n_factors()});
  const auto ids = data.catalog.ids();
  out.rank = aggregate_importance(out.shap, ids);
  for (int c = 0; c < kRiskLevelCount; ++c) out.class_ranks[static_cast<std::size_t>(c)] = aggregate_importance(out.shap, ids, c);
  return out;
}

// ---------------------------------------------------------------------------
// CrossValidator

namespace {

std::vector<std::size_t> rows_where(const std::vector<int>& fold, int f, bool equal) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fold.size(); ++i) {
    if ((fold[i] == f) == equal) rows.push_back(i);
  }
  return rows;
}

MetricSummary combine(const std::vector<MetricSet>& folds, bool stdev) {
  const double k = static_cast<double>(folds.size());
  MetricSummary mean;
  for (const auto& f : folds) {
    mean.accuracy += f.accuracy / k;
    mean.precision += f.precision / k;
    mean.recall += f.recall / k;
    mean.f1 += f.f1 / k;
    mean.auc += f.auc / k;
  }
  if (!stdev) return mean;
  MetricSummary sd;
  if (folds.size() < 2) return sd;
  for (const auto& f : folds) {
    sd.accuracy += (f.accuracy - mean.accuracy) * (f.accuracy - mean.accuracy);
    sd.precision += (f.precision - mean.precision) * (f.precision - mean.precision);
    sd.recall += (f.recall - mean.recall) * (f.recall - mean.recall);
    sd.f1 += (f.f1 - mean.f1) * (f.f1 - mean.f1);
    sd.auc += (f.auc - mean.auc) * (f.auc - mean.auc);
  }
  for (double* v : {&sd.accuracy, &sd.precision, &sd.recall, &sd.f1, &sd.auc}) *v = std::sqrt(*v / (k - 1));
  return sd;
}

}  // namespace

CrossValidator CrossValidator::faithful(LabeledDataset data, const CvConfig& cv) {
  cv.validate();
  CrossValidator v;
  v.mode_ = PipelineMode::kFaithful;
  v.cv_ = cv;
  v.data_ = std::move(data);
  v.ids_ = v.data_.catalog.ids();
  const auto fold = stratified_kfold(v.data_.labels, cv.folds, cv.seed);
  for (int f = 0; f < cv.folds; ++f) {
    const auto tr = rows_where(fold, f, false), va = rows_where(fold, f, true);
    v.folds_.push_back({v.data_.select_rows(tr), v.data_.select_rows(va), std::nullopt, std::nullopt});
  }
  return v;
}

CrossValidator CrossValidator::nested(LabeledDataset original, const CvConfig& cv, const ResampleConfig& resample,
                                      const RankConfig& rank, CorrelationScope scope) {
  cv.validate();
  CrossValidator v;
  v.mode_ = PipelineMode::kNested;
  v.cv_ = cv;
  v.data_ = std::move(original);
  v.ids_ = v.data_.catalog.ids();
  const auto fold = stratified_kfold(v.data_.labels, cv.folds, cv.seed);
  for (int f = 0; f < cv.folds; ++f) {
    const auto tr = rows_where(fold, f, false), va = rows_where(fold, f, true);
    ResampleConfig rc = resample;
    rc.seed = derive_seed(resample.seed, kFoldStream, static_cast<std::uint64_t>(f));
    auto train = smote_tomek(v.data_.select_rows(tr), rc).data;
    RankConfig rk = rank;
    rk.seed = derive_seed(rank.seed, kFoldStream, static_cast<std::uint64_t>(f));
    rk.forest.seed = derive_seed(rank.forest.seed, kFoldStream, static_cast<std::uint64_t>(f));
    auto ranked = rank_factors(train, rk);
    auto corr = correlation_matrix(train, scope);
    v.folds_.push_back({std::move(train), v.data_.select_rows(va), std::move(ranked.rank), std::move(corr)});
  }
  return v;
}

const ImportanceRank& CrossValidator::fold_rank(int fold) const {
  require(mode_ == PipelineMode::kNested, "fold ranks exist only in nested mode");
  return *folds_.at(static_cast<std::size_t>(fold)).rank;
}

const CorrelationMatrix& CrossValidator::fold_correlation(int fold) const {
  require(mode_ == PipelineMode::kNested, "fold correlations exist only in nested mode");
  return *folds_.at(static_cast<std::size_t>(fold)).corr;
}

MetricSet CrossValidator::evaluate_fold(int fold, std::vector<std::size_t> subset) {
  require(fold >= 0 && fold < cv_.folds, "fold index out of range");
  require(!subset.empty(), "factor subset must be non-empty");
  std::sort(subset.begin(), subset.end());
  subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
  require(subset.back() < n_factors(), "factor index out of range");
  auto key = std::make_pair(fold, subset);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;

  const auto& fd = folds_[static_cast<std::size_t>(fold)];
  const std::size_t m = subset.size();
  std::vector<double> x(fd.train.n_samples() * m);
  for (std::size_t i = 0; i < fd.train.n_samples(); ++i) {
    for (std::size_t k = 0; k < m; ++k) x[i * m + k] = fd.train.at(i, subset[k]);
  }
  ForestConfig fc = cv_.forest;
  fc.seed = derive_seed(cv_.forest.seed, kFoldStream, static_cast<std::uint64_t>(fold));
  const auto model = fit_forest(MatrixView{x.data(), fd.train.n_samples(), m}, fd.train.labels, kRiskLevelCount, fc);
  ++fits_;

  const std::size_t nv = fd.valid.n_samples();
  std::vector<double> row(m), proba(nv * kRiskLevelCount);
  std::vector<int> pred(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    for (std::size_t k = 0; k < m; ++k) row[k] = fd.valid.at(i, subset[k]);
    const auto p = model.predict_proba(row);
    std::copy(p.begin(), p.end(), proba.begin() + static_cast<std::ptrdiff_t>(i * kRiskLevelCount));
    pred[i] = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
  }
  auto metrics = compute_metrics(fd.valid.labels, pred, proba);
  cache_.emplace(std::move(key), metrics);
  return metrics;
}

CvResult CrossValidator::evaluate(std::span<const std::size_t> subset) {
  std::vector<std::vector<std::size_t>> per_fold(static_cast<std::size_t>(cv_.folds),
                                                 std::vector<std::size_t>(subset.begin(), subset.end()));
  return evaluate(per_fold);
}

CvResult CrossValidator::evaluate(const std::vector<std::vector<std::size_t>>& fold_subsets) {
  require(fold_subsets.size() == static_cast<std::size_t>(cv_.folds), "need one subset per fold");
  CvResult r;
  for (int f = 0; f < cv_.folds; ++f) r.folds.push_back(evaluate_fold(f, fold_subsets[static_cast<std::size_t>(f)]));
  r.mean = combine(r.folds, false);
  r.stdev = combine(r.folds, true);
  return r;
}

CvResult evaluate_cv(const LabeledDataset& data, std::span<const std::size_t> subset, const CvConfig& cv) {
  auto v = CrossValidator::faithful(data, cv);
  return v.evaluate(subset);
}

// ---------------------------------------------------------------------------
// Selection

const NPoint& TopNResult::best() const {
  require(n >= 1 && static_cast<std::size_t>(n) <= trace.size(), "top-n result has no best point");
  return trace[static_cast<std::size_t>(n - 1)];
}

TopNResult top_n_selection(CrossValidator& cv, const std::vector<std::vector<std::size_t>>& fold_ranks,
                           const ImportanceRank& reported) {
  require(fold_ranks.size() == static_cast<std::size_t>(cv.folds()), "need one rank per fold");
  require(!reported.entries.empty(), "cannot select from an empty rank");
  std::size_t limit = reported.size();
  for (const auto& r : fold_ranks) limit = std::min(limit, r.size());
  require(limit >= 1, "a fold rank is empty");
  if (cv.config().max_n > 0) limit = std::min(limit, static_cast<std::size_t>(cv.config().max_n));

  TopNResult out;
  std::vector<std::vector<std::size_t>> subsets(fold_ranks.size());
  for (std::size_t n = 1; n <= limit; ++n) {
    for (std::size_t f = 0; f < fold_ranks.size(); ++f) subsets[f].assign(fold_ranks[f].begin(), fold_ranks[f].begin() + static_cast<std::ptrdiff_t>(n));
    out.trace.push_back({static_cast<int>(n), cv.evaluate(subsets)});
    if (n == 1 || better_score(out.trace.back().cv.mean, out.trace[static_cast<std::size_t>(out.n - 1)].cv.mean)) {
      out.n = static_cast<int>(n);
    }
  }
  for (int i = 0; i < out.n; ++i) out.key_factors.push_back(reported.entries[static_cast<std::size_t>(i)].id);
  return out;
}

TopNResult top_n_selection(CrossValidator& cv, const ImportanceRank& rank) {
  std::vector<std::size_t> idx;
  for (const auto& e : rank.entries) idx.push_back(e.index);
  return top_n_selection(cv, std::vector<std::vector<std::size_t>>(static_cast<std::size_t>(cv.folds()), idx), rank);
}

void GridSpec::validate() const {
  require(!taus.empty() && !windows.empty(), "grid must be non-empty");
  require(std::is_sorted(taus.begin(), taus.end()) && std::is_sorted(windows.begin(), windows.end()),
          "grid values must be sorted");
  for (double t : taus) require(t > 0 && t <= 1, "grid tau values must be in (0, 1]");
  for (int w : windows) require(w >= 2, "grid window values must be >= 2");
}

bool better_cell(const GridCell& a, const GridCell& b) {
  const auto& sa = a.top.best().cv.mean;
  const auto& sb = b.top.best().cv.mean;
  if (sa.f1 != sb.f1) return sa.f1 > sb.f1;
  if (sa.auc != sb.auc) return sa.auc > sb.auc;
  if (a.window != b.window) return a.window < b.window;
  if (a.tau != b.tau) return a.tau < b.tau;
  return a.top.n < b.top.n;
}

GridResult grid_search(CrossValidator& cv, const ImportanceRank& rank, const CorrelationMatrix& corr,
                       const GridSpec& grid, const FilterConfig& base) {
  grid.validate();
  GridResult out;
  for (double tau : grid.taus) {
    for (int window : grid.windows) {
      FilterConfig fc = base;
      fc.r_tau = tau;
      fc.window = window;
      const auto filtered = sliding_filter(rank, corr, fc);
      std::vector<std::vector<std::size_t>> fold_ranks(static_cast<std::size_t>(cv.folds()));
      for (int f = 0; f < cv.folds(); ++f) {
        const auto& src = cv.mode() == PipelineMode::kNested
                              ? sliding_filter(cv.fold_rank(f), cv.fold_correlation(f), fc).filtered
                              : filtered.filtered;
        for (const auto& e : src.entries) fold_ranks[static_cast<std::size_t>(f)].push_back(e.index);
      }
      GridCell cell;
      cell.tau = tau;
      cell.window = window;
      cell.filtered_size = filtered.filtered.size();
      cell.top = top_n_selection(cv, fold_ranks, filtered.filtered);
      out.cells.push_back(std::move(cell));
      if (out.cells.size() > 1 && better_cell(out.cells.back(), out.cells[out.best])) out.best = out.cells.size() - 1;
    }
  }
  return out;
}

SelectionResult select_key_factors(const GridResult& grid, const ImportanceRank& rank, const CorrelationMatrix& corr,
                                   const FilterConfig& base) {
  require(!grid.cells.empty(), "empty grid result");
  const auto& cell = grid.cells[grid.best];
  SelectionResult s;
  s.filter = base;
  s.filter.r_tau = cell.tau;
  s.filter.window = cell.window;
  s.filtered = sliding_filter(rank, corr, s.filter);
  s.top = cell.top;
  s.criterion = cell.top.best().cv.mean;
  return s;
}

TopNResult conventional_baseline(CrossValidator& cv, const ImportanceRank& rank) {
  if (cv.mode() == PipelineMode::kFaithful) return top_n_selection(cv, rank);
  std::vector<std::vector<std::size_t>> fold_ranks(static_cast<std::size_t>(cv.folds()));
  for (int f = 0; f < cv.folds(); ++f) {
    for (const auto& e : cv.fold_rank(f).entries) fold_ranks[static_cast<std::size_t>(f)].push_back(e.index);
  }
  return top_n_selection(cv, fold_ranks, rank);
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json to_json(const MetricSummary& m) {
  return {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"auc", m.auc}};
}

nlohmann::json to_json(const MetricSet& m) {
  nlohmann::json per = nlohmann::json::object();
  for (std::size_t c = 0; c < m.support.size(); ++c) {
    per[class_name(c)] = {{"precision", m.class_precision[c]},
                          {"recall", m.class_recall[c]},
                          {"f1", m.class_f1[c]},
                          {"auc", m.class_auc[c] ? nlohmann::json(*m.class_auc[c]) : nlohmann::json(nullptr)},
                          {"support", m.support[c]}};
  }
  auto j = to_json(summary_of(m));
  j["per_class"] = std::move(per);
  j["warnings"] = m.warnings;
  return j;
}

nlohmann::json to_json(const CvResult& r) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : r.folds) folds.push_back(to_json(f));
  return {{"mean", to_json(r.mean)}, {"std", to_json(r.stdev)}, {"folds", std::move(folds)}};
}

nlohmann::json to_json(const TopNResult& r) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& p : r.trace) {
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : p.cv.folds) folds.push_back(to_json(summary_of(f)));
    trace.push_back({{"n", p.n}, {"mean", to_json(p.cv.mean)}, {"std", to_json(p.cv.stdev)}, {"folds", std::move(folds)}});
  }
  return {{"n", r.n}, {"key_factors", r.key_factors}, {"trace", std::move(trace)}};
}

namespace {

MetricSummary summary_from_json(const nlohmann::json& j) {
  return {j.at("accuracy").get<double>(), j.at("precision").get<double>(), j.at("recall").get<double>(),
          j.at("f1").get<double>(), j.at("auc").get<double>()};
}

}  // namespace

TopNResult top_n_from_json(const nlohmann::json& j) {
  try {
    TopNResult r;
    r.n = j.at("n").get<int>();
    r.key_factors = j.at("key_factors").get<std::vector<std::string>>();
    for (const auto& p : j.at("trace")) {
      NPoint pt;
      pt.n = p.at("n").get<int>();
      pt.cv.mean = summary_from_json(p.at("mean"));
      pt.cv.stdev = summary_from_json(p.at("std"));
      for (const auto& f : p.at("folds")) {
        const auto s = summary_from_json(f);
        MetricSet m;
        m.accuracy = s.accuracy;
        m.precision = s.precision;
        m.recall = s.recall;
        m.f1 = s.f1;
        m.auc = s.auc;
        pt.cv.folds.push_back(std::move(m));
      }
      r.trace.push_back(std::move(pt));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, std::string("malformed top-n result: ") + e.what());
  }
}

nlohmann::json to_json(const GridResult& g) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : g.cells) {
    cells.push_back({{"tau", c.tau},
                     {"window", c.window},
                     {"filtered_size", c.filtered_size},
                     {"n", c.top.n},
                     {"best", to_json(c.top.best().cv.mean)}});
  }
  const auto& b = g.cells.at(g.best);
  return {{"best", {{"tau", b.tau}, {"window", b.window}, {"n", b.top.n}}}, {"cells", std::move(cells)}};
}

nlohmann::json to_json(const SelectionResult& s) {
  return {{"filter", to_json(s.filter)},
          {"filtered_rank", to_json(s.filtered.filtered)},
          {"filter_trace", to_json(s.filtered)["trace"]},
          {"n", s.top.n},
          {"key_factors", s.top.key_factors},
          {"criterion", to_json(s.criterion)},
          {"n_trace", to_json(s.top)["trace"]}};
}

nlohmann::json to_json(const CvConfig& c) {
  return {{"folds", c.folds}, {"seed", c.seed}, {"max_n", c.max_n}, {"forest", to_json(c.forest)}};
}

CvConfig cv_config_from_json(const nlohmann::json& j, CvConfig c) {
  if (j.is_null()) return c;
  require(j.is_object(), "cv config must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k == "folds") c.folds = it->get<int>();
    else if (k == "seed") c.seed = it->get<std::uint64_t>();
    else if (k == "max_n") c.max_n = it->get<int>();
    else if (k == "forest") c.forest = forest_config_from_json(*it, c.forest);
    else fail(ErrorKind::kInvalidArgument, "unknown cv config key '" + k + "'");
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const GridSpec& g) { return {{"taus", g.taus}, {"windows", g.windows}}; }

GridSpec grid_spec_from_json(const nlohmann::json& j, GridSpec g) {
  if (j.is_null()) return g;
  require(j.is_object(), "grid config must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k == "taus") g.taus = it->get<std::vector<double>>();
    else if (k == "windows") g.windows = it->get<std::vector<int>>();
    else fail(ErrorKind::kInvalidArgument, "unknown grid config key '" + k + "'");
  }
  g.validate();
  return g;
}

namespace {

void write_summary_rows(csv::Writer& w, const std::vector<std::string>& prefix, const std::string& fold,
                        const MetricSummary& m) {
  const std::pair<const char*, double> metrics[] = {
      {"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"auc", m.auc}};
  for (const auto& [name, v] : metrics) {
    auto row = prefix;
    row.push_back(fold);
    row.emplace_back(name);
    row.push_back(csv::format_double(v));
    w.row(row);
  }
}

void write_trace_rows(csv::Writer& w, const TopNResult& r, const std::string& tau, const std::string& window) {
  for (const auto& p : r.trace) {
    const std::vector<std::string> prefix{tau, window, std::to_string(p.n)};
    write_summary_rows(w, prefix, "mean", p.cv.mean);
    write_summary_rows(w, prefix, "std", p.cv.stdev);
    for (std::size_t f = 0; f < p.cv.folds.size(); ++f) {
      write_summary_rows(w, prefix, std::to_string(f), summary_of(p.cv.folds[f]));
    }
  }
}

}  // namespace

void write_grid_trace_csv(const GridResult& g, const std::filesystem::path& path) {
  csv::Writer w(path);
  w.row({"tau", "window", "n", "fold", "metric", "value"});
  for (const auto& c : g.cells) write_trace_rows(w, c.top, csv::format_double(c.tau), std::to_string(c.window));
  w.close();
}

void write_n_trace_csv(const TopNResult& r, const std::filesystem::path& path, std::optional<double> tau,
                       std::optional<int> window) {
  csv::Writer w(path);
  w.row({"tau", "window", "n", "fold", "metric", "value"});
  write_trace_rows(w, r, tau ? csv::format_double(*tau) : "", window ? std::to_string(*window) : "");
  w.close();
}

}  // namespace vrisk
