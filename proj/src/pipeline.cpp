// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

#include "vrisk/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <sstream>

#include "vrisk/csv.hpp"

namespace vrisk {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kArtifactVersion = 1;

enum : std::uint64_t {
  kSynthSeed = 1,
  kResampleSeed = 2,
  kForestSeed = 3,
  kExplainSeed = 4,
  kFoldSeed = 5,
  kCvForestSeed = 6,
};

json date_range_json(const DateRange& r) { return {{"start", r.start.to_string()}, {"end", r.end.to_string()}}; }

DateRange date_range_from_json(const json& j) {
  require(j.is_object(), "span must be an object with start and end");
  DateRange r{parse_date(j.at("start").get<std::string>()), parse_date(j.at("end").get<std::string>())};
  require(r.start < r.end, "span start must precede its end");
  return r;
}

Measure measure_from_slug(const std::string& slug) {
  for (std::size_t i = 0; i < kMeasureCount; ++i) {
    const auto m = static_cast<Measure>(i);
    if (slug == std::string(category_slug(category_of(m))) + "." + measure_slug(m)) return m;
  }
  fail(ErrorKind::kInvalidArgument, "unknown measure '" + slug + "'");
}

std::string measure_full_slug(Measure m) { return std::string(category_slug(category_of(m))) + "." + measure_slug(m); }

void reject_nested_seed(const json& j, const char* section) {
  if (j.is_object() && j.contains("seed")) {
    fail(ErrorKind::kInvalidArgument,
         std::string("'") + section + ".seed' is not allowed; stage seeds derive from the top-level seed");
  }
}

json strip_seed(json j) {
  if (j.is_object()) j.erase("seed");
  return j;
}

InputConfig input_config_from_json(const json& j, const fs::path& base) {
  InputConfig in;
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
  // A directory supplies whichever conventional files it holds; profiles stay required.
  auto from_dir = [&](const std::string& dir) {
    StorePaths p = StorePaths::in_directory(resolve(dir));
    for (auto* f : {&p.incidents, &p.deficiencies, &p.detentions, &p.sailing, &p.memberships, &p.flag_demerits}) {
      if (*f && !fs::exists(**f)) f->reset();
    }
    return p;
  };
  if (j.is_string()) {
    in.paths = from_dir(j.get<std::string>());
    return in;
  }
  require(j.is_object(), "inputs must be a directory path or an object");
  if (j.contains("dir")) in.paths = from_dir(j.at("dir").get<std::string>());
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k == "dir") continue;
    if (k == "span") {
      in.span = date_range_from_json(*it);
      continue;
    }
    std::optional<fs::path>* slot = nullptr;
    if (k == "incidents") slot = &in.paths.incidents;
    else if (k == "deficiencies") slot = &in.paths.deficiencies;
    else if (k == "detentions") slot = &in.paths.detentions;
    else if (k == "sailing") slot = &in.paths.sailing;
    else if (k == "memberships") slot = &in.paths.memberships;
    else if (k == "flag_demerits") slot = &in.paths.flag_demerits;
    else if (k == "profiles") slot = &in.paths.profiles;
    else fail(ErrorKind::kInvalidArgument, "unknown inputs key '" + k + "'");
    if (it->is_null()) slot->reset();
    else *slot = resolve(it->get<std::string>());
  }
  return in;
}

json to_json(const InputConfig& in) {
  json j = json::object();
  auto put = [&](const char* k, const std::optional<fs::path>& p) {
    j[k] = p ? json(p->generic_string()) : json(nullptr);
  };
  put("incidents", in.paths.incidents);
  put("deficiencies", in.paths.deficiencies);
  put("detentions", in.paths.detentions);
  put("sailing", in.paths.sailing);
  put("memberships", in.paths.memberships);
  put("flag_demerits", in.paths.flag_demerits);
  put("profiles", in.paths.profiles);
  if (in.span) j["span"] = date_range_json(*in.span);
  return j;
}

CatalogConfig catalog_config_from_json(const json& j) {
  CatalogConfig c;
  if (j.is_null()) return c;
  require(j.is_object(), "catalog config must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k == "measures") {
      c.spec.measures.clear();
      for (const auto& m : *it) c.spec.measures.push_back(measure_from_slug(m.get<std::string>()));
    } else if (k == "annual_years") c.spec.annual_years = it->get<std::vector<int>>();
    else if (k == "cumulative_years") c.spec.cumulative_years = it->get<std::vector<int>>();
    else if (k == "decayed_years") c.spec.decayed_years = it->get<std::vector<int>>();
    else if (k == "decay") {
      const auto w = it->get<std::vector<double>>();
      require(w.size() == 5, "decay needs five weights");
      std::copy(w.begin(), w.end(), c.decay.weights.begin());
    } else if (k == "severity") {
      const auto& s = *it;
      c.severity.a = s.value("a", c.severity.a);
      c.severity.b = s.value("b", c.severity.b);
      c.severity.c = s.value("c", c.severity.c);
      for (auto sit = s.begin(); sit != s.end(); ++sit) {
        require(sit.key() == "a" || sit.key() == "b" || sit.key() == "c", "unknown severity key '" + sit.key() + "'");
      }
    } else if (k == "high_threshold") c.assembly.thresholds.high = it->get<double>();
    else if (k == "factor_years") c.assembly.factor_years = it->get<int>();
    else if (k == "label_years") c.assembly.label_years = it->get<int>();
    else if (k == "datestamps") {
      c.datestamps.clear();
      for (const auto& d : *it) c.datestamps.push_back(parse_date(d.get<std::string>()));
    } else fail(ErrorKind::kInvalidArgument, "unknown catalog config key '" + k + "'");
  }
  c.decay.validate();
  c.severity.validate();
  c.assembly.thresholds.validate();
  return c;
}

json to_json(const CatalogConfig& c) {
  json measures = json::array();
  for (auto m : c.spec.measures) measures.push_back(measure_full_slug(m));
  json dates = json::array();
  for (auto d : c.datestamps) dates.push_back(d.to_string());
  return {{"measures", measures},
          {"annual_years", c.spec.annual_years},
          {"cumulative_years", c.spec.cumulative_years},
          {"decayed_years", c.spec.decayed_years},
          {"decay", c.decay.weights},
          {"severity", {{"a", c.severity.a}, {"b", c.severity.b}, {"c", c.severity.c}}},
          {"high_threshold", c.assembly.thresholds.high},
          {"factor_years", c.assembly.factor_years},
          {"label_years", c.assembly.label_years},
          {"datestamps", dates}};
}

// --- artifact io ------------------------------------------------------------

json versioned(const char* format, json body) {
  json j = {{"format", std::string("vrisk-") + format}, {"version", kArtifactVersion}};
  for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = std::move(*it);
  return j;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorKind::kIo, "write failed: " + path.string());
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::kParse, path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& s) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << s;
}

struct Artifact {
  const char* name;
  const char* producer;
};

constexpr Artifact kStore{"store", "ingest' or 'synth"};
constexpr Artifact kIngestJson{"ingest.json", "ingest' or 'synth"};
constexpr Artifact kDatasetCsv{"dataset.csv", "build-dataset"};
constexpr Artifact kDatasetJson{"dataset.json", "build-dataset"};
constexpr Artifact kResampledCsv{"resampled.csv", "resample"};
constexpr Artifact kResampleJson{"resample.json", "resample"};
constexpr Artifact kModelJson{"model.json", "train"};
constexpr Artifact kRankJson{"rank.json", "rank"};
constexpr Artifact kFilterJson{"filter.json", "filter"};
constexpr Artifact kSearchJson{"search.json", "search"};
constexpr Artifact kSelectionJson{"selection.json", "select"};
constexpr Artifact kBaselineJson{"baseline.json", "baseline"};

fs::path need(const fs::path& dir, const Artifact& a) {
  const fs::path p = dir / a.name;
  if (!fs::exists(p)) {
    fail(ErrorKind::kMissingArtifact, std::string("missing artifact '") + a.name + "' in " + dir.string() +
                                          "; run 'vrisk " + a.producer + "' first");
  }
  return p;
}

json read_artifact(const fs::path& dir, const Artifact& a) {
  json j = read_json_file(need(dir, a));
  if (j.value("version", 0) != kArtifactVersion) {
    fail(ErrorKind::kParse, std::string(a.name) + ": unsupported artifact version");
  }
  return j;
}

std::vector<std::string> class_names() {
  std::vector<std::string> out;
  for (int c = 0; c < kRiskLevelCount; ++c) out.emplace_back(to_string(static_cast<RiskLevel>(c)));
  return out;
}

json class_counts_json(const std::array<std::size_t, kRiskLevelCount>& c) {
  json j = json::object();
  for (int k = 0; k < kRiskLevelCount; ++k) j[to_string(static_cast<RiskLevel>(k))] = c[static_cast<std::size_t>(k)];
  return j;
}

json load_report_json(const LoadReport& r) {
  json rows = json::object();
  for (std::size_t k = 0; k < kRecordKindCount; ++k) rows[to_string(static_cast<RecordKind>(k))] = r.rows[k];
  return {{"rows", rows}, {"rejected_vessels", r.rejected_vessels}, {"dropped_rows", r.dropped_rows}};
}

FactorCatalog catalog_of_ids(const std::vector<std::string>& ids) {
  FactorCatalog c;
  for (const auto& id : ids) c.factors.push_back(parse_factor_id(id));
  return c;
}

json shares_json(std::span<const RankEntry> entries) {
  std::vector<std::string> ids;
  std::vector<RankEntry> local(entries.begin(), entries.end());
  for (std::size_t i = 0; i < local.size(); ++i) {
    ids.push_back(local[i].id);
    local[i].index = i;
  }
  const auto shares = category_shares(local, catalog_of_ids(ids));
  json j = json::object();
  for (std::size_t c = 0; c < shares.size(); ++c) j[category_name(static_cast<PrimaryCategory>(c))] = shares[c];
  return j;
}

json factor_table_json(std::span<const RankEntry> entries) {
  json rows = json::array();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto d = parse_factor_id(entries[i].id);
    rows.push_back({{"rank", i + 1},
                    {"factor_id", entries[i].id},
                    {"category", category_name(d.category())},
                    {"description", d.description()},
                    {"importance", entries[i].importance}});
  }
  return rows;
}

// Entries of `rank` for the given ids, in id order.
std::vector<RankEntry> entries_for(const ImportanceRank& rank, const std::vector<std::string>& ids) {
  std::map<std::string, const RankEntry*> by_id;
  for (const auto& e : rank.entries) by_id[e.id] = &e;
  std::vector<RankEntry> out;
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) fail(ErrorKind::kInvariant, "factor '" + id + "' is not in the rank");
    out.push_back(*it->second);
  }
  return out;
}

}  // namespace

// --- RunConfig ---------------------------------------------------------------

void RunConfig::validate() const {
  require(!(inputs && synth), "config names both inputs and synth; keep exactly one");
  if (inputs) {
    const auto& p = inputs->paths;
    for (const auto* f : {&p.incidents, &p.deficiencies, &p.detentions, &p.sailing, &p.memberships,
                          &p.flag_demerits, &p.profiles}) {
      if (*f && !fs::exists(**f)) fail(ErrorKind::kInvalidArgument, "input file not found: " + (*f)->string());
    }
    require(p.profiles.has_value(), "inputs must include a profiles file");
  }
  if (synth) synth->validate();
  catalog.decay.validate();
  catalog.severity.validate();
  catalog.assembly.thresholds.validate();
  require(catalog.assembly.factor_years >= 1 && catalog.assembly.factor_years <= 5, "factor_years must be in [1, 5]");
  require(catalog.assembly.label_years >= 1, "label_years must be >= 1");
  forest.validate();
  filter.validate();
  grid.validate();
  cv.validate();
}

RunConfig RunConfig::with_stage_seeds() const {
  RunConfig c = *this;
  if (c.synth) c.synth->seed = derive_seed(seed, kSynthSeed);
  c.resample.seed = derive_seed(seed, kResampleSeed);
  c.forest.seed = derive_seed(seed, kForestSeed);
  c.cv.seed = derive_seed(seed, kFoldSeed);
  c.cv.forest.seed = derive_seed(seed, kCvForestSeed);
  return c;
}

RankConfig RunConfig::rank_config() const {
  return RankConfig{forest, explain_samples, derive_seed(seed, kExplainSeed)};
}

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
  try {
    RunConfig c;
    if (j.is_null()) return c;
    require(j.is_object(), "config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& k = it.key();
      const json& v = *it;
      if (k == "inputs") {
        if (!v.is_null()) c.inputs = input_config_from_json(v, base_dir);
      } else if (k == "synth") {
        reject_nested_seed(v, "synth");
        if (!v.is_null()) c.synth = synth_config_from_json(v);
      } else if (k == "catalog") c.catalog = catalog_config_from_json(v);
      else if (k == "resample") {
        reject_nested_seed(v, "resample");
        c.resample = resample_config_from_json(v);
      } else if (k == "forest") {
        reject_nested_seed(v, "forest");
        c.forest = forest_config_from_json(v);
      } else if (k == "explain_samples") c.explain_samples = v.get<std::size_t>();
      else if (k == "beeswarm_factors") c.beeswarm_factors = v.get<std::size_t>();
      else if (k == "filter") c.filter = filter_config_from_json(v);
      else if (k == "grid") c.grid = grid_spec_from_json(v);
      else if (k == "cv") {
        reject_nested_seed(v, "cv");
        if (v.is_object() && v.contains("forest")) reject_nested_seed(v.at("forest"), "cv.forest");
        c.cv = cv_config_from_json(v);
      } else if (k == "mode") c.mode = parse_pipeline_mode(v.get<std::string>());
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else fail(ErrorKind::kInvalidArgument, "unknown config key '" + k + "'");
    }
    c.validate();
    return c;
  } catch (const json::exception& e) {
    fail(ErrorKind::kInvalidArgument, std::string("bad config value: ") + e.what());
  }
}

json to_json(const RunConfig& c) {
  json cv = strip_seed(to_json(c.cv));
  if (cv.contains("forest")) cv["forest"] = strip_seed(cv["forest"]);
  return {{"inputs", c.inputs ? to_json(*c.inputs) : json(nullptr)},
          {"synth", c.synth ? strip_seed(to_json(*c.synth)) : json(nullptr)},
          {"catalog", to_json(c.catalog)},
          {"resample", strip_seed(to_json(c.resample))},
          {"forest", strip_seed(to_json(c.forest))},
          {"explain_samples", c.explain_samples},
          {"beeswarm_factors", c.beeswarm_factors},
          {"filter", to_json(c.filter)},
          {"grid", to_json(c.grid)},
          {"cv", cv},
          {"mode", to_string(c.mode)},
          {"seed", c.seed}};
}

// --- stages ------------------------------------------------------------------

namespace {

constexpr std::array<const char*, 12> kStageNames = {"ingest",   "build-dataset", "resample", "train",
                                                     "rank",     "filter",        "search",   "select",
                                                     "baseline", "synth",         "run-all",  "report"};

}  // namespace

const char* to_string(Stage s) { return kStageNames[static_cast<std::size_t>(s)]; }

Stage parse_stage(const std::string& s) {
  for (std::size_t i = 0; i < kStageNames.size(); ++i) {
    if (s == kStageNames[i]) return static_cast<Stage>(i);
  }
  fail(ErrorKind::kInvalidArgument, "unknown subcommand '" + s + "'");
}

struct Pipeline::State {
  RunConfig seeded;
  std::optional<EventStore> store;
  std::optional<LabeledDataset> dataset;
  std::optional<LabeledDataset> resampled;
  std::optional<RandomForestModel> model;
  std::optional<ImportanceRank> rank;
  std::optional<CorrelationMatrix> corr;
  std::optional<CrossValidator> cv;
  json timings = json::object();
};

Pipeline::Pipeline(RunConfig config, fs::path out_dir, bool force)
    : config_(std::move(config)), out_(std::move(out_dir)), force_(force), state_(std::make_unique<State>()) {
  config_.validate();
  state_->seeded = config_.with_stage_seeds();
}

Pipeline::~Pipeline() = default;
Pipeline::Pipeline(Pipeline&&) noexcept = default;
Pipeline& Pipeline::operator=(Pipeline&&) noexcept = default;

namespace {

class StageRunner {
 public:
  StageRunner(const RunConfig& user, const RunConfig& cfg, const fs::path& out, bool force,
              std::optional<EventStore>& store, std::optional<LabeledDataset>& dataset,
              std::optional<LabeledDataset>& resampled, std::optional<RandomForestModel>& model,
              std::optional<ImportanceRank>& rank, std::optional<CorrelationMatrix>& corr,
              std::optional<CrossValidator>& cv)
      : user_(user), cfg_(cfg), out_(out), force_(force), store_(store), dataset_(dataset), resampled_(resampled),
        model_(model), rank_(rank), corr_(corr), cv_(cv) {}

  json run(Stage s) {
    switch (s) {
      case Stage::kIngest: return ingest();
      case Stage::kSynth: return synth();
      case Stage::kBuildDataset: return build_dataset();
      case Stage::kResample: return resample();
      case Stage::kTrain: return train();
      case Stage::kRank: return rank();
      case Stage::kFilter: return filter();
      case Stage::kSearch: return search();
      case Stage::kSelect: return select();
      case Stage::kBaseline: return baseline();
      case Stage::kReport: return report();
      case Stage::kRunAll: break;
    }
    fail(ErrorKind::kInternal, "run-all is not a single stage");
  }

 private:
  void claim(std::initializer_list<const char*> outputs) {
    fs::create_directories(out_);
    if (force_) return;
    for (const char* o : outputs) {
      if (fs::exists(out_ / o)) {
        fail(ErrorKind::kInvalidArgument,
             "output '" + std::string(o) + "' already exists in " + out_.string() + "; pass --force to overwrite");
      }
    }
  }

  static json ingest_json(const char* source, const EventStore& store, const std::vector<Date>& datestamps) {
    json dates = json::array();
    for (auto d : datestamps) dates.push_back(d.to_string());
    return versioned("ingest", {{"source", source},
                                {"span", date_range_json(store.span())},
                                {"vessels", store.vessel_ids().size()},
                                {"datestamps", dates},
                                {"load", load_report_json(store.report())}});
  }

  json ingest() {
    if (!cfg_.inputs) {
      fail(ErrorKind::kInvalidArgument, "ingest needs an 'inputs' section in the config (use 'synth' for synthetic data)");
    }
    claim({kStore.name, kIngestJson.name});
    store_ = EventStore::build(read_records(cfg_.inputs->paths), cfg_.inputs->span);
    write_records(store_->records(), out_ / kStore.name);
    const auto j = ingest_json("inputs", *store_, cfg_.catalog.datestamps);
    write_json(out_ / kIngestJson.name, j);
    return {{"vessels", store_->vessel_ids().size()}, {"span", j["span"]}, {"load", j["load"]}};
  }

  json synth() {
    if (cfg_.inputs) fail(ErrorKind::kInvalidArgument, "synth cannot run on a config that names inputs");
    claim({kStore.name, kIngestJson.name, "truth.json"});
    SynthConfig sc = cfg_.synth.value_or(SynthConfig{});
    if (!cfg_.synth) sc.seed = derive_seed(cfg_.seed, kSynthSeed);
    const auto gen = generate(sc);
    write_records(gen.records, out_ / kStore.name);
    store_ = EventStore::build(gen.records, gen.span);
    write_json(out_ / kIngestJson.name, ingest_json("synth", *store_, gen.datestamps));
    write_json(out_ / "truth.json", versioned("truth", {{"truth", to_json(gen.truth)}}));
    return {{"vessels", store_->vessel_ids().size()}, {"informative", gen.truth.informative}};
  }

  const EventStore& store() {
    if (!store_) {
      const json ij = read_artifact(out_, kIngestJson);
      need(out_, kStore);
      store_ = load_store(StorePaths::in_directory(out_ / kStore.name), date_range_from_json(ij.at("span")));
    }
    return *store_;
  }

  std::vector<Date> datestamps() {
    if (!cfg_.catalog.datestamps.empty()) return cfg_.catalog.datestamps;
    std::vector<Date> out;
    const json ij = read_artifact(out_, kIngestJson);
    for (const auto& d : ij.at("datestamps")) out.push_back(parse_date(d.get<std::string>()));
    if (out.empty()) fail(ErrorKind::kInvalidArgument, "no datestamps: set catalog.datestamps in the config");
    return out;
  }

  json build_dataset() {
    const auto dates = datestamps();
    const EventStore& st = store();
    claim({kDatasetCsv.name, kDatasetJson.name});
    const auto catalog = build_catalog(cfg_.catalog.spec, cfg_.catalog.decay, cfg_.catalog.severity);
    auto ds = drop_constant_factors(assemble_dataset(st, catalog, dates, cfg_.catalog.assembly));
    if (ds.n_samples() == 0) fail(ErrorKind::kCoverage, "no (vessel, datestamp) pair yields a complete sample");
    write_dataset_csv(ds, out_ / kDatasetCsv.name);
    json dj = json::array();
    for (auto d : dates) dj.push_back(d.to_string());
    const json j = {{"samples", ds.n_samples()},
                    {"factors", ds.n_factors()},
                    {"catalog_factors", catalog.size()},
                    {"datestamps", dj},
                    {"class_counts", class_counts_json(ds.class_counts())},
                    {"candidates", ds.stats.candidates},
                    {"coverage_gaps", ds.stats.coverage_gaps},
                    {"non_finite", ds.stats.non_finite},
                    {"constant_factors", ds.stats.constant_factors}};
    write_json(out_ / kDatasetJson.name, versioned("dataset", j));
    dataset_ = std::move(ds);
    resampled_.reset();
    return j;
  }

  const LabeledDataset& dataset() {
    if (!dataset_) dataset_ = read_dataset_csv(need(out_, kDatasetCsv));
    return *dataset_;
  }

  json resample() {
    const auto& ds = dataset();
    claim({kResampledCsv.name, kResampleJson.name});
    auto rs = smote_tomek(ds, cfg_.resample);
    write_dataset_csv(rs.data, out_ / kResampledCsv.name);
    const json report = to_json(rs.report);
    write_json(out_ / kResampleJson.name,
               versioned("resample", {{"config", strip_seed(to_json(cfg_.resample))}, {"report", report}}));
    resampled_ = std::move(rs.data);
    return {{"samples", resampled_->n_samples()}, {"class_counts", class_counts_json(resampled_->class_counts())}};
  }

  const LabeledDataset& resampled() {
    if (!resampled_) resampled_ = read_dataset_csv(need(out_, kResampledCsv));
    return *resampled_;
  }

  json train() {
    const auto& rs = resampled();
    claim({kModelJson.name});
    model_ = fit_forest(rs, cfg_.forest);
    save_forest(*model_, out_ / kModelJson.name);
    return {{"trees", model_->trees.size()}, {"features", model_->n_features}};
  }

  const RandomForestModel& model() {
    if (!model_) model_ = load_forest(need(out_, kModelJson));
    return *model_;
  }

  json rank() {
    const auto& rs = resampled();
    const auto& m = model();
    claim({kRankJson.name, "beeswarm.csv"});
    auto out = rank_with_model(m, rs, cfg_.rank_config());
    json per_class = json::object();
    for (int c = 0; c < kRiskLevelCount; ++c) {
      per_class[to_string(static_cast<RiskLevel>(c))] = to_json(out.class_ranks[static_cast<std::size_t>(c)]);
    }
    write_json(out_ / kRankJson.name, versioned("rank", {{"explained_rows", out.explained_rows.size()},
                                                         {"base_values", out.shap.base_values},
                                                         {"global", to_json(out.rank)},
                                                         {"per_class", per_class}}));
    std::vector<std::size_t> top;
    for (std::size_t i = 0; i < out.rank.size() && i < cfg_.beeswarm_factors; ++i) top.push_back(out.rank.entries[i].index);
    write_beeswarm_csv(out.shap, rs, out.explained_rows, top, out_ / "beeswarm.csv");
    rank_ = std::move(out.rank);
    return {{"explained_rows", out.explained_rows.size()}, {"top", rank_->head(10).ids()}};
  }

  const ImportanceRank& initial_rank() {
    if (!rank_) rank_ = importance_rank_from_json(read_artifact(out_, kRankJson).at("global"));
    return *rank_;
  }

  const CorrelationMatrix& correlation() {
    if (!corr_) corr_ = correlation_matrix(resampled(), cfg_.filter.scope);
    return *corr_;
  }

  json filter() {
    const auto& r = initial_rank();
    const auto& corr = correlation();
    claim({"correlation.csv", kFilterJson.name});
    write_correlation_csv(corr, out_ / "correlation.csv");
    const auto result = sliding_filter(r, corr, cfg_.filter);
    write_json(out_ / kFilterJson.name,
               versioned("filter", {{"config", to_json(cfg_.filter)}, {"result", to_json(result)}}));
    return {{"initial", r.size()}, {"filtered", result.filtered.size()}};
  }

  CrossValidator& validator() {
    if (!cv_) {
      if (cfg_.mode == PipelineMode::kNested) {
        cv_ = CrossValidator::nested(dataset(), cfg_.cv, cfg_.resample, cfg_.rank_config(), cfg_.filter.scope);
      } else {
        cv_ = CrossValidator::faithful(resampled(), cfg_.cv);
      }
    }
    return *cv_;
  }

  json search() {
    const auto& r = initial_rank();
    const auto& corr = correlation();
    if (cfg_.mode == PipelineMode::kNested) dataset();
    claim({kSearchJson.name, "grid_trace.csv"});
    auto& cv = validator();
    const auto grid = grid_search(cv, r, corr, cfg_.grid, cfg_.filter);
    const auto& best = grid.cells[grid.best];
    write_json(out_ / kSearchJson.name, versioned("search", {{"mode", to_string(cfg_.mode)},
                                                             {"grid", to_json(grid)},
                                                             {"best",
                                                              {{"tau", best.tau},
                                                               {"window", best.window},
                                                               {"filtered_size", best.filtered_size},
                                                               {"top", to_json(best.top)}}}}));
    write_grid_trace_csv(grid, out_ / "grid_trace.csv");
    return {{"cells", grid.cells.size()}, {"best_tau", best.tau}, {"best_window", best.window}, {"n", best.top.n},
            {"f1", best.top.best().cv.mean.f1}};
  }

  json select() {
    const json sj = read_artifact(out_, kSearchJson);
    const auto& r = initial_rank();
    const auto& corr = correlation();
    claim({kSelectionJson.name, "n_trace.csv"});
    const json& best = sj.at("best");
    SelectionResult sel;
    sel.filter = cfg_.filter;
    sel.filter.r_tau = best.at("tau").get<double>();
    sel.filter.window = best.at("window").get<int>();
    sel.filtered = sliding_filter(r, corr, sel.filter);
    sel.top = top_n_from_json(best.at("top"));
    sel.criterion = sel.top.best().cv.mean;
    const auto head = sel.filtered.filtered.head(static_cast<std::size_t>(sel.top.n)).ids();
    if (head != sel.top.key_factors) {
      fail(ErrorKind::kInvariant, "search.json does not match the current rank and filter; rerun 'vrisk search'");
    }
    write_json(out_ / kSelectionJson.name, versioned("selection", {{"mode", sj.at("mode")}, {"selection", to_json(sel)}}));
    write_n_trace_csv(sel.top, out_ / "n_trace.csv", sel.filter.r_tau, sel.filter.window);
    return {{"tau", sel.filter.r_tau}, {"window", sel.filter.window}, {"n", sel.top.n},
            {"key_factors", sel.top.key_factors}};
  }

  json baseline() {
    const auto& r = initial_rank();
    if (cfg_.mode == PipelineMode::kNested) dataset();
    else resampled();
    claim({kBaselineJson.name, "baseline_trace.csv"});
    const auto base = conventional_baseline(validator(), r);
    write_json(out_ / kBaselineJson.name, versioned("baseline", {{"mode", to_string(cfg_.mode)}, {"top", to_json(base)}}));
    write_n_trace_csv(base, out_ / "baseline_trace.csv", std::nullopt, std::nullopt);
    return {{"n", base.n}, {"key_factors", base.key_factors}, {"f1", base.best().cv.mean.f1}};
  }

  json report() {
    json payload = report_payload(out_, user_);
    claim({"report.json", "key_factors.md"});
    json timings = json::object();
    if (fs::exists(out_ / "timings.json")) timings = read_json_file(out_ / "timings.json");
    write_json(out_ / "report.json", {{"payload", payload}, {"timings", timings}});

    std::string md = "# Key factors\n\n";
    const auto& sel = payload.at("selection");
    std::ostringstream head;
    head << "Filter: r_tau = " << sel.at("filter").at("r_tau").get<double>()
         << ", window = " << sel.at("filter").at("window").get<int>() << ", n = " << sel.at("n").get<int>()
         << ", mode = " << payload.at("mode").get<std::string>() << ".\n\n";
    md += head.str();
    md += table_from_json(payload.at("key_factor_table"));
    md += "\n# Baseline (unfiltered rank)\n\n";
    md += table_from_json(payload.at("baseline_table"));
    write_text(out_ / "key_factors.md", md);
    return {{"key_factors", sel.at("key_factors")}, {"report", (out_ / "report.json").string()}};
  }

  static std::string table_from_json(const json& rows) {
    std::vector<RankEntry> entries;
    for (const auto& r : rows) entries.push_back({0, r.at("factor_id").get<std::string>(), r.at("importance").get<double>()});
    return key_factor_markdown(entries);
  }

  const RunConfig& user_;
  const RunConfig& cfg_;
  fs::path out_;
  bool force_;
  std::optional<EventStore>& store_;
  std::optional<LabeledDataset>& dataset_;
  std::optional<LabeledDataset>& resampled_;
  std::optional<RandomForestModel>& model_;
  std::optional<ImportanceRank>& rank_;
  std::optional<CorrelationMatrix>& corr_;
  std::optional<CrossValidator>& cv_;
};

void record_timings(const fs::path& out, const json& timings) {
  json existing = json::object();
  if (fs::exists(out / "timings.json")) {
    try {
      existing = read_json_file(out / "timings.json");
    } catch (const Error&) {
      existing = json::object();
    }
  }
  for (auto it = timings.begin(); it != timings.end(); ++it) existing[it.key()] = *it;
  write_json(out / "timings.json", existing);
}

}  // namespace

json Pipeline::run(Stage stage) {
  auto& s = *state_;
  StageRunner runner(config_, s.seeded, out_, force_, s.store, s.dataset, s.resampled, s.model, s.rank, s.corr, s.cv);
  using clock = std::chrono::steady_clock;
  auto timed = [&](Stage st) {
    const auto t0 = clock::now();
    json summary = runner.run(st);
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    if (st != Stage::kReport) record_timings(out_, {{to_string(st), secs}});
    return summary;
  };
  if (stage != Stage::kRunAll) {
    json out = timed(stage);
    out["stage"] = to_string(stage);
    return out;
  }
  json stages = json::object();
  const Stage source = config_.inputs ? Stage::kIngest : Stage::kSynth;
  for (Stage st : {source, Stage::kBuildDataset, Stage::kResample, Stage::kTrain, Stage::kRank, Stage::kFilter,
                   Stage::kSearch, Stage::kSelect, Stage::kBaseline, Stage::kReport}) {
    stages[to_string(st)] = timed(st);
  }
  return {{"stage", "run-all"}, {"stages", stages}};
}

// --- report ------------------------------------------------------------------

std::string key_factor_markdown(const std::vector<RankEntry>& factors) {
  std::ostringstream s;
  s << "| Rank | Factor | Category | Description | Importance |\n";
  s << "|---:|---|---|---|---:|\n";
  for (std::size_t i = 0; i < factors.size(); ++i) {
    const auto d = parse_factor_id(factors[i].id);
    s << "| " << i + 1 << " | `" << factors[i].id << "` | " << category_name(d.category()) << " | "
      << d.description() << " | " << csv::format_double(factors[i].importance) << " |\n";
  }
  return s.str();
}

json report_payload(const fs::path& out, const RunConfig& config) {
  const json dataset = read_artifact(out, kDatasetJson);
  const json resample = read_artifact(out, kResampleJson);
  const json rank = read_artifact(out, kRankJson);
  const json filter = read_artifact(out, kFilterJson);
  const json search = read_artifact(out, kSearchJson);
  const json selection = read_artifact(out, kSelectionJson);
  const json baseline = read_artifact(out, kBaselineJson);
  const json ingest = read_artifact(out, kIngestJson);

  const auto initial = importance_rank_from_json(rank.at("global"));
  const json& sel = selection.at("selection");
  const auto key_ids = sel.at("key_factors").get<std::vector<std::string>>();
  const auto base_ids = baseline.at("top").at("key_factors").get<std::vector<std::string>>();
  const auto key_entries = entries_for(initial, key_ids);
  const auto base_entries = entries_for(initial, base_ids);

  // Correlation summary per scope group, against the chosen threshold.
  const double tau = sel.at("filter").at("r_tau").get<double>();
  const auto resampled = read_dataset_csv(need(out, kResampledCsv));
  const auto corr = correlation_matrix(resampled, config.filter.scope);
  std::map<std::string, std::array<double, 4>> groups;  // factors, pairs, pairs above tau, max |r|
  std::vector<std::string> group_of;
  for (const auto& f : resampled.catalog.factors) {
    group_of.push_back(f.scope_group());
    groups[f.scope_group()][0] += 1;
  }
  for (std::size_t a = 0; a < corr.size(); ++a) {
    for (std::size_t b = a + 1; b < corr.size(); ++b) {
      if (group_of[a] != group_of[b]) continue;
      auto& g = groups[group_of[a]];
      const double r = std::abs(corr(a, b));
      g[1] += 1;
      if (r > tau) g[2] += 1;
      g[3] = std::max(g[3], r);
    }
  }
  json corr_summary = json::object();
  for (const auto& [name, g] : groups) {
    corr_summary[name] = {{"factors", static_cast<std::size_t>(g[0])},
                          {"pairs", static_cast<std::size_t>(g[1])},
                          {"pairs_above_tau", static_cast<std::size_t>(g[2])},
                          {"max_abs_r", g[3]}};
  }

  json grid_summary = json::array();
  for (const auto& cell : search.at("grid").at("cells")) grid_summary.push_back(cell);

  json per_class_shares = json::object();
  for (const auto& name : class_names()) {
    const auto cr = importance_rank_from_json(rank.at("per_class").at(name));
    per_class_shares[name] = shares_json(entries_for(cr, key_ids));
  }

  json base_best;
  for (const auto& p : baseline.at("top").at("trace")) {
    if (p.at("n") == baseline.at("top").at("n")) base_best = p.at("mean");
  }

  return {{"config", to_json(config)},
          {"mode", to_string(config.mode)},
          {"dataset",
           {{"source", ingest.at("source")},
            {"span", ingest.at("span")},
            {"vessels", ingest.at("vessels")},
            {"load", ingest.at("load")},
            {"samples", dataset.at("samples")},
            {"factors", dataset.at("factors")},
            {"catalog_factors", dataset.at("catalog_factors")},
            {"datestamps", dataset.at("datestamps")},
            {"class_counts", dataset.at("class_counts")},
            {"candidates", dataset.at("candidates")},
            {"coverage_gaps", dataset.at("coverage_gaps")},
            {"non_finite", dataset.at("non_finite")},
            {"constant_factors", dataset.at("constant_factors")},
            {"resample", resample.at("report")}}},
          {"initial_rank", rank.at("global")},
          {"explained_rows", rank.at("explained_rows")},
          {"base_values", rank.at("base_values")},
          {"correlation_summary", corr_summary},
          {"filter", filter.at("result")},
          {"grid", grid_summary},
          {"selection",
           {{"filter", sel.at("filter")},
            {"n", sel.at("n")},
            {"key_factors", key_ids},
            {"criterion", sel.at("criterion")},
            {"filtered_rank", sel.at("filtered_rank")},
            {"filter_trace", sel.at("filter_trace")},
            {"n_trace", sel.at("n_trace")}}},
          {"baseline",
           {{"n", baseline.at("top").at("n")},
            {"key_factors", base_ids},
            {"criterion", base_best},
            {"n_trace", baseline.at("top").at("trace")}}},
          {"category_aggregates",
           {{"initial_rank", shares_json(initial.entries)},
            {"key_factors", shares_json(key_entries)},
            {"baseline", shares_json(base_entries)},
            {"key_factors_per_class", per_class_shares}}},
          {"key_factor_table", factor_table_json(key_entries)},
          {"baseline_table", factor_table_json(base_entries)},
          {"artifacts",
           {{"beeswarm", "beeswarm.csv"},
            {"correlation", "correlation.csv"},
            {"grid_trace", "grid_trace.csv"},
            {"n_trace", "n_trace.csv"},
            {"baseline_trace", "baseline_trace.csv"}}}};
}

}  // namespace vrisk
