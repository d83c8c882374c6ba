// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <regex>

#include "test_util.hpp"
#include "vrisk/csv.hpp"
#include "vrisk/pipeline.hpp"

namespace vrisk {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json tiny_config() {
  return json::parse(R"({
    "synth": {"n_vessels": 120, "n_doc_companies": 12, "n_flags": 5},
    "forest": {"n_trees": 15, "max_depth": 6},
    "explain_samples": 60,
    "grid": {"taus": [0.3, 0.6], "windows": [3, 5]},
    "cv": {"folds": 3, "max_n": 4, "forest": {"n_trees": 10, "max_depth": 5}},
    "seed": 11
  })");
}

json read_json(const fs::path& p) {
  std::ifstream f(p);
  return json::parse(f);
}

std::string read_text(const fs::path& p) {
  std::ifstream f(p);
  return {std::istreambuf_iterator<char>(f), {}};
}

TEST(RunConfig, RejectsUnknownKeysAndSubSeeds) {
  EXPECT_THROW(run_config_from_json(json{{"sed", 1}}), Error);
  EXPECT_THROW(run_config_from_json(json{{"forest", {{"seed", 3}}}}), Error);
  EXPECT_THROW(run_config_from_json(json{{"cv", {{"forest", {{"seed", 3}}}}}}), Error);
  EXPECT_THROW(run_config_from_json(json{{"synth", {{"seed", 3}}}}), Error);
  EXPECT_THROW(run_config_from_json(json{{"catalog", {{"decay", {1, 2}}}}}), Error);
  EXPECT_THROW(run_config_from_json(json{{"mode", "sideways"}}), Error);
  const auto c = run_config_from_json(json{{"mode", "nested"}, {"seed", 5}});
  EXPECT_EQ(c.mode, PipelineMode::kNested);
  EXPECT_EQ(c.seed, 5u);
}

TEST(RunConfig, InputsAndSynthAreExclusive) {
  testing::TempDir dir("cfg_inputs");
  std::ofstream(dir.path() / "profiles.csv")
      << "vessel_id,dwt,max_dwt,depth,draught,gross_tonnage,length_bp,length_oa,net_tonnage\n";
  json j = {{"inputs", {{"profiles", (dir.path() / "profiles.csv").string()}}}, {"synth", json::object()}};
  EXPECT_THROW(run_config_from_json(j), Error);
  j.erase("synth");
  EXPECT_NO_THROW(run_config_from_json(j));
  EXPECT_THROW(run_config_from_json(json{{"inputs", {{"profiles", "/no/such/file.csv"}}}}), Error);
}

TEST(RunConfig, StageSeedsDeriveFromMaster) {
  auto c = run_config_from_json(tiny_config());
  const auto a = c.with_stage_seeds();
  c.seed = 12;
  const auto b = c.with_stage_seeds();
  EXPECT_NE(a.forest.seed, b.forest.seed);
  EXPECT_NE(a.forest.seed, a.cv.forest.seed);
  EXPECT_NE(a.resample.seed, a.cv.seed);
  const auto round = run_config_from_json(to_json(c));
  EXPECT_EQ(to_json(round), to_json(c));
}

TEST(Pipeline, RunAllProducesArtifactsAndReport) {
  testing::TempDir dir("run_all");
  Pipeline p(run_config_from_json(tiny_config()), dir.path());
  const auto summary = p.run(Stage::kRunAll);
  for (const char* f : {"ingest.json", "truth.json", "dataset.csv", "dataset.json", "resampled.csv", "resample.json",
                        "model.json", "rank.json", "beeswarm.csv", "correlation.csv", "filter.json", "search.json",
                        "grid_trace.csv", "selection.json", "n_trace.csv", "baseline.json", "baseline_trace.csv",
                        "report.json", "key_factors.md", "timings.json"})
    EXPECT_TRUE(fs::exists(dir.path() / f)) << f;
  const auto report = read_json(dir.path() / "report.json");
  const auto& payload = report.at("payload");
  const auto keys = payload.at("selection").at("key_factors");
  EXPECT_FALSE(keys.empty());
  EXPECT_LE(keys.size(), 4u);
  EXPECT_EQ(payload.at("grid").size(), 4u);
  EXPECT_FALSE(payload.contains("timings"));
  EXPECT_EQ(payload, report_payload(dir.path(), p.config()));

  // Markdown rows follow the description grammar of their ids.
  const std::string md = read_text(dir.path() / "key_factors.md");
  for (const auto& id : keys) {
    const auto d = parse_factor_id(id.get<std::string>());
    EXPECT_NE(md.find("`" + id.get<std::string>() + "` | " + category_name(d.category()) + " | " + d.description()),
              std::string::npos)
        << id;
  }
  csv::Reader bees(dir.path() / "beeswarm.csv");
  EXPECT_EQ(bees.header(), (std::vector<std::string>{"factor_id", "sample_id", "class", "shap_value", "factor_value"}));
}

TEST(Pipeline, RefusesOverwriteWithoutForce) {
  testing::TempDir dir("overwrite");
  const auto cfg = run_config_from_json(tiny_config());
  Pipeline(cfg, dir.path()).run(Stage::kSynth);
  try {
    Pipeline(cfg, dir.path()).run(Stage::kSynth);
    FAIL() << "expected a refusal";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidArgument);
    EXPECT_NE(std::string(e.what()).find("--force"), std::string::npos);
  }
  EXPECT_NO_THROW(Pipeline(cfg, dir.path(), true).run(Stage::kSynth));
}

TEST(Pipeline, MissingArtifactNamesItsProducer) {
  testing::TempDir dir("missing");
  const auto cfg = run_config_from_json(tiny_config());
  try {
    Pipeline(cfg, dir.path()).run(Stage::kTrain);
    FAIL() << "expected a missing artifact";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMissingArtifact);
    EXPECT_NE(std::string(e.what()).find("resampled.csv"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("vrisk resample"), std::string::npos);
  }
  try {
    Pipeline(cfg, dir.path()).run(Stage::kSelect);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("vrisk search"), std::string::npos);
  }
}

TEST(Pipeline, StagesResumeFromDisk) {
  testing::TempDir dir("stages");
  auto j = tiny_config();
  j["filter"] = {{"r_tau", 1.0}};
  const auto cfg = run_config_from_json(j);
  for (Stage s : {Stage::kSynth, Stage::kBuildDataset, Stage::kResample, Stage::kTrain, Stage::kRank})
    Pipeline(cfg, dir.path()).run(s);
  const auto f = Pipeline(cfg, dir.path()).run(Stage::kFilter);
  // r_tau = 1 removes only exact duplicates, which the screened catalog lacks.
  EXPECT_EQ(f.at("filtered"), f.at("initial"));
  for (Stage s : {Stage::kSearch, Stage::kSelect, Stage::kBaseline, Stage::kReport}) Pipeline(cfg, dir.path()).run(s);
  EXPECT_TRUE(fs::exists(dir.path() / "key_factors.md"));

  // Same config in one process gives the same payload.
  testing::TempDir once("stages_once");
  Pipeline(cfg, once.path()).run(Stage::kRunAll);
  EXPECT_EQ(read_json(once.path() / "report.json").at("payload"), read_json(dir.path() / "report.json").at("payload"));
}

TEST(Pipeline, IngestFromCsvInputs) {
  testing::TempDir src("ingest_src"), out("ingest_out");
  SynthConfig sc;
  sc.n_vessels = 60;
  sc.n_doc_companies = 6;
  sc.n_flags = 3;
  sc.seed = 4;
  const auto gen = generate(sc);
  write_records(gen.records, src.path());
  json dates = json::array();
  for (auto d : gen.datestamps) dates.push_back(d.to_string());
  json j = {{"inputs",
             {{"dir", src.path().string()},
              {"span", {{"start", gen.span.start.to_string()}, {"end", gen.span.end.to_string()}}}}},
            {"catalog", {{"datestamps", dates}}}};
  Pipeline p(run_config_from_json(j), out.path());
  const auto s = p.run(Stage::kIngest);
  EXPECT_EQ(s.at("vessels"), 60);
  const auto b = p.run(Stage::kBuildDataset);
  EXPECT_GT(b.at("samples").get<int>(), 0);
  EXPECT_THROW(Pipeline(run_config_from_json(tiny_config()), out.path()).run(Stage::kIngest), Error);
}

TEST(Pipeline, RunAllIsDeterministic) {
  testing::TempDir a("det_a"), b("det_b");
  const auto cfg = run_config_from_json(tiny_config());
  Pipeline(cfg, a.path()).run(Stage::kRunAll);
  Pipeline(cfg, b.path()).run(Stage::kRunAll);
  EXPECT_EQ(read_json(a.path() / "report.json").at("payload"), read_json(b.path() / "report.json").at("payload"));
  EXPECT_EQ(read_text(a.path() / "model.json"), read_text(b.path() / "model.json"));
  EXPECT_EQ(read_text(a.path() / "key_factors.md"), read_text(b.path() / "key_factors.md"));
}

TEST(KeyFactorMarkdown, RowsCarryDescriptions) {
  const std::string md = key_factor_markdown({{0, "psc.deficiencies.y2", 0.5}, {1, "profile.pf3", 0.25}});
  EXPECT_NE(md.find("| 1 | `psc.deficiencies.y2` |"), std::string::npos);
  EXPECT_NE(md.find(parse_factor_id("psc.deficiencies.y2").description()), std::string::npos);
  EXPECT_NE(md.find("| 2 | `profile.pf3` |"), std::string::npos);
  EXPECT_TRUE(std::regex_search(md, std::regex("in the past second year")));
}

}  // namespace
}  // namespace vrisk
