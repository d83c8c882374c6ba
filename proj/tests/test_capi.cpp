// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "vrisk/vrisk.h"

namespace {

namespace fs = std::filesystem;

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("vrisk_capi_" + tag + "_" + std::to_string(getpid()) + "_" +
                                         std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

constexpr const char* kTinyConfig = R"({
  "synth": {"n_vessels": 80, "n_doc_companies": 8, "n_flags": 4},
  "forest": {"n_trees": 10, "max_depth": 5},
  "explain_samples": 40,
  "grid": {"taus": [0.5], "windows": [4]},
  "cv": {"folds": 3, "max_n": 3, "forest": {"n_trees": 8, "max_depth": 4}},
  "seed": 3
})";

std::string take(char* s) {
  std::string out = s ? s : "";
  vrisk_string_free(s);
  return out;
}

// Builds a small dataset through the pipeline and returns its CSV path.
fs::path build_dataset(const fs::path& dir) {
  vrisk_pipeline* p = nullptr;
  EXPECT_EQ(vrisk_pipeline_open(kTinyConfig, nullptr, dir.c_str(), 0, &p), VRISK_OK) << vrisk_last_error();
  EXPECT_EQ(vrisk_pipeline_run(p, "synth", nullptr), VRISK_OK) << vrisk_last_error();
  char* summary = nullptr;
  EXPECT_EQ(vrisk_pipeline_run(p, "build-dataset", &summary), VRISK_OK) << vrisk_last_error();
  EXPECT_NE(take(summary).find("samples"), std::string::npos);
  vrisk_pipeline_free(p);
  return dir / "dataset.csv";
}

TEST(CApi, StatusNamesAndExitCodes) {
  EXPECT_STREQ(vrisk_status_name(VRISK_OK), "ok");
  EXPECT_STRNE(vrisk_status_name(VRISK_ERR_PARSE), vrisk_status_name(VRISK_ERR_IO));
  EXPECT_EQ(vrisk_exit_code(VRISK_OK), 0);
  EXPECT_EQ(vrisk_exit_code(VRISK_ERR_INVALID_ARGUMENT), 1);
  EXPECT_EQ(vrisk_exit_code(VRISK_ERR_MISSING_ARTIFACT), 1);
  for (auto s : {VRISK_ERR_PARSE, VRISK_ERR_INVARIANT, VRISK_ERR_COVERAGE, VRISK_ERR_NOT_FOUND, VRISK_ERR_IO})
    EXPECT_EQ(vrisk_exit_code(s), 2);
  EXPECT_EQ(vrisk_exit_code(VRISK_ERR_INTERNAL), 3);
  EXPECT_STRNE(vrisk_version(), "");
}

TEST(CApi, DefaultConfigIsJson) {
  char* text = nullptr;
  ASSERT_EQ(vrisk_default_config(&text), VRISK_OK);
  const std::string s = take(text);
  EXPECT_EQ(s.front(), '{');
  EXPECT_NE(s.find("\"grid\""), std::string::npos);
  EXPECT_EQ(vrisk_default_config(nullptr), VRISK_ERR_INVALID_ARGUMENT);
}

TEST(CApi, ErrorsSetLastError) {
  vrisk_pipeline* p = nullptr;
  EXPECT_EQ(vrisk_pipeline_open("{not json", nullptr, "/tmp/x", 0, &p), VRISK_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(p, nullptr);
  EXPECT_NE(std::string(vrisk_last_error()), "");
  EXPECT_EQ(vrisk_pipeline_open(R"({"bogus": 1})", nullptr, "/tmp/x", 0, &p), VRISK_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::string(vrisk_last_error()).find("bogus"), std::string::npos);
  EXPECT_EQ(vrisk_pipeline_open(nullptr, nullptr, nullptr, 0, &p), VRISK_ERR_INVALID_ARGUMENT);

  ScratchDir dir("missing");
  ASSERT_EQ(vrisk_pipeline_open(kTinyConfig, nullptr, dir.path().c_str(), 0, &p), VRISK_OK);
  EXPECT_EQ(vrisk_pipeline_run(p, "train", nullptr), VRISK_ERR_MISSING_ARTIFACT);
  EXPECT_NE(std::string(vrisk_last_error()).find("resampled.csv"), std::string::npos);
  EXPECT_EQ(vrisk_pipeline_run(p, "launch", nullptr), VRISK_ERR_INVALID_ARGUMENT);
  vrisk_pipeline_free(p);

  vrisk_dataset* d = nullptr;
  EXPECT_NE(vrisk_dataset_read_csv("/no/such/dataset.csv", &d), VRISK_OK);
  EXPECT_EQ(d, nullptr);
  vrisk_pipeline_free(nullptr);
  vrisk_dataset_free(nullptr);
  vrisk_forest_free(nullptr);
}

TEST(CApi, PipelineOverridesAndConfig) {
  ScratchDir dir("overrides");
  vrisk_pipeline* p = nullptr;
  ASSERT_EQ(vrisk_pipeline_open(kTinyConfig, nullptr, dir.path().c_str(), 0, &p), VRISK_OK);
  EXPECT_EQ(vrisk_pipeline_set_seed(p, 99), VRISK_OK);
  EXPECT_EQ(vrisk_pipeline_set_mode(p, "nested"), VRISK_OK);
  EXPECT_EQ(vrisk_pipeline_set_mode(p, "upside-down"), VRISK_ERR_INVALID_ARGUMENT);
  char* cfg = nullptr;
  ASSERT_EQ(vrisk_pipeline_config(p, &cfg), VRISK_OK);
  const auto j = nlohmann::json::parse(take(cfg));
  EXPECT_EQ(j.at("seed"), 99);
  EXPECT_EQ(j.at("mode"), "nested");
  vrisk_pipeline_free(p);
}

TEST(CApi, DatasetForestAndShap) {
  ScratchDir dir("forest");
  const auto csv = build_dataset(dir.path());
  vrisk_dataset* d = nullptr;
  ASSERT_EQ(vrisk_dataset_read_csv(csv.c_str(), &d), VRISK_OK) << vrisk_last_error();
  size_t n = 0, m = 0;
  ASSERT_EQ(vrisk_dataset_shape(d, &n, &m), VRISK_OK);
  ASSERT_GT(n, 10u);
  ASSERT_GT(m, 1u);
  char* id = nullptr;
  ASSERT_EQ(vrisk_dataset_factor_id(d, 0, &id), VRISK_OK);
  EXPECT_FALSE(take(id).empty());
  EXPECT_EQ(vrisk_dataset_factor_id(d, m, &id), VRISK_ERR_NOT_FOUND);
  std::vector<int> labels(n);
  ASSERT_EQ(vrisk_dataset_labels(d, labels.data(), n), VRISK_OK);
  for (int y : labels) {
    EXPECT_GE(y, 0);
    EXPECT_LE(y, 2);
  }
  std::vector<double> row(m);
  EXPECT_EQ(vrisk_dataset_row(d, 0, row.data(), m - 1), VRISK_ERR_INVALID_ARGUMENT);

  vrisk_forest* f = nullptr;
  ASSERT_EQ(vrisk_forest_fit(d, R"({"n_trees": 12, "max_depth": 5, "seed": 2})", &f), VRISK_OK) << vrisk_last_error();
  size_t nf = 0, nc = 0, nt = 0;
  ASSERT_EQ(vrisk_forest_shape(f, &nf, &nc, &nt), VRISK_OK);
  EXPECT_EQ(nf, m);
  EXPECT_EQ(nc, 3u);
  EXPECT_EQ(nt, 12u);

  const auto model_path = dir.path() / "capi_model.json";
  ASSERT_EQ(vrisk_forest_save(f, model_path.c_str()), VRISK_OK);
  vrisk_forest* g = nullptr;
  ASSERT_EQ(vrisk_forest_load(model_path.c_str(), &g), VRISK_OK);

  std::vector<double> proba(3), proba2(3), phi(m * 3), base(3);
  for (size_t i = 0; i < n; i += n / 10) {
    ASSERT_EQ(vrisk_dataset_row(d, i, row.data(), m), VRISK_OK);
    ASSERT_EQ(vrisk_forest_predict_proba(f, row.data(), m, proba.data(), 3), VRISK_OK);
    ASSERT_EQ(vrisk_forest_predict_proba(g, row.data(), m, proba2.data(), 3), VRISK_OK);
    EXPECT_NEAR(proba[0] + proba[1] + proba[2], 1.0, 1e-12);
    EXPECT_EQ(proba, proba2);
    ASSERT_EQ(vrisk_forest_shap(f, row.data(), m, phi.data(), base.data(), 3), VRISK_OK);
    for (size_t c = 0; c < 3; ++c) {
      double sum = base[c];
      for (size_t j = 0; j < m; ++j) sum += phi[j * 3 + c];
      EXPECT_NEAR(sum, proba[c], 1e-9);
    }
  }
  EXPECT_EQ(vrisk_forest_predict_proba(f, row.data(), m + 1, proba.data(), 3), VRISK_ERR_INVALID_ARGUMENT);
  vrisk_forest* bad = nullptr;
  EXPECT_EQ(vrisk_forest_fit(d, R"({"n_trees": 0})", &bad), VRISK_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(bad, nullptr);
  vrisk_forest_free(g);
  vrisk_forest_free(f);
  vrisk_dataset_free(d);
}

TEST(CApi, TinyRunAll) {
  ScratchDir dir("run_all");
  vrisk_pipeline* p = nullptr;
  ASSERT_EQ(vrisk_pipeline_open(kTinyConfig, nullptr, dir.path().c_str(), 0, &p), VRISK_OK);
  char* summary = nullptr;
  ASSERT_EQ(vrisk_pipeline_run(p, "run-all", &summary), VRISK_OK) << vrisk_last_error();
  EXPECT_NE(take(summary).find("key_factors"), std::string::npos);
  vrisk_pipeline_free(p);
  EXPECT_TRUE(fs::exists(dir.path() / "report.json"));
  EXPECT_TRUE(fs::exists(dir.path() / "key_factors.md"));
}

}  // namespace
