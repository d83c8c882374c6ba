// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace {

namespace fs = std::filesystem;

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("vrisk_cli_" + tag + "_" + std::to_string(getpid()) + "_" +
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

std::string quote(const std::string& s) { return "'" + s + "'"; }

// Runs the CLI with stdout and stderr captured to `log`; returns the exit status.
int run(const std::string& args, const fs::path& log) {
  const std::string cmd = quote(VRISK_CLI_PATH) + " " + args + " > " + quote(log.string()) + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  return {std::istreambuf_iterator<char>(f), {}};
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

constexpr const char* kTinyConfig = R"({
  "synth": {"n_vessels": 80, "n_doc_companies": 8, "n_flags": 4},
  "forest": {"n_trees": 10, "max_depth": 5},
  "explain_samples": 40,
  "grid": {"taus": [0.5], "windows": [4]},
  "cv": {"folds": 3, "max_n": 3, "forest": {"n_trees": 8, "max_depth": 4}},
  "seed": 3
})";

TEST(Cli, HelpAndUsageErrors) {
  ScratchDir dir("usage");
  const auto log = dir.path() / "log";
  EXPECT_EQ(run("--help", log), 0);
  EXPECT_NE(slurp(log).find("run-all"), std::string::npos);
  EXPECT_EQ(run("", log), 1);
  EXPECT_EQ(run("fly --out " + quote(dir.path().string()), log), 1);
  EXPECT_EQ(run("synth", log), 1);
  EXPECT_NE(slurp(log).find("--out"), std::string::npos);
  EXPECT_EQ(run("synth --mode sideways --out x", log), 1);
}

TEST(Cli, DefaultConfigPrintsJson) {
  ScratchDir dir("default");
  const auto log = dir.path() / "log";
  ASSERT_EQ(run("default-config", log), 0);
  const auto text = slurp(log);
  EXPECT_EQ(text.front(), '{');
  EXPECT_NE(text.find("\"resample\""), std::string::npos);
}

TEST(Cli, BadConfigAndMissingArtifact) {
  ScratchDir dir("bad");
  const auto log = dir.path() / "log";
  const auto bad = write_config(dir.path(), R"({"forest": {"n_trees": -3}})");
  EXPECT_EQ(run("synth --config " + quote(bad.string()) + " --out " + quote((dir.path() / "o").string()), log), 1);
  const auto unknown = write_config(dir.path(), R"({"forrest": {}})");
  EXPECT_EQ(run("synth --config " + quote(unknown.string()) + " --out " + quote((dir.path() / "o").string()), log), 1);
  EXPECT_NE(slurp(log).find("forrest"), std::string::npos);

  EXPECT_EQ(run("train --out " + quote((dir.path() / "empty").string()), log), 1);
  EXPECT_NE(slurp(log).find("vrisk resample"), std::string::npos);
  EXPECT_EQ(run("report --out " + quote((dir.path() / "empty").string()), log), 1);
}

TEST(Cli, TinyRunAllAndRefusal) {
  ScratchDir dir("run");
  const auto log = dir.path() / "log";
  const auto cfg = write_config(dir.path(), kTinyConfig);
  const auto out = dir.path() / "out";
  const std::string base = "--config " + quote(cfg.string()) + " --out " + quote(out.string()) + " --jobs 1";
  ASSERT_EQ(run("run-all " + base, log), 0) << slurp(log);
  EXPECT_NE(slurp(log).find("key_factors"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "report.json"));
  EXPECT_EQ(run("synth " + base, log), 1);
  EXPECT_NE(slurp(log).find("--force"), std::string::npos);
  EXPECT_EQ(run("report --force " + base, log), 0) << slurp(log);
}

TEST(Cli, DataErrorsExitTwo) {
  ScratchDir dir("data");
  const auto log = dir.path() / "log";
  const auto in = dir.path() / "in";
  fs::create_directories(in);
  std::ofstream(in / "profiles.csv")
      << "vessel_id,dwt,max_dwt,depth,draught,gross_tonnage,length_bp,length_oa,net_tonnage\nV1,1,2,3,4,5,6,7,8\n";
  std::ofstream(in / "incidents.csv") << "vessel_id,date,category\nV1,not-a-date,A\n";
  const auto cfg = write_config(dir.path(), R"({"inputs": "in"})");
  EXPECT_EQ(run("ingest --config " + quote(cfg.string()) + " --out " + quote((dir.path() / "o").string()), log), 2)
      << slurp(log);
  EXPECT_NE(slurp(log).find("incidents.csv"), std::string::npos);
}

}  // namespace
