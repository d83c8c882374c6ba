// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Talks to the library only through vrisk.h.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vrisk/vrisk.h"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string mode;
  unsigned jobs = 0;
  bool force = false;
};

int report_error(vrisk_status s) {
  std::cerr << "vrisk: " << vrisk_status_name(s) << ": " << vrisk_last_error() << "\n";
  return vrisk_exit_code(s);
}

int run_stage(const std::string& stage, const Options& opt) {
  std::string config_text;
  std::string config_dir;
  if (!opt.config.empty()) {
    std::ifstream in(opt.config, std::ios::binary);
    if (!in) {
      std::cerr << "vrisk: cannot read config file " << opt.config << "\n";
      return 1;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    config_text = ss.str();
    config_dir = std::filesystem::absolute(opt.config).parent_path().string();
  }

  vrisk_status s = vrisk_set_jobs(opt.jobs);
  if (s != VRISK_OK) return report_error(s);

  vrisk_pipeline* p = nullptr;
  s = vrisk_pipeline_open(config_text.empty() ? nullptr : config_text.c_str(),
                          config_dir.empty() ? nullptr : config_dir.c_str(), opt.out.c_str(), opt.force ? 1 : 0, &p);
  if (s != VRISK_OK) return report_error(s);
  if (opt.seed) s = vrisk_pipeline_set_seed(p, *opt.seed);
  if (s == VRISK_OK && !opt.mode.empty()) s = vrisk_pipeline_set_mode(p, opt.mode.c_str());
  char* summary = nullptr;
  if (s == VRISK_OK) s = vrisk_pipeline_run(p, stage.c_str(), &summary);
  vrisk_pipeline_free(p);
  if (s != VRISK_OK) return report_error(s);
  std::cout << summary << "\n";
  vrisk_string_free(summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vessel incident-risk factor selection"};
  app.set_version_flag("--version", std::string(vrisk_version()));
  app.require_subcommand(1);
  app.fallthrough();

  Options opt;
  app.add_option("--config", opt.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", opt.out, "output directory");
  app.add_option("--seed", opt.seed, "master seed (overrides the config)");
  app.add_option("--mode", opt.mode, "pipeline mode")->check(CLI::IsMember({"faithful", "nested"}));
  app.add_option("--jobs", opt.jobs, "worker threads (0 = all cores)");
  app.add_flag("--force", opt.force, "overwrite existing outputs");

  const std::vector<std::pair<const char*, const char*>> stages = {
      {"ingest", "validate input CSVs into the output store"},
      {"build-dataset", "assemble the labeled factor dataset"},
      {"resample", "balance classes with SMOTE-Tomek"},
      {"train", "fit the random forest"},
      {"rank", "rank factors by mean |SHAP|"},
      {"filter", "apply the sliding-window correlation filter"},
      {"search", "grid-search filter parameters with cross-validation"},
      {"select", "choose the key factors from the search"},
      {"baseline", "top-n selection on the unfiltered rank"},
      {"synth", "generate a synthetic fleet with planted risk drivers"},
      {"run-all", "run every stage in order and write the report"},
      {"report", "assemble report.json and key_factors.md"},
  };
  for (const auto& [name, help] : stages) app.add_subcommand(name, help);

  bool show_config = false;
  auto* cfg_cmd = app.add_subcommand("default-config", "print the default configuration");
  cfg_cmd->callback([&] { show_config = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (show_config) {
    char* text = nullptr;
    const vrisk_status s = vrisk_default_config(&text);
    if (s != VRISK_OK) return report_error(s);
    std::cout << text << "\n";
    vrisk_string_free(text);
    return 0;
  }
  if (opt.out.empty()) {
    std::cerr << "vrisk: --out is required\n";
    return 1;
  }
  return run_stage(app.get_subcommands().front()->get_name(), opt);
}
