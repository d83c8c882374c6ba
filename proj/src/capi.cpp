// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

#include "vrisk/vrisk.h"

#include <cstring>
#include <memory>
#include <new>

#include "vrisk/forest.hpp"
#include "vrisk/parallel.hpp"
#include "vrisk/pipeline.hpp"
#include "vrisk/shap.hpp"

struct vrisk_dataset {
  vrisk::LabeledDataset data;
};

struct vrisk_forest {
  vrisk::RandomForestModel model;
};

struct vrisk_pipeline {
  vrisk::RunConfig config;
  std::filesystem::path out;
  bool force = false;
  std::unique_ptr<vrisk::Pipeline> pipeline;
};

namespace {

thread_local std::string g_last_error;

vrisk_status status_of(vrisk::ErrorKind k) {
  using vrisk::ErrorKind;
  switch (k) {
    case ErrorKind::kInvalidArgument: return VRISK_ERR_INVALID_ARGUMENT;
    case ErrorKind::kParse: return VRISK_ERR_PARSE;
    case ErrorKind::kInvariant: return VRISK_ERR_INVARIANT;
    case ErrorKind::kCoverage: return VRISK_ERR_COVERAGE;
    case ErrorKind::kNotFound: return VRISK_ERR_NOT_FOUND;
    case ErrorKind::kMissingArtifact: return VRISK_ERR_MISSING_ARTIFACT;
    case ErrorKind::kIo: return VRISK_ERR_IO;
    case ErrorKind::kInternal: return VRISK_ERR_INTERNAL;
  }
  return VRISK_ERR_INTERNAL;
}

vrisk_status fail_with(vrisk_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

template <class Fn>
vrisk_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return VRISK_OK;
  } catch (const vrisk::Error& e) {
    return fail_with(status_of(e.kind()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail_with(VRISK_ERR_PARSE, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail_with(VRISK_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail_with(VRISK_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail_with(VRISK_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail_with(VRISK_ERR_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void check(bool cond, const char* what) {
  if (!cond) vrisk::fail(vrisk::ErrorKind::kInvalidArgument, what);
}

nlohmann::json parse_json(const char* text) {
  if (!text || !*text) return nullptr;
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    vrisk::fail(vrisk::ErrorKind::kInvalidArgument, std::string("config is not valid JSON: ") + e.what());
  }
}

}  // namespace

extern "C" {

const char* vrisk_version(void) { return "1.0.0"; }

const char* vrisk_status_name(vrisk_status s) {
  switch (s) {
    case VRISK_OK: return "ok";
    case VRISK_ERR_INVALID_ARGUMENT: return "invalid argument";
    case VRISK_ERR_PARSE: return "parse error";
    case VRISK_ERR_INVARIANT: return "invariant violation";
    case VRISK_ERR_COVERAGE: return "coverage error";
    case VRISK_ERR_NOT_FOUND: return "not found";
    case VRISK_ERR_MISSING_ARTIFACT: return "missing artifact";
    case VRISK_ERR_IO: return "i/o error";
    case VRISK_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

int vrisk_exit_code(vrisk_status s) {
  switch (s) {
    case VRISK_OK: return 0;
    case VRISK_ERR_INVALID_ARGUMENT:
    case VRISK_ERR_MISSING_ARTIFACT: return 1;
    case VRISK_ERR_PARSE:
    case VRISK_ERR_INVARIANT:
    case VRISK_ERR_COVERAGE:
    case VRISK_ERR_NOT_FOUND:
    case VRISK_ERR_IO: return 2;
    case VRISK_ERR_INTERNAL: return 3;
  }
  return 3;
}

const char* vrisk_last_error(void) { return g_last_error.c_str(); }

void vrisk_string_free(char* s) { std::free(s); }

vrisk_status vrisk_set_jobs(unsigned jobs) {
  return guarded([&] { vrisk::set_worker_count(jobs); });
}

vrisk_status vrisk_default_config(char** json_out) {
  return guarded([&] {
    check(json_out != nullptr, "json_out is null");
    *json_out = dup_string(vrisk::to_json(vrisk::RunConfig{}).dump(2));
  });
}

vrisk_status vrisk_pipeline_open(const char* config_json, const char* config_dir, const char* out_dir, int force,
                                 vrisk_pipeline** out) {
  return guarded([&] {
    check(out != nullptr, "out is null");
    check(out_dir != nullptr && *out_dir, "an output directory is required");
    *out = nullptr;
    auto p = std::make_unique<vrisk_pipeline>();
    p->config = vrisk::run_config_from_json(parse_json(config_json), config_dir ? config_dir : "");
    p->out = out_dir;
    p->force = force != 0;
    *out = p.release();
  });
}

vrisk_status vrisk_pipeline_set_seed(vrisk_pipeline* p, uint64_t seed) {
  return guarded([&] {
    check(p != nullptr, "pipeline is null");
    check(!p->pipeline, "seed must be set before the first stage runs");
    p->config.seed = seed;
  });
}

vrisk_status vrisk_pipeline_set_mode(vrisk_pipeline* p, const char* mode) {
  return guarded([&] {
    check(p != nullptr && mode != nullptr, "pipeline or mode is null");
    check(!p->pipeline, "mode must be set before the first stage runs");
    p->config.mode = vrisk::parse_pipeline_mode(mode);
  });
}

vrisk_status vrisk_pipeline_run(vrisk_pipeline* p, const char* stage, char** summary_json) {
  return guarded([&] {
    check(p != nullptr && stage != nullptr, "pipeline or stage is null");
    const auto s = vrisk::parse_stage(stage);
    if (!p->pipeline) p->pipeline = std::make_unique<vrisk::Pipeline>(p->config, p->out, p->force);
    const auto summary = p->pipeline->run(s);
    if (summary_json) *summary_json = dup_string(summary.dump(2));
  });
}

vrisk_status vrisk_pipeline_config(const vrisk_pipeline* p, char** json_out) {
  return guarded([&] {
    check(p != nullptr && json_out != nullptr, "pipeline or json_out is null");
    *json_out = dup_string(vrisk::to_json(p->config).dump(2));
  });
}

void vrisk_pipeline_free(vrisk_pipeline* p) { delete p; }

vrisk_status vrisk_dataset_read_csv(const char* path, vrisk_dataset** out) {
  return guarded([&] {
    check(path != nullptr && out != nullptr, "path or out is null");
    *out = nullptr;
    auto d = std::make_unique<vrisk_dataset>();
    d->data = vrisk::read_dataset_csv(path);
    *out = d.release();
  });
}

vrisk_status vrisk_dataset_shape(const vrisk_dataset* d, size_t* n_samples, size_t* n_factors) {
  return guarded([&] {
    check(d != nullptr, "dataset is null");
    if (n_samples) *n_samples = d->data.n_samples();
    if (n_factors) *n_factors = d->data.n_factors();
  });
}

vrisk_status vrisk_dataset_factor_id(const vrisk_dataset* d, size_t factor, char** id_out) {
  return guarded([&] {
    check(d != nullptr && id_out != nullptr, "dataset or id_out is null");
    if (factor >= d->data.n_factors()) vrisk::fail(vrisk::ErrorKind::kNotFound, "factor index out of range");
    *id_out = dup_string(d->data.catalog.factors[factor].id);
  });
}

vrisk_status vrisk_dataset_row(const vrisk_dataset* d, size_t i, double* out, size_t out_len) {
  return guarded([&] {
    check(d != nullptr && out != nullptr, "dataset or out is null");
    if (i >= d->data.n_samples()) vrisk::fail(vrisk::ErrorKind::kNotFound, "row index out of range");
    check(out_len == d->data.n_factors(), "out_len must equal the factor count");
    const auto row = d->data.row(i);
    std::copy(row.begin(), row.end(), out);
  });
}

vrisk_status vrisk_dataset_labels(const vrisk_dataset* d, int* out, size_t out_len) {
  return guarded([&] {
    check(d != nullptr && out != nullptr, "dataset or out is null");
    check(out_len == d->data.n_samples(), "out_len must equal the sample count");
    std::copy(d->data.labels.begin(), d->data.labels.end(), out);
  });
}

void vrisk_dataset_free(vrisk_dataset* d) { delete d; }

vrisk_status vrisk_forest_fit(const vrisk_dataset* d, const char* config_json, vrisk_forest** out) {
  return guarded([&] {
    check(d != nullptr && out != nullptr, "dataset or out is null");
    *out = nullptr;
    const auto cfg = vrisk::forest_config_from_json(parse_json(config_json));
    auto f = std::make_unique<vrisk_forest>();
    f->model = vrisk::fit_forest(d->data, cfg);
    *out = f.release();
  });
}

vrisk_status vrisk_forest_load(const char* path, vrisk_forest** out) {
  return guarded([&] {
    check(path != nullptr && out != nullptr, "path or out is null");
    *out = nullptr;
    auto f = std::make_unique<vrisk_forest>();
    f->model = vrisk::load_forest(path);
    *out = f.release();
  });
}

vrisk_status vrisk_forest_save(const vrisk_forest* f, const char* path) {
  return guarded([&] {
    check(f != nullptr && path != nullptr, "forest or path is null");
    vrisk::save_forest(f->model, path);
  });
}

vrisk_status vrisk_forest_shape(const vrisk_forest* f, size_t* n_features, size_t* n_classes, size_t* n_trees) {
  return guarded([&] {
    check(f != nullptr, "forest is null");
    if (n_features) *n_features = f->model.n_features;
    if (n_classes) *n_classes = static_cast<size_t>(f->model.n_classes);
    if (n_trees) *n_trees = f->model.trees.size();
  });
}

vrisk_status vrisk_forest_predict_proba(const vrisk_forest* f, const double* x, size_t n_features, double* proba,
                                        size_t n_classes) {
  return guarded([&] {
    check(f != nullptr && x != nullptr && proba != nullptr, "null argument");
    check(n_features == f->model.n_features, "n_features does not match the model");
    check(n_classes == static_cast<size_t>(f->model.n_classes), "n_classes does not match the model");
    const auto p = f->model.predict_proba({x, n_features});
    std::copy(p.begin(), p.end(), proba);
  });
}

vrisk_status vrisk_forest_shap(const vrisk_forest* f, const double* x, size_t n_features, double* phi,
                               double* base_values, size_t n_classes) {
  return guarded([&] {
    check(f != nullptr && x != nullptr && phi != nullptr && base_values != nullptr, "null argument");
    check(n_features == f->model.n_features, "n_features does not match the model");
    check(n_classes == static_cast<size_t>(f->model.n_classes), "n_classes does not match the model");
    const auto s = vrisk::tree_shap(f->model, {x, n_features});
    std::copy(s.phi.begin(), s.phi.end(), phi);
    std::copy(s.base_values.begin(), s.base_values.end(), base_values);
  });
}

void vrisk_forest_free(vrisk_forest* f) { delete f; }

}  // extern "C"
