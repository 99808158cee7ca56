// Copyright 2026 The ipdsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ipd/ipd_c.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include <json.hpp>

#include "ipd/config.h"
#include "ipd/error.h"
#include "ipd/experiments.h"
#include "ipd/nn/checkpoint.h"
#include "ipd/plot.h"

struct ipd_config {
  ipd::RunConfig cfg;
};

struct ipd_model {
  ipd::nn::ModelParams params;
};

namespace {

thread_local std::string g_last_error;

ipd_status Fail(ipd_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename F>
ipd_status Guard(F&& f) {
  g_last_error.clear();
  try {
    f();
    return IPD_OK;
  } catch (const ipd::Error& e) {
    return Fail(static_cast<ipd_status>(e.kind()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return Fail(IPD_ERR_CONFIG, e.what());
  } catch (const std::bad_alloc&) {
    return Fail(IPD_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Fail(IPD_ERR_INTERNAL, e.what());
  }
}

char* Dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

std::string Str(const char* s) { return s ? s : ""; }

void Need(const void* p, const char* what) {
  if (!p) throw ipd::ContractError(std::string(what) + " is NULL");
}

}  // namespace

extern "C" {

const char* ipd_version(void) { return IPD_VERSION; }

const char* ipd_last_error(void) { return g_last_error.c_str(); }

const char* ipd_status_name(ipd_status s) {
  switch (s) {
    case IPD_OK: return "ok";
    case IPD_ERR_CONTRACT: return "contract";
    case IPD_ERR_CONFIG: return "config";
    case IPD_ERR_IO: return "io";
    case IPD_ERR_VERSION: return "version";
    case IPD_ERR_CORRUPT: return "corrupt";
    case IPD_ERR_PRECONDITION: return "precondition";
    case IPD_ERR_NONFINITE: return "non-finite";
    case IPD_ERR_SCHEMA: return "schema";
    case IPD_ERR_INTERRUPTED: return "interrupted";
    case IPD_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void ipd_string_free(char* s) { std::free(s); }

ipd_status ipd_config_load(const char* path, const char* profile, ipd_config** out) {
  return Guard([&] {
    Need(out, "out");
    *out = nullptr;
    auto c = std::make_unique<ipd_config>();
    if (path) {
      c->cfg = ipd::LoadRunConfig(path, Str(profile));
    } else {
      c->cfg = ipd::ProfileDefaults(profile && *profile ? profile : "full");
    }
    ipd::Validate(c->cfg);
    *out = c.release();
  });
}

ipd_status ipd_config_parse(const char* json_text, const char* profile, ipd_config** out) {
  return Guard([&] {
    Need(json_text, "json_text");
    Need(out, "out");
    *out = nullptr;
    auto c = std::make_unique<ipd_config>();
    c->cfg = ipd::ParseRunConfig(json_text, Str(profile));
    ipd::Validate(c->cfg);
    *out = c.release();
  });
}

ipd_status ipd_config_set(ipd_config* cfg, const char* key, const char* json_value) {
  return Guard([&] {
    Need(cfg, "cfg");
    Need(key, "key");
    Need(json_value, "json_value");
    nlohmann::json doc = nlohmann::json::parse(ipd::RunConfigToJson(cfg->cfg));
    nlohmann::json value;
    try {
      value = nlohmann::json::parse(json_value);
    } catch (const nlohmann::json::exception&) {
      throw ipd::ConfigError(std::string("value for '") + key + "' is not valid JSON: " +
                             json_value);
    }
    std::string ptr = "/" + std::string(key);
    for (auto& ch : ptr) {
      if (ch == '.') ch = '/';
    }
    doc[nlohmann::json::json_pointer(ptr)] = value;
    ipd::RunConfig next = ipd::ParseRunConfig(doc.dump(), cfg->cfg.profile);
    ipd::Validate(next);
    cfg->cfg = std::move(next);
  });
}

ipd_status ipd_config_to_json(const ipd_config* cfg, char** out) {
  return Guard([&] {
    Need(cfg, "cfg");
    Need(out, "out");
    *out = Dup(ipd::RunConfigToJson(cfg->cfg));
  });
}

ipd_status ipd_config_seeds(const ipd_config* cfg, uint64_t* seeds, size_t capacity,
                            size_t* count) {
  return Guard([&] {
    Need(cfg, "cfg");
    Need(count, "count");
    *count = cfg->cfg.seeds.size();
    for (size_t i = 0; i < capacity && i < cfg->cfg.seeds.size(); ++i) seeds[i] = cfg->cfg.seeds[i];
  });
}

ipd_status ipd_config_out_root(const ipd_config* cfg, char** out) {
  return Guard([&] {
    Need(cfg, "cfg");
    Need(out, "out");
    *out = Dup(ipd::ResolveOutRoot(cfg->cfg));
  });
}

ipd_status ipd_config_run_dir(const ipd_config* cfg, uint64_t seed, char** out) {
  return Guard([&] {
    Need(cfg, "cfg");
    Need(out, "out");
    *out = Dup(ipd::RunDirectory(cfg->cfg, seed));
  });
}

void ipd_config_free(ipd_config* cfg) { delete cfg; }

ipd_status ipd_pretrain(const ipd_config* cfg, uint64_t seed, const char* out_path,
                        uint64_t* n_records, uint64_t* checksum) {
  return Guard([&] {
    Need(cfg, "cfg");
    Need(out_path, "out_path");
    ipd::TrajectoryDataset d = ipd::BuildInitialDataset(cfg->cfg, seed);
    d.Save(out_path);
    if (n_records) *n_records = d.size();
    if (checksum) *checksum = d.Checksum();
  });
}

ipd_status ipd_run(const ipd_config* cfg, uint64_t seed, ipd_log_fn log, ipd_stop_fn stop,
                   void* user, char** run_dir) {
  return Guard([&] {
    Need(cfg, "cfg");
    if (run_dir) *run_dir = nullptr;
    ipd::RunHooks hooks;
    if (log) hooks.log = [log, user](const std::string& m) { log(m.c_str(), user); };
    if (stop) hooks.should_stop = [stop, user] { return stop(user) != 0; };
    ipd::RunOutput out = ipd::RunExperiment(cfg->cfg, seed, hooks);
    if (run_dir) *run_dir = Dup(out.dir);
  });
}

ipd_status ipd_plot(const char* const* csv_paths, size_t n_csv, const char* const* metrics,
                    size_t n_metrics, int per_round, int64_t outer, const char* out_dir,
                    size_t* n_written) {
  return Guard([&] {
    Need(out_dir, "out_dir");
    if (n_csv) Need(csv_paths, "csv_paths");
    if (n_metrics) Need(metrics, "metrics");
    ipd::PlotSpec spec;
    spec.axis = per_round ? ipd::PlotAxis::kInner : ipd::PlotAxis::kOuter;
    spec.outer = outer;
    for (size_t i = 0; i < n_metrics; ++i) spec.metrics.push_back(Str(metrics[i]));
    std::vector<std::string> csvs;
    for (size_t i = 0; i < n_csv; ++i) csvs.push_back(Str(csv_paths[i]));
    auto written = ipd::PlotMetrics(csvs, spec, out_dir);
    if (n_written) *n_written = written.size();
  });
}

ipd_status ipd_model_load(const char* path, ipd_model** out) {
  return Guard([&] {
    Need(path, "path");
    Need(out, "out");
    *out = nullptr;
    *out = new ipd_model{ipd::nn::LoadCheckpoint(path)};
  });
}

ipd_status ipd_model_save(const ipd_model* model, const char* path) {
  return Guard([&] {
    Need(model, "model");
    Need(path, "path");
    ipd::nn::SaveCheckpoint(model->params, path);
  });
}

ipd_status ipd_model_checksum(const ipd_model* model, uint64_t* out) {
  return Guard([&] {
    Need(model, "model");
    Need(out, "out");
    *out = model->params.Checksum();
  });
}

ipd_status ipd_model_shape(const ipd_model* model, int* hidden_dim, int* embed_dim,
                           int* conditioning_dim) {
  return Guard([&] {
    Need(model, "model");
    const auto& a = model->params.arch();
    if (hidden_dim) *hidden_dim = a.hidden_dim;
    if (embed_dim) *embed_dim = a.embed_dim;
    if (conditioning_dim) *conditioning_dim = a.conditioning_dim;
  });
}

void ipd_model_free(ipd_model* model) { delete model; }

}  // extern "C"
