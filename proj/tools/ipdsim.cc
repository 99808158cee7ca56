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

// ipdsim: command-line front end over the libipd C API.
//
//   ipdsim pretrain          --profile desk --seed 1
//   ipdsim run step1         --profile desk --algo ppi --seed 1
//   ipdsim eval              --config c.json --checkpoint runs/.../fixed_icl.ckpt
//   ipdsim equilibrium-check --config c.json --checkpoint runs/.../final_learner0.ckpt
//   ipdsim plot              --csv a.csv b.csv --metric ll_coop_rate --plot-dir figs

#include <csignal>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ipd/ipd_c.h"

namespace {

volatile std::sig_atomic_t g_stop = 0;

void OnSignal(int) { g_stop = 1; }

int StopRequested(void*) { return g_stop; }

void LogLine(const char* msg, void*) {
  std::fprintf(stderr, "[ipdsim] %s\n", msg);
  std::fflush(stderr);
}

struct Failure {
  ipd_status status;
};

void Check(ipd_status s) {
  if (s != IPD_OK) {
    std::fprintf(stderr, "ipdsim: %s error: %s\n", ipd_status_name(s), ipd_last_error());
    throw Failure{s};
  }
}

std::string TakeString(char* s) {
  std::string out = s ? s : "";
  ipd_string_free(s);
  return out;
}

struct Common {
  std::string config;
  std::string profile;
  std::string algo;
  std::string out;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> sets;  // key=value
};

void AddCommon(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  app->add_option("--profile", c.profile, "Profile defaults (overrides the document's)")
      ->check(CLI::IsMember({"full", "desk"}));
  app->add_option("--seed", c.seeds, "Seed(s); default: the configured list");
  app->add_option("--algo", c.algo, "Learning algorithm")->check(CLI::IsMember({"ppi", "a2c"}));
  app->add_option("--out", c.out, "Output root (default $IPD_OUT_ROOT, else ./runs)");
  app->add_option("--set", c.sets, "Override a config key: section.key=value (JSON value)");
}

// Value text as JSON; bare words become strings.
std::string AsJson(const std::string& v) {
  return nlohmann::json::accept(v) ? v : nlohmann::json(v).dump();
}

void Set(ipd_config* cfg, const std::string& key, const std::string& json_value) {
  Check(ipd_config_set(cfg, key.c_str(), json_value.c_str()));
}

ipd_config* BuildConfig(const Common& c) {
  ipd_config* cfg = nullptr;
  Check(ipd_config_load(c.config.empty() ? nullptr : c.config.c_str(), c.profile.c_str(), &cfg));
  try {
    if (!c.algo.empty()) Set(cfg, "experiment.algorithm", nlohmann::json(c.algo).dump());
    if (!c.out.empty()) Set(cfg, "paths.out_root", nlohmann::json(c.out).dump());
    if (!c.seeds.empty()) Set(cfg, "seeds", nlohmann::json(c.seeds).dump());
    for (const auto& s : c.sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) {
        std::fprintf(stderr, "ipdsim: --set expects key=value, got '%s'\n", s.c_str());
        throw Failure{IPD_ERR_CONFIG};
      }
      Set(cfg, s.substr(0, eq), AsJson(s.substr(eq + 1)));
    }
  } catch (...) {
    ipd_config_free(cfg);
    throw;
  }
  return cfg;
}

std::vector<std::uint64_t> Seeds(const ipd_config* cfg) {
  std::size_t n = 0;
  Check(ipd_config_seeds(cfg, nullptr, 0, &n));
  std::vector<std::uint64_t> s(n);
  Check(ipd_config_seeds(cfg, s.data(), s.size(), &n));
  return s;
}

// Prints the aggregate rows of a finished run.
void PrintSummary(const std::string& dir) {
  std::ifstream in(dir + "/metrics.csv");
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    if (f.size() == 7 && f[4] == "-1") std::printf("  %-40s %s\n", f[5].c_str(), f[6].c_str());
  }
}

int RunSeeds(ipd_config* cfg, bool summary) {
  for (std::uint64_t seed : Seeds(cfg)) {
    char* dir = nullptr;
    const ipd_status s = ipd_run(cfg, seed, LogLine, StopRequested, nullptr, &dir);
    const std::string d = TakeString(dir);
    if (s == IPD_ERR_INTERRUPTED) {
      std::fprintf(stderr, "ipdsim: %s\n", ipd_last_error());
      return 130;
    }
    Check(s);
    std::printf("%s\n", d.c_str());
    if (summary) PrintSummary(d);
  }
  return 0;
}

int Main(int argc, char** argv) {
  CLI::App app{"Iterated prisoner's dilemma multi-agent learning simulator"};
  app.set_version_flag("--version", std::string(ipd_version()));
  app.require_subcommand(1);

  Common pre_c;
  std::string dataset_path;
  auto* pre = app.add_subcommand("pretrain", "Write the initial dataset D_0");
  AddCommon(pre, pre_c);
  pre->add_option("--dataset", dataset_path,
                  "Output file (default <out>/pretrain/<profile>/<seed>/dataset.jsonl)");

  Common run_c;
  std::string experiment;
  auto* run = app.add_subcommand("run", "Run an experiment for every seed");
  run->add_option("experiment", experiment,
                  "step1 | step2 | step3 | mixed | opponent_id | no_tabular, or a full name")
      ->required();
  AddCommon(run, run_c);

  Common eval_c;
  std::string eval_ckpt;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint against fixed strategies");
  AddCommon(eval, eval_c);
  eval->add_option("--checkpoint", eval_ckpt, "Model checkpoint")->required();

  Common eq_c;
  std::string eq_ckpt;
  auto* eq = app.add_subcommand("equilibrium-check", "On-path KL and Q flatness of a PPI model");
  AddCommon(eq, eq_c);
  eq->add_option("--checkpoint", eq_ckpt, "PPI model checkpoint")->required();

  std::vector<std::string> csvs, metrics;
  std::string plot_dir = "plots";
  bool per_round = false;
  std::int64_t outer = -1;
  auto* plot = app.add_subcommand("plot", "SVG curves (mean, +-1 population std across seeds)");
  plot->add_option("--csv", csvs, "metrics.csv files")->required()->check(CLI::ExistingFile);
  plot->add_option("--metric", metrics, "Metric name(s)")->required();
  plot->add_option("--plot-dir", plot_dir, "Directory for the SVG files");
  plot->add_flag("--per-round", per_round, "Round on the x axis instead of phase/iteration");
  plot->add_option("--outer", outer, "Phase/iteration for --per-round (-1: last)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  std::signal(SIGINT, OnSignal);
  std::signal(SIGTERM, OnSignal);

  try {
    if (*pre) {
      ipd_config* cfg = BuildConfig(pre_c);
      std::unique_ptr<ipd_config, decltype(&ipd_config_free)> hold(cfg, ipd_config_free);
      char* js = nullptr;
      Check(ipd_config_to_json(cfg, &js));
      const auto doc = nlohmann::json::parse(TakeString(js));
      const auto episodes = doc["ppi"]["n_pretrain_trajectories"].get<long long>();
      for (std::uint64_t seed : Seeds(cfg)) {
        std::string path = dataset_path;
        if (path.empty()) {
          char* root = nullptr;
          Check(ipd_config_out_root(cfg, &root));
          path = TakeString(root) + "/pretrain/" + doc["profile"].get<std::string>() + "/" +
                 std::to_string(seed) + "/dataset.jsonl";
          std::filesystem::create_directories(std::filesystem::path(path).parent_path());
        }
        std::uint64_t n = 0, sum = 0;
        Check(ipd_pretrain(cfg, seed, path.c_str(), &n, &sum));
        std::printf("%s episodes=%lld records=%llu checksum=%016llx\n", path.c_str(), episodes,
                    static_cast<unsigned long long>(n), static_cast<unsigned long long>(sum));
      }
      return 0;
    }
    if (*run) {
      ipd_config* cfg = BuildConfig(run_c);
      std::unique_ptr<ipd_config, decltype(&ipd_config_free)> hold(cfg, ipd_config_free);
      Set(cfg, "experiment.kind", nlohmann::json(experiment).dump());
      return RunSeeds(cfg, false);
    }
    if (*eval || *eq) {
      Common& c = *eval ? eval_c : eq_c;
      ipd_config* cfg = BuildConfig(c);
      std::unique_ptr<ipd_config, decltype(&ipd_config_free)> hold(cfg, ipd_config_free);
      Set(cfg, "experiment.kind", *eval ? "\"eval_vs_fixed\"" : "\"equilibrium_check\"");
      Set(cfg, "paths.checkpoint", nlohmann::json(*eval ? eval_ckpt : eq_ckpt).dump());
      return RunSeeds(cfg, true);
    }
    if (*plot) {
      std::vector<const char*> cp, mp;
      for (const auto& s : csvs) cp.push_back(s.c_str());
      for (const auto& s : metrics) mp.push_back(s.c_str());
      std::size_t n = 0;
      Check(ipd_plot(cp.data(), cp.size(), mp.data(), mp.size(), per_round ? 1 : 0, outer,
                     plot_dir.c_str(), &n));
      for (const auto& m : metrics) std::printf("%s/%s.svg\n", plot_dir.c_str(), m.c_str());
      return 0;
    }
  } catch (const Failure& f) {
    return static_cast<int>(f.status);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ipdsim: %s\n", e.what());
    return IPD_ERR_INTERNAL;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return Main(argc, argv); }
