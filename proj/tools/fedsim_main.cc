/*
 * Copyright 2026 The fedsim Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// fedsim: federated learning simulator with per-round contribution
// measurement.
//
//   fedsim run      [--config FILE] [--preset NAME] [--set key=value ...]
//                   [--output-dir DIR] [--workers N]
//   fedsim shapley  --record DIR [--mode exact|mc(M)] [--seed S] [--workers N]
//   fedsim export   --record DIR [--format csv|json] [--out DIR]
//   fedsim presets
//
// Exit codes: 0 success, 1 config error, 2 runtime abort, 3 budget error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fedsim/config.h"
#include "fedsim/errors.h"
#include "fedsim/record_io.h"
#include "fedsim/runner.h"
#include "fedsim/scenario.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitBudget = 3;

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fedsim::ConfigError("cannot read config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string Join(const std::vector<double>& values) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.3f", i ? ";" : "", values[i]);
    out += buf;
  }
  return out;
}

void PrintShapley(const fedsim::ShapleyResult& s) {
  std::cout << "shapley " << s.mode.ToString() << ": " << Join(s.normalized) << " ("
            << s.evaluations << " coalitions, " << s.seconds << " s)\n";
}

int Run(const std::string& config_path, const std::string& preset,
        std::vector<std::string> overrides, const std::string& output_dir, int workers) {
  const std::string text = config_path.empty() ? std::string("{}") : ReadFile(config_path);
  if (!preset.empty()) overrides.insert(overrides.begin(), "preset=\"" + preset + "\"");
  if (!output_dir.empty()) overrides.push_back("output_dir=\"" + output_dir + "\"");
  if (workers > 0) overrides.push_back("workers=" + std::to_string(workers));
  fedsim::ExperimentConfig config = fedsim::ParseConfig(text, overrides);
  if (config.output_dir.empty()) {
    const char* env = std::getenv("FEDSIM_OUTPUT_DIR");
    config.output_dir = (env && *env) ? env : "runs/" + fedsim::RunId(config);
  }

  fedsim::RunRecord record = fedsim::RunExperiment(config);
  const auto& last = record.final_round();
  std::cout << "run " << record.run_id << " -> " << config.output_dir << "\n"
            << "round " << last.round << " " << fedsim::MetricName(last.eval.kind) << " "
            << last.eval.value << "\n"
            << "contributions: " << Join(last.contribution) << "\n";
  if (config.shapley.kind != fedsim::ShapleyMode::Kind::kOff) {
    PrintShapley(fedsim::RunShapley(record, config.shapley, config.master_seed, config.workers));
  }
  fedsim::ExportRecord(record, fedsim::ExportFormat::kCsv, config.output_dir);
  fedsim::ExportRecord(record, fedsim::ExportFormat::kJson, config.output_dir);
  return kExitOk;
}

int Shapley(const std::string& dir, const std::string& mode, std::uint64_t seed, int workers) {
  fedsim::RunRecord record = fedsim::LoadRecord(dir);
  const auto parsed = fedsim::ShapleyMode::Parse(mode);
  PrintShapley(fedsim::RunShapley(record, parsed, seed, workers));
  fedsim::ExportRecord(record, fedsim::ExportFormat::kJson, dir);
  return kExitOk;
}

int Export(const std::string& dir, const std::string& format, const std::string& out) {
  const fedsim::RunRecord record = fedsim::LoadRecord(dir);
  const auto kind = format == "json" ? fedsim::ExportFormat::kJson : fedsim::ExportFormat::kCsv;
  fedsim::ExportRecord(record, kind, out.empty() ? dir : out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated learning simulator with real-time contribution measurement"};
  app.require_subcommand(1);

  std::string config_path, preset, output_dir;
  std::vector<std::string> overrides;
  int workers = 0;
  auto* run = app.add_subcommand("run", "Execute an experiment");
  run->add_option("-c,--config", config_path, "JSON experiment config");
  run->add_option("-p,--preset", preset, "Scenario preset (see `fedsim presets`)");
  run->add_option("-s,--set", overrides, "Override a config key, e.g. --set trainer.batch_size=64");
  run->add_option("-o,--output-dir", output_dir,
                  "Run directory (default: $FEDSIM_OUTPUT_DIR, else runs/<run_id>)");
  run->add_option("-w,--workers", workers, "Threads for local training");

  std::string record_dir, mode = "mc(500)";
  std::uint64_t seed = 1;
  int shapley_workers = 1;
  auto* shapley = app.add_subcommand("shapley", "Post-hoc Shapley values for a recorded run");
  shapley->add_option("-r,--record", record_dir, "Run directory")->required();
  shapley->add_option("-m,--mode", mode, "exact or mc(M)");
  shapley->add_option("--seed", seed, "Permutation sampling seed");
  shapley->add_option("-w,--workers", shapley_workers, "Threads for coalition replays");

  std::string format = "csv", out_dir;
  auto* exporter = app.add_subcommand("export", "Write CSV or JSON views of a recorded run");
  exporter->add_option("-r,--record", record_dir, "Run directory")->required();
  exporter->add_option("-f,--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  exporter->add_option("--out", out_dir, "Destination directory (default: the run directory)");

  auto* presets = app.add_subcommand("presets", "List scenario presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return Run(config_path, preset, overrides, output_dir, workers);
    if (*shapley) return Shapley(record_dir, mode, seed, shapley_workers);
    if (*exporter) return Export(record_dir, format, out_dir);
    if (*presets) {
      for (const auto& p : fedsim::ListPresets()) {
        std::cout << p.name << "\t" << p.description << "\n";
      }
      return kExitOk;
    }
  } catch (const fedsim::Error& e) {
    std::cerr << "fedsim: " << e.what() << "\n";
    switch (e.kind()) {
      case fedsim::ErrorKind::kConfig: return kExitConfig;
      case fedsim::ErrorKind::kBudget: return kExitBudget;
      default: return kExitRuntime;
    }
  }
  return kExitOk;
}
