// Copyright 2026 The prsim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "prsim/config.h"
#include "prsim/errors.h"
#include "prsim/runner.h"
#include "prsim/workload.h"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<int64_t> steps;
  std::optional<std::string> mode;
  std::optional<std::string> out;
};

void AddCommonFlags(CLI::App* cmd, CommonFlags& flags, bool with_mode) {
  cmd->add_option("--config", flags.config_path, "JSON run configuration");
  cmd->add_option("--seed", flags.seed, "global seed");
  cmd->add_option("--steps", flags.steps, "training steps");
  if (with_mode)
    cmd->add_option("--mode", flags.mode, "scheduler mode")
        ->check(CLI::IsMember({"baseline", "april"}));
  cmd->add_option("--out", flags.out, "output directory (default $APRIL_BENCH_OUT)");
}

// Command-line values win over the file and end up in resolved_config.
prsim::RunConfig Resolve(const CommonFlags& flags) {
  prsim::RunConfig config = flags.config_path.empty()
                                ? prsim::RunConfig{}
                                : prsim::RunConfig::FromFile(flags.config_path);
  if (flags.seed) config.run.seed = *flags.seed;
  if (flags.steps) config.run.steps = *flags.steps;
  if (flags.mode)
    config.scheduler.mode =
        *flags.mode == "baseline" ? prsim::SchedulerMode::kBaseline : prsim::SchedulerMode::kApril;
  if (flags.out) config.run.output_dir = *flags.out;
  config.run.output_dir = prsim::ResolveOutputDir(config.run).string();
  config.Validate();
  return config;
}

int Run(const CommonFlags& flags) {
  const auto config = Resolve(flags);
  const auto summary = prsim::ExecuteRun(config, config.run.output_dir);
  std::printf("%lld steps, mean throughput %.1f tok/s, off-policy %.3f, max staleness %lld -> %s\n",
              static_cast<long long>(summary.steps), summary.mean_throughput,
              summary.mean_offpolicy_fraction,
              static_cast<long long>(summary.max_staleness), config.run.output_dir.c_str());
  return 0;
}

int Compare(const CommonFlags& flags, std::vector<uint64_t> seeds) {
  auto config = Resolve(flags);
  if (seeds.empty()) seeds = config.run.seeds;
  if (seeds.empty()) seeds = {config.run.seed};
  config.run.seeds = seeds;
  const auto cmp = prsim::CompareRuns(config, seeds, config.run.output_dir);
  std::printf("%zu seeds: relative throughput %+.2f%% +/- %.2f%%, off-policy %.3f +/- %.3f -> %s\n",
              seeds.size(), 100.0 * cmp.mean_improvement, 100.0 * cmp.std_improvement,
              cmp.mean_offpolicy_fraction, cmp.std_offpolicy_fraction,
              (std::filesystem::path(config.run.output_dir) / "comparison.json").c_str());
  return 0;
}

int HistogramCmd(const CommonFlags& flags, int64_t draws, int bins) {
  const auto config = Resolve(flags);
  const auto dist = config.workload.distribution.Build(config.engine.l_max);
  const auto hist = prsim::Histogram(dist, draws, config.run.seed, bins);
  const std::filesystem::path dir = config.run.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  prsim::WriteHistogramCsv(hist, dir / "histogram.csv");
  std::printf("%lld draws into %zu bins -> %s\n", static_cast<long long>(draws), hist.size(),
              (dir / "histogram.csv").c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prsim: partial-rollout scheduling simulator"};
  app.require_subcommand(1);

  CommonFlags run_flags, cmp_flags, hist_flags;
  auto* run = app.add_subcommand("run", "single simulation run");
  AddCommonFlags(run, run_flags, true);

  auto* compare = app.add_subcommand("compare", "paired baseline vs partial-rollout runs");
  AddCommonFlags(compare, cmp_flags, false);
  std::vector<uint64_t> seeds;
  compare->add_option("--seeds", seeds, "seed list (default run.seeds or --seed)")
      ->delimiter(',');

  auto* histogram = app.add_subcommand("histogram", "response-length histogram CSV");
  AddCommonFlags(histogram, hist_flags, false);
  int64_t draws = 100000;
  int bins = 64;
  histogram->add_option("--draws", draws, "number of draws")->check(CLI::PositiveNumber);
  histogram->add_option("--bins", bins, "number of equal-width bins")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return Run(run_flags);
    if (*compare) return Compare(cmp_flags, seeds);
    if (*histogram) return HistogramCmd(hist_flags, draws, bins);
  } catch (const prsim::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
