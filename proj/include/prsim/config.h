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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "prsim/engine.h"
#include "prsim/policy.h"
#include "prsim/scheduler.h"
#include "prsim/workload.h"

namespace prsim {

struct DistributionSpec {
  std::string kind = "lognormal";  // constant|geometric|lognormal|pareto|empirical
  int64_t length = 1000;
  double p_stop = 0.01;
  double mu_ln = 7.6;
  double sigma_ln = 1.0;
  double alpha = 1.5;
  double x_min = 200.0;
  std::string path;  // empirical histogram CSV

  LengthDistribution Build(int64_t l_max) const;
};

struct WorkloadConfig {
  DistributionSpec distribution;
  double correlate_within_group = 0.7;
  GenerationMode mode = GenerationMode::kLengthDriven;
  std::string dataset_tag = "synthetic";
};

struct RunOptions {
  int64_t steps = 200;
  uint64_t seed = 7;
  std::vector<uint64_t> seeds;  // compare; empty means {seed}
  std::string output_dir;       // empty: $APRIL_BENCH_OUT or ./prsim_out
  bool write_manifest = false;
  bool write_trace = false;
  bool write_checkpoint = false;
};

struct RunConfig {
  WorkloadConfig workload;
  EngineConfig engine;
  SchedulerConfig scheduler;
  TrainConfig train;
  RunOptions run;

  // Unknown keys and ill-typed values raise ConfigError naming the key.
  static RunConfig FromJson(const nlohmann::json& j);
  static RunConfig FromFile(const std::filesystem::path& path);

  // Checks every module invariant before anything runs.
  void Validate() const;
  nlohmann::ordered_json ToJson() const;
};

// Output directory after applying the APRIL_BENCH_OUT fallback.
std::filesystem::path ResolveOutputDir(const RunOptions& run);

const char* ToString(GenerationMode mode);
const char* ToString(SchedulerMode mode);
const char* ToString(TriggerMode mode);
const char* ToString(AdvantageMode mode);
const char* ToString(UpdateRule rule);

}  // namespace prsim
