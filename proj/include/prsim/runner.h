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
#include <functional>
#include <ostream>
#include <vector>

#include "json.hpp"
#include "prsim/config.h"
#include "prsim/metrics.h"
#include "prsim/policy.h"
#include "prsim/scheduler.h"

namespace prsim {

// One delivered sample, as written to samples.csv.
struct ManifestRow {
  int64_t step;
  SampleId id;
  int64_t start_version;
  int64_t complete_version;
  int64_t tokens;
};

struct RunHooks {
  // Called after each rollout phase, before the policy update.
  std::function<void(const RolloutStepResult&)> on_rollout;
  // Receives engine Finished/Aborted records when set.
  std::function<void(const TraceRecord&)> on_trace;
};

struct RunResult {
  std::vector<StepReport> reports;
  std::vector<ManifestRow> manifest;
  PolicyParams final_params;
  // State left behind at shutdown.
  std::vector<SampleId> buffered;
  std::vector<SampleId> pending;
  int64_t buffer_high_water = 0;
};

// Full training loop: rollout, reward, group advantages, policy update.
RunResult RunSimulation(const RunConfig& config, const RunHooks& hooks = {});

// Runs `config` and writes steps.jsonl, summary.json and the optional
// samples.csv / events.jsonl / checkpoint.json into `out_dir`.
RunSummary ExecuteRun(const RunConfig& config, const std::filesystem::path& out_dir);

struct SeedComparison {
  uint64_t seed;
  RunSummary baseline;
  RunSummary april;
};

struct Comparison {
  std::vector<SeedComparison> per_seed;
  double mean_improvement = 0.0;
  double std_improvement = 0.0;
  double mean_offpolicy_fraction = 0.0;
  double std_offpolicy_fraction = 0.0;
};

// Paired baseline/partial runs per seed with identical workload streams.
// Seeds run concurrently; with `out_root` set each run writes to
// out_root/seed_<s>/{baseline,april}/ and comparison.json goes to out_root.
Comparison CompareRuns(const RunConfig& config, const std::vector<uint64_t>& seeds,
                       const std::filesystem::path& out_root = {});

nlohmann::ordered_json ToJson(const Comparison& comparison);

void WriteStepsJsonl(const std::vector<StepReport>& reports, std::ostream& out);
void WriteManifestCsv(const std::vector<ManifestRow>& rows, std::ostream& out);

}  // namespace prsim
