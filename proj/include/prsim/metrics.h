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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "prsim/engine.h"
#include "prsim/rollout.h"
#include "prsim/scheduler.h"

namespace prsim {

struct StepReport {
  int64_t step = 0;
  int64_t tokens_generated = 0;  // includes tokens of samples later paused
  double rollout_wall_time = 0.0;
  double train_wall_time = 0.0;
  double throughput = 0.0;       // tokens_generated / rollout_wall_time
  double idle_fraction = 0.0;
  int64_t completed_groups = 0;
  int64_t carried_in_tokens = 0;
  double offpolicy_fraction = 0.0;         // token-weighted
  double offpolicy_sample_fraction = 0.0;  // share of samples with old tokens
  std::map<int64_t, int64_t> staleness_histogram;
  double sigma_batch = 0.0;
  double sigma_instance = 0.0;
  double mean_reward = 0.0;
  int64_t buffer_size_after = 0;

  bool operator==(const StepReport&) const = default;
};

// Share of batch tokens produced under versions older than `version`.
double OffpolicyFraction(const std::vector<Group>& batch, int64_t version);
double OffpolicySampleFraction(const std::vector<Group>& batch, int64_t version);

std::map<int64_t, int64_t> StalenessHistogram(const std::vector<Group>& batch);

// Population std of all response lengths in the batch.
double SigmaBatch(const std::vector<Group>& batch);
// Unweighted mean over groups of the within-group population std.
double SigmaInstance(const std::vector<Group>& batch);

StepReport BuildStepReport(const RolloutStepResult& rollout,
                           double train_wall_time, double mean_reward,
                           const EngineConfig& engine);

struct RunSummary {
  int64_t steps = 0;
  int64_t total_tokens = 0;
  double total_rollout_time = 0.0;
  double mean_throughput = 0.0;    // total_tokens / total_rollout_time
  double median_throughput = 0.0;  // over steps that ran the engine
  double mean_idle_fraction = 0.0;  // weighted by rollout time
  double mean_offpolicy_fraction = 0.0;
  double mean_offpolicy_sample_fraction = 0.0;
  int64_t max_staleness = 0;
  std::map<int64_t, int64_t> staleness_histogram;
  double final_reward = 0.0;
  double tail_mean_reward = 0.0;  // mean over the last 10 steps
  int64_t buffer_high_water = 0;
  // mean_throughput / baseline mean_throughput - 1, when a baseline is given.
  std::optional<double> relative_throughput;

  bool operator==(const RunSummary&) const = default;
};

inline constexpr int kRewardTailSteps = 10;

// Throws std::invalid_argument when `baseline` has a different step count.
RunSummary SummarizeRun(std::span<const StepReport> reports,
                        std::span<const StepReport> baseline = {});

nlohmann::ordered_json ToJson(const StepReport& report);
nlohmann::ordered_json ToJson(const RunSummary& summary);

}  // namespace prsim
