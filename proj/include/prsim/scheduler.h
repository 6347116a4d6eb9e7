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
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "prsim/engine.h"
#include "prsim/policy.h"
#include "prsim/rollout.h"
#include "prsim/workload.h"

namespace prsim {

enum class SchedulerMode { kBaseline, kApril };
enum class TriggerMode { kGroups, kSamples };
enum class GenerationMode { kLengthDriven, kPolicyDriven };

struct SchedulerConfig {
  int rollout_batch_size = 32;        // N: groups delivered per step
  int n_samples_per_prompt = 8;       // G
  int over_sampling_batch_size = 64;  // N': groups kept open (partial mode)
  SchedulerMode mode = SchedulerMode::kApril;
  TriggerMode trigger = TriggerMode::kGroups;

  void Validate() const;
  int64_t batch_samples() const {
    return int64_t{rollout_batch_size} * n_samples_per_prompt;
  }
};

// Early-termination test. Delivery always needs N whole groups, so the
// sample trigger additionally requires N*G completed samples.
bool CheckTrigger(const SchedulerConfig& config, int64_t completed_groups,
                  int64_t completed_samples);

// Work carried between steps: paused partial samples in FIFO order, completed
// samples whose siblings are still running, and whole groups that completed
// beyond the N delivered in their step.
class ContinuationBuffer {
 public:
  // Appends samples paused at the same moment, ordered by sample id.
  void PushPaused(std::vector<RolloutSample> samples);
  bool has_paused() const { return !paused_.empty(); }
  RolloutSample PopPaused();
  const std::deque<RolloutSample>& paused() const { return paused_; }

  void AddOrphan(RolloutSample sample);
  // Removes and returns every orphan, keyed by instance.
  std::map<int64_t, std::vector<RolloutSample>> TakeOrphans();
  const std::map<int64_t, std::vector<RolloutSample>>& orphans() const {
    return orphans_;
  }

  void PushReadyGroup(Group group);
  std::deque<Group> TakeReadyGroups();
  const std::deque<Group>& ready_groups() const { return ready_; }

  // Number of samples held, across all three stores.
  int64_t size() const;
  int64_t tokens() const;
  bool empty() const { return size() == 0; }
  std::vector<SampleId> ids() const;

 private:
  std::deque<RolloutSample> paused_;
  std::map<int64_t, std::vector<RolloutSample>> orphans_;
  std::deque<Group> ready_;
};

// Submits paused partials to the engine in FIFO order, at most `max_samples`
// of them; the rest stay buffered. Returns the number submitted.
int64_t ResumeFromBuffer(ContinuationBuffer& buffer, Engine& engine,
                         int64_t max_samples);

// Fresh prompt instances and their samples.
class RolloutSource {
 public:
  RolloutSource(PromptStream prompts, std::optional<LengthSampler> lengths,
                GenerationMode mode);

  // A new instance with G pending samples.
  Group NextGroup();
  GenerationMode mode() const { return mode_; }

 private:
  PromptStream prompts_;
  std::optional<LengthSampler> lengths_;
  GenerationMode mode_;
};

struct RolloutStepResult {
  int64_t step = 0;
  int64_t version = 0;
  std::vector<Group> batch;
  int64_t tokens_generated = 0;
  double rollout_wall_time = 0.0;
  int64_t carried_in_tokens = 0;   // tokens held by the buffer at step start
  int64_t buffer_size_after = 0;   // samples
  int64_t buffer_tokens_after = 0;
  int64_t max_open_groups = 0;
  int64_t resumed_partials = 0;
  std::vector<Admission> admissions;
};

// Drives one engine through synchronous or partial-rollout steps. Owns the
// continuation buffer and the pool of never-started samples.
class RolloutScheduler {
 public:
  RolloutScheduler(SchedulerConfig config, Engine& engine, RolloutSource source,
                   uint64_t seed);

  // Rolls out one training batch under `policy.current()`.
  RolloutStepResult RunStep(const PolicyHistory& policy);
  RolloutStepResult RunStepBaseline(const PolicyHistory& policy);
  RolloutStepResult RunStepApril(const PolicyHistory& policy);

  const SchedulerConfig& config() const { return config_; }
  const ContinuationBuffer& buffer() const { return buffer_; }
  const std::deque<RolloutSample>& pending_pool() const { return pending_; }
  int64_t buffer_high_water() const { return buffer_high_water_; }
  int64_t steps_run() const { return step_; }

 private:
  struct OpenGroup {
    PromptInstance instance;
    std::vector<RolloutSample> completed;
  };

  void BeginStep(const PolicyHistory& policy, RolloutStepResult& result);
  void OpenFreshGroup();
  // Routes finished samples into their groups; returns groups completed by
  // this batch of events in delivery order.
  std::vector<Group> Collect(std::vector<FinishedEvent> events,
                             const PolicyHistory& policy);
  struct Counters {
    int64_t tokens;
    int64_t iterations;
    int64_t slot_iterations;
  };
  // Rollout time comes from engine counter deltas, not clock differences,
  // so equal work always yields bit-equal durations.
  void EndStep(RolloutStepResult& result, const Counters& before);

  SchedulerConfig config_;
  Engine& engine_;
  RolloutSource source_;
  uint64_t seed_;
  ContinuationBuffer buffer_;
  std::deque<RolloutSample> pending_;
  std::map<int64_t, OpenGroup> open_;
  int64_t step_ = 0;
  int64_t buffer_high_water_ = 0;
};

}  // namespace prsim
