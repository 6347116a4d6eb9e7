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
#include <functional>
#include <string>
#include <vector>

#include "prsim/policy.h"
#include "prsim/rollout.h"

namespace prsim {

// Affine decode cost: one iteration over b active sequences takes d0 + d1 * b
// seconds and emits one token per sequence.
struct EngineConfig {
  double d0 = 0.05;
  double d1 = 0.002;
  int max_slots = 512;
  int64_t l_max = 16384;

  void Validate() const;
  // Aggregate tokens/s with b sequences in flight.
  double RateAt(int64_t b) const;
  double PeakRate() const { return RateAt(max_slots); }
};

// What the engine needs to extend sequences: the version stamped on new
// tokens and, for policy-driven samples, the sampler that picks them.
struct GenerationContext {
  int64_t version = 0;
  const TokenSampler* sampler = nullptr;
  int vocab_size = 0;
  uint64_t seed = 0;
};

struct FinishedEvent {
  double clock = 0.0;
  int64_t iteration = 0;
  RolloutSample sample;
};

struct Admission {
  SampleId id;
  bool resumed = false;  // carried tokens from an earlier pause
};

struct TraceRecord {
  double clock = 0.0;
  SampleId sample_id;
  int64_t tokens = 0;
  std::string reason;  // stop | target_length | max_length | aborted
};

// Discrete-event continuous-batching engine. Samples wait in a FIFO queue and
// take a slot at the start of the next decode iteration. The clock is derived
// from integer counters (d0 * iterations + d1 * slot-iterations) so that
// fast-forwarding several iterations at once is bit-identical to stepping.
class Engine {
 public:
  explicit Engine(EngineConfig config);

  void SetContext(GenerationContext context) { context_ = context; }
  const GenerationContext& context() const { return context_; }

  // Accepts a pending or paused sample; completed samples are rejected.
  void Submit(RolloutSample sample);

  // One iteration: admit from the queue, extend every active sample by one
  // draw, retire finished samples. No-op when there is nothing to run.
  std::vector<FinishedEvent> DecodeIteration();

  // Runs iterations until at least one sample finishes or the engine is
  // idle. For length-driven batches the event-free prefix is applied in
  // bulk.
  std::vector<FinishedEvent> DecodeUntilEvent();

  // Pauses every active sample (tokens kept) and returns it, followed by the
  // queued samples reset to pending. Takes no simulated time.
  std::vector<RolloutSample> AbortActive();

  double clock() const;
  int64_t iterations() const { return iterations_; }
  int64_t slot_iterations() const { return slot_iterations_; }
  int64_t tokens_generated() const { return tokens_generated_; }

  size_t active_count() const { return active_.size(); }
  size_t queued_count() const { return queue_.size(); }
  bool idle() const { return active_.empty() && queue_.empty(); }
  const std::vector<RolloutSample>& active() const { return active_; }

  // b / (d0 + d1 b) for the current active set.
  double InstantaneousRate() const;
  // 1 - rate / peak rate.
  double IdleFraction() const;

  const std::vector<Admission>& admission_log() const { return admissions_; }
  void ClearAdmissionLog() { admissions_.clear(); }

  void set_trace_sink(std::function<void(const TraceRecord&)> sink) {
    trace_ = std::move(sink);
  }

  const EngineConfig& config() const { return config_; }

 private:
  void Admit();
  int64_t Remaining(const RolloutSample& s) const;
  FinishReason Extend(RolloutSample& s);
  void Trace(const RolloutSample& s, const char* reason) const;

  EngineConfig config_;
  GenerationContext context_;
  std::vector<RolloutSample> active_;
  std::deque<RolloutSample> queue_;
  std::vector<Admission> admissions_;
  std::function<void(const TraceRecord&)> trace_;
  int64_t iterations_ = 0;
  int64_t slot_iterations_ = 0;
  int64_t tokens_generated_ = 0;
};

}  // namespace prsim
