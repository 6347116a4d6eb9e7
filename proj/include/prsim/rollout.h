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

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "prsim/workload.h"

namespace prsim {

struct SampleId {
  int64_t instance_id = 0;
  int sample_index = 0;

  auto operator<=>(const SampleId&) const = default;
  std::string ToString() const;
};

enum class SampleStatus { kPending, kActive, kPaused, kCompleted };

enum class FinishReason {
  kNone,
  kStop,          // policy emitted STOP
  kTargetLength,  // length-driven target reached
  kMaxLength,     // truncated at l_max
};

const char* ToString(SampleStatus status);
const char* ToString(FinishReason reason);

// Tokens generated under one policy version.
struct Segment {
  int64_t version = 0;
  int64_t tokens = 0;
  std::vector<int> token_ids;           // policy-driven samples only
  std::vector<int64_t> symbol_counts;   // per non-STOP symbol, once known
};

// One response sequence. Generation may span several policy versions; each
// version's contribution is a separate segment, versions strictly increasing.
class RolloutSample {
 public:
  RolloutSample() = default;
  // target_length > 0 selects length-driven generation; 0 means the policy
  // decides when to stop.
  RolloutSample(SampleId id, int64_t target_length);

  const SampleId& id() const { return id_; }
  SampleStatus status() const { return status_; }
  void set_status(SampleStatus status) { status_ = status; }

  bool length_driven() const { return target_length_ > 0; }
  int64_t target_length() const { return target_length_; }
  int64_t total_tokens() const { return total_tokens_; }
  const std::vector<Segment>& segments() const { return segments_; }
  std::vector<Segment>& mutable_segments() { return segments_; }

  // Appends `count` tokens generated under `version`.
  void AppendTokens(int64_t version, int64_t count);
  // Appends one policy-sampled token.
  void AppendToken(int64_t version, int symbol, int vocab_size);

  void Complete(int64_t version, FinishReason reason);
  FinishReason finish_reason() const { return finish_reason_; }
  bool stopped_naturally() const { return finish_reason_ == FinishReason::kStop; }

  // -1 until the first token exists.
  int64_t start_version() const;
  // Version under which generation finished; -1 until completed.
  int64_t complete_version() const { return complete_version_; }
  int64_t staleness() const { return complete_version_ - start_version(); }

  // Tokens generated under versions older than `version`.
  int64_t TokensBefore(int64_t version) const;
  // Per-symbol token counts summed over segments (empty if unknown).
  std::vector<int64_t> SymbolCounts() const;

 private:
  Segment& SegmentFor(int64_t version);

  SampleId id_;
  SampleStatus status_ = SampleStatus::kPending;
  int64_t target_length_ = 0;
  int64_t total_tokens_ = 0;
  int64_t complete_version_ = -1;
  int64_t first_version_ = -1;
  FinishReason finish_reason_ = FinishReason::kNone;
  std::vector<Segment> segments_;
};

// An instance and its G samples; the unit of completion and delivery.
struct Group {
  PromptInstance instance;
  std::vector<RolloutSample> samples;
  // Engine iteration on which the last sample finished.
  int64_t completion_iteration = -1;

  bool complete() const;
  int64_t total_tokens() const;
};

}  // namespace prsim
