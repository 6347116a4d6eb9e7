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

#include "prsim/rollout.h"

#include "prsim/errors.h"

namespace prsim {

std::string SampleId::ToString() const {
  return std::to_string(instance_id) + ":" + std::to_string(sample_index);
}

const char* ToString(SampleStatus status) {
  switch (status) {
    case SampleStatus::kPending: return "pending";
    case SampleStatus::kActive: return "active";
    case SampleStatus::kPaused: return "paused";
    case SampleStatus::kCompleted: return "completed";
  }
  return "unknown";
}

const char* ToString(FinishReason reason) {
  switch (reason) {
    case FinishReason::kNone: return "none";
    case FinishReason::kStop: return "stop";
    case FinishReason::kTargetLength: return "target_length";
    case FinishReason::kMaxLength: return "max_length";
  }
  return "unknown";
}

RolloutSample::RolloutSample(SampleId id, int64_t target_length)
    : id_(id), target_length_(target_length) {
  if (target_length < 0) throw ContractViolation("negative target length");
}

Segment& RolloutSample::SegmentFor(int64_t version) {
  if (segments_.empty() || segments_.back().version < version) {
    segments_.push_back(Segment{version, 0, {}, {}});
    if (first_version_ < 0) first_version_ = version;
  } else if (segments_.back().version > version) {
    throw ContractViolation("sample " + id_.ToString() +
                            ": policy version went backwards");
  }
  return segments_.back();
}

void RolloutSample::AppendTokens(int64_t version, int64_t count) {
  if (count <= 0) return;
  SegmentFor(version).tokens += count;
  total_tokens_ += count;
}

void RolloutSample::AppendToken(int64_t version, int symbol, int vocab_size) {
  Segment& seg = SegmentFor(version);
  if (seg.symbol_counts.empty()) seg.symbol_counts.assign(vocab_size, 0);
  seg.token_ids.push_back(symbol);
  ++seg.symbol_counts[static_cast<size_t>(symbol)];
  ++seg.tokens;
  ++total_tokens_;
}

void RolloutSample::Complete(int64_t version, FinishReason reason) {
  status_ = SampleStatus::kCompleted;
  finish_reason_ = reason;
  // The finishing draw (last token or STOP) happens under `version`, which
  // may be newer than the last segment when a resumed sample stops at once.
  complete_version_ = version;
  if (first_version_ < 0) first_version_ = version;
}

int64_t RolloutSample::start_version() const { return first_version_; }

int64_t RolloutSample::TokensBefore(int64_t version) const {
  int64_t n = 0;
  for (const auto& seg : segments_)
    if (seg.version < version) n += seg.tokens;
  return n;
}

std::vector<int64_t> RolloutSample::SymbolCounts() const {
  std::vector<int64_t> counts;
  for (const auto& seg : segments_) {
    if (seg.symbol_counts.empty()) continue;
    if (counts.empty()) counts.assign(seg.symbol_counts.size(), 0);
    for (size_t j = 0; j < counts.size(); ++j) counts[j] += seg.symbol_counts[j];
  }
  return counts;
}

bool Group::complete() const {
  if (samples.size() != static_cast<size_t>(instance.group_size)) return false;
  for (const auto& s : samples)
    if (s.status() != SampleStatus::kCompleted) return false;
  return true;
}

int64_t Group::total_tokens() const {
  int64_t n = 0;
  for (const auto& s : samples) n += s.total_tokens();
  return n;
}

}  // namespace prsim
