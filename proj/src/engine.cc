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

#include "prsim/engine.h"

#include <algorithm>
#include <cmath>

#include "prsim/errors.h"
#include "prsim/rng.h"

namespace prsim {

void EngineConfig::Validate() const {
  if (!(d0 >= 0.0) || !std::isfinite(d0)) throw ConfigError("engine.d0", "must be >= 0");
  if (!(d1 > 0.0) || !std::isfinite(d1)) throw ConfigError("engine.d1", "must be > 0");
  if (max_slots < 1) throw ConfigError("engine.max_slots", "must be >= 1");
  if (l_max < 1) throw ConfigError("engine.max_response_len", "must be >= 1");
}

double EngineConfig::RateAt(int64_t b) const {
  if (b <= 0) return 0.0;
  const auto bd = static_cast<double>(b);
  return bd / (d0 + d1 * bd);
}

Engine::Engine(EngineConfig config) : config_(config) { config_.Validate(); }

void Engine::Submit(RolloutSample sample) {
  if (sample.status() != SampleStatus::kPending &&
      sample.status() != SampleStatus::kPaused) {
    throw ContractViolation("cannot submit " + std::string(ToString(sample.status())) +
                            " sample " + sample.id().ToString());
  }
  if (sample.total_tokens() >= config_.l_max)
    throw ContractViolation("sample " + sample.id().ToString() + " is already at l_max");
  queue_.push_back(std::move(sample));
}

double Engine::clock() const {
  return config_.d0 * static_cast<double>(iterations_) +
         config_.d1 * static_cast<double>(slot_iterations_);
}

double Engine::InstantaneousRate() const {
  return config_.RateAt(static_cast<int64_t>(active_.size()));
}

double Engine::IdleFraction() const {
  return 1.0 - InstantaneousRate() / config_.PeakRate();
}

void Engine::Admit() {
  while (active_.size() < static_cast<size_t>(config_.max_slots) && !queue_.empty()) {
    RolloutSample s = std::move(queue_.front());
    queue_.pop_front();
    admissions_.push_back({s.id(), s.status() == SampleStatus::kPaused});
    s.set_status(SampleStatus::kActive);
    active_.push_back(std::move(s));
  }
}

int64_t Engine::Remaining(const RolloutSample& s) const {
  return std::min(s.target_length(), config_.l_max) - s.total_tokens();
}

FinishReason Engine::Extend(RolloutSample& s) {
  if (s.length_driven()) {
    s.AppendTokens(context_.version, 1);
    ++tokens_generated_;
    if (s.total_tokens() >= s.target_length()) return FinishReason::kTargetLength;
  } else {
    if (context_.sampler == nullptr)
      throw ContractViolation("policy-driven sample without a token sampler");
    const CounterRng stream(context_.seed, static_cast<uint64_t>(s.id().instance_id),
                            static_cast<uint64_t>(s.id().sample_index),
                            StreamTag::kToken);
    const int symbol =
        context_.sampler->Draw(stream.Uniform(static_cast<uint64_t>(s.total_tokens())));
    if (symbol == context_.vocab_size) return FinishReason::kStop;
    s.AppendToken(context_.version, symbol, context_.vocab_size);
    ++tokens_generated_;
  }
  return s.total_tokens() >= config_.l_max ? FinishReason::kMaxLength
                                           : FinishReason::kNone;
}

std::vector<FinishedEvent> Engine::DecodeIteration() {
  Admit();
  std::vector<FinishedEvent> events;
  if (active_.empty()) return events;

  ++iterations_;
  slot_iterations_ += static_cast<int64_t>(active_.size());
  const double now = clock();

  size_t keep = 0;
  for (size_t i = 0; i < active_.size(); ++i) {
    RolloutSample& s = active_[i];
    const FinishReason reason = Extend(s);
    if (reason == FinishReason::kNone) {
      if (keep != i) active_[keep] = std::move(s);
      ++keep;
      continue;
    }
    s.Complete(context_.version, reason);
    Trace(s, ToString(reason));
    events.push_back({now, iterations_, std::move(s)});
  }
  active_.resize(keep);
  return events;
}

std::vector<FinishedEvent> Engine::DecodeUntilEvent() {
  for (;;) {
    Admit();
    if (active_.empty()) return {};
    const bool all_length_driven =
        std::all_of(active_.begin(), active_.end(),
                    [](const RolloutSample& s) { return s.length_driven(); });
    if (all_length_driven) {
      int64_t skip = config_.l_max;
      for (const auto& s : active_) skip = std::min(skip, Remaining(s) - 1);
      if (skip > 0) {
        // No sample finishes and no slot frees during these iterations.
        const auto b = static_cast<int64_t>(active_.size());
        iterations_ += skip;
        slot_iterations_ += b * skip;
        tokens_generated_ += b * skip;
        for (auto& s : active_) s.AppendTokens(context_.version, skip);
      }
    }
    auto events = DecodeIteration();
    if (!events.empty()) return events;
  }
}

std::vector<RolloutSample> Engine::AbortActive() {
  std::vector<RolloutSample> out;
  out.reserve(active_.size() + queue_.size());
  for (auto& s : active_) {
    s.set_status(SampleStatus::kPaused);
    Trace(s, "aborted");
    out.push_back(std::move(s));
  }
  active_.clear();
  for (auto& s : queue_) {
    // Queued samples keep their status unless they carry tokens.
    if (s.total_tokens() == 0) s.set_status(SampleStatus::kPending);
    out.push_back(std::move(s));
  }
  queue_.clear();
  return out;
}

void Engine::Trace(const RolloutSample& s, const char* reason) const {
  if (trace_) trace_({clock(), s.id(), s.total_tokens(), reason});
}

}  // namespace prsim
