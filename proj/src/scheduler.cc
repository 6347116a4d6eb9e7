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

#include "prsim/scheduler.h"

#include <algorithm>
#include <stdexcept>

#include "prsim/errors.h"

namespace prsim {

void SchedulerConfig::Validate() const {
  if (rollout_batch_size < 1)
    throw ConfigError("scheduler.rollout_batch_size", "must be >= 1");
  if (n_samples_per_prompt < 1)
    throw ConfigError("scheduler.n_samples_per_prompt", "must be >= 1");
  if (over_sampling_batch_size < rollout_batch_size)
    throw ConfigError("scheduler.over_sampling_batch_size",
                      "must be >= rollout_batch_size (" +
                          std::to_string(rollout_batch_size) + ")");
}

bool CheckTrigger(const SchedulerConfig& config, int64_t completed_groups,
                  int64_t completed_samples) {
  const bool groups_ready = completed_groups >= config.rollout_batch_size;
  if (config.trigger == TriggerMode::kGroups) return groups_ready;
  return groups_ready && completed_samples >= config.batch_samples();
}

void ContinuationBuffer::PushPaused(std::vector<RolloutSample> samples) {
  std::sort(samples.begin(), samples.end(),
            [](const RolloutSample& a, const RolloutSample& b) { return a.id() < b.id(); });
  for (auto& s : samples) {
    if (s.status() != SampleStatus::kPaused)
      throw ContractViolation("buffering non-paused sample " + s.id().ToString());
    paused_.push_back(std::move(s));
  }
}

RolloutSample ContinuationBuffer::PopPaused() {
  if (paused_.empty()) throw ContractViolation("no paused samples buffered");
  RolloutSample s = std::move(paused_.front());
  paused_.pop_front();
  return s;
}

void ContinuationBuffer::AddOrphan(RolloutSample sample) {
  if (sample.status() != SampleStatus::kCompleted)
    throw ContractViolation("orphan " + sample.id().ToString() + " is not completed");
  orphans_[sample.id().instance_id].push_back(std::move(sample));
}

std::map<int64_t, std::vector<RolloutSample>> ContinuationBuffer::TakeOrphans() {
  return std::exchange(orphans_, {});
}

void ContinuationBuffer::PushReadyGroup(Group group) { ready_.push_back(std::move(group)); }

std::deque<Group> ContinuationBuffer::TakeReadyGroups() { return std::exchange(ready_, {}); }

int64_t ContinuationBuffer::size() const {
  auto n = static_cast<int64_t>(paused_.size());
  for (const auto& [id, v] : orphans_) n += static_cast<int64_t>(v.size());
  for (const auto& g : ready_) n += static_cast<int64_t>(g.samples.size());
  return n;
}

int64_t ContinuationBuffer::tokens() const {
  int64_t n = 0;
  for (const auto& s : paused_) n += s.total_tokens();
  for (const auto& [id, v] : orphans_)
    for (const auto& s : v) n += s.total_tokens();
  for (const auto& g : ready_) n += g.total_tokens();
  return n;
}

std::vector<SampleId> ContinuationBuffer::ids() const {
  std::vector<SampleId> out;
  for (const auto& s : paused_) out.push_back(s.id());
  for (const auto& [id, v] : orphans_)
    for (const auto& s : v) out.push_back(s.id());
  for (const auto& g : ready_)
    for (const auto& s : g.samples) out.push_back(s.id());
  return out;
}

int64_t ResumeFromBuffer(ContinuationBuffer& buffer, Engine& engine,
                         int64_t max_samples) {
  int64_t admitted = 0;
  while (admitted < max_samples && buffer.has_paused()) {
    engine.Submit(buffer.PopPaused());
    ++admitted;
  }
  return admitted;
}

RolloutSource::RolloutSource(PromptStream prompts,
                             std::optional<LengthSampler> lengths,
                             GenerationMode mode)
    : prompts_(std::move(prompts)), lengths_(std::move(lengths)), mode_(mode) {
  if (mode_ == GenerationMode::kLengthDriven && !lengths_)
    throw ConfigError("workload.mode", "length_driven needs a length distribution");
}

Group RolloutSource::NextGroup() {
  Group group;
  group.instance = prompts_.NextInstance();
  const int g = group.instance.group_size;
  group.samples.reserve(static_cast<size_t>(g));
  for (int j = 0; j < g; ++j) {
    const int64_t target = mode_ == GenerationMode::kLengthDriven
                               ? lengths_->LengthFor(group.instance.instance_id, j)
                               : 0;
    group.samples.emplace_back(SampleId{group.instance.instance_id, j}, target);
  }
  return group;
}

RolloutScheduler::RolloutScheduler(SchedulerConfig config, Engine& engine,
                                   RolloutSource source, uint64_t seed)
    : config_(config), engine_(engine), source_(std::move(source)), seed_(seed) {
  config_.Validate();
}

RolloutStepResult RolloutScheduler::RunStep(const PolicyHistory& policy) {
  return config_.mode == SchedulerMode::kBaseline ? RunStepBaseline(policy)
                                                  : RunStepApril(policy);
}

void RolloutScheduler::BeginStep(const PolicyHistory& policy,
                                 RolloutStepResult& result) {
  if (!engine_.idle()) throw ContractViolation("step started on a busy engine");
  const int64_t version = policy.current_version();
  engine_.SetContext({version, &policy.sampler(version),
                      policy.current().vocab_size(), seed_});
  engine_.ClearAdmissionLog();
  result.step = step_;
  result.version = version;
  result.carried_in_tokens = buffer_.tokens();
}

void RolloutScheduler::OpenFreshGroup() {
  Group group = source_.NextGroup();
  const int64_t id = group.instance.instance_id;
  open_.emplace(id, OpenGroup{group.instance, {}});
  for (auto& s : group.samples) engine_.Submit(std::move(s));
}

std::vector<Group> RolloutScheduler::Collect(std::vector<FinishedEvent> events,
                                             const PolicyHistory& policy) {
  std::vector<Group> done;
  const auto group_size = static_cast<size_t>(config_.n_samples_per_prompt);
  for (auto& ev : events) {
    RolloutSample& s = ev.sample;
    MaterializeTokens(s, policy, seed_);
    const int64_t id = s.id().instance_id;
    auto it = open_.find(id);
    if (it == open_.end())
      throw std::logic_error("finished sample of unknown group " + s.id().ToString());
    it->second.completed.push_back(std::move(s));
    if (it->second.completed.size() < group_size) continue;

    Group group{std::move(it->second.instance), std::move(it->second.completed),
                ev.iteration};
    std::sort(group.samples.begin(), group.samples.end(),
              [](const RolloutSample& a, const RolloutSample& b) {
                return a.id() < b.id();
              });
    open_.erase(it);
    done.push_back(std::move(group));
  }
  std::stable_sort(done.begin(), done.end(), [](const Group& a, const Group& b) {
    if (a.completion_iteration != b.completion_iteration)
      return a.completion_iteration < b.completion_iteration;
    return a.instance.instance_id < b.instance.instance_id;
  });
  return done;
}

void RolloutScheduler::EndStep(RolloutStepResult& result, const Counters& before) {
  const EngineConfig& ec = engine_.config();
  result.rollout_wall_time =
      ec.d0 * static_cast<double>(engine_.iterations() - before.iterations) +
      ec.d1 * static_cast<double>(engine_.slot_iterations() - before.slot_iterations);
  result.tokens_generated = engine_.tokens_generated() - before.tokens;
  result.admissions = engine_.admission_log();
  result.buffer_size_after = buffer_.size();
  result.buffer_tokens_after = buffer_.tokens();
  buffer_high_water_ = std::max(buffer_high_water_, result.buffer_size_after);
  ++step_;
}

RolloutStepResult RolloutScheduler::RunStepBaseline(const PolicyHistory& policy) {
  RolloutStepResult result;
  BeginStep(policy, result);
  const Counters before{engine_.tokens_generated(), engine_.iterations(),
                        engine_.slot_iterations()};

  for (int i = 0; i < config_.rollout_batch_size; ++i) OpenFreshGroup();
  result.max_open_groups = static_cast<int64_t>(open_.size());

  while (!engine_.idle()) {
    auto groups = Collect(engine_.DecodeUntilEvent(), policy);
    for (auto& g : groups) result.batch.push_back(std::move(g));
  }
  if (!open_.empty()) throw std::logic_error("baseline step left open groups");

  EndStep(result, before);
  return result;
}

RolloutStepResult RolloutScheduler::RunStepApril(const PolicyHistory& policy) {
  RolloutStepResult result;
  BeginStep(policy, result);
  const Counters before{engine_.tokens_generated(), engine_.iterations(),
                        engine_.slot_iterations()};
  const int64_t group_size = config_.n_samples_per_prompt;
  const int64_t n = config_.rollout_batch_size;
  const int64_t n_open_max = config_.over_sampling_batch_size;

  // Surplus groups from the previous step are delivered first.
  std::vector<Group> complete;
  for (auto& g : buffer_.TakeReadyGroups()) complete.push_back(std::move(g));
  auto completed_groups = static_cast<int64_t>(complete.size());
  int64_t completed_samples = completed_groups * group_size;

  if (!CheckTrigger(config_, completed_groups, completed_samples)) {
    for (auto& [id, samples] : buffer_.TakeOrphans()) {
      auto& og = open_.at(id);
      completed_samples += static_cast<int64_t>(samples.size());
      for (auto& s : samples) og.completed.push_back(std::move(s));
    }
    result.resumed_partials = ResumeFromBuffer(
        buffer_, engine_, n_open_max * group_size - completed_samples);
    std::sort(pending_.begin(), pending_.end(),
              [](const RolloutSample& a, const RolloutSample& b) { return a.id() < b.id(); });
    while (!pending_.empty()) {
      engine_.Submit(std::move(pending_.front()));
      pending_.pop_front();
    }
    while (static_cast<int64_t>(open_.size()) + completed_groups < n_open_max)
      OpenFreshGroup();
    result.max_open_groups = static_cast<int64_t>(open_.size()) + completed_groups;

    while (!CheckTrigger(config_, completed_groups, completed_samples)) {
      auto events = engine_.DecodeUntilEvent();
      if (events.empty())
        throw std::logic_error("engine drained before the step could complete");
      completed_samples += static_cast<int64_t>(events.size());
      for (auto& g : Collect(std::move(events), policy)) {
        ++completed_groups;
        complete.push_back(std::move(g));
      }
    }

    std::vector<RolloutSample> paused;
    for (auto& s : engine_.AbortActive()) {
      if (s.status() == SampleStatus::kPaused) paused.push_back(std::move(s));
      else pending_.push_back(std::move(s));
    }
    buffer_.PushPaused(std::move(paused));
    for (auto& [id, og] : open_) {
      for (auto& s : og.completed) buffer_.AddOrphan(std::move(s));
      og.completed.clear();
    }
  } else {
    result.max_open_groups = static_cast<int64_t>(open_.size()) + completed_groups;
  }

  for (size_t i = 0; i < complete.size(); ++i) {
    if (static_cast<int64_t>(i) < n) result.batch.push_back(std::move(complete[i]));
    else buffer_.PushReadyGroup(std::move(complete[i]));
  }

  EndStep(result, before);
  return result;
}

}  // namespace prsim
