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

#include "prsim/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace prsim {

namespace {

double PopulationStd(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / n);
}

nlohmann::ordered_json HistogramJson(const std::map<int64_t, int64_t>& h) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto& [m, count] : h) out[std::to_string(m)] = count;
  return out;
}

}  // namespace

double OffpolicyFraction(const std::vector<Group>& batch, int64_t version) {
  int64_t old_tokens = 0, total = 0;
  for (const auto& g : batch)
    for (const auto& s : g.samples) {
      old_tokens += s.TokensBefore(version);
      total += s.total_tokens();
    }
  return total == 0 ? 0.0 : static_cast<double>(old_tokens) / static_cast<double>(total);
}

double OffpolicySampleFraction(const std::vector<Group>& batch, int64_t version) {
  int64_t mixed = 0, total = 0;
  for (const auto& g : batch)
    for (const auto& s : g.samples) {
      mixed += s.TokensBefore(version) > 0 ? 1 : 0;
      ++total;
    }
  return total == 0 ? 0.0 : static_cast<double>(mixed) / static_cast<double>(total);
}

std::map<int64_t, int64_t> StalenessHistogram(const std::vector<Group>& batch) {
  std::map<int64_t, int64_t> h;
  for (const auto& g : batch)
    for (const auto& s : g.samples) ++h[s.staleness()];
  return h;
}

double SigmaBatch(const std::vector<Group>& batch) {
  std::vector<double> lengths;
  for (const auto& g : batch)
    for (const auto& s : g.samples) lengths.push_back(static_cast<double>(s.total_tokens()));
  return PopulationStd(lengths);
}

double SigmaInstance(const std::vector<Group>& batch) {
  if (batch.empty()) return 0.0;
  double sum = 0.0;
  std::vector<double> lengths;
  for (const auto& g : batch) {
    lengths.clear();
    for (const auto& s : g.samples) lengths.push_back(static_cast<double>(s.total_tokens()));
    sum += PopulationStd(lengths);
  }
  return sum / static_cast<double>(batch.size());
}

StepReport BuildStepReport(const RolloutStepResult& rollout,
                           double train_wall_time, double mean_reward,
                           const EngineConfig& engine) {
  StepReport r;
  r.step = rollout.step;
  r.tokens_generated = rollout.tokens_generated;
  r.rollout_wall_time = rollout.rollout_wall_time;
  r.train_wall_time = train_wall_time;
  // A step served entirely from surplus groups spends no engine time.
  if (rollout.rollout_wall_time > 0.0) {
    r.throughput = static_cast<double>(rollout.tokens_generated) / rollout.rollout_wall_time;
    r.idle_fraction = std::clamp(1.0 - r.throughput / engine.PeakRate(), 0.0, 1.0);
  }
  r.completed_groups = static_cast<int64_t>(rollout.batch.size());
  r.carried_in_tokens = rollout.carried_in_tokens;
  r.offpolicy_fraction = OffpolicyFraction(rollout.batch, rollout.version);
  r.offpolicy_sample_fraction = OffpolicySampleFraction(rollout.batch, rollout.version);
  r.staleness_histogram = StalenessHistogram(rollout.batch);
  r.sigma_batch = SigmaBatch(rollout.batch);
  r.sigma_instance = SigmaInstance(rollout.batch);
  r.mean_reward = mean_reward;
  r.buffer_size_after = rollout.buffer_size_after;
  return r;
}

RunSummary SummarizeRun(std::span<const StepReport> reports,
                        std::span<const StepReport> baseline) {
  RunSummary s;
  s.steps = static_cast<int64_t>(reports.size());
  if (!baseline.empty() && baseline.size() != reports.size())
    throw std::invalid_argument("cannot compare runs of " +
                                std::to_string(reports.size()) + " and " +
                                std::to_string(baseline.size()) + " steps");
  if (reports.empty()) return s;

  const double n = static_cast<double>(reports.size());
  std::vector<double> tps;
  for (const auto& r : reports) {
    s.total_tokens += r.tokens_generated;
    s.total_rollout_time += r.rollout_wall_time;
    if (r.rollout_wall_time > 0.0) tps.push_back(r.throughput);
    s.mean_idle_fraction += r.idle_fraction * r.rollout_wall_time;
    s.mean_offpolicy_fraction += r.offpolicy_fraction;
    s.mean_offpolicy_sample_fraction += r.offpolicy_sample_fraction;
    for (const auto& [m, count] : r.staleness_histogram) {
      s.staleness_histogram[m] += count;
      s.max_staleness = std::max(s.max_staleness, m);
    }
    s.buffer_high_water = std::max(s.buffer_high_water, r.buffer_size_after);
  }
  // Time-weighted: steps served from surplus groups add tokens-free, zero
  // duration entries that would otherwise drag a plain average to zero.
  if (s.total_rollout_time > 0.0)
    s.mean_throughput = static_cast<double>(s.total_tokens) / s.total_rollout_time;
  if (s.total_rollout_time > 0.0) s.mean_idle_fraction /= s.total_rollout_time;
  s.mean_offpolicy_fraction /= n;
  s.mean_offpolicy_sample_fraction /= n;
  if (!tps.empty()) {
    std::sort(tps.begin(), tps.end());
    const size_t mid = tps.size() / 2;
    s.median_throughput = tps.size() % 2 == 1 ? tps[mid] : 0.5 * (tps[mid - 1] + tps[mid]);
  }
  s.final_reward = reports.back().mean_reward;
  const size_t tail = std::min<size_t>(reports.size(), kRewardTailSteps);
  for (size_t i = reports.size() - tail; i < reports.size(); ++i)
    s.tail_mean_reward += reports[i].mean_reward;
  s.tail_mean_reward /= static_cast<double>(tail);

  if (!baseline.empty()) {
    const RunSummary base = SummarizeRun(baseline);
    s.relative_throughput = s.mean_throughput / base.mean_throughput - 1.0;
  }
  return s;
}

nlohmann::ordered_json ToJson(const StepReport& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["tokens_generated"] = r.tokens_generated;
  j["rollout_wall_time"] = r.rollout_wall_time;
  j["train_wall_time"] = r.train_wall_time;
  j["throughput"] = r.throughput;
  j["idle_fraction"] = r.idle_fraction;
  j["completed_groups"] = r.completed_groups;
  j["carried_in_tokens"] = r.carried_in_tokens;
  j["offpolicy_fraction"] = r.offpolicy_fraction;
  j["offpolicy_sample_fraction"] = r.offpolicy_sample_fraction;
  j["staleness_histogram"] = HistogramJson(r.staleness_histogram);
  j["sigma_batch"] = r.sigma_batch;
  j["sigma_instance"] = r.sigma_instance;
  j["mean_reward"] = r.mean_reward;
  j["buffer_size_after"] = r.buffer_size_after;
  return j;
}

nlohmann::ordered_json ToJson(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["steps"] = s.steps;
  j["total_tokens"] = s.total_tokens;
  j["total_rollout_time"] = s.total_rollout_time;
  j["mean_throughput"] = s.mean_throughput;
  j["median_throughput"] = s.median_throughput;
  j["mean_idle_fraction"] = s.mean_idle_fraction;
  j["mean_offpolicy_fraction"] = s.mean_offpolicy_fraction;
  j["mean_offpolicy_sample_fraction"] = s.mean_offpolicy_sample_fraction;
  j["max_staleness"] = s.max_staleness;
  j["staleness_histogram"] = HistogramJson(s.staleness_histogram);
  j["final_reward"] = s.final_reward;
  j["tail_mean_reward"] = s.tail_mean_reward;
  j["buffer_high_water"] = s.buffer_high_water;
  if (s.relative_throughput) j["relative_throughput"] = *s.relative_throughput;
  return j;
}

}  // namespace prsim
