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

#include <gtest/gtest.h>

#include <stdexcept>

namespace prsim {
namespace {

RolloutSample Done(int64_t instance, int index, std::vector<std::pair<int64_t, int64_t>> segs) {
  int64_t total = 0;
  for (const auto& [v, n] : segs) total += n;
  RolloutSample s(SampleId{instance, index}, total);
  for (const auto& [v, n] : segs) s.AppendTokens(v, n);
  s.Complete(segs.back().first, FinishReason::kTargetLength);
  return s;
}

Group MakeGroup(int64_t instance, std::vector<RolloutSample> samples) {
  Group g;
  g.instance.instance_id = instance;
  g.instance.group_size = static_cast<int>(samples.size());
  g.samples = std::move(samples);
  return g;
}

TEST(OffpolicyTest, OnPolicyBatchIsZero) {
  std::vector<Group> batch{MakeGroup(0, [] {
    std::vector<RolloutSample> v;
    v.push_back(Done(0, 0, {{4, 100}}));
    v.push_back(Done(0, 1, {{4, 300}}));
    return v;
  }())};
  EXPECT_EQ(OffpolicyFraction(batch, 4), 0.0);
  EXPECT_EQ(OffpolicySampleFraction(batch, 4), 0.0);
  EXPECT_EQ(StalenessHistogram(batch), (std::map<int64_t, int64_t>{{0, 2}}));
}

TEST(OffpolicyTest, MixedSampleArithmetic) {
  std::vector<Group> batch{MakeGroup(0, [] {
    std::vector<RolloutSample> v;
    v.push_back(Done(0, 0, {{4, 300}, {5, 100}}));
    v.push_back(Done(0, 1, {{5, 600}}));
    return v;
  }())};
  EXPECT_DOUBLE_EQ(OffpolicyFraction(batch, 5), 0.3);
  EXPECT_DOUBLE_EQ(OffpolicySampleFraction(batch, 5), 0.5);
}

TEST(StalenessTest, CountsVersionSpan) {
  std::vector<Group> batch{MakeGroup(0, [] {
    std::vector<RolloutSample> v;
    v.push_back(Done(0, 0, {{3, 10}, {4, 10}, {5, 10}}));
    v.push_back(Done(0, 1, {{5, 10}}));
    return v;
  }())};
  EXPECT_EQ(StalenessHistogram(batch), (std::map<int64_t, int64_t>{{0, 1}, {2, 1}}));
}

TEST(SigmaTest, HandArithmetic) {
  const auto group = [](int64_t inst, int64_t len) {
    std::vector<RolloutSample> v;
    v.push_back(Done(inst, 0, {{0, len}}));
    v.push_back(Done(inst, 1, {{0, len}}));
    return MakeGroup(inst, std::move(v));
  };
  std::vector<Group> equal{group(0, 7), group(1, 7)};
  EXPECT_EQ(SigmaBatch(equal), 0.0);
  EXPECT_EQ(SigmaInstance(equal), 0.0);
  std::vector<Group> batch{group(0, 2), group(1, 4)};
  EXPECT_DOUBLE_EQ(SigmaBatch(batch), 1.0);
  EXPECT_DOUBLE_EQ(SigmaInstance(batch), 0.0);
}

TEST(StepReportTest, InternalIdentities) {
  RolloutStepResult r;
  r.step = 3;
  r.version = 3;
  r.tokens_generated = 3000;
  r.rollout_wall_time = 10.0;
  r.batch.push_back(MakeGroup(0, [] {
    std::vector<RolloutSample> v;
    v.push_back(Done(0, 0, {{2, 50}, {3, 50}}));
    v.push_back(Done(0, 1, {{3, 100}}));
    return v;
  }()));
  const EngineConfig ec;
  const StepReport rep = BuildStepReport(r, 2.0, 0.4, ec);
  EXPECT_DOUBLE_EQ(rep.throughput, 300.0);
  EXPECT_DOUBLE_EQ(rep.idle_fraction, 1.0 - 300.0 / ec.PeakRate());
  EXPECT_EQ(rep.completed_groups, 1);
  EXPECT_DOUBLE_EQ(rep.offpolicy_fraction, 0.25);
  int64_t mass = 0;
  for (const auto& [m, c] : rep.staleness_histogram) mass += c;
  EXPECT_EQ(mass, 2);

  r.rollout_wall_time = 0.0;
  r.tokens_generated = 0;
  const StepReport idle = BuildStepReport(r, 2.0, 0.4, ec);
  EXPECT_EQ(idle.throughput, 0.0);
  EXPECT_EQ(idle.idle_fraction, 0.0);
}

StepReport Report(int64_t step, double throughput, double reward, int64_t max_m) {
  StepReport r;
  r.step = step;
  r.tokens_generated = static_cast<int64_t>(throughput * 10);
  r.rollout_wall_time = 10.0;
  r.throughput = throughput;
  r.idle_fraction = 0.1;
  r.offpolicy_fraction = 0.2;
  r.offpolicy_sample_fraction = 0.4;
  r.staleness_histogram = {{0, 3}, {max_m, 1}};
  r.mean_reward = reward;
  r.buffer_size_after = step;
  return r;
}

TEST(SummaryTest, SingleReport) {
  const std::vector<StepReport> one{Report(0, 1234.5, 0.6, 2)};
  const RunSummary s = SummarizeRun(one);
  EXPECT_EQ(s.steps, 1);
  EXPECT_EQ(s.total_tokens, one[0].tokens_generated);
  EXPECT_EQ(s.total_rollout_time, one[0].rollout_wall_time);
  EXPECT_EQ(s.mean_throughput, 1234.5);
  EXPECT_EQ(s.median_throughput, 1234.5);
  EXPECT_EQ(s.mean_idle_fraction, 0.1);
  EXPECT_EQ(s.mean_offpolicy_fraction, 0.2);
  EXPECT_EQ(s.mean_offpolicy_sample_fraction, 0.4);
  EXPECT_EQ(s.max_staleness, 2);
  EXPECT_EQ(s.staleness_histogram, one[0].staleness_histogram);
  EXPECT_EQ(s.final_reward, 0.6);
  EXPECT_EQ(s.tail_mean_reward, 0.6);
  EXPECT_FALSE(s.relative_throughput.has_value());
}

TEST(SummaryTest, AggregatesAcrossSteps) {
  std::vector<StepReport> rs;
  for (int k = 0; k < 12; ++k) rs.push_back(Report(k, 100.0 * (k + 1), 0.1 * k, k % 4));
  const RunSummary s = SummarizeRun(rs);
  EXPECT_DOUBLE_EQ(s.mean_throughput, 650.0);
  EXPECT_DOUBLE_EQ(s.median_throughput, 650.0);
  EXPECT_EQ(s.max_staleness, 3);
  EXPECT_EQ(s.buffer_high_water, 11);
  EXPECT_DOUBLE_EQ(s.final_reward, 1.1);
  // Tail over the last 10 steps: rewards 0.2 .. 1.1.
  EXPECT_NEAR(s.tail_mean_reward, 0.65, 1e-12);
}

TEST(SummaryTest, ZeroTimeStepsDoNotDiluteThroughput) {
  StepReport idle = Report(1, 0.0, 0.5, 0);
  idle.rollout_wall_time = 0.0;
  idle.tokens_generated = 0;
  idle.idle_fraction = 0.0;
  const std::vector<StepReport> rs{Report(0, 100.0, 0.5, 0), idle, Report(2, 300.0, 0.5, 0)};
  const RunSummary s = SummarizeRun(rs);
  EXPECT_DOUBLE_EQ(s.mean_throughput, 4000.0 / 20.0);
  EXPECT_DOUBLE_EQ(s.median_throughput, 200.0);
  EXPECT_DOUBLE_EQ(s.mean_idle_fraction, 0.1);
}

TEST(SummaryTest, IdenticalRunsGiveZeroImprovement) {
  std::vector<StepReport> rs;
  for (int k = 0; k < 5; ++k) rs.push_back(Report(k, 300.0 + k, 0.5, 0));
  const RunSummary s = SummarizeRun(rs, rs);
  ASSERT_TRUE(s.relative_throughput.has_value());
  EXPECT_EQ(*s.relative_throughput, 0.0);
}

TEST(SummaryTest, MismatchedStepCountsRejected) {
  std::vector<StepReport> a{Report(0, 1, 0, 0), Report(1, 1, 0, 0)};
  std::vector<StepReport> b{Report(0, 1, 0, 0)};
  EXPECT_THROW(SummarizeRun(a, b), std::invalid_argument);
}

TEST(SummaryTest, EmptyRun) {
  const RunSummary s = SummarizeRun({});
  EXPECT_EQ(s.steps, 0);
  EXPECT_EQ(s.total_tokens, 0);
}

TEST(JsonTest, StepReportFieldNames) {
  const auto j = ToJson(Report(2, 10.0, 0.3, 1));
  for (const char* key :
       {"step", "tokens_generated", "rollout_wall_time", "train_wall_time", "throughput",
        "idle_fraction", "completed_groups", "carried_in_tokens", "offpolicy_fraction",
        "offpolicy_sample_fraction", "staleness_histogram", "sigma_batch", "sigma_instance",
        "mean_reward", "buffer_size_after"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["staleness_histogram"]["1"], 1);
}

}  // namespace
}  // namespace prsim
