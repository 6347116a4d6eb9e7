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

#include <gtest/gtest.h>

#include <map>

#include "prsim/errors.h"

namespace prsim {
namespace {

EngineConfig Config(int slots = 512, int64_t l_max = 16384) {
  EngineConfig c;
  c.max_slots = slots;
  c.l_max = l_max;
  return c;
}

RolloutSample Fixed(int64_t instance, int64_t length, int index = 0) {
  return RolloutSample(SampleId{instance, index}, length);
}

// Runs to idle; returns the finish iteration of every sample.
std::map<SampleId, int64_t> Drain(Engine& engine) {
  std::map<SampleId, int64_t> done;
  while (!engine.idle())
    for (auto& ev : engine.DecodeUntilEvent()) done[ev.sample.id()] = ev.iteration;
  return done;
}

TEST(EngineTest, SingleIterationCost) {
  Engine engine(Config());
  engine.Submit(Fixed(0, 10));
  EXPECT_EQ(engine.active_count(), 0u);
  engine.DecodeIteration();
  EXPECT_EQ(engine.active_count(), 1u);
  EXPECT_NEAR(engine.clock(), 0.052, 1e-15);
}

TEST(EngineTest, EmptyIterationIsNoOp) {
  Engine engine(Config());
  EXPECT_TRUE(engine.DecodeIteration().empty());
  EXPECT_TRUE(engine.DecodeUntilEvent().empty());
  EXPECT_EQ(engine.clock(), 0.0);
  EXPECT_EQ(engine.iterations(), 0);
}

TEST(EngineTest, IdenticalBatchClosedForm) {
  constexpr int64_t kL = 300;
  constexpr int kB = 40;
  Engine engine(Config());
  for (int i = 0; i < kB; ++i) engine.Submit(Fixed(i, kL));
  const auto done = Drain(engine);
  ASSERT_EQ(done.size(), static_cast<size_t>(kB));
  for (const auto& [id, it] : done) EXPECT_EQ(it, kL);
  EXPECT_NEAR(engine.clock(), kL * (0.05 + 0.002 * kB), 1e-9);
  EXPECT_EQ(engine.tokens_generated(), kL * kB);
}

TEST(EngineTest, RateApproachesInverseD1) {
  const EngineConfig c = Config();
  const double rate = c.RateAt(1000);
  EXPECT_NEAR(rate, 1000.0 / (0.05 + 2.0), 1e-9);
  EXPECT_NEAR(rate * c.d1, 1.0, 0.03);
  EXPECT_LT(rate, 1.0 / c.d1);
  EXPECT_GT(c.RateAt(100000) * c.d1, 0.9997);
}

TEST(EngineTest, SlotLimitQueuesExtra) {
  Engine engine(Config(4));
  for (int i = 0; i < 5; ++i) engine.Submit(Fixed(i, 100));
  engine.DecodeIteration();
  EXPECT_EQ(engine.active_count(), 4u);
  EXPECT_EQ(engine.queued_count(), 1u);
}

TEST(EngineTest, FreedSlotsRefillFifo) {
  Engine engine(Config(2));
  engine.Submit(Fixed(0, 1));
  engine.Submit(Fixed(1, 5));
  engine.Submit(Fixed(2, 5));
  engine.Submit(Fixed(3, 5));
  engine.DecodeIteration();  // sample 0 finishes
  engine.DecodeIteration();
  ASSERT_EQ(engine.admission_log().size(), 3u);
  EXPECT_EQ(engine.admission_log()[2].id.instance_id, 2);
  EXPECT_EQ(engine.queued_count(), 1u);
}

TEST(EngineTest, AbortConservesTokens) {
  Engine engine(Config());
  engine.Submit(Fixed(0, 1000));
  engine.Submit(Fixed(1, 1000));
  engine.Submit(Fixed(2, 1000));
  for (int i = 0; i < 100; ++i) engine.DecodeIteration();
  const double clock = engine.clock();
  const auto paused = engine.AbortActive();
  ASSERT_EQ(paused.size(), 3u);
  for (const auto& s : paused) {
    EXPECT_EQ(s.status(), SampleStatus::kPaused);
    EXPECT_EQ(s.total_tokens(), 100);
  }
  EXPECT_TRUE(engine.idle());
  EXPECT_EQ(engine.clock(), clock);
  EXPECT_TRUE(engine.AbortActive().empty());
}

TEST(EngineTest, AbortAtDifferentDepths) {
  Engine engine(Config());
  engine.Submit(Fixed(0, 1000));
  for (int i = 0; i < 100; ++i) engine.DecodeIteration();
  engine.Submit(Fixed(1, 1000));
  for (int i = 0; i < 100; ++i) engine.DecodeIteration();
  engine.Submit(Fixed(2, 1000));
  for (int i = 0; i < 100; ++i) engine.DecodeIteration();
  engine.Submit(Fixed(3, 1000));  // still queued
  auto out = engine.AbortActive();
  ASSERT_EQ(out.size(), 4u);
  EXPECT_EQ(out[0].total_tokens(), 300);
  EXPECT_EQ(out[1].total_tokens(), 200);
  EXPECT_EQ(out[2].total_tokens(), 100);
  EXPECT_EQ(out[3].total_tokens(), 0);
  EXPECT_EQ(out[3].status(), SampleStatus::kPending);
}

TEST(EngineTest, ResumeContinuesFromExistingTokens) {
  Engine engine(Config());
  RolloutSample s = Fixed(0, 800);
  s.AppendTokens(0, 500);
  s.set_status(SampleStatus::kPaused);
  engine.SetContext({1, nullptr, 0, 0});
  engine.Submit(std::move(s));
  engine.DecodeIteration();
  ASSERT_EQ(engine.admission_log().size(), 1u);
  EXPECT_TRUE(engine.admission_log()[0].resumed);
  const RolloutSample& active = engine.active()[0];
  EXPECT_EQ(active.total_tokens(), 501);
  ASSERT_EQ(active.segments().size(), 2u);
  EXPECT_EQ(active.segments()[1].tokens, 1);
  const auto done = Drain(engine);
  EXPECT_EQ(done.at(SampleId{0, 0}), 300);
  EXPECT_EQ(engine.tokens_generated(), 300);
}

TEST(EngineTest, AbortResubmitMatchesUninterruptedLength) {
  // Replay oracle: the same sample run straight through.
  Engine straight(Config());
  straight.Submit(Fixed(0, 777));
  std::vector<FinishedEvent> ev;
  while (ev.empty()) ev = straight.DecodeUntilEvent();
  const int64_t expected = ev[0].sample.total_tokens();

  Engine engine(Config());
  engine.Submit(Fixed(0, 777));
  for (int i = 0; i < 250; ++i) engine.DecodeIteration();
  auto paused = engine.AbortActive();
  engine.SetContext({1, nullptr, 0, 0});
  engine.Submit(std::move(paused[0]));
  std::vector<FinishedEvent> done;
  while (done.empty()) done = engine.DecodeUntilEvent();
  EXPECT_EQ(done[0].sample.total_tokens(), expected);
  EXPECT_EQ(done[0].sample.TokensBefore(1), 250);
  EXPECT_EQ(done[0].sample.complete_version(), 1);
}

TEST(EngineTest, CompletedSampleRejected) {
  Engine engine(Config());
  RolloutSample s = Fixed(0, 3);
  s.AppendTokens(0, 3);
  s.Complete(0, FinishReason::kTargetLength);
  EXPECT_THROW(engine.Submit(s), ContractViolation);
  RolloutSample active = Fixed(1, 3);
  active.set_status(SampleStatus::kActive);
  EXPECT_THROW(engine.Submit(active), ContractViolation);
}

TEST(EngineTest, StragglerBubble) {
  constexpr int kS = 16;
  constexpr int64_t kEll = 200;
  const auto wall = [&](bool straggler) {
    Engine engine(Config(kS));
    for (int i = 0; i < kS; ++i)
      engine.Submit(Fixed(i, (straggler && i == 0) ? 10 * kEll : kEll));
    Drain(engine);
    return engine.clock();
  };
  const EngineConfig c = Config(kS);
  EXPECT_GE(wall(true) - wall(false), 9 * kEll * (c.d0 + c.d1) - 1e-9);
}

TEST(EngineTest, TruncatesAtLmax) {
  Engine engine(Config(512, 50));
  engine.Submit(Fixed(0, 80));
  const auto done = Drain(engine);
  EXPECT_EQ(done.at(SampleId{0, 0}), 50);
}

TEST(EngineTest, FastForwardMatchesSingleStepping) {
  const auto submit_all = [](Engine& e) {
    for (int i = 0; i < 30; ++i) e.Submit(Fixed(i, 50 + 37 * i % 400));
  };
  Engine fast(Config(8));
  submit_all(fast);
  const auto fast_done = Drain(fast);

  Engine slow(Config(8));
  submit_all(slow);
  std::map<SampleId, int64_t> slow_done;
  while (!slow.idle())
    for (auto& ev : slow.DecodeIteration()) slow_done[ev.sample.id()] = ev.iteration;

  EXPECT_EQ(fast_done, slow_done);
  EXPECT_EQ(fast.clock(), slow.clock());
  EXPECT_EQ(fast.tokens_generated(), slow.tokens_generated());
  EXPECT_EQ(fast.slot_iterations(), slow.slot_iterations());
}

TEST(EngineTest, TokenConservationAtBoundaries) {
  Engine engine(Config(6));
  for (int i = 0; i < 20; ++i) engine.Submit(Fixed(i, 10 + 7 * i));
  int64_t finished_tokens = 0;
  double last_clock = 0.0;
  while (!engine.idle()) {
    for (auto& ev : engine.DecodeIteration()) finished_tokens += ev.sample.total_tokens();
    int64_t live = 0;
    for (const auto& s : engine.active()) live += s.total_tokens();
    ASSERT_EQ(engine.tokens_generated(), finished_tokens + live);
    ASSERT_GE(engine.clock(), last_clock);
    last_clock = engine.clock();
  }
}

TEST(EngineTest, IdleFractionIdentity) {
  Engine engine(Config(10));
  for (int i = 0; i < 5; ++i) engine.Submit(Fixed(i, 100));
  engine.DecodeIteration();
  const EngineConfig c = Config(10);
  EXPECT_NEAR(engine.InstantaneousRate(), 5.0 / (c.d0 + 5 * c.d1), 1e-12);
  EXPECT_NEAR(engine.IdleFraction(),
              1.0 - engine.InstantaneousRate() / (10.0 / (c.d0 + 10 * c.d1)), 1e-12);
}

TEST(EngineTest, PolicyDrivenStopsOnStopSymbol) {
  PolicyParams params = PolicyParams::Uniform(2);
  params.logits[2] = 30.0;  // STOP nearly certain
  const TokenSampler sampler(params);
  Engine engine(Config());
  engine.SetContext({0, &sampler, 2, 1});
  engine.Submit(RolloutSample(SampleId{0, 0}, 0));
  const auto events = engine.DecodeIteration();
  ASSERT_EQ(events.size(), 1u);
  EXPECT_EQ(events[0].sample.finish_reason(), FinishReason::kStop);
  EXPECT_EQ(events[0].sample.total_tokens(), 0);
  EXPECT_EQ(engine.tokens_generated(), 0);
  EXPECT_EQ(engine.iterations(), 1);
}

TEST(EngineTest, TraceRecordsFinishAndAbort) {
  Engine engine(Config());
  std::vector<TraceRecord> trace;
  engine.set_trace_sink([&](const TraceRecord& r) { trace.push_back(r); });
  engine.Submit(Fixed(0, 2));
  engine.Submit(Fixed(1, 10));
  engine.DecodeIteration();
  engine.DecodeIteration();
  engine.AbortActive();
  ASSERT_EQ(trace.size(), 2u);
  EXPECT_EQ(trace[0].reason, "target_length");
  EXPECT_EQ(trace[0].sample_id.ToString(), "0:0");
  EXPECT_EQ(trace[1].reason, "aborted");
  EXPECT_EQ(trace[1].tokens, 2);
}

TEST(EngineConfigTest, Validation) {
  EngineConfig c;
  c.d1 = 0.0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = EngineConfig{};
  c.max_slots = 0;
  EXPECT_THROW(Engine{c}, ConfigError);
}

}  // namespace
}  // namespace prsim
