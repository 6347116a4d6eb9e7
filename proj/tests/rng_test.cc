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

#include "prsim/rng.h"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

namespace prsim {
namespace {

TEST(CounterRngTest, SameKeySameDraws) {
  const CounterRng a(7, 3, 1, StreamTag::kLength);
  const CounterRng b(7, 3, 1, StreamTag::kLength);
  for (uint64_t i = 0; i < 100; ++i) {
    EXPECT_EQ(a.Bits(i), b.Bits(i));
    EXPECT_EQ(a.Normal(i), b.Normal(i));
  }
}

TEST(CounterRngTest, DrawsDoNotDependOnCallOrder) {
  const CounterRng rng(1, 2, 3, StreamTag::kToken);
  const double late = rng.Uniform(50);
  for (uint64_t i = 0; i < 50; ++i) rng.Uniform(i);
  EXPECT_EQ(rng.Uniform(50), late);
}

TEST(CounterRngTest, KeyComponentsSeparateStreams) {
  const uint64_t base = CounterRng(7, 3, 1, StreamTag::kLength).Bits(0);
  std::set<uint64_t> seen{base};
  seen.insert(CounterRng(8, 3, 1, StreamTag::kLength).Bits(0));
  seen.insert(CounterRng(7, 4, 1, StreamTag::kLength).Bits(0));
  seen.insert(CounterRng(7, 3, 2, StreamTag::kLength).Bits(0));
  seen.insert(CounterRng(7, 3, 1, StreamTag::kToken).Bits(0));
  seen.insert(CounterRng(7, 1, 3, StreamTag::kLength).Bits(0));
  EXPECT_EQ(seen.size(), 6u);
}

TEST(CounterRngTest, UniformIsOpenUnitInterval) {
  const CounterRng rng(0, 0, 0, StreamTag::kHistogram);
  double sum = 0.0;
  constexpr int kN = 200000;
  for (int i = 0; i < kN; ++i) {
    const double u = rng.Uniform(static_cast<uint64_t>(i));
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / kN, 0.5, 0.005);
}

TEST(CounterRngTest, NormalMoments) {
  const CounterRng rng(11, 0, 0, StreamTag::kLength);
  constexpr int kN = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < kN; ++i) {
    const double z = rng.Normal(static_cast<uint64_t>(i));
    s1 += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s1 / kN, 0.0, 0.01);
  EXPECT_NEAR(s2 / kN, 1.0, 0.02);
}

}  // namespace
}  // namespace prsim
