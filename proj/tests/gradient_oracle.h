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

// Independent reference for the score-function gradient: the objective
// sum_i A_i log pi(a_i) evaluated directly and differentiated numerically.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "prsim/policy.h"
#include "prsim/rollout.h"

namespace prsim::testing {

struct GradientCase {
  PolicyParams params;
  std::vector<Group> batch;
  std::vector<std::vector<double>> advantages;
};

inline double LogSoftmaxAt(const std::vector<double>& z, size_t j, size_t n) {
  double max = z[0];
  for (size_t k = 1; k < n; ++k) max = std::max(max, z[k]);
  double sum = 0.0;
  for (size_t k = 0; k < n; ++k) sum += std::exp(z[k] - max);
  return z[j] - max - std::log(sum);
}

// Policy-driven samples: every token plus the STOP draw when the sample
// stopped. Length-driven samples: per-token mean under the non-STOP
// conditional.
inline double Objective(const std::vector<double>& z, const std::vector<Group>& batch,
                        const std::vector<std::vector<double>>& advantages) {
  const size_t all = z.size();
  const size_t non_stop = all - 1;
  double f = 0.0;
  for (size_t g = 0; g < batch.size(); ++g) {
    for (size_t i = 0; i < batch[g].samples.size(); ++i) {
      const RolloutSample& s = batch[g].samples[i];
      const size_t n = s.length_driven() ? non_stop : all;
      double logp = 0.0;
      for (const Segment& seg : s.segments())
        for (size_t j = 0; j < seg.symbol_counts.size(); ++j)
          logp += static_cast<double>(seg.symbol_counts[j]) * LogSoftmaxAt(z, j, n);
      if (s.stopped_naturally()) logp += LogSoftmaxAt(z, non_stop, all);
      if (s.length_driven() && s.total_tokens() > 0)
        logp /= static_cast<double>(s.total_tokens());
      f += advantages[g][i] * logp;
    }
  }
  return f;
}

inline std::vector<double> FiniteDifference(const GradientCase& c, double h) {
  std::vector<double> out(c.params.logits.size());
  for (size_t j = 0; j < out.size(); ++j) {
    std::vector<double> up = c.params.logits, down = c.params.logits;
    up[j] += h;
    down[j] -= h;
    out[j] = (Objective(up, c.batch, c.advantages) -
              Objective(down, c.batch, c.advantages)) /
             (2.0 * h);
  }
  return out;
}

// Max-norm error relative to the max-norm of the reference.
inline double RelativeError(const std::vector<double>& got,
                            const std::vector<double>& want) {
  double err = 0.0, scale = 0.0;
  for (size_t j = 0; j < want.size(); ++j) {
    err = std::max(err, std::abs(got[j] - want[j]));
    scale = std::max(scale, std::abs(want[j]));
  }
  return err / std::max(scale, 1e-12);
}

// Random small instance: |V| <= 8, sequences of at most 20 tokens spread
// over up to three policy versions.
inline GradientCase RandomCase(std::mt19937_64& gen, bool length_driven = false) {
  std::uniform_int_distribution<int> vocab_dist(2, 8);
  std::uniform_int_distribution<int> count_dist(1, 4);
  std::uniform_int_distribution<int> len_dist(length_driven ? 1 : 0, 20);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);

  GradientCase c;
  const int vocab = vocab_dist(gen);
  c.params = PolicyParams::Uniform(vocab);
  for (double& z : c.params.logits) z = 1.5 * normal(gen);

  const int groups = count_dist(gen);
  for (int g = 0; g < groups; ++g) {
    Group group;
    group.instance.instance_id = g;
    group.instance.group_size = count_dist(gen);
    std::vector<double> adv;
    for (int i = 0; i < group.instance.group_size; ++i) {
      const int len = len_dist(gen);
      RolloutSample s(SampleId{g, i}, length_driven ? len : 0);
      std::uniform_int_distribution<int> sym(0, vocab - 1);
      std::uniform_int_distribution<int> split(0, len);
      const int cut = split(gen);
      for (int t = 0; t < len; ++t) s.AppendToken(t < cut ? 0 : 1, sym(gen), vocab);
      const bool stop = !length_driven && coin(gen);
      s.Complete(1, length_driven ? FinishReason::kTargetLength
                                  : (stop ? FinishReason::kStop : FinishReason::kMaxLength));
      group.samples.push_back(std::move(s));
      adv.push_back(normal(gen));
    }
    c.batch.push_back(std::move(group));
    c.advantages.push_back(std::move(adv));
  }
  return c;
}

}  // namespace prsim::testing
