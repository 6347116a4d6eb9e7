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
#include <span>
#include <vector>

#include "prsim/rng.h"
#include "prsim/rollout.h"

namespace prsim {

// Context-free softmax policy over V ordinary symbols plus STOP. STOP is the
// last logit, index vocab_size().
struct PolicyParams {
  std::vector<double> logits;
  int64_t version = 0;

  static PolicyParams Uniform(int vocab_size);

  int vocab_size() const { return static_cast<int>(logits.size()) - 1; }
  int stop_symbol() const { return vocab_size(); }
};

std::vector<double> Softmax(std::span<const double> logits);

// Cached cumulative distribution for fast categorical draws.
class TokenSampler {
 public:
  explicit TokenSampler(const PolicyParams& params);

  // Symbol in [0, V], V meaning STOP.
  int Draw(double u) const;
  // Symbol in [0, V) drawn from the distribution conditioned on not stopping.
  int DrawNonStop(double u) const;

  const std::vector<double>& probs() const { return probs_; }
  const std::vector<double>& probs_non_stop() const { return probs_non_stop_; }

 private:
  std::vector<double> probs_;
  std::vector<double> probs_non_stop_;
  std::vector<double> cdf_;
  std::vector<double> cdf_non_stop_;
};

int SampleToken(const PolicyParams& params, const CounterRng& stream,
                uint64_t draw_index);

enum class AdvantageMode { kMeanBaseline, kMeanStdBaseline };
enum class UpdateRule { kPlain, kClippedRatio };

struct TrainConfig {
  double learning_rate = 0.05;
  AdvantageMode advantage_mode = AdvantageMode::kMeanBaseline;
  double epsilon = 1e-6;
  // Simulated training time: c0 + c1 * batch tokens.
  double c0 = 5.0;
  double c1 = 2e-5;
  int vocab_size = 4;
  int target_token = 0;
  UpdateRule update_rule = UpdateRule::kPlain;
  double eps_clip = 0.2;
  double eps_clip_high = 0.28;

  void Validate() const;
};

// Every parameter version produced during a run, oldest first.
class PolicyHistory {
 public:
  explicit PolicyHistory(PolicyParams initial);

  void Push(PolicyParams next);
  const PolicyParams& current() const { return params_.back(); }
  const PolicyParams& at(int64_t version) const;
  const TokenSampler& sampler(int64_t version) const;
  int64_t current_version() const { return current().version; }

 private:
  std::vector<PolicyParams> params_;
  std::vector<TokenSampler> samplers_;
};

// Draws the token identities of a length-driven sample, each segment from the
// parameters of the version that produced it. Idempotent.
void MaterializeTokens(RolloutSample& sample, const PolicyHistory& history,
                       uint64_t seed);

// Fraction of emitted tokens equal to `target_token`; 0 for an empty sequence.
double Reward(const RolloutSample& sample, int target_token);

std::vector<double> GroupAdvantages(std::span<const double> rewards,
                                    AdvantageMode mode, double epsilon);

// Sum over samples of A_i * d/dz log pi_z(sequence_i), evaluated at `params`.
// Length-driven samples are scored under the distribution conditioned on not
// stopping, since their lengths are fixed in advance.
// With UpdateRule::kClippedRatio each token's term is scaled by the ratio
// pi_z(a) / pi_old(a) and dropped when the ratio leaves the clip range in the
// direction the advantage favours; `history` supplies pi_old.
std::vector<double> ScoreGradient(const PolicyParams& params,
                                  const std::vector<Group>& batch,
                                  const std::vector<std::vector<double>>& advantages,
                                  const TrainConfig& config,
                                  const PolicyHistory* history = nullptr);

// z' = z + lr * ScoreGradient(...); version + 1.
PolicyParams ReinforceUpdate(const PolicyParams& params,
                             const std::vector<Group>& batch,
                             const std::vector<std::vector<double>>& advantages,
                             const TrainConfig& config,
                             const PolicyHistory* history = nullptr);

double TrainWallTime(const std::vector<Group>& batch, const TrainConfig& config);

}  // namespace prsim
