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

#include "prsim/policy.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "prsim/errors.h"

namespace prsim {

PolicyParams PolicyParams::Uniform(int vocab_size) {
  if (vocab_size < 1) throw ConfigError("train.vocab_size", "must be >= 1");
  return PolicyParams{std::vector<double>(static_cast<size_t>(vocab_size) + 1, 0.0), 0};
}

std::vector<double> Softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double max = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& x : p) {
    x = std::exp(x - max);
    sum += x;
  }
  for (double& x : p) x /= sum;
  return p;
}

TokenSampler::TokenSampler(const PolicyParams& params)
    : probs_(Softmax(params.logits)) {
  cdf_.resize(probs_.size());
  std::partial_sum(probs_.begin(), probs_.end(), cdf_.begin());
  cdf_.back() = 1.0;
  // Renormalize from the logits so a dominant STOP cannot underflow it.
  probs_non_stop_ = Softmax(std::span(params.logits).first(probs_.size() - 1));
  cdf_non_stop_.resize(probs_non_stop_.size());
  std::partial_sum(probs_non_stop_.begin(), probs_non_stop_.end(), cdf_non_stop_.begin());
  if (!cdf_non_stop_.empty()) cdf_non_stop_.back() = 1.0;
}

int TokenSampler::Draw(double u) const {
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<int>(std::min<ptrdiff_t>(it - cdf_.begin(),
                                              static_cast<ptrdiff_t>(cdf_.size()) - 1));
}

int TokenSampler::DrawNonStop(double u) const {
  const auto it = std::upper_bound(cdf_non_stop_.begin(), cdf_non_stop_.end(), u);
  return static_cast<int>(std::min<ptrdiff_t>(
      it - cdf_non_stop_.begin(), static_cast<ptrdiff_t>(cdf_non_stop_.size()) - 1));
}

int SampleToken(const PolicyParams& params, const CounterRng& stream,
                uint64_t draw_index) {
  return TokenSampler(params).Draw(stream.Uniform(draw_index));
}

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("train.learning_rate", "must be finite and > 0");
  if (!(epsilon > 0.0)) throw ConfigError("train.epsilon", "must be > 0");
  if (!(c0 >= 0.0)) throw ConfigError("train.c0", "must be >= 0");
  if (!(c1 >= 0.0)) throw ConfigError("train.c1", "must be >= 0");
  if (vocab_size < 1) throw ConfigError("train.vocab_size", "must be >= 1");
  if (target_token < 0 || target_token >= vocab_size)
    throw ConfigError("train.target_token", "must lie in [0, vocab_size)");
  if (!(eps_clip > 0.0 && eps_clip < 1.0))
    throw ConfigError("train.eps_clip", "must lie in (0, 1)");
  if (!(eps_clip_high > 0.0))
    throw ConfigError("train.eps_clip_high", "must be > 0");
}

PolicyHistory::PolicyHistory(PolicyParams initial) {
  initial.version = 0;
  samplers_.emplace_back(initial);
  params_.push_back(std::move(initial));
}

void PolicyHistory::Push(PolicyParams next) {
  if (next.version != current().version + 1)
    throw ContractViolation("policy versions must advance by one");
  samplers_.emplace_back(next);
  params_.push_back(std::move(next));
}

const PolicyParams& PolicyHistory::at(int64_t version) const {
  if (version < 0 || version >= static_cast<int64_t>(params_.size()))
    throw ContractViolation("unknown policy version " + std::to_string(version));
  return params_[static_cast<size_t>(version)];
}

const TokenSampler& PolicyHistory::sampler(int64_t version) const {
  if (version < 0 || version >= static_cast<int64_t>(samplers_.size()))
    throw ContractViolation("unknown policy version " + std::to_string(version));
  return samplers_[static_cast<size_t>(version)];
}

void MaterializeTokens(RolloutSample& sample, const PolicyHistory& history,
                       uint64_t seed) {
  if (!sample.length_driven()) return;
  const int vocab = history.current().vocab_size();
  const CounterRng stream(seed, static_cast<uint64_t>(sample.id().instance_id),
                          static_cast<uint64_t>(sample.id().sample_index),
                          StreamTag::kToken);
  uint64_t position = 0;
  for (Segment& seg : sample.mutable_segments()) {
    const auto begin = position;
    position += static_cast<uint64_t>(seg.tokens);
    if (!seg.symbol_counts.empty()) continue;
    seg.symbol_counts.assign(static_cast<size_t>(vocab), 0);
    const TokenSampler& sampler = history.sampler(seg.version);
    for (uint64_t p = begin; p < position; ++p)
      ++seg.symbol_counts[static_cast<size_t>(sampler.DrawNonStop(stream.Uniform(p)))];
  }
}

double Reward(const RolloutSample& sample, int target_token) {
  if (sample.status() != SampleStatus::kCompleted)
    throw ContractViolation("reward of incomplete sample " + sample.id().ToString());
  if (sample.total_tokens() == 0) return 0.0;
  const auto counts = sample.SymbolCounts();
  if (counts.empty())
    throw ContractViolation("sample " + sample.id().ToString() +
                            " has no token identities");
  return static_cast<double>(counts[static_cast<size_t>(target_token)]) /
         static_cast<double>(sample.total_tokens());
}

std::vector<double> GroupAdvantages(std::span<const double> rewards,
                                    AdvantageMode mode, double epsilon) {
  std::vector<double> adv(rewards.begin(), rewards.end());
  if (adv.empty()) return adv;
  const double n = static_cast<double>(adv.size());
  // A summed mean of equal values can miss them by an ulp; equal rewards
  // must give exactly zero advantage.
  const bool all_equal =
      std::all_of(adv.begin(), adv.end(), [&](double r) { return r == adv.front(); });
  const double mean =
      all_equal ? adv.front() : std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  for (double& a : adv) a -= mean;
  if (mode == AdvantageMode::kMeanStdBaseline) {
    double var = 0.0;
    for (double a : adv) var += a * a;
    const double denom = std::sqrt(var / n) + epsilon;
    for (double& a : adv) a /= denom;
  }
  return adv;
}

namespace {

// Adds scale * (e_symbol - p) * count to grad.
void AddScore(std::vector<double>& grad, const std::vector<double>& p,
              size_t symbol, double count, double scale) {
  const double w = scale * count;
  for (size_t j = 0; j < grad.size(); ++j) grad[j] -= w * p[j];
  grad[symbol] += w;
}

bool KeepClipped(double ratio, double advantage, const TrainConfig& config) {
  return advantage >= 0.0 ? ratio <= 1.0 + config.eps_clip_high
                          : ratio >= 1.0 - config.eps_clip;
}

}  // namespace

std::vector<double> ScoreGradient(const PolicyParams& params,
                                  const std::vector<Group>& batch,
                                  const std::vector<std::vector<double>>& advantages,
                                  const TrainConfig& config,
                                  const PolicyHistory* history) {
  if (advantages.size() != batch.size())
    throw ContractViolation("advantages do not match batch shape");
  const size_t stop = params.logits.size() - 1;
  const std::vector<double> p = Softmax(params.logits);
  // Length-driven tokens are drawn with STOP excluded, so their score is
  // taken under the non-STOP conditional and leaves the STOP logit alone.
  // Their lengths run to thousands of tokens, so each such sample
  // contributes its per-token mean score rather than the sum.
  std::vector<double> q = Softmax(std::span(params.logits).first(stop));
  q.push_back(0.0);
  std::vector<double> grad(p.size(), 0.0);
  const bool clipped = config.update_rule == UpdateRule::kClippedRatio;
  if (clipped && history == nullptr)
    throw ContractViolation("clipped-ratio update needs the policy history");

  for (size_t g = 0; g < batch.size(); ++g) {
    const auto& samples = batch[g].samples;
    if (advantages[g].size() != samples.size())
      throw ContractViolation("advantages do not match group size");
    for (size_t i = 0; i < samples.size(); ++i) {
      const RolloutSample& s = samples[i];
      if (s.status() != SampleStatus::kCompleted)
        throw ContractViolation("update on incomplete sample " + s.id().ToString());
      const double a = advantages[g][i];
      if (a == 0.0) continue;
      const bool conditional = s.length_driven();
      const std::vector<double>& cur = conditional ? q : p;
      const double weight =
          conditional ? 1.0 / static_cast<double>(std::max<int64_t>(1, s.total_tokens()))
                      : 1.0;
      for (const Segment& seg : s.segments()) {
        if (seg.tokens > 0 && seg.symbol_counts.empty())
          throw ContractViolation("sample " + s.id().ToString() +
                                  " has no token identities");
        const std::vector<double>* old = nullptr;
        if (clipped) {
          const TokenSampler& sampler = history->sampler(seg.version);
          old = conditional ? &sampler.probs_non_stop() : &sampler.probs();
        }
        for (size_t j = 0; j < seg.symbol_counts.size(); ++j) {
          const auto c = static_cast<double>(seg.symbol_counts[j]);
          if (c == 0.0) continue;
          double scale = a * weight;
          if (clipped) {
            const double ratio = cur[j] / (*old)[j];
            if (!KeepClipped(ratio, a, config)) continue;
            scale *= ratio;
          }
          AddScore(grad, cur, j, c, scale);
        }
      }
      if (s.stopped_naturally()) {
        double scale = a;
        if (clipped) {
          const double ratio =
              p[stop] / history->sampler(s.complete_version()).probs()[stop];
          if (!KeepClipped(ratio, a, config)) continue;
          scale *= ratio;
        }
        AddScore(grad, p, stop, 1.0, scale);
      }
    }
  }
  return grad;
}

PolicyParams ReinforceUpdate(const PolicyParams& params,
                             const std::vector<Group>& batch,
                             const std::vector<std::vector<double>>& advantages,
                             const TrainConfig& config,
                             const PolicyHistory* history) {
  const auto grad = ScoreGradient(params, batch, advantages, config, history);
  PolicyParams next = params;
  next.version = params.version + 1;
  for (size_t j = 0; j < grad.size(); ++j) {
    next.logits[j] += config.learning_rate * grad[j];
    if (!std::isfinite(next.logits[j]))
      throw ContractViolation("policy update produced a non-finite logit");
  }
  return next;
}

double TrainWallTime(const std::vector<Group>& batch, const TrainConfig& config) {
  int64_t tokens = 0;
  for (const auto& g : batch) tokens += g.total_tokens();
  return config.c0 + config.c1 * static_cast<double>(tokens);
}

}  // namespace prsim
