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

#include "prsim/runner.h"

#include <cmath>
#include <fstream>
#include <future>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "prsim/engine.h"

namespace prsim {

namespace {

std::ofstream OpenForWrite(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void CheckWritten(const std::ofstream& out, const std::filesystem::path& path) {
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void WriteRunOutputs(const RunConfig& config, const RunResult& result,
                     const RunSummary& summary, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  {
    const auto path = dir / "steps.jsonl";
    auto out = OpenForWrite(path);
    WriteStepsJsonl(result.reports, out);
    out.flush();
    CheckWritten(out, path);
  }
  {
    const auto path = dir / "summary.json";
    auto out = OpenForWrite(path);
    nlohmann::ordered_json j = ToJson(summary);
    j["resolved_config"] = config.ToJson();
    out << j.dump(2) << '\n';
    out.flush();
    CheckWritten(out, path);
  }
  if (config.run.write_manifest) {
    const auto path = dir / "samples.csv";
    auto out = OpenForWrite(path);
    WriteManifestCsv(result.manifest, out);
    out.flush();
    CheckWritten(out, path);
  }
  if (config.run.write_checkpoint) {
    const auto path = dir / "checkpoint.json";
    auto out = OpenForWrite(path);
    nlohmann::ordered_json j;
    j["version"] = result.final_params.version;
    j["logits"] = result.final_params.logits;
    out << j.dump() << '\n';
    out.flush();
    CheckWritten(out, path);
  }
}

// Runs the simulation, streaming the optional event trace into `dir`.
RunResult RunWithTrace(const RunConfig& config, const std::filesystem::path& dir) {
  if (!config.run.write_trace) return RunSimulation(config);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  const auto path = dir / "events.jsonl";
  auto out = OpenForWrite(path);
  RunHooks hooks;
  hooks.on_trace = [&out](const TraceRecord& r) {
    nlohmann::ordered_json j;
    j["clock"] = r.clock;
    j["sample_id"] = r.sample_id.ToString();
    j["tokens"] = r.tokens;
    j["reason"] = r.reason;
    out << j.dump() << '\n';
  };
  RunResult result = RunSimulation(config, hooks);
  out.flush();
  CheckWritten(out, path);
  return result;
}

}  // namespace

RunResult RunSimulation(const RunConfig& config, const RunHooks& hooks) {
  config.Validate();
  const uint64_t seed = config.run.seed;

  Engine engine(config.engine);
  if (hooks.on_trace) engine.set_trace_sink(hooks.on_trace);

  std::optional<LengthSampler> lengths;
  if (config.workload.mode == GenerationMode::kLengthDriven) {
    lengths.emplace(config.workload.distribution.Build(config.engine.l_max),
                    config.workload.correlate_within_group, seed);
  }
  RolloutSource source(
      PromptStream(config.workload.dataset_tag, config.scheduler.n_samples_per_prompt),
      std::move(lengths), config.workload.mode);
  RolloutScheduler scheduler(config.scheduler, engine, std::move(source), seed);
  PolicyHistory history(PolicyParams::Uniform(config.train.vocab_size));

  RunResult result;
  result.reports.reserve(static_cast<size_t>(config.run.steps));
  for (int64_t k = 0; k < config.run.steps; ++k) {
    RolloutStepResult rollout = scheduler.RunStep(history);
    if (hooks.on_rollout) hooks.on_rollout(rollout);

    std::vector<std::vector<double>> advantages;
    advantages.reserve(rollout.batch.size());
    double reward_sum = 0.0;
    int64_t n_samples = 0;
    for (const Group& g : rollout.batch) {
      std::vector<double> rewards;
      for (const auto& s : g.samples) {
        rewards.push_back(Reward(s, config.train.target_token));
        reward_sum += rewards.back();
        ++n_samples;
        result.manifest.push_back({rollout.step, s.id(), s.start_version(),
                                   s.complete_version(), s.total_tokens()});
      }
      advantages.push_back(GroupAdvantages(rewards, config.train.advantage_mode,
                                           config.train.epsilon));
    }
    const double mean_reward =
        n_samples == 0 ? 0.0 : reward_sum / static_cast<double>(n_samples);
    const double train_time = TrainWallTime(rollout.batch, config.train);
    PolicyParams next = ReinforceUpdate(history.current(), rollout.batch, advantages,
                                        config.train, &history);
    result.reports.push_back(
        BuildStepReport(rollout, train_time, mean_reward, config.engine));
    history.Push(std::move(next));
  }

  result.final_params = history.current();
  result.buffered = scheduler.buffer().ids();
  for (const auto& s : scheduler.pending_pool()) result.pending.push_back(s.id());
  result.buffer_high_water = scheduler.buffer_high_water();
  return result;
}

RunSummary ExecuteRun(const RunConfig& config, const std::filesystem::path& out_dir) {
  const RunResult result = RunWithTrace(config, out_dir);
  RunSummary summary = SummarizeRun(result.reports);
  summary.buffer_high_water = result.buffer_high_water;
  WriteRunOutputs(config, result, summary, out_dir);
  return summary;
}

Comparison CompareRuns(const RunConfig& config, const std::vector<uint64_t>& seeds,
                       const std::filesystem::path& out_root) {
  if (seeds.empty()) throw std::invalid_argument("compare needs at least one seed");

  const auto run_pair = [&config, &out_root](uint64_t seed) {
    RunConfig base = config;
    base.run.seed = seed;
    base.scheduler.mode = SchedulerMode::kBaseline;
    RunConfig april = base;
    april.scheduler.mode = SchedulerMode::kApril;
    const auto seed_dir = out_root / ("seed_" + std::to_string(seed));

    const RunResult base_result =
        out_root.empty() ? RunSimulation(base) : RunWithTrace(base, seed_dir / "baseline");
    const RunResult april_result =
        out_root.empty() ? RunSimulation(april) : RunWithTrace(april, seed_dir / "april");
    SeedComparison cmp{seed, SummarizeRun(base_result.reports),
                       SummarizeRun(april_result.reports, base_result.reports)};
    cmp.baseline.buffer_high_water = base_result.buffer_high_water;
    cmp.april.buffer_high_water = april_result.buffer_high_water;
    if (!out_root.empty()) {
      WriteRunOutputs(base, base_result, cmp.baseline, seed_dir / "baseline");
      WriteRunOutputs(april, april_result, cmp.april, seed_dir / "april");
    }
    return cmp;
  };

  std::vector<std::future<SeedComparison>> futures;
  for (uint64_t seed : seeds) futures.push_back(std::async(std::launch::async, run_pair, seed));

  Comparison out;
  for (auto& f : futures) out.per_seed.push_back(f.get());

  const auto mean_std = [](const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::pair{mean, xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
  };
  std::vector<double> improvements, offpolicy;
  for (const auto& c : out.per_seed) {
    improvements.push_back(c.april.relative_throughput.value_or(0.0));
    offpolicy.push_back(c.april.mean_offpolicy_fraction);
  }
  std::tie(out.mean_improvement, out.std_improvement) = mean_std(improvements);
  std::tie(out.mean_offpolicy_fraction, out.std_offpolicy_fraction) = mean_std(offpolicy);

  if (!out_root.empty()) {
    const auto path = out_root / "comparison.json";
    auto f = OpenForWrite(path);
    nlohmann::ordered_json j = ToJson(out);
    j["resolved_config"] = config.ToJson();
    f << j.dump(2) << '\n';
    f.flush();
    CheckWritten(f, path);
  }
  return out;
}

nlohmann::ordered_json ToJson(const Comparison& c) {
  nlohmann::ordered_json j;
  j["seeds"] = nlohmann::ordered_json::array();
  for (const auto& s : c.per_seed) {
    nlohmann::ordered_json e;
    e["seed"] = s.seed;
    e["baseline"] = ToJson(s.baseline);
    e["april"] = ToJson(s.april);
    j["seeds"].push_back(e);
  }
  j["mean_relative_throughput"] = c.mean_improvement;
  j["std_relative_throughput"] = c.std_improvement;
  j["mean_offpolicy_fraction"] = c.mean_offpolicy_fraction;
  j["std_offpolicy_fraction"] = c.std_offpolicy_fraction;
  return j;
}

void WriteStepsJsonl(const std::vector<StepReport>& reports, std::ostream& out) {
  for (const auto& r : reports) out << ToJson(r).dump() << '\n';
}

void WriteManifestCsv(const std::vector<ManifestRow>& rows, std::ostream& out) {
  out << "step,instance_id,sample_index,start_version,complete_version,tokens\n";
  for (const auto& r : rows)
    out << r.step << ',' << r.id.instance_id << ',' << r.id.sample_index << ','
        << r.start_version << ',' << r.complete_version << ',' << r.tokens << '\n';
}

}  // namespace prsim
