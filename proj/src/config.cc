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

#include "prsim/config.h"

#include <cstdlib>
#include <fstream>
#include <set>

#include "prsim/errors.h"

namespace prsim {

namespace {

using nlohmann::json;

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported.
class Section {
 public:
  Section(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw ConfigError(prefix_, "expected an object");
  }

  std::string Key(const std::string& name) const {
    return prefix_.empty() ? name : prefix_ + "." + name;
  }

  const json* Find(const std::string& name) {
    seen_.insert(name);
    const auto it = j_.find(name);
    return it == j_.end() ? nullptr : &*it;
  }

  void Get(const std::string& name, double& out) {
    if (const json* v = Find(name)) {
      if (!v->is_number()) throw ConfigError(Key(name), "expected a number");
      out = v->get<double>();
    }
  }
  void Get(const std::string& name, int64_t& out) {
    if (const json* v = Find(name)) {
      if (!v->is_number_integer()) throw ConfigError(Key(name), "expected an integer");
      out = v->get<int64_t>();
    }
  }
  void Get(const std::string& name, int& out) {
    int64_t wide = out;
    Get(name, wide);
    if (wide < INT32_MIN || wide > INT32_MAX) throw ConfigError(Key(name), "out of range");
    out = static_cast<int>(wide);
  }
  void Get(const std::string& name, uint64_t& out) {
    if (const json* v = Find(name)) {
      if (!v->is_number_unsigned()) throw ConfigError(Key(name), "expected a non-negative integer");
      out = v->get<uint64_t>();
    }
  }
  void Get(const std::string& name, bool& out) {
    if (const json* v = Find(name)) {
      if (!v->is_boolean()) throw ConfigError(Key(name), "expected true or false");
      out = v->get<bool>();
    }
  }
  void Get(const std::string& name, std::string& out) {
    if (const json* v = Find(name)) {
      if (!v->is_string()) throw ConfigError(Key(name), "expected a string");
      out = v->get<std::string>();
    }
  }
  template <typename Enum, size_t K>
  void GetEnum(const std::string& name, Enum& out,
               const std::pair<const char*, Enum> (&names)[K]) {
    const json* v = Find(name);
    if (v == nullptr) return;
    if (!v->is_string()) throw ConfigError(Key(name), "expected a string");
    const auto text = v->get<std::string>();
    for (const auto& [label, value] : names) {
      if (text == label) {
        out = value;
        return;
      }
    }
    std::string allowed;
    for (const auto& [label, value] : names) allowed += (allowed.empty() ? "" : "|") + std::string(label);
    throw ConfigError(Key(name), "unknown value '" + text + "' (expected " + allowed + ")");
  }

  void RejectUnknown() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(Key(k), "unknown key");
  }

 private:
  const json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

constexpr std::pair<const char*, GenerationMode> kGenerationModes[] = {
    {"length_driven", GenerationMode::kLengthDriven},
    {"policy_driven", GenerationMode::kPolicyDriven}};
constexpr std::pair<const char*, SchedulerMode> kSchedulerModes[] = {
    {"baseline", SchedulerMode::kBaseline}, {"april", SchedulerMode::kApril}};
constexpr std::pair<const char*, TriggerMode> kTriggerModes[] = {
    {"groups", TriggerMode::kGroups}, {"samples", TriggerMode::kSamples}};
constexpr std::pair<const char*, AdvantageMode> kAdvantageModes[] = {
    {"mean_baseline", AdvantageMode::kMeanBaseline},
    {"mean_std_baseline", AdvantageMode::kMeanStdBaseline}};
constexpr std::pair<const char*, UpdateRule> kUpdateRules[] = {
    {"plain", UpdateRule::kPlain}, {"clipped_ratio", UpdateRule::kClippedRatio}};

template <typename Enum, size_t K>
const char* Name(Enum value, const std::pair<const char*, Enum> (&names)[K]) {
  for (const auto& [label, v] : names)
    if (v == value) return label;
  return "unknown";
}

}  // namespace

const char* ToString(GenerationMode mode) { return Name(mode, kGenerationModes); }
const char* ToString(SchedulerMode mode) { return Name(mode, kSchedulerModes); }
const char* ToString(TriggerMode mode) { return Name(mode, kTriggerModes); }
const char* ToString(AdvantageMode mode) { return Name(mode, kAdvantageModes); }
const char* ToString(UpdateRule rule) { return Name(rule, kUpdateRules); }

LengthDistribution DistributionSpec::Build(int64_t l_max) const {
  if (kind == "constant") return LengthDistribution::Constant(length, l_max);
  if (kind == "geometric") return LengthDistribution::Geometric(p_stop, l_max);
  if (kind == "lognormal") return LengthDistribution::Lognormal(mu_ln, sigma_ln, l_max);
  if (kind == "pareto") return LengthDistribution::Pareto(alpha, x_min, l_max);
  if (kind == "empirical") {
    if (path.empty()) throw ConfigError("workload.distribution.path", "required for empirical");
    return LoadEmpiricalHistogram(path, l_max);
  }
  throw ConfigError("workload.distribution.kind", "unknown distribution '" + kind + "'");
}

RunConfig RunConfig::FromJson(const json& j) {
  RunConfig c;
  Section root(j, "");
  if (const json* w = root.Find("workload")) {
    Section s(*w, "workload");
    if (const json* d = s.Find("distribution")) {
      Section ds(*d, "workload.distribution");
      auto& spec = c.workload.distribution;
      ds.Get("kind", spec.kind);
      ds.Get("length", spec.length);
      ds.Get("p_stop", spec.p_stop);
      ds.Get("mu_ln", spec.mu_ln);
      ds.Get("sigma_ln", spec.sigma_ln);
      ds.Get("alpha", spec.alpha);
      ds.Get("x_min", spec.x_min);
      ds.Get("path", spec.path);
      ds.RejectUnknown();
    }
    s.Get("correlate_within_group", c.workload.correlate_within_group);
    s.GetEnum("mode", c.workload.mode, kGenerationModes);
    s.Get("dataset_tag", c.workload.dataset_tag);
    s.RejectUnknown();
  }
  if (const json* e = root.Find("engine")) {
    Section s(*e, "engine");
    s.Get("d0", c.engine.d0);
    s.Get("d1", c.engine.d1);
    s.Get("max_slots", c.engine.max_slots);
    s.Get("max_response_len", c.engine.l_max);
    s.RejectUnknown();
  }
  if (const json* sc = root.Find("scheduler")) {
    Section s(*sc, "scheduler");
    s.Get("rollout_batch_size", c.scheduler.rollout_batch_size);
    s.Get("n_samples_per_prompt", c.scheduler.n_samples_per_prompt);
    s.Get("over_sampling_batch_size", c.scheduler.over_sampling_batch_size);
    s.GetEnum("mode", c.scheduler.mode, kSchedulerModes);
    s.GetEnum("trigger", c.scheduler.trigger, kTriggerModes);
    s.RejectUnknown();
  }
  if (const json* t = root.Find("train")) {
    Section s(*t, "train");
    s.Get("learning_rate", c.train.learning_rate);
    s.GetEnum("advantage_mode", c.train.advantage_mode, kAdvantageModes);
    s.Get("epsilon", c.train.epsilon);
    s.Get("c0", c.train.c0);
    s.Get("c1", c.train.c1);
    s.Get("vocab_size", c.train.vocab_size);
    s.Get("target_token", c.train.target_token);
    s.GetEnum("update_rule", c.train.update_rule, kUpdateRules);
    s.Get("eps_clip", c.train.eps_clip);
    s.Get("eps_clip_high", c.train.eps_clip_high);
    s.RejectUnknown();
  }
  if (const json* r = root.Find("run")) {
    Section s(*r, "run");
    s.Get("steps", c.run.steps);
    s.Get("seed", c.run.seed);
    if (const json* seeds = s.Find("seeds")) {
      if (!seeds->is_array()) throw ConfigError("run.seeds", "expected an array");
      for (const auto& v : *seeds) {
        if (!v.is_number_unsigned())
          throw ConfigError("run.seeds", "expected non-negative integers");
        c.run.seeds.push_back(v.get<uint64_t>());
      }
    }
    s.Get("output_dir", c.run.output_dir);
    s.Get("write_manifest", c.run.write_manifest);
    s.Get("write_trace", c.run.write_trace);
    s.Get("write_checkpoint", c.run.write_checkpoint);
    s.RejectUnknown();
  }
  root.RejectUnknown();
  return c;
}

RunConfig RunConfig::FromFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", path.string() + ": " + e.what());
  }
  return FromJson(j);
}

void RunConfig::Validate() const {
  engine.Validate();
  scheduler.Validate();
  train.Validate();
  if (run.steps < 0) throw ConfigError("run.steps", "must be >= 0");
  if (workload.mode == GenerationMode::kLengthDriven) {
    LengthSampler(workload.distribution.Build(engine.l_max),
                  workload.correlate_within_group, run.seed);
  } else if (!(workload.correlate_within_group >= 0.0 &&
               workload.correlate_within_group <= 1.0)) {
    throw ConfigError("workload.correlate_within_group", "must lie in [0, 1]");
  }
}

nlohmann::ordered_json RunConfig::ToJson() const {
  nlohmann::ordered_json j;
  const auto& d = workload.distribution;
  nlohmann::ordered_json dist;
  dist["kind"] = d.kind;
  if (d.kind == "constant") dist["length"] = d.length;
  if (d.kind == "geometric") dist["p_stop"] = d.p_stop;
  if (d.kind == "lognormal") {
    dist["mu_ln"] = d.mu_ln;
    dist["sigma_ln"] = d.sigma_ln;
  }
  if (d.kind == "pareto") {
    dist["alpha"] = d.alpha;
    dist["x_min"] = d.x_min;
  }
  if (d.kind == "empirical") dist["path"] = d.path;
  j["workload"] = {{"distribution", dist},
                   {"correlate_within_group", workload.correlate_within_group},
                   {"mode", ToString(workload.mode)},
                   {"dataset_tag", workload.dataset_tag}};
  j["engine"] = {{"d0", engine.d0},
                 {"d1", engine.d1},
                 {"max_slots", engine.max_slots},
                 {"max_response_len", engine.l_max}};
  j["scheduler"] = {{"rollout_batch_size", scheduler.rollout_batch_size},
                    {"n_samples_per_prompt", scheduler.n_samples_per_prompt},
                    {"over_sampling_batch_size", scheduler.over_sampling_batch_size},
                    {"mode", ToString(scheduler.mode)},
                    {"trigger", ToString(scheduler.trigger)}};
  j["train"] = {{"learning_rate", train.learning_rate},
                {"advantage_mode", ToString(train.advantage_mode)},
                {"epsilon", train.epsilon},
                {"c0", train.c0},
                {"c1", train.c1},
                {"vocab_size", train.vocab_size},
                {"target_token", train.target_token},
                {"update_rule", ToString(train.update_rule)},
                {"eps_clip", train.eps_clip},
                {"eps_clip_high", train.eps_clip_high}};
  nlohmann::ordered_json r;
  r["steps"] = run.steps;
  r["seed"] = run.seed;
  if (!run.seeds.empty()) r["seeds"] = run.seeds;
  r["output_dir"] = run.output_dir;
  r["write_manifest"] = run.write_manifest;
  r["write_trace"] = run.write_trace;
  r["write_checkpoint"] = run.write_checkpoint;
  j["run"] = r;
  return j;
}

std::filesystem::path ResolveOutputDir(const RunOptions& run) {
  if (!run.output_dir.empty()) return run.output_dir;
  if (const char* root = std::getenv("APRIL_BENCH_OUT"); root && *root) return root;
  return "prsim_out";
}

}  // namespace prsim
