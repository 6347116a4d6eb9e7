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
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "prsim/rng.h"

namespace prsim {

// Response-length distributions. Every variant is truncated to [1, l_max]:
// draws above l_max are clamped to l_max, mirroring a generation length cap.
struct ConstantLength {
  int64_t length;
};
struct GeometricLength {
  double p_stop;
};
struct LognormalLength {
  double mu_ln;
  double sigma_ln;
};
struct ParetoLength {
  double alpha;
  double x_min;
};
struct EmpiricalBin {
  int64_t upper;  // inclusive upper bound in tokens
  double mass;
};
struct EmpiricalLength {
  std::vector<EmpiricalBin> bins;  // ascending by upper, masses sum to 1
};

class LengthDistribution {
 public:
  using Variant = std::variant<ConstantLength, GeometricLength, LognormalLength,
                               ParetoLength, EmpiricalLength>;

  // Validates parameters; throws ConfigError naming the bad field.
  LengthDistribution(Variant variant, int64_t l_max);

  static LengthDistribution Constant(int64_t length, int64_t l_max);
  static LengthDistribution Geometric(double p_stop, int64_t l_max);
  static LengthDistribution Lognormal(double mu_ln, double sigma_ln,
                                      int64_t l_max);
  static LengthDistribution Pareto(double alpha, double x_min, int64_t l_max);
  // Masses are normalized here; they need not sum to 1 on input.
  static LengthDistribution Empirical(std::vector<EmpiricalBin> bins,
                                      int64_t l_max);

  // Maps a standard-normal variate to a length through the distribution's
  // quantile function. Monotone non-decreasing in z.
  int64_t FromGaussian(double z) const;

  // One draw from `stream`, using draw slot `draw_index`.
  int64_t Sample(const CounterRng& stream, uint64_t draw_index = 0) const;

  int64_t l_max() const { return l_max_; }
  const Variant& variant() const { return variant_; }
  std::string kind() const;

 private:
  int64_t Quantile(double u) const;

  Variant variant_;
  int64_t l_max_;
};

// Reads a `bin_upper,mass` CSV (header required; extra columns ignored).
LengthDistribution LoadEmpiricalHistogram(const std::filesystem::path& path,
                                          int64_t l_max);

struct PromptInstance {
  int64_t instance_id = 0;
  std::string dataset_tag;
  int group_size = 1;
};

// Infinite prompt stream. Instance ids start at 0 and increase by one.
class PromptStream {
 public:
  PromptStream(std::string dataset_tag, int group_size);

  PromptInstance NextInstance();
  int64_t issued() const { return next_id_; }

 private:
  std::string dataset_tag_;
  int group_size_;
  int64_t next_id_ = 0;
};

// Per-sample target lengths. A shared per-instance Gaussian is blended with
// per-sample noise, z = sqrt(rho) * z_instance + sqrt(1 - rho) * z_sample,
// then pushed through the distribution's quantile, so the marginal law of
// each sample is exactly `dist` for any rho in [0, 1].
class LengthSampler {
 public:
  LengthSampler(LengthDistribution dist, double correlate_within_group,
                uint64_t seed);

  int64_t LengthFor(int64_t instance_id, int sample_index) const;

  const LengthDistribution& distribution() const { return dist_; }
  double correlation() const { return rho_; }

 private:
  LengthDistribution dist_;
  double rho_;
  uint64_t seed_;
};

struct HistogramBin {
  int64_t lower;
  int64_t upper;
  int64_t count;
};

// Equal-width bins covering [1, l_max]; draw i uses instance key i.
std::vector<HistogramBin> Histogram(const LengthDistribution& dist,
                                    int64_t n_draws, uint64_t seed,
                                    int num_bins = 64);

void WriteHistogramCsv(const std::vector<HistogramBin>& bins,
                       const std::filesystem::path& path);

}  // namespace prsim
