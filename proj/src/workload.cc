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

#include "prsim/workload.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "prsim/errors.h"

namespace prsim {

namespace {

constexpr const char* kDistKey = "workload.distribution";

std::string Field(const char* name) { return std::string(kDistKey) + "." + name; }

void RequireFinite(double v, const char* name) {
  if (!std::isfinite(v)) throw ConfigError(Field(name), "must be finite");
}

std::string Trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(Trim(cell));
  return out;
}

}  // namespace

LengthDistribution::LengthDistribution(Variant variant, int64_t l_max)
    : variant_(std::move(variant)), l_max_(l_max) {
  if (l_max_ < 1) throw ConfigError("engine.max_response_len", "must be >= 1");
  std::visit(
      [](auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, ConstantLength>) {
          if (d.length < 1) throw ConfigError(Field("length"), "must be >= 1");
        } else if constexpr (std::is_same_v<T, GeometricLength>) {
          RequireFinite(d.p_stop, "p_stop");
          if (!(d.p_stop > 0.0 && d.p_stop <= 1.0))
            throw ConfigError(Field("p_stop"), "must lie in (0, 1]");
        } else if constexpr (std::is_same_v<T, LognormalLength>) {
          RequireFinite(d.mu_ln, "mu_ln");
          RequireFinite(d.sigma_ln, "sigma_ln");
          if (!(d.sigma_ln > 0.0))
            throw ConfigError(Field("sigma_ln"), "must be > 0");
        } else if constexpr (std::is_same_v<T, ParetoLength>) {
          RequireFinite(d.alpha, "alpha");
          RequireFinite(d.x_min, "x_min");
          if (!(d.alpha > 0.0)) throw ConfigError(Field("alpha"), "must be > 0");
          if (!(d.x_min >= 1.0)) throw ConfigError(Field("x_min"), "must be >= 1");
        } else {
          if (d.bins.empty()) throw ConfigError(Field("bins"), "no bins");
          double total = 0.0;
          int64_t prev = 0;
          for (const auto& bin : d.bins) {
            if (bin.upper <= prev)
              throw ConfigError(Field("bins"),
                                "bin_upper must be >= 1 and strictly increasing");
            if (!std::isfinite(bin.mass) || bin.mass < 0.0)
              throw ConfigError(Field("bins"), "mass must be finite and >= 0");
            prev = bin.upper;
            total += bin.mass;
          }
          if (!(total > 0.0)) throw ConfigError(Field("bins"), "total mass is 0");
          for (auto& bin : d.bins) bin.mass /= total;
        }
      },
      variant_);
}

LengthDistribution LengthDistribution::Constant(int64_t length, int64_t l_max) {
  return LengthDistribution(ConstantLength{length}, l_max);
}
LengthDistribution LengthDistribution::Geometric(double p_stop, int64_t l_max) {
  return LengthDistribution(GeometricLength{p_stop}, l_max);
}
LengthDistribution LengthDistribution::Lognormal(double mu_ln, double sigma_ln,
                                                 int64_t l_max) {
  return LengthDistribution(LognormalLength{mu_ln, sigma_ln}, l_max);
}
LengthDistribution LengthDistribution::Pareto(double alpha, double x_min,
                                              int64_t l_max) {
  return LengthDistribution(ParetoLength{alpha, x_min}, l_max);
}
LengthDistribution LengthDistribution::Empirical(std::vector<EmpiricalBin> bins,
                                                 int64_t l_max) {
  return LengthDistribution(EmpiricalLength{std::move(bins)}, l_max);
}

std::string LengthDistribution::kind() const {
  static constexpr const char* kNames[] = {"constant", "geometric", "lognormal",
                                           "pareto", "empirical"};
  return kNames[variant_.index()];
}

int64_t LengthDistribution::FromGaussian(double z) const {
  double x;
  if (const auto* ln = std::get_if<LognormalLength>(&variant_)) {
    x = std::exp(ln->mu_ln + ln->sigma_ln * z);
  } else {
    double u = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    u = std::clamp(u, 0x1.0p-60, std::nextafter(1.0, 0.0));
    return Quantile(u);
  }
  if (!(x < static_cast<double>(l_max_))) return l_max_;
  return std::max<int64_t>(1, std::llround(x));
}

int64_t LengthDistribution::Quantile(double u) const {
  const double cap = static_cast<double>(l_max_);
  const auto clamp = [&](double x) -> int64_t {
    if (!(x < cap)) return l_max_;
    return std::max<int64_t>(1, std::llround(x));
  };
  return std::visit(
      [&](const auto& d) -> int64_t {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, ConstantLength>) {
          return std::min(d.length, l_max_);
        } else if constexpr (std::is_same_v<T, GeometricLength>) {
          if (d.p_stop >= 1.0) return 1;
          // Smallest k with 1 - (1-p)^k >= u.
          return clamp(std::max(1.0, std::ceil(std::log1p(-u) /
                                               std::log1p(-d.p_stop))));
        } else if constexpr (std::is_same_v<T, LognormalLength>) {
          // FromGaussian maps lognormal draws directly.
          throw std::logic_error("lognormal has no uniform quantile path");
        } else if constexpr (std::is_same_v<T, ParetoLength>) {
          return clamp(d.x_min * std::pow(1.0 - u, -1.0 / d.alpha));
        } else {
          double cum = 0.0;
          int64_t lower = 1;
          for (const auto& bin : d.bins) {
            if (bin.mass > 0.0 && u <= cum + bin.mass) {
              const double frac = std::clamp((u - cum) / bin.mass, 0.0, 1.0);
              const int64_t width = bin.upper - lower + 1;
              const int64_t offset = std::min<int64_t>(
                  width - 1, static_cast<int64_t>(frac * static_cast<double>(width)));
              return std::min(lower + offset, l_max_);
            }
            cum += bin.mass;
            lower = bin.upper + 1;
          }
          return std::min(d.bins.back().upper, l_max_);
        }
      },
      variant_);
}

int64_t LengthDistribution::Sample(const CounterRng& stream,
                                   uint64_t draw_index) const {
  return FromGaussian(stream.Normal(draw_index));
}

LengthDistribution LoadEmpiricalHistogram(const std::filesystem::path& path,
                                          int64_t l_max) {
  const std::string key = Field("path");
  std::ifstream in(path);
  if (!in) throw ConfigError(key, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(key, "empty file " + path.string());
  const auto header = SplitCsv(line);
  const auto column = [&](const char* name) -> size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw ConfigError(key, std::string("missing column '") + name + "' in " +
                                 path.string());
    return static_cast<size_t>(it - header.begin());
  };
  const size_t upper_col = column("bin_upper");
  const size_t mass_col = column("mass");

  std::vector<EmpiricalBin> bins;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const auto cells = SplitCsv(line);
    if (cells.size() <= std::max(upper_col, mass_col))
      throw ConfigError(key, path.string() + ":" + std::to_string(line_no) +
                                 ": too few columns");
    try {
      bins.push_back({std::stoll(cells[upper_col]), std::stod(cells[mass_col])});
    } catch (const std::exception&) {
      throw ConfigError(key, path.string() + ":" + std::to_string(line_no) +
                                 ": unparsable number");
    }
  }
  return LengthDistribution::Empirical(std::move(bins), l_max);
}

PromptStream::PromptStream(std::string dataset_tag, int group_size)
    : dataset_tag_(std::move(dataset_tag)), group_size_(group_size) {
  if (group_size_ < 1)
    throw ConfigError("scheduler.n_samples_per_prompt", "must be >= 1");
}

PromptInstance PromptStream::NextInstance() {
  return PromptInstance{next_id_++, dataset_tag_, group_size_};
}

LengthSampler::LengthSampler(LengthDistribution dist,
                             double correlate_within_group, uint64_t seed)
    : dist_(std::move(dist)), rho_(correlate_within_group), seed_(seed) {
  if (!(rho_ >= 0.0 && rho_ <= 1.0))
    throw ConfigError("workload.correlate_within_group", "must lie in [0, 1]");
}

int64_t LengthSampler::LengthFor(int64_t instance_id, int sample_index) const {
  const auto id = static_cast<uint64_t>(instance_id);
  const double z_own =
      CounterRng(seed_, id, static_cast<uint64_t>(sample_index), StreamTag::kLength)
          .Normal(0);
  if (rho_ == 0.0) return dist_.FromGaussian(z_own);
  const double z_shared =
      CounterRng(seed_, id, kInstanceShared, StreamTag::kLength).Normal(0);
  return dist_.FromGaussian(std::sqrt(rho_) * z_shared +
                            std::sqrt(1.0 - rho_) * z_own);
}

std::vector<HistogramBin> Histogram(const LengthDistribution& dist,
                                    int64_t n_draws, uint64_t seed,
                                    int num_bins) {
  if (n_draws < 1) throw std::invalid_argument("histogram: n_draws must be >= 1");
  if (num_bins < 1) throw std::invalid_argument("histogram: num_bins must be >= 1");
  const int64_t l_max = dist.l_max();
  const int64_t width = (l_max + num_bins - 1) / num_bins;
  std::vector<HistogramBin> bins;
  for (int64_t lower = 1; lower <= l_max; lower += width)
    bins.push_back({lower, std::min(lower + width - 1, l_max), 0});
  for (int64_t i = 0; i < n_draws; ++i) {
    const CounterRng stream(seed, static_cast<uint64_t>(i), 0, StreamTag::kHistogram);
    const int64_t len = dist.Sample(stream);
    ++bins[static_cast<size_t>((len - 1) / width)].count;
  }
  return bins;
}

void WriteHistogramCsv(const std::vector<HistogramBin>& bins,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  int64_t total = 0;
  for (const auto& b : bins) total += b.count;
  out << "bin_lower,bin_upper,count,mass\n";
  char mass[64];
  for (const auto& b : bins) {
    std::snprintf(mass, sizeof(mass), "%.17g",
                  total > 0 ? static_cast<double>(b.count) / static_cast<double>(total)
                            : 0.0);
    out << b.lower << ',' << b.upper << ',' << b.count << ',' << mass << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace prsim
