#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "teayield/dataset.hpp"
#include "teayield/error.hpp"
#include "teayield/random.hpp"

namespace teayield {

Schema synthetic_schema(const SyntheticSpec& spec, MonthEncoding encoding) {
  Schema schema;
  schema.month_encoding = encoding;
  for (std::size_t i = 1; i <= spec.distractors; ++i) schema.extra_columns.push_back("noise_" + std::to_string(i));
  return schema;
}

double ground_truth_log_yield(const SampleRecord& r, const SyntheticSpec& spec) {
  return 4.2 + 0.004 * (r.rainfall - 100.0) + spec.ph_coefficient * (r.soil_ph - 5.5) +
         0.03 * std::cos(2.0 * std::numbers::pi * (r.month - 7) / 12.0);
}

std::vector<std::size_t> planted_outlier_indices(std::size_t n, std::uint64_t seed, const SyntheticSpec& spec) {
  if (spec.outliers > n) throw Error("synthetic: more outliers requested than samples");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(mix_seed(seed, 1));
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(spec.outliers);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<SampleRecord> generate_synthetic_records(std::size_t n, std::uint64_t seed, const SyntheticSpec& spec) {
  if (n < 10) throw Error("synthetic: need at least 10 samples, got " + std::to_string(n));
  if (!(spec.noise_scale >= 0.0)) throw Error("synthetic: noise scale must be non-negative");

  Rng rng(mix_seed(seed, 0));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<SampleRecord> records(n);
  for (std::size_t i = 0; i < n; ++i) {
    SampleRecord& r = records[i];
    r.year = spec.start_year + static_cast<int>(i / 12);
    r.month = static_cast<int>(i % 12) + 1;
    const double season = std::sin(2.0 * std::numbers::pi * (r.month - 4) / 12.0);

    r.min_temp = 11.0 + 8.0 * season + 1.5 * normal(rng);
    r.max_temp = r.min_temp + 7.0 + 4.0 * unit(rng);
    r.humidity = std::clamp(70.0 + 12.0 * season + 6.0 * normal(rng), 20.0, 100.0);
    r.rainfall = 90.0 * std::exp(0.45 * season + 0.42 * normal(rng));
    r.soil_ph = std::clamp(5.5 - 0.006 * (r.rainfall - 100.0) + 0.35 * normal(rng), 3.5, 8.5);
    r.labor_cost = 300.0 + 25.0 * (r.year - spec.start_year) + 10.0 * normal(rng);
    r.labor_training = unit(rng) < 0.5 ? "basic" : "trained";
    r.pesticide_used = unit(rng) < 0.6;
    for (std::size_t d = 0; d < spec.distractors; ++d) r.extras.push_back(normal(rng));

    const double noise = spec.noise_scale * normal(rng);
    r.yield = std::exp(ground_truth_log_yield(r, spec) + noise);
  }

  for (std::size_t idx : planted_outlier_indices(n, seed, spec))
    records[idx].yield = *records[idx].yield * std::exp(spec.outlier_shift * spec.noise_scale);
  return records;
}

FeatureMatrix generate_synthetic(std::size_t n, std::uint64_t seed, const SyntheticSpec& spec, MonthEncoding encoding) {
  return to_feature_matrix(generate_synthetic_records(n, seed, spec), synthetic_schema(spec, encoding));
}

}  // namespace teayield
