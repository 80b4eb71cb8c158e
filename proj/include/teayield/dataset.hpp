#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace teayield {

inline constexpr std::string_view kTargetName = "yield";

/// Column order of the canonical CSV layout.
inline constexpr std::array<std::string_view, 11> kCanonicalColumns = {
    "year",     "month",   "min_temp",  "max_temp",       "humidity",       "rainfall",
    "soil_ph",  "labor_cost", "labor_training", "pesticide_used", "yield"};

enum class MonthEncoding { Cyclic, Integer, OneHot };

MonthEncoding parse_month_encoding(std::string_view name);
std::string_view to_string(MonthEncoding encoding);

/// One monthly observation. labor_cost, labor_training and pesticide_used
/// are kept for provenance only; they never become model features.
struct SampleRecord {
  int year = 0;
  int month = 1;
  double min_temp = 0.0;
  double max_temp = 0.0;
  double humidity = 0.0;
  double rainfall = 0.0;
  double soil_ph = 7.0;
  double labor_cost = 0.0;
  std::string labor_training;
  bool pesticide_used = false;
  std::optional<double> yield;
  std::vector<double> extras;  // values for Schema::extra_columns, same order

  bool operator==(const SampleRecord&) const = default;
};

/// Throws Error if a record violates the physical ranges (month, pH, ...).
void validate_record(const SampleRecord& record, std::size_t line);

struct Schema {
  std::vector<std::string> extra_columns;  // additional numeric predictors
  MonthEncoding month_encoding = MonthEncoding::Cyclic;

  std::vector<std::string> columns() const;
  bool operator==(const Schema&) const = default;
};

/// Column-named numeric table plus a target vector. Immutable after
/// construction; every transform returns a new matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;  // 0 x 0
  FeatureMatrix(std::vector<std::string> names, Eigen::MatrixXd values, Eigen::VectorXd target,
                std::string target_name = std::string(kTargetName));

  std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values_.cols()); }

  const std::vector<std::string>& column_names() const { return names_; }
  const Eigen::MatrixXd& values() const { return values_; }
  const Eigen::VectorXd& target() const { return target_; }
  const std::string& target_name() const { return target_name_; }

  std::optional<std::size_t> find_column(std::string_view name) const;
  std::size_t column_index(std::string_view name) const;  // throws Error if absent
  Eigen::VectorXd column(std::string_view name) const;

  FeatureMatrix with_column(std::string name, const Eigen::VectorXd& values) const;
  FeatureMatrix with_values(const Eigen::MatrixXd& values) const;
  FeatureMatrix with_target(const Eigen::VectorXd& target) const;
  FeatureMatrix select_columns(std::span<const std::string> names) const;
  FeatureMatrix select_columns(std::span<const std::size_t> indices) const;
  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;

  bool operator==(const FeatureMatrix& other) const;

 private:
  std::vector<std::string> names_;
  Eigen::MatrixXd values_;
  Eigen::VectorXd target_;
  std::string target_name_{kTargetName};
};

enum class TargetPolicy { Required, Optional };

/// Parses the CSV layout described in the README. Header order is free; the
/// header must contain exactly schema.columns() (yield may be absent when
/// target is Optional).
std::vector<SampleRecord> read_records(std::istream& in, const Schema& schema,
                                       TargetPolicy target = TargetPolicy::Required);
std::vector<SampleRecord> read_records(const std::string& path, const Schema& schema,
                                       TargetPolicy target = TargetPolicy::Required);
/// Header columns outside the canonical set, in file order.
std::vector<std::string> extra_columns_in_header(const std::string& path);
void write_records(std::ostream& out, std::span<const SampleRecord> records, const Schema& schema);

/// Modeled columns only, month expanded per the schema's encoding. Records
/// without a yield get a zero target.
FeatureMatrix to_feature_matrix(std::span<const SampleRecord> records, const Schema& schema);

FeatureMatrix load_csv(const std::string& path, const Schema& schema = {});

/// Appends avg_temp = (min_temp + max_temp) / 2.
FeatureMatrix derive_avg_temp(const FeatureMatrix& m);

/// Sample Pearson correlation. Throws Error for zero-variance input.
double pearson(std::span<const double> x, std::span<const double> y);
double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct CorrelationReport {
  std::vector<std::string> names;
  Eigen::MatrixXd matrix;
  Eigen::VectorXd target_correlations;
};

CorrelationReport correlation_report(const FeatureMatrix& m);
/// CSV with a `feature` column, one column per feature and a final target
/// column; the last row holds the target's correlations.
void write_correlation_csv(std::ostream& out, const CorrelationReport& report, std::string_view target_name = kTargetName);

// ---------------------------------------------------------------------------
// Synthetic data
//
// The generator draws weather and soil predictors for consecutive months from
// January of start_year and produces
//
//   log(yield) = g(x) + N(0, noise_scale^2)
//   g(x) = 4.2 + 0.004 * (rainfall - 100)
//              + ph_coefficient * (soil_ph - 5.5)
//              + 0.03 * cos(2*pi*(month - 7) / 12)
//
// so effects are multiplicative on yield: yield is right-skewed, grows
// exponentially with rainfall and falls with soil pH for negative
// ph_coefficient. Temperature and humidity have no
// direct effect; they follow the season, as rainfall partly does, and so
// correlate with yield through it. Soil pH drops with rainfall. With the
// default spec the correlations with yield are roughly rainfall 0.86,
// pH -0.75, minimum temperature 0.4 and humidity 0.34. Distractor columns noise_1..noise_k are
// independent N(0,1). Planted outliers get log(yield) shifted upward by
// outlier_shift * noise_scale.
// ---------------------------------------------------------------------------

struct SyntheticSpec {
  double noise_scale = 0.1;
  double ph_coefficient = -0.38;
  std::size_t distractors = 0;
  std::size_t outliers = 0;
  double outlier_shift = 6.0;
  int start_year = 2008;
};

Schema synthetic_schema(const SyntheticSpec& spec, MonthEncoding encoding = MonthEncoding::Cyclic);

/// g(x) above, evaluated on a record's predictors.
double ground_truth_log_yield(const SampleRecord& record, const SyntheticSpec& spec);

std::vector<SampleRecord> generate_synthetic_records(std::size_t n, std::uint64_t seed,
                                                     const SyntheticSpec& spec);
FeatureMatrix generate_synthetic(std::size_t n, std::uint64_t seed, const SyntheticSpec& spec,
                                 MonthEncoding encoding = MonthEncoding::Cyclic);

/// Indices of the planted outliers for (n, seed, spec); sorted ascending.
std::vector<std::size_t> planted_outlier_indices(std::size_t n, std::uint64_t seed,
                                                 const SyntheticSpec& spec);

}  // namespace teayield
