#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "teayield/dataset.hpp"
#include "teayield/regressors.hpp"

namespace teayield {

/// Per-column mean and sample (n - 1) standard deviation.
struct ScalerState {
  std::vector<std::string> columns;
  std::vector<double> mean;
  std::vector<double> stddev;

  bool operator==(const ScalerState&) const = default;
};

/// Empty `columns` means every feature column.
ScalerState fit_scaler(const FeatureMatrix& m, std::span<const std::string> columns = {});
/// x' = (x - mean) / stddev on the fitted columns; others and the target untouched.
FeatureMatrix apply_scaler(const ScalerState& s, const FeatureMatrix& m);
FeatureMatrix invert_scaler(const ScalerState& s, const FeatureMatrix& m);

/// Natural log of the selected columns. The target is addressed by its name.
/// A nonpositive value is an error naming the column and 1-based row.
FeatureMatrix log_transform(const FeatureMatrix& m, std::span<const std::string> columns);

struct OutlierReport {
  Eigen::VectorXd cooks_distance;
  Eigen::VectorXd leverage;
  std::vector<std::size_t> flagged;  // ascending
  double threshold = 0.5;
  std::size_t parameters = 0;        // fitted coefficients incl. intercept
};

enum class OutlierRule { Fixed, FourOverN };

OutlierRule parse_outlier_rule(std::string_view name);
double outlier_threshold(OutlierRule rule, double fixed_threshold, std::size_t n);

/// OLS of the target on features + intercept, then
///   D_i = e_i^2 / (p s^2) * h_ii / (1 - h_ii)^2
/// with leverage h_ii from the thin QR factor and s^2 = SSE / (n - p).
/// With AliasPolicy::Drop, aliased columns are removed first and p is the
/// number of independent columns plus one.
OutlierReport cooks_distance(const FeatureMatrix& m, double threshold = 0.5, AliasPolicy aliases = AliasPolicy::Error);

FeatureMatrix remove_outliers(const FeatureMatrix& m, const OutlierReport& report);

/// CSV `index,cooks_distance,flagged` with 0-based sample indices.
void write_outlier_csv(std::ostream& out, const OutlierReport& report);

/// Survivor row indices after removing `flagged` from [0, n).
std::vector<std::size_t> surviving_rows(std::size_t n, std::span<const std::size_t> flagged);

// ---------------------------------------------------------------------------
// Fitted preprocessing chain. Everything needed to turn raw records into the
// model's input space; replayed in order at prediction time.

struct SelectStep {
  std::vector<std::string> columns;
  bool operator==(const SelectStep&) const = default;
};
struct ScaleStep {
  ScalerState scaler;
  bool operator==(const ScaleStep&) const = default;
};
struct LogStep {
  std::vector<std::string> columns;  // may include the target name
  bool operator==(const LogStep&) const = default;
};

using PreprocessStep = std::variant<SelectStep, ScaleStep, LogStep>;

struct Preprocessor {
  Schema schema;
  bool derive_avg_temp = true;
  std::vector<PreprocessStep> steps;

  /// Records -> model input. With transform_target false the target column
  /// is left as read (used for prediction, where it may be absent).
  FeatureMatrix transform(std::span<const SampleRecord> records, bool transform_target = true) const;
  FeatureMatrix transform(const FeatureMatrix& base, bool transform_target = true) const;
  /// The matrix built from records before any step runs.
  FeatureMatrix base_matrix(std::span<const SampleRecord> records) const;

  bool target_logged() const;
  /// Maps model-space target values back to original yield units.
  Eigen::VectorXd untransform_target(const Eigen::VectorXd& values) const;

  bool operator==(const Preprocessor&) const = default;
};

}  // namespace teayield
