#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "teayield/dataset.hpp"
#include "teayield/ensemble.hpp"
#include "teayield/feature_select.hpp"
#include "teayield/preprocess.hpp"
#include "teayield/regressors.hpp"

namespace teayield {

enum class Stage { FeatureSelection, FeatureScaling, OutlierRemoval, FeatureTransformation };

Stage parse_stage(std::string_view name);
std::string_view to_string(Stage stage);

/// Every knob of the workflow. Defaults are the shipped configs/paper_defaults.ini.
struct PipelineConfig {
  // [data]
  MonthEncoding month_encoding = MonthEncoding::Cyclic;
  std::optional<std::vector<std::string>> extra_columns;  // empty: whatever extra columns the file has

  // [pipeline]
  std::vector<Stage> stages{Stage::FeatureSelection, Stage::FeatureScaling, Stage::OutlierRemoval,
                            Stage::FeatureTransformation};
  bool paper_faithful = false;
  std::uint64_t seed = 42;
  std::size_t cv_folds = 10;
  double holdout_fraction = 0.2;

  // [scaling] empty means every feature
  std::vector<std::string> scale_columns;

  // [transform]
  std::vector<std::string> log_columns{std::string(kTargetName)};

  // [outliers]
  double outlier_threshold = 0.5;
  OutlierRule outlier_rule = OutlierRule::Fixed;

  // [relief]
  ReliefParams relief;

  // [selection]
  std::string evaluator = "ridge";  // ridge | ols
  double ridge_lambda = 0.01;
  std::size_t selection_patience = 1;

  // [mlp] training settings; `evaluate` picks the single-MLP hidden size
  // from grid_hidden by cross-validation
  MlpConfig mlp;
  std::vector<double> mlp_grid_hidden{5, 10, 15, 20, 25, 30};

  // [gpr] fixed hyperparameters plus the grid searched by `evaluate`
  GprHyper gpr;
  std::vector<double> gpr_grid_signal{0.5, 1.0, 2.0};
  std::vector<double> gpr_grid_length{0.5, 1.0, 2.0, 4.0};
  std::vector<double> gpr_grid_noise{0.01, 0.05, 0.2};

  // [ensemble]
  EnsembleConfig ensemble;

  // [evaluate]
  std::size_t replicates = 5;

  // [synth]
  std::size_t synth_n = 120;
  std::uint64_t synth_seed = 42;
  SyntheticSpec synth{.distractors = 3, .outliers = 3};

  /// Schema for reading `path`, resolving automatic extra columns from its header.
  Schema schema_for(const std::string& path) const;
};

/// INI text. Unknown sections or keys are errors so typos do not pass silently.
PipelineConfig parse_config(std::istream& in, const std::string& source = "config");
PipelineConfig load_config(const std::string& path);
void write_config(std::ostream& out, const PipelineConfig& config);

}  // namespace teayield
