#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "teayield/config.hpp"
#include "teayield/ensemble.hpp"
#include "teayield/evaluation.hpp"
#include "teayield/feature_select.hpp"
#include "teayield/preprocess.hpp"

namespace teayield {

/// Result of running preprocessing stages on a base matrix.
struct ChainFit {
  Preprocessor preprocessor;
  std::optional<RankedFeatures> ranking;
  std::optional<SelectionResult> selection;
  std::optional<OutlierReport> outliers;
  std::vector<std::size_t> kept_rows;  // rows of the base matrix that survive
  FeatureMatrix data;                  // transformed surviving rows
};

/// Runs `stages` in order on `base` (the record matrix with avg_temp). When
/// `drop_outliers` is false the outlier stage is skipped. Feature selection
/// scores prefixes on `base_plan` (restricted to surviving rows) when given,
/// otherwise on fresh folds.
ChainFit fit_chain(const FeatureMatrix& base, const Schema& schema, std::span<const Stage> stages,
                   const PipelineConfig& config, std::uint64_t seed, bool drop_outliers = true,
                   const FoldPlan* base_plan = nullptr);

/// Fold assignment of the surviving rows, carried over from the full plan.
FoldPlan restrict_plan(const FoldPlan& plan, std::span<const std::size_t> rows);

/// Seeds derived from the master seed.
namespace seeds {
std::uint64_t folds(std::uint64_t master);
std::uint64_t holdout(std::uint64_t master);
std::uint64_t chain(std::uint64_t master);
std::uint64_t ensemble(std::uint64_t master);
std::uint64_t models(std::uint64_t master);
std::uint64_t grid(std::uint64_t master);
}  // namespace seeds

struct TrainedPipeline {
  ChainFit chain;
  FoldPlan plan;  // over chain.data rows
  EnsembleFit ensemble;
  EnsembleModel model;
};

TrainedPipeline train_pipeline(std::span<const SampleRecord> records, const Schema& schema,
                               const PipelineConfig& config, Execution exec = Execution::Parallel);

enum class ModelKind { MLR, GPR, MLP };
std::string_view to_string(ModelKind kind);

/// Fits one model on working-space data and predicts working-space values.
/// GPR standardizes the target internally; MLR drops aliased columns.
FittedPredictor fit_working_model(ModelKind kind, const FeatureMatrix& train, const PipelineConfig& config,
                                  const GprHyper& gpr, std::uint64_t seed);

struct StageRow {
  std::string stage;
  bool enabled = true;
  ModelKind model = ModelKind::MLR;
  double rmse = 0.0;           // working units (log yield once the target is logged)
  double rmse_original = 0.0;  // yield units
  double mean_fold_rmse_original = 0.0;
  std::size_t replicates = 1;
  std::size_t rows = 0;        // samples in the cross-validation
};

struct StageReport {
  bool paper_faithful = false;
  std::vector<StageRow> rows;
};

/// Cumulative stages in configured order, each cross-validated with MLR, GPR
/// and MLP on the shared fold plan. MLP cells average `config.replicates`
/// trainings. Canonical stages missing from the config are listed after the
/// configured ones with the final state's numbers and enabled = false.
StageReport stage_report(std::span<const SampleRecord> records, const Schema& schema, const PipelineConfig& config,
                         Execution exec = Execution::Parallel);

void write_stage_report_csv(std::ostream& out, const StageReport& report);

struct HoldoutModel {
  std::string model;
  MetricsReport working;
  MetricsReport original;
};

struct HoldoutReport {
  HoldoutSplit split;
  TrainedPipeline pipeline;        // fitted on the training rows only
  FeatureMatrix test_working;      // test rows through the fitted preprocessing
  Eigen::VectorXd test_original;   // test yields as read
  GridResult gpr_grid;             // tuned on the training rows
  GridResult mlp_grid;             // hidden size, tuned on the training rows
  // ensemble, mlp_1 .. mlp_R (R = config.replicates trainings of the tuned
  // single MLP, differing only in seed), mlr, gpr
  std::vector<HoldoutModel> models;

  std::vector<const HoldoutModel*> single_mlps() const;
  const HoldoutModel& model(std::string_view name) const;  // throws Error if absent
};

HoldoutReport holdout_evaluation(std::span<const SampleRecord> records, const Schema& schema,
                                 const PipelineConfig& config, Execution exec = Execution::Parallel);

/// Metrics of working-space predictions on the hold-out rows.
HoldoutModel score_holdout(const std::string& name, const HoldoutReport& report, const Eigen::VectorXd& working_pred,
                           const Preprocessor& preprocessor);

/// Flat `key = value` block (mae, mse, rmse, r2) for one model.
void write_metrics_block(std::ostream& out, const HoldoutModel& model);
/// CSV `model,units,mae,mse,rmse,r2`.
void write_holdout_csv(std::ostream& out, const HoldoutReport& report);
/// CSV with one column per axis, then `rmse,error` (error text of a failed point).
void write_grid_csv(std::ostream& out, const GridResult& grid, std::span<const std::string> axes);
inline const std::vector<std::string> kGprGridAxes{"signal_variance", "length_scale", "noise_variance"};
inline const std::vector<std::string> kMlpGridAxes{"hidden"};

}  // namespace teayield
