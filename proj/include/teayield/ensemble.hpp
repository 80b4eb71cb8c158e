#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "teayield/evaluation.hpp"
#include "teayield/feature_select.hpp"
#include "teayield/preprocess.hpp"
#include "teayield/regressors.hpp"

namespace teayield {

struct PoolConfig {
  std::size_t pool_size = 100;
  double subsample_fraction = 0.8;
  bool bootstrap = false;  // draw with replacement instead
  MlpConfig mlp;           // hidden is drawn per learner
};

struct BaseLearner {
  MLPModel model;
  int hidden = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> subsample;  // training rows used, ascending (repeats when bootstrapped)
  double train_error = 0.0;            // MSE on its own subsample
  std::optional<double> oob_error;     // MSE on the rows it never saw
};

/// Learner i uses seed mix_seed(seed, i): hidden size uniform in [5, 30],
/// ceil(fraction * n) rows, then an MLP fit.
std::vector<BaseLearner> train_pool(const FeatureMatrix& m, const PoolConfig& config, std::uint64_t seed,
                                    Execution exec = Execution::Parallel);

/// n x pool matrix of learner predictions.
Eigen::MatrixXd pool_predictions(std::span<const BaseLearner> pool, const Eigen::MatrixXd& x,
                                 Execution exec = Execution::Parallel);

struct LearnerRanking {
  std::vector<double> weights;     // RReliefF weight; -inf for constant-prediction learners
  std::vector<std::size_t> order;  // descending weight, ties by index
};

/// RReliefF over the matrix of learner predictions against the true target.
LearnerRanking rank_learners(std::span<const BaseLearner> pool, const FeatureMatrix& m, const ReliefParams& params,
                             std::uint64_t seed, Execution exec = Execution::Parallel);
LearnerRanking rank_learners(const Eigen::MatrixXd& predictions, const Eigen::VectorXd& target,
                             const ReliefParams& params, std::uint64_t seed, Execution exec = Execution::Parallel);

struct WeightParams {
  double b = 1.0;
  double c = 0.0;
  bool literal_eq2 = false;
  bool operator==(const WeightParams&) const = default;
};

/// raw_i = 1 / (1 + exp(b (eps_i - c))), normalized to sum 1. With
/// literal_eq2, raw_i = exp(b (|eps_i| - c)) instead (grows with error).
/// Every weight is at least DBL_MIN.
std::vector<double> compute_weights(std::span<const double> errors, const WeightParams& params);

/// Type-7 (linear interpolation) sample quantile.
double quantile(std::vector<double> values, double q);

/// c = median(eps), b = ln 9 / max(IQR(eps), 1e-12).
WeightParams default_weight_params(std::span<const double> errors, bool literal_eq2 = false);

/// Weighted average anchored at the smallest member prediction and clamped to
/// the member range, so K identical members reproduce one member exactly.
double combine(std::span<const double> weights, std::span<const double> predictions);
Eigen::VectorXd combine(std::span<const double> weights, const Eigen::MatrixXd& predictions);

enum class ErrorSource { Training, OutOfBag };
enum class SelectionScoring { OutOfBag, InSample };

ErrorSource parse_error_source(std::string_view name);
SelectionScoring parse_selection_scoring(std::string_view name);
std::string_view to_string(ErrorSource source);
std::string_view to_string(SelectionScoring scoring);

struct EnsembleConfig {
  PoolConfig pool;
  ReliefParams relief;
  std::optional<double> b;  // empty: default_weight_params per prefix
  std::optional<double> c;
  bool literal_eq2 = false;
  ErrorSource error_source = ErrorSource::Training;
  SelectionScoring scoring = SelectionScoring::OutOfBag;
  std::size_t patience = 10;  // non-improving additions before stopping
};

struct LearnerSelectionStep {
  std::size_t size = 0;
  double rmse = 0.0;
  std::vector<double> fold_rmse;  // by the global fold plan; NaN for a fold with no scored rows
  std::size_t scored_rows = 0;
  bool in_sample = false;
  // RMSE of this prefix and of the best earlier prefix over the rows both
  // scored; the improvement test uses these. NaN for the first step.
  double shared_rmse = 0.0;
  double best_shared_rmse = 0.0;
};

struct LearnerSelection {
  std::vector<std::size_t> selected;  // pool indices, a prefix of the ranking
  std::vector<LearnerSelectionStep> trace;
};

double learner_error(const BaseLearner& learner, ErrorSource source);
WeightParams weight_params_for(std::span<const double> errors, const EnsembleConfig& config);

/// Scores growing prefixes of the ranking by the RMSE of the weighted
/// combination. Out-of-bag scoring predicts each row only from prefix members
/// that never trained on it (weights renormalized over those members); rows
/// no member left out are skipped, and a prefix leaving out no rows at all is
/// scored in-sample. A prefix improves on the best so far only if it has the
/// lower RMSE over the rows both scored, since out-of-bag row sets grow with
/// the prefix.
LearnerSelection select_learners(std::span<const BaseLearner> pool, const LearnerRanking& ranking,
                                 const Eigen::MatrixXd& predictions, const Eigen::VectorXd& target,
                                 const FoldPlan& plan, const EnsembleConfig& config);

struct EnsembleFit {
  std::vector<BaseLearner> pool;
  LearnerRanking ranking;
  LearnerSelection selection;
  std::vector<BaseLearner> learners;  // selected members in rank order
  std::vector<double> weights;
  WeightParams weight_params;
};

EnsembleFit fit_ensemble(const FeatureMatrix& m, const EnsembleConfig& config, const FoldPlan& plan,
                         std::uint64_t seed, Execution exec = Execution::Parallel);

struct EnsembleModel {
  Preprocessor preprocessor;
  std::vector<BaseLearner> learners;
  std::vector<double> weights;
  WeightParams weight_params;

  /// Combination in model space (after preprocessing, before undoing the
  /// target transform).
  Eigen::VectorXd predict_model_space(const Eigen::MatrixXd& x) const;
};

/// Raw records to yield in original units.
Eigen::VectorXd predict_ensemble(const EnsembleModel& model, std::span<const SampleRecord> records);

/// CSV `learner,seed,hidden,train_mse,relief_weight,selected`.
void write_pool_report_csv(std::ostream& out, const EnsembleFit& fit);
/// CSV `size,rmse,scored_rows,in_sample,shared_rmse,best_shared_rmse,selected`.
void write_learner_selection_csv(std::ostream& out, const EnsembleFit& fit);

}  // namespace teayield
