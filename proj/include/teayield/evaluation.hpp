#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "teayield/dataset.hpp"
#include "teayield/kernels.hpp"

namespace teayield {

struct MetricsReport {
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
  std::optional<double> r2;  // empty when y_true is constant

  /// Throws Error when R^2 is undefined.
  double require_r2() const;
};

/// Needs at least two samples. R^2 = 1 - SSE/SST about the mean of y_true.
MetricsReport metrics(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred);
double rmse(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred);

struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;  // fold index per sample
  std::uint64_t seed = 0;

  std::size_t size() const { return assignment.size(); }
  std::vector<std::size_t> test_rows(std::size_t fold) const;
  std::vector<std::size_t> train_rows(std::size_t fold) const;
};

/// Seeded shuffle, then round-robin fold assignment.
FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed);

using FittedPredictor = std::function<Eigen::VectorXd(const FeatureMatrix&)>;
/// Fits on the given training matrix; any preprocessing must be fitted in
/// here too so nothing leaks from the scored rows.
using LearnerFactory = std::function<FittedPredictor(const FeatureMatrix& train, std::uint64_t seed)>;

struct CvResult {
  Eigen::VectorXd out_of_fold;      // prediction for every sample from the fold that held it out
  MetricsReport pooled;
  std::vector<double> fold_rmse;
  double mean_fold_rmse = 0.0;
};

/// Fold f is fitted with seed mix_seed(model_seed, f).
CvResult cross_validate(const FeatureMatrix& m, const LearnerFactory& factory, const FoldPlan& plan,
                        std::uint64_t model_seed, Execution exec = Execution::Serial);

struct HoldoutSplit {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

/// Test size is round(test_fraction * n).
HoldoutSplit holdout_split(std::size_t n, double test_fraction, std::uint64_t seed);

using ParamPoint = std::vector<double>;

struct GridPoint {
  ParamPoint params;
  std::optional<double> rmse;  // empty when the fit failed
  std::string error;
};

struct GridResult {
  ParamPoint best;
  double best_rmse = 0.0;
  std::vector<GridPoint> trace;  // same order as the grid
};

/// Cartesian product of the axes, first axis varying slowest.
std::vector<ParamPoint> grid_lattice(const std::vector<std::vector<double>>& axes);

/// Pooled CV RMSE at every point. Ties go to the lexicographically smallest
/// parameter tuple. Failed points are recorded and skipped; if all fail the
/// first failure is rethrown.
GridResult grid_search(const FeatureMatrix& m, const std::function<LearnerFactory(const ParamPoint&)>& family,
                       std::span<const ParamPoint> grid, const FoldPlan& plan, std::uint64_t seed,
                       Execution exec = Execution::Serial);

}  // namespace teayield
