#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "teayield/dataset.hpp"
#include "teayield/evaluation.hpp"
#include "teayield/kernels.hpp"

namespace teayield {

struct ReliefParams {
  std::size_t k = 10;           // nearest neighbors per sampled instance
  std::size_t iterations = 0;   // sampled instances; 0 means every sample
  double decay = 20.0;          // rank decay sigma; 0 means equal neighbor weights
};

struct RankedFeatures {
  std::vector<std::string> names;
  std::vector<double> weights;     // per column, in [-1, 1]
  std::vector<std::size_t> order;  // by descending weight, ties by column index
  ReliefParams params;
  std::size_t iterations_used = 0;
};

/// Neighbor weights for ranks 1..k: exp(-(rank / decay)^2), normalized to sum 1.
std::vector<double> relief_rank_weights(std::size_t k, double decay);

/// Descending order of `weights`; equal weights keep ascending index order.
/// -inf sorts last.
std::vector<std::size_t> rank_order(const std::vector<double>& weights);

/// RReliefF on range-normalized features and target. Instances are sampled
/// without replacement with `seed` when iterations < n, otherwise all rows
/// are used in order.
RankedFeatures rrelieff(const FeatureMatrix& m, const ReliefParams& params, std::uint64_t seed,
                        Execution exec = Execution::Parallel);
RankedFeatures rrelieff(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<std::string> names,
                        const ReliefParams& params, std::uint64_t seed, Execution exec = Execution::Parallel);

/// CSV `feature,weight,rank` in rank order; rank is 1-based.
void write_ranked_features_csv(std::ostream& out, const RankedFeatures& ranked);

struct CvEvaluator {
  std::string name;
  LearnerFactory factory;
};

/// Standardizes inside each fit, then ridge with aliased columns dropped.
CvEvaluator ridge_evaluator(double lambda = 0.01);
/// Plain least squares (rank-deficient prefixes are an error).
CvEvaluator ols_evaluator();

struct SelectionStep {
  std::size_t size = 0;
  double rmse = 0.0;
};

struct SelectionResult {
  std::vector<std::size_t> selected;          // prefix of the ranked order
  std::vector<std::string> selected_names;
  std::vector<SelectionStep> trace;
  std::string evaluator_name;
};

/// Scores ranked prefixes of size 1, 2, ... by pooled CV RMSE over `plan`,
/// fitting prefix p with seed mix_seed(seed, p). Stops after `patience`
/// consecutive steps without a strict improvement and returns the best
/// prefix.
SelectionResult sequential_forward_select(const FeatureMatrix& m, const RankedFeatures& ranked,
                                          const CvEvaluator& evaluator, const FoldPlan& plan, std::uint64_t seed,
                                          std::size_t patience = 1);
SelectionResult sequential_forward_select(const FeatureMatrix& m, const RankedFeatures& ranked,
                                          const CvEvaluator& evaluator, std::size_t folds, std::uint64_t seed,
                                          std::size_t patience = 1);

/// CSV `size,rmse,selected` for plotting.
void write_selection_trace_csv(std::ostream& out, const SelectionResult& result);

}  // namespace teayield
