#pragma once

#include <cstddef>
#include <exception>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace teayield {

/// Serial runs the reference loop; Parallel spreads the same iterations over
/// OpenMP threads. Both must produce bit-identical results.
enum class Execution { Serial, Parallel };

namespace kernels {

int max_threads();

/// Runs body(i) for i in [0, n). Exceptions are captured per iteration and
/// the one from the lowest index is rethrown, so failures do not depend on
/// scheduling.
template <class Body>
void parallel_for(std::size_t n, Execution exec, Body&& body);

/// RReliefF accumulators for one sampled instance or summed over many.
struct ReliefTally {
  double n_dc = 0.0;                 // weighted probability of a different target
  std::vector<double> n_da;          // per feature: different attribute value
  std::vector<double> n_dc_da;       // per feature: different target and attribute

  explicit ReliefTally(std::size_t features = 0) : n_da(features, 0.0), n_dc_da(features, 0.0) {}
  void add(const ReliefTally& other);
};

/// Inputs to the neighbor accumulation. Feature columns and the target must
/// already be range-normalized to [0, 1], so diff(a, b) = |a - b| and the
/// Manhattan distance is the sum of per-feature diffs.
struct ReliefProblem {
  const Eigen::MatrixXd& features;
  const Eigen::VectorXd& target;
  std::span<const std::size_t> instances;  // sampled instance rows
  std::size_t k;
  std::span<const double> rank_weights;    // k weights, summing to 1
};

/// Tally for one instance: its k nearest neighbors (ties by row index).
ReliefTally relief_instance(const ReliefProblem& p, std::size_t instance);

namespace serial {
ReliefTally relief_accumulate(const ReliefProblem& p);
Eigen::MatrixXd sq_exp_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double signal_variance,
                              double length_scale);
Eigen::MatrixXd manhattan_distances(const Eigen::MatrixXd& x);
}  // namespace serial

namespace omp {
ReliefTally relief_accumulate(const ReliefProblem& p);
Eigen::MatrixXd sq_exp_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double signal_variance,
                              double length_scale);
Eigen::MatrixXd manhattan_distances(const Eigen::MatrixXd& x);
}  // namespace omp

ReliefTally relief_accumulate(const ReliefProblem& p, Execution exec);
Eigen::MatrixXd sq_exp_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double signal_variance,
                              double length_scale, Execution exec);

// ---------------------------------------------------------------------------

template <class Body>
void parallel_for(std::size_t n, Execution exec, Body&& body) {
  if (exec == Execution::Parallel) {
    std::vector<std::exception_ptr> errors(n);
    const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < count; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    for (std::size_t i = 0; i < n; ++i) body(i);
  }
}

}  // namespace kernels
}  // namespace teayield
