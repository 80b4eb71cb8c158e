#include <cmath>
#include <ostream>

#include "teayield/error.hpp"
#include "teayield/feature_select.hpp"
#include "teayield/random.hpp"
#include "teayield/regressors.hpp"
#include "teayield/text.hpp"

namespace teayield {

namespace {

// Column-wise standardization fitted on the training fold. Constant columns
// are only centered; the alias filter drops them anyway.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  explicit Standardizer(const Eigen::MatrixXd& x) : mean(x.colwise().mean()), scale(x.cols()) {
    const double dof = std::max<double>(1.0, static_cast<double>(x.rows()) - 1.0);
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double sd = std::sqrt((x.col(c).array() - mean(c)).square().sum() / dof);
      scale(c) = sd > 0.0 ? sd : 1.0;
    }
  }
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean).array().rowwise() / scale.array();
  }
};

}  // namespace

CvEvaluator ridge_evaluator(double lambda) {
  return {"ridge", [lambda](const FeatureMatrix& train, std::uint64_t) -> FittedPredictor {
            const Standardizer s(train.values());
            const LinearModel model = fit_linear(s.apply(train.values()), train.target(), lambda, AliasPolicy::Drop);
            return [s, model](const FeatureMatrix& test) { return predict(model, s.apply(test.values())); };
          }};
}

CvEvaluator ols_evaluator() {
  return {"ols", [](const FeatureMatrix& train, std::uint64_t) -> FittedPredictor {
            const LinearModel model = fit_ols(train, 0.0, AliasPolicy::Error);
            return [model](const FeatureMatrix& test) { return predict(model, test.values()); };
          }};
}

SelectionResult sequential_forward_select(const FeatureMatrix& m, const RankedFeatures& ranked,
                                          const CvEvaluator& evaluator, const FoldPlan& plan, std::uint64_t seed,
                                          std::size_t patience) {
  if (plan.k < 2) throw Error("feature selection needs at least 2 folds");
  if (patience < 1) throw Error("feature selection patience must be at least 1");
  if (ranked.order.size() != m.cols())
    throw Error("feature ranking covers " + std::to_string(ranked.order.size()) + " columns but the matrix has " +
                std::to_string(m.cols()));
  if (m.cols() == 0) throw Error("feature selection on a matrix with no features");

  SelectionResult result;
  result.evaluator_name = evaluator.name;
  std::size_t best_size = 0;
  double best_rmse = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  for (std::size_t p = 1; p <= ranked.order.size(); ++p) {
    const std::vector<std::size_t> prefix(ranked.order.begin(), ranked.order.begin() + static_cast<std::ptrdiff_t>(p));
    double score = 0.0;
    try {
      score = cross_validate(m.select_columns(prefix), evaluator.factory, plan, mix_seed(seed, p), Execution::Parallel)
                  .pooled.rmse;
    } catch (const Error& e) {
      throw Error("feature selection, prefix of " + std::to_string(p) + " features: " + e.what());
    }
    result.trace.push_back({p, score});
    if (score < best_rmse) {
      best_rmse = score;
      best_size = p;
      stale = 0;
    } else if (++stale >= patience) {
      break;
    }
  }
  result.selected.assign(ranked.order.begin(), ranked.order.begin() + static_cast<std::ptrdiff_t>(best_size));
  for (std::size_t c : result.selected) result.selected_names.push_back(m.column_names()[c]);
  return result;
}

SelectionResult sequential_forward_select(const FeatureMatrix& m, const RankedFeatures& ranked,
                                          const CvEvaluator& evaluator, std::size_t folds, std::uint64_t seed,
                                          std::size_t patience) {
  return sequential_forward_select(m, ranked, evaluator, make_folds(m.rows(), folds, seed), seed, patience);
}

void write_selection_trace_csv(std::ostream& out, const SelectionResult& result) {
  out << "size,rmse,selected\n";
  for (const auto& step : result.trace)
    out << step.size << ',' << text::format_double(step.rmse) << ',' << (step.size == result.selected.size() ? 1 : 0)
        << '\n';
}

}  // namespace teayield
