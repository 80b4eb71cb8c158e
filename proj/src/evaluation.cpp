#include "teayield/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "teayield/error.hpp"
#include "teayield/random.hpp"

namespace teayield {

double MetricsReport::require_r2() const {
  if (!r2) throw Error("R^2 is undefined: the true values are constant");
  return *r2;
}

MetricsReport metrics(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
  if (y_true.size() != y_pred.size())
    throw Error("metrics: " + std::to_string(y_true.size()) + " true values vs " + std::to_string(y_pred.size()) +
                " predictions");
  if (y_true.size() < 2) throw Error("metrics: need at least two samples");
  const auto n = static_cast<double>(y_true.size());
  const Eigen::ArrayXd e = (y_true - y_pred).array();
  MetricsReport r;
  r.mae = e.abs().sum() / n;
  const double sse = e.square().sum();
  r.mse = sse / n;
  r.rmse = std::sqrt(r.mse);
  const double sst = (y_true.array() - y_true.mean()).square().sum();
  if (sst > 0.0) r.r2 = 1.0 - sse / sst;
  return r;
}

double rmse(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
  if (y_true.size() != y_pred.size() || y_true.size() == 0) throw Error("rmse: size mismatch or empty input");
  return std::sqrt((y_true - y_pred).squaredNorm() / static_cast<double>(y_true.size()));
}

std::vector<std::size_t> FoldPlan::test_rows(std::size_t fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == fold) rows.push_back(i);
  return rows;
}

std::vector<std::size_t> FoldPlan::train_rows(std::size_t fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] != fold) rows.push_back(i);
  return rows;
}

FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error("cross-validation needs at least 2 folds, got " + std::to_string(k));
  if (k > n) throw Error("cannot split " + std::to_string(n) + " samples into " + std::to_string(k) + " folds");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  FoldPlan plan{k, std::vector<std::size_t>(n), seed};
  for (std::size_t pos = 0; pos < n; ++pos) plan.assignment[order[pos]] = pos % k;
  return plan;
}

CvResult cross_validate(const FeatureMatrix& m, const LearnerFactory& factory, const FoldPlan& plan,
                        std::uint64_t model_seed, Execution exec) {
  if (plan.size() != m.rows())
    throw Error("fold plan covers " + std::to_string(plan.size()) + " samples but the matrix has " +
                std::to_string(m.rows()));
  std::vector<Eigen::VectorXd> fold_pred(plan.k);
  kernels::parallel_for(plan.k, exec, [&](std::size_t f) {
    const auto train = plan.train_rows(f);
    const auto test = plan.test_rows(f);
    try {
      const FittedPredictor predictor = factory(m.select_rows(train), mix_seed(model_seed, f));
      fold_pred[f] = predictor(m.select_rows(test));
    } catch (const Error& e) {
      throw Error("fold " + std::to_string(f + 1) + " of " + std::to_string(plan.k) + ": " + e.what());
    }
    if (fold_pred[f].size() != static_cast<Eigen::Index>(test.size()))
      throw Error("fold " + std::to_string(f + 1) + ": predictor returned the wrong number of values");
  });

  CvResult result;
  result.out_of_fold = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.rows()));
  for (std::size_t f = 0; f < plan.k; ++f) {
    const auto test = plan.test_rows(f);
    Eigen::VectorXd truth(static_cast<Eigen::Index>(test.size()));
    for (std::size_t i = 0; i < test.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(test[i]);
      result.out_of_fold(r) = fold_pred[f](static_cast<Eigen::Index>(i));
      truth(static_cast<Eigen::Index>(i)) = m.target()(r);
    }
    result.fold_rmse.push_back(rmse(truth, fold_pred[f]));
  }
  result.pooled = metrics(m.target(), result.out_of_fold);
  result.mean_fold_rmse =
      std::accumulate(result.fold_rmse.begin(), result.fold_rmse.end(), 0.0) / static_cast<double>(plan.k);
  return result;
}

HoldoutSplit holdout_split(std::size_t n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw Error("hold-out fraction must be in (0, 1), got " + std::to_string(test_fraction));
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  if (n_test == 0 || n_test >= n)
    throw Error("hold-out fraction " + std::to_string(test_fraction) + " of " + std::to_string(n) +
                " samples leaves an empty side");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  HoldoutSplit split;
  split.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

std::vector<ParamPoint> grid_lattice(const std::vector<std::vector<double>>& axes) {
  std::vector<ParamPoint> points{ParamPoint{}};
  for (const auto& axis : axes) {
    if (axis.empty()) throw Error("grid axis with no values");
    std::vector<ParamPoint> next;
    for (const auto& p : points)
      for (double v : axis) {
        ParamPoint q = p;
        q.push_back(v);
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }
  return points;
}

GridResult grid_search(const FeatureMatrix& m, const std::function<LearnerFactory(const ParamPoint&)>& family,
                       std::span<const ParamPoint> grid, const FoldPlan& plan, std::uint64_t seed, Execution exec) {
  if (grid.empty()) throw Error("grid search over an empty grid");
  GridResult result;
  result.trace.resize(grid.size());
  kernels::parallel_for(grid.size(), exec, [&](std::size_t i) {
    GridPoint& point = result.trace[i];
    point.params = grid[i];
    try {
      point.rmse = cross_validate(m, family(grid[i]), plan, seed).pooled.rmse;
    } catch (const Error& e) {
      point.error = e.what();
    }
  });
  const GridPoint* best = nullptr;
  for (const auto& p : result.trace) {
    if (!p.rmse) continue;
    if (!best || *p.rmse < *best->rmse || (*p.rmse == *best->rmse && p.params < best->params)) best = &p;
  }
  if (!best) throw Error("grid search: every point failed; first error: " + result.trace.front().error);
  result.best = best->params;
  result.best_rmse = *best->rmse;
  return result;
}

}  // namespace teayield
