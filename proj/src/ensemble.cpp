#include "teayield/ensemble.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "teayield/error.hpp"
#include "teayield/random.hpp"
#include "teayield/text.hpp"

namespace teayield {

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& y, std::span<const std::size_t> rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(rows[i]));
  return out;
}

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

std::vector<BaseLearner> train_pool(const FeatureMatrix& m, const PoolConfig& config, std::uint64_t seed,
                                    Execution exec) {
  if (config.pool_size < 1) throw Error("pool size must be at least 1");
  if (!(config.subsample_fraction > 0.0 && config.subsample_fraction <= 1.0))
    throw Error("subsample fraction must be in (0, 1]");
  const std::size_t n = m.rows();
  if (n == 0) throw Error("pool training on an empty matrix");
  const auto draw = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(config.subsample_fraction * static_cast<double>(n) - 1e-9)));

  std::vector<BaseLearner> pool(config.pool_size);
  kernels::parallel_for(config.pool_size, exec, [&](std::size_t i) {
    BaseLearner& learner = pool[i];
    learner.seed = mix_seed(seed, i);
    Rng rng(learner.seed);
    learner.hidden = std::uniform_int_distribution<int>(kMinHidden, kMaxHidden)(rng);
    if (config.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (std::size_t j = 0; j < draw; ++j) learner.subsample.push_back(pick(rng));
    } else {
      std::vector<std::size_t> rows(n);
      std::iota(rows.begin(), rows.end(), std::size_t{0});
      std::shuffle(rows.begin(), rows.end(), rng);
      learner.subsample.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(draw));
    }
    std::sort(learner.subsample.begin(), learner.subsample.end());

    MlpConfig cfg = config.mlp;
    cfg.hidden = learner.hidden;
    MlpTraining fit;
    try {
      fit = fit_mlp(take_rows(m.values(), learner.subsample), take_rows(m.target(), learner.subsample), cfg,
                    mix_seed(learner.seed, 1));
    } catch (const Error& e) {
      throw Error("base learner " + std::to_string(i) + ": " + e.what());
    }
    learner.model = std::move(fit.model);
    learner.train_error = fit.train_mse;

    std::vector<bool> used(n, false);
    for (std::size_t r : learner.subsample) used[r] = true;
    std::vector<std::size_t> unused;
    for (std::size_t r = 0; r < n; ++r)
      if (!used[r]) unused.push_back(r);
    if (!unused.empty()) {
      const Eigen::VectorXd pred = predict(learner.model, take_rows(m.values(), unused));
      learner.oob_error = (pred - take_rows(m.target(), unused)).squaredNorm() / static_cast<double>(unused.size());
    }
  });
  return pool;
}

Eigen::MatrixXd pool_predictions(std::span<const BaseLearner> pool, const Eigen::MatrixXd& x, Execution exec) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(pool.size()));
  kernels::parallel_for(pool.size(), exec,
                        [&](std::size_t j) { out.col(static_cast<Eigen::Index>(j)) = predict(pool[j].model, x); });
  return out;
}

LearnerRanking rank_learners(const Eigen::MatrixXd& predictions, const Eigen::VectorXd& target,
                             const ReliefParams& params, std::uint64_t seed, Execution exec) {
  const auto count = static_cast<std::size_t>(predictions.cols());
  if (count == 0) throw Error("cannot rank an empty pool");
  LearnerRanking out;
  out.weights.assign(count, -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> varying;
  for (std::size_t j = 0; j < count; ++j) {
    const auto col = predictions.col(static_cast<Eigen::Index>(j));
    if (col.maxCoeff() > col.minCoeff()) varying.push_back(j);
  }
  if (!varying.empty()) {
    Eigen::MatrixXd sub(predictions.rows(), static_cast<Eigen::Index>(varying.size()));
    std::vector<std::string> names;
    for (std::size_t j = 0; j < varying.size(); ++j) {
      sub.col(static_cast<Eigen::Index>(j)) = predictions.col(static_cast<Eigen::Index>(varying[j]));
      names.push_back("learner_" + std::to_string(varying[j]));
    }
    const RankedFeatures ranked = rrelieff(sub, target, std::move(names), params, seed, exec);
    for (std::size_t j = 0; j < varying.size(); ++j) out.weights[varying[j]] = ranked.weights[j];
  }
  out.order = rank_order(out.weights);
  return out;
}

LearnerRanking rank_learners(std::span<const BaseLearner> pool, const FeatureMatrix& m, const ReliefParams& params,
                             std::uint64_t seed, Execution exec) {
  return rank_learners(pool_predictions(pool, m.values(), exec), m.target(), params, seed, exec);
}

std::vector<double> compute_weights(std::span<const double> errors, const WeightParams& params) {
  if (errors.empty()) throw Error("compute_weights: no errors given");
  if (!(params.b > 0.0) || !std::isfinite(params.b)) throw Error("compute_weights: b must be finite and > 0");
  if (!std::isfinite(params.c)) throw Error("compute_weights: c must be finite");
  std::vector<double> log_raw(errors.size());
  bool any_nonzero = false;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    const double e = errors[i];
    if (!std::isfinite(e) || e < 0.0)
      throw Error("compute_weights: error " + std::to_string(i) + " is " + text::format_double(e) +
                  "; errors must be finite and >= 0");
    log_raw[i] = params.literal_eq2 ? params.b * (std::abs(e) - params.c) : -softplus(params.b * (e - params.c));
    if (!std::isfinite(log_raw[i]))
      throw Error("compute_weights: weight exponent overflows for error " + text::format_double(e) +
                  " (b = " + text::format_double(params.b) + ", c = " + text::format_double(params.c) + ")");
    if (std::exp(log_raw[i]) > 0.0) any_nonzero = true;
  }
  if (!any_nonzero) {
    std::ostringstream msg;
    msg << "compute_weights: every raw weight underflows to 0 (b = " << text::format_double(params.b)
        << ", c = " << text::format_double(params.c) << ", smallest error "
        << text::format_double(*std::min_element(errors.begin(), errors.end())) << ")";
    throw Error(msg.str());
  }
  const double top = *std::max_element(log_raw.begin(), log_raw.end());
  std::vector<double> w(errors.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) total += (w[i] = std::exp(log_raw[i] - top));
  for (double& v : w) v = std::max(v / total, DBL_MIN);
  return w;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error("quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

WeightParams default_weight_params(std::span<const double> errors, bool literal_eq2) {
  std::vector<double> e(errors.begin(), errors.end());
  const double iqr = quantile(e, 0.75) - quantile(e, 0.25);
  return {std::log(9.0) / std::max(iqr, 1e-12), quantile(e, 0.5), literal_eq2};
}

double combine(std::span<const double> weights, std::span<const double> predictions) {
  if (weights.size() != predictions.size() || weights.empty()) throw Error("combine: size mismatch");
  const double lo = *std::min_element(predictions.begin(), predictions.end());
  const double hi = *std::max_element(predictions.begin(), predictions.end());
  double acc = 0.0, total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i] * (predictions[i] - lo);
    total += weights[i];
  }
  return std::clamp(lo + acc / total, lo, hi);
}

Eigen::VectorXd combine(std::span<const double> weights, const Eigen::MatrixXd& predictions) {
  Eigen::VectorXd out(predictions.rows());
  std::vector<double> row(static_cast<std::size_t>(predictions.cols()));
  for (Eigen::Index i = 0; i < predictions.rows(); ++i) {
    for (Eigen::Index j = 0; j < predictions.cols(); ++j) row[static_cast<std::size_t>(j)] = predictions(i, j);
    out(i) = combine(weights, row);
  }
  return out;
}

ErrorSource parse_error_source(std::string_view name) {
  if (name == "training") return ErrorSource::Training;
  if (name == "oob") return ErrorSource::OutOfBag;
  throw Error("unknown error source '" + std::string(name) + "' (expected training or oob)");
}

SelectionScoring parse_selection_scoring(std::string_view name) {
  if (name == "oob") return SelectionScoring::OutOfBag;
  if (name == "in_sample") return SelectionScoring::InSample;
  throw Error("unknown selection scoring '" + std::string(name) + "' (expected oob or in_sample)");
}

std::string_view to_string(ErrorSource source) { return source == ErrorSource::Training ? "training" : "oob"; }
std::string_view to_string(SelectionScoring scoring) {
  return scoring == SelectionScoring::OutOfBag ? "oob" : "in_sample";
}

double learner_error(const BaseLearner& learner, ErrorSource source) {
  if (source == ErrorSource::Training) return learner.train_error;
  if (!learner.oob_error) throw Error("learner " + std::to_string(learner.seed) + " has no unused rows for an out-of-bag error");
  return *learner.oob_error;
}

WeightParams weight_params_for(std::span<const double> errors, const EnsembleConfig& config) {
  WeightParams p = default_weight_params(errors, config.literal_eq2);
  if (config.b) p.b = *config.b;
  if (config.c) p.c = *config.c;
  return p;
}

LearnerSelection select_learners(std::span<const BaseLearner> pool, const LearnerRanking& ranking,
                                 const Eigen::MatrixXd& predictions, const Eigen::VectorXd& target,
                                 const FoldPlan& plan, const EnsembleConfig& config) {
  if (plan.k < 2) throw Error("learner selection needs at least 2 folds");
  if (config.patience < 1) throw Error("learner selection patience must be at least 1");
  const auto n = static_cast<std::size_t>(target.size());
  if (plan.size() != n || static_cast<std::size_t>(predictions.rows()) != n)
    throw Error("learner selection: row counts of predictions, target and fold plan differ");
  if (ranking.order.size() != pool.size()) throw Error("learner selection: ranking does not cover the pool");

  // in_bag[j][r]: learner j trained on row r.
  std::vector<std::vector<bool>> in_bag(pool.size(), std::vector<bool>(n, false));
  for (std::size_t j = 0; j < pool.size(); ++j)
    for (std::size_t r : pool[j].subsample) in_bag[j][r] = true;

  LearnerSelection result;
  std::size_t best_size = 0;
  std::vector<double> best_se;
  std::size_t stale = 0;
  std::vector<double> errs, w, wr, pr;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t p = 1; p <= pool.size(); ++p) {
    const std::size_t added = ranking.order[p - 1];
    errs.push_back(learner_error(pool[added], config.error_source));
    w = compute_weights(errs, weight_params_for(errs, config));

    LearnerSelectionStep step;
    step.size = p;
    std::vector<double> se(n, nan);
    const auto score_rows = [&](bool in_sample) {
      std::size_t scored = 0;
      for (std::size_t r = 0; r < n; ++r) {
        wr.clear();
        pr.clear();
        for (std::size_t q = 0; q < p; ++q) {
          const std::size_t j = ranking.order[q];
          if (!in_sample && in_bag[j][r]) continue;
          wr.push_back(w[q]);
          pr.push_back(predictions(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)));
        }
        if (wr.empty()) continue;
        const double e = combine(wr, pr) - target(static_cast<Eigen::Index>(r));
        se[r] = e * e;
        ++scored;
      }
      return scored;
    };
    step.in_sample = config.scoring == SelectionScoring::InSample;
    step.scored_rows = score_rows(step.in_sample);
    if (step.scored_rows == 0) {
      step.in_sample = true;
      step.scored_rows = score_rows(true);
    }

    double total = 0.0;
    std::vector<double> fold_total(plan.k, 0.0);
    std::vector<std::size_t> fold_count(plan.k, 0);
    for (std::size_t r = 0; r < n; ++r) {
      if (std::isnan(se[r])) continue;
      total += se[r];
      fold_total[plan.assignment[r]] += se[r];
      ++fold_count[plan.assignment[r]];
    }
    step.rmse = std::sqrt(total / static_cast<double>(step.scored_rows));
    for (std::size_t f = 0; f < plan.k; ++f)
      step.fold_rmse.push_back(fold_count[f] ? std::sqrt(fold_total[f] / static_cast<double>(fold_count[f])) : nan);

    bool improved = best_size == 0;
    step.shared_rmse = step.best_shared_rmse = nan;
    if (!improved) {
      double mine = 0.0, theirs = 0.0;
      std::size_t shared = 0;
      for (std::size_t r = 0; r < n; ++r) {
        if (std::isnan(se[r]) || std::isnan(best_se[r])) continue;
        mine += se[r];
        theirs += best_se[r];
        ++shared;
      }
      if (shared == 0) throw Error("learner selection: prefixes " + std::to_string(best_size) + " and " +
                                   std::to_string(p) + " share no scored rows");
      step.shared_rmse = std::sqrt(mine / static_cast<double>(shared));
      step.best_shared_rmse = std::sqrt(theirs / static_cast<double>(shared));
      improved = step.shared_rmse < step.best_shared_rmse;
    }
    result.trace.push_back(step);

    if (improved) {
      best_size = p;
      best_se = std::move(se);
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  result.selected.assign(ranking.order.begin(), ranking.order.begin() + static_cast<std::ptrdiff_t>(best_size));
  return result;
}

EnsembleFit fit_ensemble(const FeatureMatrix& m, const EnsembleConfig& config, const FoldPlan& plan,
                         std::uint64_t seed, Execution exec) {
  EnsembleFit fit;
  fit.pool = train_pool(m, config.pool, seed, exec);
  const Eigen::MatrixXd preds = pool_predictions(fit.pool, m.values(), exec);
  fit.ranking = rank_learners(preds, m.target(), config.relief, mix_seed(seed, config.pool.pool_size), exec);
  fit.selection = select_learners(fit.pool, fit.ranking, preds, m.target(), plan, config);
  std::vector<double> errs;
  for (std::size_t j : fit.selection.selected) {
    fit.learners.push_back(fit.pool[j]);
    errs.push_back(learner_error(fit.pool[j], config.error_source));
  }
  fit.weight_params = weight_params_for(errs, config);
  fit.weights = compute_weights(errs, fit.weight_params);
  return fit;
}

Eigen::VectorXd EnsembleModel::predict_model_space(const Eigen::MatrixXd& x) const {
  if (learners.empty() || learners.size() != weights.size()) throw Error("ensemble has no learners or mismatched weights");
  return combine(weights, pool_predictions(learners, x));
}

Eigen::VectorXd predict_ensemble(const EnsembleModel& model, std::span<const SampleRecord> records) {
  const FeatureMatrix x = model.preprocessor.transform(records, false);
  return model.preprocessor.untransform_target(model.predict_model_space(x.values()));
}

void write_pool_report_csv(std::ostream& out, const EnsembleFit& fit) {
  std::vector<bool> selected(fit.pool.size(), false);
  for (std::size_t j : fit.selection.selected) selected[j] = true;
  out << "learner,seed,hidden,train_mse,relief_weight,selected\n";
  for (std::size_t j = 0; j < fit.pool.size(); ++j) {
    const auto& l = fit.pool[j];
    out << j << ',' << l.seed << ',' << l.hidden << ',' << text::format_double(l.train_error) << ','
        << text::format_double(fit.ranking.weights[j]) << ',' << (selected[j] ? 1 : 0) << '\n';
  }
}

void write_learner_selection_csv(std::ostream& out, const EnsembleFit& fit) {
  out << "size,rmse,scored_rows,in_sample,shared_rmse,best_shared_rmse,selected\n";
  for (const auto& s : fit.selection.trace)
    out << s.size << ',' << text::format_double(s.rmse) << ',' << s.scored_rows << ',' << (s.in_sample ? 1 : 0) << ','
        << text::format_double(s.shared_rmse) << ',' << text::format_double(s.best_shared_rmse) << ','
        << (s.size == fit.selection.selected.size() ? 1 : 0) << '\n';
}

}  // namespace teayield
