#include "teayield/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "teayield/error.hpp"
#include "teayield/random.hpp"
#include "teayield/text.hpp"

namespace teayield {

namespace seeds {
std::uint64_t folds(std::uint64_t master) { return mix_seed(master, 1); }
std::uint64_t holdout(std::uint64_t master) { return mix_seed(master, 2); }
std::uint64_t chain(std::uint64_t master) { return mix_seed(master, 3); }
std::uint64_t ensemble(std::uint64_t master) { return mix_seed(master, 4); }
std::uint64_t models(std::uint64_t master) { return mix_seed(master, 5); }
std::uint64_t grid(std::uint64_t master) { return mix_seed(master, 6); }
}  // namespace seeds

FoldPlan restrict_plan(const FoldPlan& plan, std::span<const std::size_t> rows) {
  FoldPlan out{plan.k, {}, plan.seed};
  std::vector<std::size_t> count(plan.k, 0);
  for (std::size_t r : rows) {
    if (r >= plan.size()) throw Error("restrict_plan: row out of range");
    out.assignment.push_back(plan.assignment[r]);
    ++count[plan.assignment[r]];
  }
  for (std::size_t f = 0; f < plan.k; ++f)
    if (count[f] == 0) throw Error("fold " + std::to_string(f + 1) + " is empty after removing outliers");
  return out;
}

ChainFit fit_chain(const FeatureMatrix& base, const Schema& schema, std::span<const Stage> stages,
                   const PipelineConfig& config, std::uint64_t seed, bool drop_outliers, const FoldPlan* base_plan) {
  ChainFit out{Preprocessor{schema, true, {}}, {}, {}, {}, {}, base};
  out.kept_rows.resize(base.rows());
  std::iota(out.kept_rows.begin(), out.kept_rows.end(), std::size_t{0});
  FeatureMatrix& m = out.data;

  for (Stage stage : stages) {
    try {
      switch (stage) {
        case Stage::FeatureSelection: {
          out.ranking = rrelieff(m, config.relief, mix_seed(seed, 1));
          const CvEvaluator evaluator =
              config.evaluator == "ols" ? ols_evaluator() : ridge_evaluator(config.ridge_lambda);
          const FoldPlan plan = base_plan ? restrict_plan(*base_plan, out.kept_rows)
                                          : make_folds(m.rows(), config.cv_folds, mix_seed(seed, 2));
          out.selection = sequential_forward_select(m, *out.ranking, evaluator, plan, mix_seed(seed, 3),
                                                    config.selection_patience);
          out.preprocessor.steps.emplace_back(SelectStep{out.selection->selected_names});
          m = m.select_columns(std::span<const std::string>(out.selection->selected_names));
          break;
        }
        case Stage::FeatureScaling: {
          std::vector<std::string> cols;
          for (const auto& name : m.column_names())
            if (config.scale_columns.empty() ||
                std::find(config.scale_columns.begin(), config.scale_columns.end(), name) != config.scale_columns.end())
              cols.push_back(name);
          if (cols.empty()) break;
          ScaleStep step{fit_scaler(m, cols)};
          m = apply_scaler(step.scaler, m);
          out.preprocessor.steps.emplace_back(std::move(step));
          break;
        }
        case Stage::OutlierRemoval: {
          if (!drop_outliers) break;
          const double threshold = outlier_threshold(config.outlier_rule, config.outlier_threshold, m.rows());
          out.outliers = cooks_distance(m, threshold, AliasPolicy::Drop);
          const auto survivors = surviving_rows(m.rows(), out.outliers->flagged);
          std::vector<std::size_t> kept;
          for (std::size_t s : survivors) kept.push_back(out.kept_rows[s]);
          out.kept_rows = std::move(kept);
          m = remove_outliers(m, *out.outliers);
          break;
        }
        case Stage::FeatureTransformation: {
          std::vector<std::string> cols;
          for (const auto& name : config.log_columns)
            if (name == m.target_name() || m.find_column(name)) cols.push_back(name);
          if (cols.empty()) break;
          m = log_transform(m, cols);
          out.preprocessor.steps.emplace_back(LogStep{std::move(cols)});
          break;
        }
      }
    } catch (const Error& e) {
      throw Error("stage " + std::string(to_string(stage)) + ": " + e.what());
    }
  }
  return out;
}

TrainedPipeline train_pipeline(std::span<const SampleRecord> records, const Schema& schema,
                               const PipelineConfig& config, Execution exec) {
  const Preprocessor raw{schema, true, {}};
  const FeatureMatrix base = raw.base_matrix(records);
  const FoldPlan full = make_folds(base.rows(), config.cv_folds, seeds::folds(config.seed));
  TrainedPipeline out{fit_chain(base, schema, config.stages, config, seeds::chain(config.seed), true, &full), {}, {}, {}};
  out.plan = restrict_plan(full, out.chain.kept_rows);
  out.ensemble = fit_ensemble(out.chain.data, config.ensemble, out.plan, seeds::ensemble(config.seed), exec);
  out.model = EnsembleModel{out.chain.preprocessor, out.ensemble.learners, out.ensemble.weights,
                            out.ensemble.weight_params};
  return out;
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::MLR: return "mlr";
    case ModelKind::GPR: return "gpr";
    case ModelKind::MLP: return "mlp";
  }
  return "?";
}

FittedPredictor fit_working_model(ModelKind kind, const FeatureMatrix& train, const PipelineConfig& config,
                                  const GprHyper& gpr, std::uint64_t seed) {
  switch (kind) {
    case ModelKind::MLR: {
      LinearModel model = fit_ols(train, 0.0, AliasPolicy::Drop);
      return [model](const FeatureMatrix& x) { return predict(model, x.values()); };
    }
    case ModelKind::GPR: {
      const Eigen::VectorXd& y = train.target();
      const double mu = y.mean();
      const double var = y.size() > 1 ? (y.array() - mu).square().sum() / static_cast<double>(y.size() - 1) : 0.0;
      const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
      GPRModel model = fit_gpr(train.values(), (y.array() - mu) / sd, gpr, kDefaultGprMaxSamples, Execution::Serial);
      return [model, mu, sd](const FeatureMatrix& x) -> Eigen::VectorXd {
        return (predict(model, x.values()).array() * sd + mu).matrix();
      };
    }
    case ModelKind::MLP: {
      MLPModel model = fit_mlp(train, config.mlp, seed).model;
      return [model](const FeatureMatrix& x) { return predict(model, x.values()); };
    }
  }
  throw Error("unknown model kind");
}

namespace {

Eigen::VectorXd to_working_target(const Preprocessor& pre, const Eigen::VectorXd& y) {
  return pre.target_logged() ? Eigen::VectorXd(y.array().log()) : y;
}

}  // namespace

StageReport stage_report(std::span<const SampleRecord> records, const Schema& schema, const PipelineConfig& config,
                         Execution exec) {
  const Preprocessor raw{schema, true, {}};
  const FeatureMatrix base = raw.base_matrix(records);
  const FoldPlan full = make_folds(base.rows(), config.cv_folds, seeds::folds(config.seed));
  const std::uint64_t chain_seed = seeds::chain(config.seed);

  StageReport report;
  report.paper_faithful = config.paper_faithful;
  const ModelKind kinds[] = {ModelKind::MLR, ModelKind::GPR, ModelKind::MLP};

  std::vector<StageRow> last;
  for (std::size_t depth = 0; depth <= config.stages.size(); ++depth) {
    const std::vector<Stage> prefix(config.stages.begin(), config.stages.begin() + static_cast<std::ptrdiff_t>(depth));
    const std::string label = depth == 0 ? "raw" : std::string(to_string(config.stages[depth - 1]));
    try {
      const ChainFit global = fit_chain(base, schema, prefix, config, chain_seed, true, &full);
      const FeatureMatrix rows = base.select_rows(global.kept_rows);
      const FoldPlan plan = restrict_plan(full, global.kept_rows);
      const Eigen::VectorXd truth_working = to_working_target(global.preprocessor, rows.target());

      last.clear();
      for (ModelKind kind : kinds) {
        const std::size_t reps = kind == ModelKind::MLP ? config.replicates : 1;
        StageRow row{label, true, kind, 0.0, 0.0, 0.0, reps, rows.rows()};
        for (std::size_t r = 0; r < reps; ++r) {
          const LearnerFactory factory = [&](const FeatureMatrix& train, std::uint64_t seed) -> FittedPredictor {
            const Preprocessor pre =
                config.paper_faithful ? global.preprocessor
                                      : fit_chain(train, schema, prefix, config, chain_seed, false).preprocessor;
            const FittedPredictor fitted =
                fit_working_model(kind, pre.transform(train, true), config, config.gpr, seed);
            return [pre, fitted](const FeatureMatrix& test) {
              return pre.untransform_target(fitted(pre.transform(test, false)));
            };
          };
          const CvResult cv = cross_validate(rows, factory, plan, mix_seed(seeds::models(config.seed), r), exec);
          row.rmse_original += cv.pooled.rmse;
          row.mean_fold_rmse_original += cv.mean_fold_rmse;
          row.rmse += rmse(truth_working, to_working_target(global.preprocessor, cv.out_of_fold));
        }
        row.rmse /= static_cast<double>(reps);
        row.rmse_original /= static_cast<double>(reps);
        row.mean_fold_rmse_original /= static_cast<double>(reps);
        if (!std::isfinite(row.rmse) || !std::isfinite(row.rmse_original))
          throw Error("non-finite cross-validated RMSE for " + std::string(to_string(kind)));
        last.push_back(row);
      }
    } catch (const Error& e) {
      throw Error("stage report, stage " + label + ": " + e.what());
    }
    report.rows.insert(report.rows.end(), last.begin(), last.end());
  }

  for (Stage s : {Stage::FeatureSelection, Stage::FeatureScaling, Stage::OutlierRemoval, Stage::FeatureTransformation}) {
    if (std::find(config.stages.begin(), config.stages.end(), s) != config.stages.end()) continue;
    for (StageRow row : last) {
      row.stage = std::string(to_string(s));
      row.enabled = false;
      report.rows.push_back(row);
    }
  }
  return report;
}

void write_stage_report_csv(std::ostream& out, const StageReport& report) {
  out << "mode,stage,enabled,model,rmse,rmse_original,mean_fold_rmse_original,replicates,rows\n";
  const char* mode = report.paper_faithful ? "paper_faithful" : "refit_in_fold";
  for (const auto& r : report.rows)
    out << mode << ',' << r.stage << ',' << (r.enabled ? 1 : 0) << ',' << to_string(r.model) << ','
        << text::format_double(r.rmse) << ',' << text::format_double(r.rmse_original) << ','
        << text::format_double(r.mean_fold_rmse_original) << ',' << r.replicates << ',' << r.rows << '\n';
}

HoldoutModel score_holdout(const std::string& name, const HoldoutReport& report, const Eigen::VectorXd& working_pred,
                           const Preprocessor& preprocessor) {
  return {name, metrics(report.test_working.target(), working_pred),
          metrics(report.test_original, preprocessor.untransform_target(working_pred))};
}

HoldoutReport holdout_evaluation(std::span<const SampleRecord> records, const Schema& schema,
                                 const PipelineConfig& config, Execution exec) {
  HoldoutReport report;
  report.split = holdout_split(records.size(), config.holdout_fraction, seeds::holdout(config.seed));
  std::vector<SampleRecord> train, test;
  for (std::size_t i : report.split.train) train.push_back(records[i]);
  for (std::size_t i : report.split.test) test.push_back(records[i]);

  report.pipeline = train_pipeline(train, schema, config, exec);
  const Preprocessor& pre = report.pipeline.model.preprocessor;
  report.test_working = pre.transform(test, true);
  report.test_original.resize(static_cast<Eigen::Index>(test.size()));
  for (std::size_t i = 0; i < test.size(); ++i) report.test_original(static_cast<Eigen::Index>(i)) = *test[i].yield;

  const FeatureMatrix& data = report.pipeline.chain.data;
  const Eigen::MatrixXd& x = report.test_working.values();
  const std::uint64_t model_seed = seeds::models(config.seed);

  const std::vector<ParamPoint> grid =
      grid_lattice({config.gpr_grid_signal, config.gpr_grid_length, config.gpr_grid_noise});
  const auto gpr_family = [&config](const ParamPoint& p) -> LearnerFactory {
    const GprHyper hyper{p[0], p[1], p[2]};
    return [&config, hyper](const FeatureMatrix& tr, std::uint64_t seed) {
      return fit_working_model(ModelKind::GPR, tr, config, hyper, seed);
    };
  };
  report.gpr_grid = grid_search(data, gpr_family, grid, report.pipeline.plan, seeds::grid(config.seed), exec);
  const GprHyper tuned{report.gpr_grid.best[0], report.gpr_grid.best[1], report.gpr_grid.best[2]};

  const auto mlp_family = [&config](const ParamPoint& p) -> LearnerFactory {
    PipelineConfig sized = config;
    sized.mlp.hidden = static_cast<int>(p[0]);
    return [sized](const FeatureMatrix& tr, std::uint64_t seed) {
      return fit_working_model(ModelKind::MLP, tr, sized, sized.gpr, seed);
    };
  };
  report.mlp_grid = grid_search(data, mlp_family, grid_lattice({config.mlp_grid_hidden}), report.pipeline.plan,
                                seeds::grid(config.seed), exec);
  PipelineConfig single = config;
  single.mlp.hidden = static_cast<int>(report.mlp_grid.best[0]);

  report.models.push_back(score_holdout("ensemble", report, report.pipeline.model.predict_model_space(x), pre));
  for (std::size_t r = 0; r < config.replicates; ++r)
    report.models.push_back(score_holdout(
        "mlp_" + std::to_string(r + 1), report,
        fit_working_model(ModelKind::MLP, data, single, tuned, mix_seed(model_seed, r))(report.test_working), pre));
  report.models.push_back(score_holdout(
      "mlr", report, fit_working_model(ModelKind::MLR, data, config, tuned, model_seed)(report.test_working), pre));
  report.models.push_back(score_holdout(
      "gpr", report, fit_working_model(ModelKind::GPR, data, config, tuned, model_seed)(report.test_working), pre));
  return report;
}

std::vector<const HoldoutModel*> HoldoutReport::single_mlps() const {
  std::vector<const HoldoutModel*> out;
  for (const auto& m : models)
    if (m.model.rfind("mlp_", 0) == 0) out.push_back(&m);
  return out;
}

const HoldoutModel& HoldoutReport::model(std::string_view name) const {
  for (const auto& m : models)
    if (m.model == name) return m;
  throw Error("hold-out report has no model '" + std::string(name) + "'");
}

namespace {

std::string r2_text(const MetricsReport& m) { return m.r2 ? text::format_double(*m.r2) : std::string("nan"); }

}  // namespace

void write_metrics_block(std::ostream& out, const HoldoutModel& model) {
  out << "mae = " << text::format_double(model.working.mae) << '\n'
      << "mse = " << text::format_double(model.working.mse) << '\n'
      << "rmse = " << text::format_double(model.working.rmse) << '\n'
      << "r2 = " << r2_text(model.working) << '\n';
}

void write_holdout_csv(std::ostream& out, const HoldoutReport& report) {
  const char* working = report.pipeline.model.preprocessor.target_logged() ? "log_yield" : "yield";
  out << "model,units,mae,mse,rmse,r2\n";
  for (const auto& m : report.models) {
    for (int pass = 0; pass < 2; ++pass) {
      const MetricsReport& r = pass == 0 ? m.working : m.original;
      out << m.model << ',' << (pass == 0 ? working : "yield") << ',' << text::format_double(r.mae) << ','
          << text::format_double(r.mse) << ',' << text::format_double(r.rmse) << ',' << r2_text(r) << '\n';
    }
  }
}

void write_grid_csv(std::ostream& out, const GridResult& grid, std::span<const std::string> axes) {
  for (const auto& a : axes) out << a << ',';
  out << "rmse,error\n";
  for (const auto& p : grid.trace) {
    if (p.params.size() != axes.size()) throw Error("grid csv: point has " + std::to_string(p.params.size()) + " values for " + std::to_string(axes.size()) + " axes");
    for (double v : p.params) out << text::format_double(v) << ',';
    out << (p.rmse ? text::format_double(*p.rmse) : std::string()) << ',';
    std::string err = p.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << err << '\n';
  }
}

}  // namespace teayield
