#include "teayield/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "teayield/config.hpp"
#include "teayield/dataset.hpp"
#include "teayield/error.hpp"
#include "teayield/pipeline.hpp"
#include "teayield/serialize.hpp"
#include "teayield/text.hpp"

namespace teayield::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string data;
  std::string config;
  std::string out;
  std::string model;
  std::optional<std::uint64_t> seed;
};

PipelineConfig load(const Options& o) {
  PipelineConfig c = o.config.empty() ? PipelineConfig{} : load_config(o.config);
  if (o.seed) {
    c.seed = *o.seed;
    c.synth_seed = *o.seed;
  }
  return c;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(std::string("missing required option ") + flag);
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << content;
  if (!f) throw Error("failed writing '" + path.string() + "'");
}

template <class Fn>
std::string render(Fn&& fn) {
  std::ostringstream s;
  fn(s);
  return s.str();
}

int cmd_synth(const Options& o, std::ostream& out) {
  const PipelineConfig c = load(o);
  const auto records = generate_synthetic_records(c.synth_n, c.synth_seed, c.synth);
  const std::string csv = render([&](std::ostream& s) { write_records(s, records, synthetic_schema(c.synth)); });
  if (o.out.empty()) out << csv;
  else write_file(o.out, csv);
  return 0;
}

int cmd_inspect(const Options& o, std::ostream& out) {
  require(o.data, "--data");
  const PipelineConfig c = load(o);
  const Schema schema = c.schema_for(o.data);
  const auto records = read_records(o.data, schema);
  const FeatureMatrix base = Preprocessor{schema, true, {}}.base_matrix(records);
  const std::string corr = render([&](std::ostream& s) { write_correlation_csv(s, correlation_report(base)); });
  const double threshold = outlier_threshold(c.outlier_rule, c.outlier_threshold, base.rows());
  const std::string outl =
      render([&](std::ostream& s) { write_outlier_csv(s, cooks_distance(base, threshold, AliasPolicy::Drop)); });
  if (o.out.empty()) {
    out << corr << '\n' << outl;
  } else {
    write_file(fs::path(o.out) / "correlation.csv", corr);
    write_file(fs::path(o.out) / "outliers.csv", outl);
  }
  return 0;
}

int cmd_train(const Options& o, std::ostream& err) {
  require(o.data, "--data");
  require(o.model, "--model");
  const PipelineConfig c = load(o);
  const Schema schema = c.schema_for(o.data);
  const auto records = read_records(o.data, schema);
  const TrainedPipeline t = train_pipeline(records, schema, c);

  const fs::path reports = o.out.empty() ? fs::path(o.model).parent_path() : fs::path(o.out);
  write_file(o.model, render([&](std::ostream& s) { save_model(s, t.model); }));
  write_file(reports / "pool_report.csv", render([&](std::ostream& s) { write_pool_report_csv(s, t.ensemble); }));
  write_file(reports / "learner_selection.csv",
             render([&](std::ostream& s) { write_learner_selection_csv(s, t.ensemble); }));
  if (t.chain.ranking)
    write_file(reports / "feature_ranking.csv",
               render([&](std::ostream& s) { write_ranked_features_csv(s, *t.chain.ranking); }));
  if (t.chain.selection)
    write_file(reports / "feature_selection.csv",
               render([&](std::ostream& s) { write_selection_trace_csv(s, *t.chain.selection); }));
  if (t.chain.outliers)
    write_file(reports / "outliers.csv", render([&](std::ostream& s) { write_outlier_csv(s, *t.chain.outliers); }));
  err << "trained ensemble of " << t.model.learners.size() << " of " << t.ensemble.pool.size() << " learners on "
      << t.chain.data.rows() << " samples\n";
  return 0;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  require(o.data, "--data");
  const PipelineConfig c = load(o);
  const Schema schema = c.schema_for(o.data);
  const auto records = read_records(o.data, schema);
  const StageReport stages = stage_report(records, schema, c);
  const HoldoutReport holdout = holdout_evaluation(records, schema, c);

  const std::string stage_csv = render([&](std::ostream& s) { write_stage_report_csv(s, stages); });
  const std::string block = render([&](std::ostream& s) { write_metrics_block(s, holdout.models.front()); });
  if (o.out.empty()) {
    out << stage_csv << '\n' << block;
    return 0;
  }
  const fs::path dir(o.out);
  write_file(dir / "stage_report.csv", stage_csv);
  write_file(dir / "holdout_metrics.txt", block);
  write_file(dir / "holdout_metrics.csv", render([&](std::ostream& s) { write_holdout_csv(s, holdout); }));
  write_file(dir / "gpr_grid.csv", render([&](std::ostream& s) { write_grid_csv(s, holdout.gpr_grid, kGprGridAxes); }));
  write_file(dir / "mlp_grid.csv", render([&](std::ostream& s) { write_grid_csv(s, holdout.mlp_grid, kMlpGridAxes); }));
  return 0;
}

int cmd_predict(const Options& o, std::ostream& out) {
  require(o.data, "--data");
  require(o.model, "--model");
  const EnsembleModel model = load_ensemble_file(o.model);
  const auto records = read_records(o.data, model.preprocessor.schema, TargetPolicy::Optional);
  const Eigen::VectorXd pred = predict_ensemble(model, records);
  const std::string csv = render([&](std::ostream& s) {
    s << "index,predicted_yield\n";
    for (Eigen::Index i = 0; i < pred.size(); ++i) s << i << ',' << text::format_double(pred(i)) << '\n';
  });
  if (o.out.empty()) out << csv;
  else write_file(o.out, csv);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tea yield prediction with a selective MLP ensemble"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "INI configuration file");
    sub->add_option("--seed", seed, "master seed, overrides the config")->each([&](const std::string&) { o.seed = seed; });
  };
  CLI::App* synth = app.add_subcommand("synth", "write a synthetic dataset");
  add_common(synth);
  synth->add_option("--out", o.out, "output CSV (stdout if omitted)");

  CLI::App* inspect = app.add_subcommand("inspect", "correlation and Cook's distance reports");
  add_common(inspect);
  inspect->add_option("--data", o.data, "input CSV")->required();
  inspect->add_option("--out", o.out, "output directory (stdout if omitted)");

  CLI::App* train = app.add_subcommand("train", "fit preprocessing and the ensemble");
  add_common(train);
  train->add_option("--data", o.data, "training CSV")->required();
  train->add_option("--model", o.model, "model file to write")->required();
  train->add_option("--out", o.out, "report directory (defaults to the model's directory)");

  CLI::App* evaluate = app.add_subcommand("evaluate", "stage report and hold-out metrics");
  add_common(evaluate);
  evaluate->add_option("--data", o.data, "input CSV")->required();
  evaluate->add_option("--out", o.out, "output directory (stdout if omitted)");

  CLI::App* predict = app.add_subcommand("predict", "predict yield for new records");
  predict->add_option("--model", o.model, "model file")->required();
  predict->add_option("--data", o.data, "input CSV; the yield column is optional")->required();
  predict->add_option("--out", o.out, "output CSV (stdout if omitted)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  try {
    if (synth->parsed()) return cmd_synth(o, out);
    if (inspect->parsed()) return cmd_inspect(o, out);
    if (train->parsed()) return cmd_train(o, err);
    if (evaluate->parsed()) return cmd_evaluate(o, out);
    if (predict->parsed()) return cmd_predict(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

int run(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr); }

}  // namespace teayield::cli
