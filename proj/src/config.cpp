#include "teayield/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "teayield/error.hpp"
#include "teayield/text.hpp"

namespace teayield {

namespace pt = boost::property_tree;

Stage parse_stage(std::string_view name) {
  if (name == "feature_selection") return Stage::FeatureSelection;
  if (name == "feature_scaling") return Stage::FeatureScaling;
  if (name == "outlier_removal") return Stage::OutlierRemoval;
  if (name == "feature_transformation") return Stage::FeatureTransformation;
  throw Error("unknown stage '" + std::string(name) +
              "' (expected feature_selection, feature_scaling, outlier_removal or feature_transformation)");
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::FeatureSelection: return "feature_selection";
    case Stage::FeatureScaling: return "feature_scaling";
    case Stage::OutlierRemoval: return "outlier_removal";
    case Stage::FeatureTransformation: return "feature_transformation";
  }
  return "?";
}

Schema PipelineConfig::schema_for(const std::string& path) const {
  return {extra_columns ? *extra_columns : extra_columns_in_header(path), month_encoding};
}

namespace {

const std::map<std::string, std::set<std::string>, std::less<>> kKeys = {
    {"data", {"month_encoding", "extra_columns"}},
    {"pipeline", {"stages", "paper_faithful", "seed", "cv_folds", "holdout_fraction"}},
    {"scaling", {"columns"}},
    {"transform", {"log_columns"}},
    {"outliers", {"threshold", "rule"}},
    {"relief", {"k", "iterations", "decay"}},
    {"selection", {"evaluator", "ridge_lambda", "patience"}},
    {"mlp", {"hidden", "learning_rate", "epochs", "patience", "validation_fraction", "standardize_target", "grid_hidden"}},
    {"gpr", {"signal_variance", "length_scale", "noise_variance", "grid_signal", "grid_length", "grid_noise"}},
    {"ensemble", {"pool_size", "subsample_fraction", "bootstrap", "selection_scoring", "patience"}},
    {"weights", {"b", "c", "literal_eq2", "error_source"}},
    {"evaluate", {"replicates"}},
    {"synth", {"n", "seed", "noise_scale", "ph_coefficient", "distractors", "outliers", "outlier_shift", "start_year"}},
};

class Reader {
 public:
  Reader(const pt::ptree& tree, std::string source) : tree_(tree), source_(std::move(source)) {}

  const std::string* raw(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return nullptr;
    const auto v = sec->get_child_optional(key);
    return v ? &v->data() : nullptr;
  }

  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& why) const {
    throw Error(source_ + ": [" + section + "] " + key + ": " + why);
  }

  void number(const std::string& s, const std::string& k, double& out) const {
    if (const auto* v = raw(s, k)) {
      const auto d = text::parse_double(text::trim(*v));
      if (!d) fail(s, k, "'" + *v + "' is not a number");
      out = *d;
    }
  }

  template <class Int>
  void integer(const std::string& s, const std::string& k, Int& out) const {
    if (const auto* v = raw(s, k)) {
      const auto i = text::parse_int(text::trim(*v));
      if (!i || *i < 0) fail(s, k, "'" + *v + "' is not a non-negative integer");
      out = static_cast<Int>(*i);
    }
  }

  void boolean(const std::string& s, const std::string& k, bool& out) const {
    if (const auto* v = raw(s, k)) {
      const auto t = text::trim(*v);
      if (t == "true" || t == "yes" || t == "1") out = true;
      else if (t == "false" || t == "no" || t == "0") out = false;
      else fail(s, k, "'" + *v + "' is not a boolean");
    }
  }

  void string(const std::string& s, const std::string& k, std::string& out) const {
    if (const auto* v = raw(s, k)) out = std::string(text::trim(*v));
  }

  std::optional<std::vector<std::string>> list(const std::string& s, const std::string& k) const {
    const auto* v = raw(s, k);
    if (!v) return std::nullopt;
    std::vector<std::string> out;
    for (auto part : text::split(*v, ',')) {
      const auto t = text::trim(part);
      if (!t.empty()) out.emplace_back(t);
    }
    return out;
  }

  void numbers(const std::string& s, const std::string& k, std::vector<double>& out) const {
    if (const auto items = list(s, k)) {
      out.clear();
      for (const auto& item : *items) {
        const auto d = text::parse_double(item);
        if (!d) fail(s, k, "'" + item + "' is not a number");
        out.push_back(*d);
      }
      if (out.empty()) fail(s, k, "needs at least one value");
    }
  }

  void optional_number(const std::string& s, const std::string& k, std::optional<double>& out) const {
    if (const auto* v = raw(s, k)) {
      const auto t = text::trim(*v);
      if (t == "auto") {
        out.reset();
        return;
      }
      const auto d = text::parse_double(t);
      if (!d) fail(s, k, "'" + *v + "' is neither 'auto' nor a number");
      out = *d;
    }
  }

  template <class Fn>
  void parsed(const std::string& s, const std::string& k, Fn&& fn) const {
    if (const auto* v = raw(s, k)) {
      try {
        fn(text::trim(*v));
      } catch (const Error& e) {
        fail(s, k, e.what());
      }
    }
  }

 private:
  const pt::ptree& tree_;
  std::string source_;
};

}  // namespace

PipelineConfig parse_config(std::istream& in, const std::string& source) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(source + ": line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    const auto it = kKeys.find(section);
    if (it == kKeys.end()) {
      if (body.empty()) throw Error(source + ": key '" + section + "' outside any section");
      throw Error(source + ": unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw Error(source + ": unknown key '" + key + "' in [" + section + "]");
  }

  const Reader r(tree, source);
  PipelineConfig c;

  r.parsed("data", "month_encoding", [&](std::string_view v) { c.month_encoding = parse_month_encoding(v); });
  if (const auto* v = r.raw("data", "extra_columns"); v && text::trim(*v) != "auto") c.extra_columns = r.list("data", "extra_columns");

  if (auto stages = r.list("pipeline", "stages")) {
    c.stages.clear();
    for (const auto& s : *stages)
      if (s != "none") r.parsed("pipeline", "stages", [&](std::string_view) { c.stages.push_back(parse_stage(s)); });
  }
  r.boolean("pipeline", "paper_faithful", c.paper_faithful);
  r.integer("pipeline", "seed", c.seed);
  r.integer("pipeline", "cv_folds", c.cv_folds);
  r.number("pipeline", "holdout_fraction", c.holdout_fraction);

  if (const auto* v = r.raw("scaling", "columns")) {
    if (text::trim(*v) == "all") c.scale_columns.clear();
    else c.scale_columns = *r.list("scaling", "columns");
  }
  if (auto cols = r.list("transform", "log_columns")) c.log_columns = *cols;

  r.number("outliers", "threshold", c.outlier_threshold);
  r.parsed("outliers", "rule", [&](std::string_view v) { c.outlier_rule = parse_outlier_rule(v); });

  r.integer("relief", "k", c.relief.k);
  if (const auto* v = r.raw("relief", "iterations"); v && text::trim(*v) == "all") c.relief.iterations = 0;
  else r.integer("relief", "iterations", c.relief.iterations);
  r.number("relief", "decay", c.relief.decay);

  r.string("selection", "evaluator", c.evaluator);
  if (c.evaluator != "ridge" && c.evaluator != "ols")
    r.fail("selection", "evaluator", "'" + c.evaluator + "' is not one of ridge, ols");
  r.number("selection", "ridge_lambda", c.ridge_lambda);
  r.integer("selection", "patience", c.selection_patience);

  r.integer("mlp", "hidden", c.mlp.hidden);
  r.number("mlp", "learning_rate", c.mlp.learning_rate);
  r.integer("mlp", "epochs", c.mlp.epochs);
  r.integer("mlp", "patience", c.mlp.patience);
  r.number("mlp", "validation_fraction", c.mlp.validation_fraction);
  r.boolean("mlp", "standardize_target", c.mlp.standardize_target);
  r.numbers("mlp", "grid_hidden", c.mlp_grid_hidden);

  r.number("gpr", "signal_variance", c.gpr.signal_variance);
  r.number("gpr", "length_scale", c.gpr.length_scale);
  r.number("gpr", "noise_variance", c.gpr.noise_variance);
  r.numbers("gpr", "grid_signal", c.gpr_grid_signal);
  r.numbers("gpr", "grid_length", c.gpr_grid_length);
  r.numbers("gpr", "grid_noise", c.gpr_grid_noise);

  r.integer("ensemble", "pool_size", c.ensemble.pool.pool_size);
  r.number("ensemble", "subsample_fraction", c.ensemble.pool.subsample_fraction);
  r.boolean("ensemble", "bootstrap", c.ensemble.pool.bootstrap);
  r.parsed("ensemble", "selection_scoring", [&](std::string_view v) { c.ensemble.scoring = parse_selection_scoring(v); });
  r.integer("ensemble", "patience", c.ensemble.patience);

  r.optional_number("weights", "b", c.ensemble.b);
  r.optional_number("weights", "c", c.ensemble.c);
  r.boolean("weights", "literal_eq2", c.ensemble.literal_eq2);
  r.parsed("weights", "error_source", [&](std::string_view v) { c.ensemble.error_source = parse_error_source(v); });

  r.integer("evaluate", "replicates", c.replicates);

  r.integer("synth", "n", c.synth_n);
  r.integer("synth", "seed", c.synth_seed);
  r.number("synth", "noise_scale", c.synth.noise_scale);
  r.number("synth", "ph_coefficient", c.synth.ph_coefficient);
  r.integer("synth", "distractors", c.synth.distractors);
  r.integer("synth", "outliers", c.synth.outliers);
  r.number("synth", "outlier_shift", c.synth.outlier_shift);
  r.integer("synth", "start_year", c.synth.start_year);

  // The base learners share the [mlp] training settings and [relief] ranking.
  c.ensemble.pool.mlp = c.mlp;
  c.ensemble.relief = c.relief;

  if (c.cv_folds < 2) r.fail("pipeline", "cv_folds", "must be at least 2");
  if (c.replicates < 1) r.fail("evaluate", "replicates", "must be at least 1");
  if (c.mlp.hidden < kMinHidden || c.mlp.hidden > kMaxHidden)
    r.fail("mlp", "hidden", "must be in [" + std::to_string(kMinHidden) + ", " + std::to_string(kMaxHidden) + "]");
  if (c.mlp_grid_hidden.empty()) r.fail("mlp", "grid_hidden", "needs at least one size");
  for (double h : c.mlp_grid_hidden)
    if (h != std::floor(h) || h < kMinHidden || h > kMaxHidden)
      r.fail("mlp", "grid_hidden", "sizes must be whole numbers in [" + std::to_string(kMinHidden) + ", " +
                                       std::to_string(kMaxHidden) + "]");
  if (c.ensemble.b && !(*c.ensemble.b > 0.0)) r.fail("weights", "b", "must be > 0");
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  return parse_config(in, path);
}

namespace {

std::string join_numbers(const std::vector<double>& v) {
  std::vector<std::string> parts;
  for (double d : v) parts.push_back(text::format_double(d));
  return text::join(parts, ", ");
}

}  // namespace

void write_config(std::ostream& out, const PipelineConfig& c) {
  const auto opt = [](const std::optional<double>& v) { return v ? text::format_double(*v) : std::string("auto"); };
  const auto yn = [](bool b) { return b ? "true" : "false"; };
  std::vector<std::string> stages;
  for (Stage s : c.stages) stages.emplace_back(to_string(s));

  out << "[data]\n"
      << "month_encoding = " << to_string(c.month_encoding) << '\n'
      << "extra_columns = " << (c.extra_columns ? text::join(*c.extra_columns, ", ") : "auto") << "\n\n"
      << "[pipeline]\n"
      << "stages = " << (stages.empty() ? std::string("none") : text::join(stages, ", ")) << '\n'
      << "paper_faithful = " << yn(c.paper_faithful) << '\n'
      << "seed = " << c.seed << '\n'
      << "cv_folds = " << c.cv_folds << '\n'
      << "holdout_fraction = " << text::format_double(c.holdout_fraction) << "\n\n"
      << "[scaling]\n"
      << "columns = " << (c.scale_columns.empty() ? std::string("all") : text::join(c.scale_columns, ", ")) << "\n\n"
      << "[transform]\n"
      << "log_columns = " << text::join(c.log_columns, ", ") << "\n\n"
      << "[outliers]\n"
      << "threshold = " << text::format_double(c.outlier_threshold) << '\n'
      << "rule = " << (c.outlier_rule == OutlierRule::Fixed ? "fixed" : "four_over_n") << "\n\n"
      << "[relief]\n"
      << "k = " << c.relief.k << '\n'
      << "iterations = " << (c.relief.iterations == 0 ? std::string("all") : std::to_string(c.relief.iterations)) << '\n'
      << "decay = " << text::format_double(c.relief.decay) << "\n\n"
      << "[selection]\n"
      << "evaluator = " << c.evaluator << '\n'
      << "ridge_lambda = " << text::format_double(c.ridge_lambda) << '\n'
      << "patience = " << c.selection_patience << "\n\n"
      << "[mlp]\n"
      << "hidden = " << c.mlp.hidden << '\n'
      << "learning_rate = " << text::format_double(c.mlp.learning_rate) << '\n'
      << "epochs = " << c.mlp.epochs << '\n'
      << "patience = " << c.mlp.patience << '\n'
      << "validation_fraction = " << text::format_double(c.mlp.validation_fraction) << '\n'
      << "standardize_target = " << yn(c.mlp.standardize_target) << '\n'
      << "grid_hidden = " << join_numbers(c.mlp_grid_hidden) << "\n\n"
      << "[gpr]\n"
      << "signal_variance = " << text::format_double(c.gpr.signal_variance) << '\n'
      << "length_scale = " << text::format_double(c.gpr.length_scale) << '\n'
      << "noise_variance = " << text::format_double(c.gpr.noise_variance) << '\n'
      << "grid_signal = " << join_numbers(c.gpr_grid_signal) << '\n'
      << "grid_length = " << join_numbers(c.gpr_grid_length) << '\n'
      << "grid_noise = " << join_numbers(c.gpr_grid_noise) << "\n\n"
      << "[ensemble]\n"
      << "pool_size = " << c.ensemble.pool.pool_size << '\n'
      << "subsample_fraction = " << text::format_double(c.ensemble.pool.subsample_fraction) << '\n'
      << "bootstrap = " << yn(c.ensemble.pool.bootstrap) << '\n'
      << "selection_scoring = " << to_string(c.ensemble.scoring) << '\n'
      << "patience = " << c.ensemble.patience << "\n\n"
      << "[weights]\n"
      << "b = " << opt(c.ensemble.b) << '\n'
      << "c = " << opt(c.ensemble.c) << '\n'
      << "literal_eq2 = " << yn(c.ensemble.literal_eq2) << '\n'
      << "error_source = " << to_string(c.ensemble.error_source) << "\n\n"
      << "[evaluate]\n"
      << "replicates = " << c.replicates << "\n\n"
      << "[synth]\n"
      << "n = " << c.synth_n << '\n'
      << "seed = " << c.synth_seed << '\n'
      << "noise_scale = " << text::format_double(c.synth.noise_scale) << '\n'
      << "ph_coefficient = " << text::format_double(c.synth.ph_coefficient) << '\n'
      << "distractors = " << c.synth.distractors << '\n'
      << "outliers = " << c.synth.outliers << '\n'
      << "outlier_shift = " << text::format_double(c.synth.outlier_shift) << '\n'
      << "start_year = " << c.synth.start_year << '\n';
}

}  // namespace teayield
