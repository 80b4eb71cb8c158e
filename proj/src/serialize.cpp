#include "teayield/serialize.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "teayield/error.hpp"
#include "teayield/text.hpp"

namespace teayield {

namespace {

constexpr int kVersion = 1;

void check_name(const std::string& name) {
  if (name.empty() || name.find_first_of(" \t\r\n") != std::string::npos)
    throw Error("cannot save column name '" + name + "': names must be non-empty without whitespace");
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  Writer& word(std::string_view w) {
    if (!fresh_) out_ << ' ';
    out_ << w;
    fresh_ = false;
    return *this;
  }
  Writer& num(double v) { return word(text::format_double(v)); }
  Writer& count(std::size_t v) { return word(std::to_string(v)); }
  Writer& line() {
    out_ << '\n';
    fresh_ = true;
    return *this;
  }
  Writer& names(const std::vector<std::string>& v) {
    count(v.size());
    for (const auto& n : v) {
      check_name(n);
      word(n);
    }
    return line();
  }
  Writer& matrix(const Eigen::MatrixXd& m) {
    count(static_cast<std::size_t>(m.rows())).count(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) num(m(r, c));
    return line();
  }
  Writer& vector(const Eigen::VectorXd& v) {
    count(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) num(v(i));
    return line();
  }

 private:
  std::ostream& out_;
  bool fresh_ = true;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string word(std::string_view what) {
    std::string w;
    if (!(in_ >> w)) throw Error("model file: unexpected end of input reading " + std::string(what));
    return w;
  }
  void expect(std::string_view keyword) {
    const std::string w = word(keyword);
    if (w != keyword) throw Error("model file: expected '" + std::string(keyword) + "', found '" + w + "'");
  }
  double num(std::string_view what) {
    const std::string w = word(what);
    const auto d = text::parse_double(w);
    if (!d) throw Error("model file: '" + w + "' is not a number (" + std::string(what) + ")");
    return *d;
  }
  std::size_t count(std::string_view what) {
    const std::string w = word(what);
    const auto i = text::parse_int(w);
    if (!i || *i < 0 || *i > 100'000'000) throw Error("model file: bad count '" + w + "' (" + std::string(what) + ")");
    return static_cast<std::size_t>(*i);
  }
  std::vector<std::string> names(std::string_view what) {
    std::vector<std::string> v(count(what));
    for (auto& n : v) n = word(what);
    return v;
  }
  Eigen::MatrixXd matrix(std::string_view what) {
    const auto r = static_cast<Eigen::Index>(count(what)), c = static_cast<Eigen::Index>(count(what));
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = num(what);
    return m;
  }
  Eigen::VectorXd vector(std::string_view what) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(count(what)));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = num(what);
    return v;
  }
  void header(std::string_view kind) {
    const std::string w = word("header");
    if (w != kind) throw Error("model file: expected a " + std::string(kind) + " model, found '" + w + "'");
    const std::size_t version = count("version");
    if (version != kVersion)
      throw Error("model file: unsupported " + std::string(kind) + " format version " + std::to_string(version));
  }

 private:
  std::istream& in_;
};

void write_mlp_body(Writer& w, const MLPModel& m) {
  w.word("input_weights").matrix(m.input_weights);
  w.word("hidden_bias").vector(m.hidden_bias);
  w.word("output_weights").vector(m.output_weights);
  w.word("output_bias").num(m.output_bias).line();
  w.word("target").num(m.target_shift).num(m.target_scale).line();
}

MLPModel read_mlp_body(Reader& r) {
  MLPModel m;
  r.expect("input_weights");
  m.input_weights = r.matrix("input weights");
  r.expect("hidden_bias");
  m.hidden_bias = r.vector("hidden bias");
  r.expect("output_weights");
  m.output_weights = r.vector("output weights");
  r.expect("output_bias");
  m.output_bias = r.num("output bias");
  r.expect("target");
  m.target_shift = r.num("target shift");
  m.target_scale = r.num("target scale");
  const auto h = m.input_weights.rows();
  if (m.hidden_bias.size() != h || m.output_weights.size() != h)
    throw Error("model file: mlp layer sizes disagree");
  return m;
}

}  // namespace

void save_model(std::ostream& out, const LinearModel& model) {
  Writer w(out);
  w.word("teayield-linear").count(kVersion).line();
  w.word("ridge_lambda").num(model.ridge_lambda).line();
  w.word("intercept").num(model.intercept).line();
  w.word("coefficients").vector(model.coefficients);
}

LinearModel load_linear(std::istream& in) {
  Reader r(in);
  r.header("teayield-linear");
  LinearModel m;
  r.expect("ridge_lambda");
  m.ridge_lambda = r.num("ridge lambda");
  r.expect("intercept");
  m.intercept = r.num("intercept");
  r.expect("coefficients");
  m.coefficients = r.vector("coefficients");
  return m;
}

void save_model(std::ostream& out, const MLPModel& model) {
  Writer w(out);
  w.word("teayield-mlp").count(kVersion).line();
  write_mlp_body(w, model);
}

MLPModel load_mlp(std::istream& in) {
  Reader r(in);
  r.header("teayield-mlp");
  return read_mlp_body(r);
}

void save_model(std::ostream& out, const GPRModel& model) {
  Writer w(out);
  w.word("teayield-gpr").count(kVersion).line();
  w.word("hyper").num(model.hyper.signal_variance).num(model.hyper.length_scale).num(model.hyper.noise_variance).line();
  w.word("train_x").matrix(model.train_x);
  w.word("train_y").vector(model.train_y);
}

GPRModel load_gpr(std::istream& in) {
  Reader r(in);
  r.header("teayield-gpr");
  r.expect("hyper");
  GprHyper hyper;
  hyper.signal_variance = r.num("signal variance");
  hyper.length_scale = r.num("length scale");
  hyper.noise_variance = r.num("noise variance");
  r.expect("train_x");
  const Eigen::MatrixXd x = r.matrix("training inputs");
  r.expect("train_y");
  const Eigen::VectorXd y = r.vector("training targets");
  return fit_gpr(x, y, hyper, std::max<std::size_t>(kDefaultGprMaxSamples, static_cast<std::size_t>(x.rows())),
                 Execution::Serial);
}

void save_model(std::ostream& out, const EnsembleModel& model) {
  Writer w(out);
  const Preprocessor& p = model.preprocessor;
  w.word("teayield-ensemble").count(kVersion).line();
  w.word("month_encoding").word(to_string(p.schema.month_encoding)).line();
  w.word("extra_columns").names(p.schema.extra_columns);
  w.word("derive_avg_temp").count(p.derive_avg_temp ? 1 : 0).line();
  w.word("steps").count(p.steps.size()).line();
  for (const auto& step : p.steps) {
    if (const auto* s = std::get_if<SelectStep>(&step)) {
      w.word("select").names(s->columns);
    } else if (const auto* s = std::get_if<ScaleStep>(&step)) {
      w.word("scale").count(s->scaler.columns.size()).line();
      for (std::size_t j = 0; j < s->scaler.columns.size(); ++j) {
        check_name(s->scaler.columns[j]);
        w.word(s->scaler.columns[j]).num(s->scaler.mean[j]).num(s->scaler.stddev[j]).line();
      }
    } else if (const auto* s = std::get_if<LogStep>(&step)) {
      w.word("log").names(s->columns);
    }
  }
  w.word("weight_params").num(model.weight_params.b).num(model.weight_params.c)
      .count(model.weight_params.literal_eq2 ? 1 : 0).line();
  w.word("learners").count(model.learners.size()).line();
  for (std::size_t i = 0; i < model.learners.size(); ++i) {
    const BaseLearner& l = model.learners[i];
    w.word("learner").word(std::to_string(l.seed)).count(static_cast<std::size_t>(l.hidden)).line();
    w.word("weight").num(model.weights[i]).line();
    w.word("train_error").num(l.train_error).line();
    w.word("oob_error");
    if (l.oob_error) w.num(*l.oob_error);
    else w.word("none");
    w.line();
    w.word("subsample").count(l.subsample.size());
    for (std::size_t r : l.subsample) w.count(r);
    w.line();
    write_mlp_body(w, l.model);
  }
  w.word("end").line();
}

EnsembleModel load_ensemble(std::istream& in) {
  Reader r(in);
  r.header("teayield-ensemble");
  EnsembleModel m;
  Preprocessor& p = m.preprocessor;
  r.expect("month_encoding");
  try {
    p.schema.month_encoding = parse_month_encoding(r.word("month encoding"));
  } catch (const Error& e) {
    throw Error(std::string("model file: ") + e.what());
  }
  r.expect("extra_columns");
  p.schema.extra_columns = r.names("extra columns");
  r.expect("derive_avg_temp");
  p.derive_avg_temp = r.count("derive_avg_temp") != 0;
  r.expect("steps");
  const std::size_t steps = r.count("step count");
  for (std::size_t i = 0; i < steps; ++i) {
    const std::string kind = r.word("step kind");
    if (kind == "select") {
      p.steps.emplace_back(SelectStep{r.names("selected columns")});
    } else if (kind == "scale") {
      ScaleStep s;
      const std::size_t cols = r.count("scaled column count");
      for (std::size_t j = 0; j < cols; ++j) {
        s.scaler.columns.push_back(r.word("scaled column"));
        s.scaler.mean.push_back(r.num("column mean"));
        s.scaler.stddev.push_back(r.num("column stddev"));
        if (!(s.scaler.stddev.back() > 0.0)) throw Error("model file: nonpositive scaler stddev");
      }
      p.steps.emplace_back(std::move(s));
    } else if (kind == "log") {
      p.steps.emplace_back(LogStep{r.names("log columns")});
    } else {
      throw Error("model file: unknown preprocessing step '" + kind + "'");
    }
  }
  r.expect("weight_params");
  m.weight_params.b = r.num("b");
  m.weight_params.c = r.num("c");
  m.weight_params.literal_eq2 = r.count("literal_eq2") != 0;
  r.expect("learners");
  const std::size_t count = r.count("learner count");
  if (count == 0) throw Error("model file: ensemble has no learners");
  for (std::size_t i = 0; i < count; ++i) {
    BaseLearner l;
    r.expect("learner");
    const std::string seed = r.word("learner seed");
    try {
      std::size_t used = 0;
      l.seed = std::stoull(seed, &used);
      if (used != seed.size()) throw std::invalid_argument(seed);
    } catch (const std::exception&) {
      throw Error("model file: bad learner seed '" + seed + "'");
    }
    l.hidden = static_cast<int>(r.count("hidden size"));
    r.expect("weight");
    m.weights.push_back(r.num("learner weight"));
    r.expect("train_error");
    l.train_error = r.num("train error");
    r.expect("oob_error");
    const std::string oob = r.word("oob error");
    if (oob != "none") {
      const auto d = text::parse_double(oob);
      if (!d) throw Error("model file: bad oob error '" + oob + "'");
      l.oob_error = *d;
    }
    r.expect("subsample");
    l.subsample.resize(r.count("subsample size"));
    for (auto& s : l.subsample) s = r.count("subsample row");
    l.model = read_mlp_body(r);
    if (l.model.input_weights.rows() != l.hidden) throw Error("model file: hidden size disagrees with weights");
    m.learners.push_back(std::move(l));
  }
  r.expect("end");
  return m;
}

void save_ensemble_file(const std::string& path, const EnsembleModel& model) {
  std::ostringstream buffer;
  save_model(buffer, model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file '" + path + "'");
  out << buffer.str();
  if (!out) throw Error("failed writing model file '" + path + "'");
}

EnsembleModel load_ensemble_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file '" + path + "'");
  return load_ensemble(in);
}

}  // namespace teayield
