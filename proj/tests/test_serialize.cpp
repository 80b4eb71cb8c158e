#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"
#include "teayield/config.hpp"
#include "teayield/error.hpp"
#include "teayield/pipeline.hpp"
#include "teayield/serialize.hpp"

using namespace teayield;
using testing_support::matrix;
using testing_support::random_matrix;
using testing_support::random_vector;

namespace {

template <class Model, class Load>
Model round_trip(const Model& m, Load load) {
  std::stringstream s;
  save_model(s, m);
  return load(s);
}

std::string saved(const EnsembleModel& m) {
  std::ostringstream s;
  save_model(s, m);
  return s.str();
}

}  // namespace

TEST(Serialize, LinearPredictsIdentically) {
  const Eigen::MatrixXd x = random_matrix(30, 4, 1);
  const LinearModel m = fit_linear(x, random_vector(30, 2), 0.3);
  const LinearModel back = round_trip(m, [](std::istream& in) { return load_linear(in); });
  const Eigen::MatrixXd q = random_matrix(50, 4, 3);
  EXPECT_EQ(predict(m, q), predict(back, q));
  EXPECT_EQ(back.ridge_lambda, 0.3);
}

TEST(Serialize, MlpPredictsIdentically) {
  const Eigen::MatrixXd x = random_matrix(40, 3, 4);
  MlpConfig cfg;
  cfg.epochs = 50;
  const MLPModel m = fit_mlp(x, random_vector(40, 5), cfg, 6).model;
  const MLPModel back = round_trip(m, [](std::istream& in) { return load_mlp(in); });
  const Eigen::MatrixXd q = random_matrix(50, 3, 7);
  EXPECT_EQ(predict(m, q), predict(back, q));
}

TEST(Serialize, GprPredictsIdentically) {
  const Eigen::MatrixXd x = random_matrix(25, 2, 8);
  const GPRModel m = fit_gpr(x, random_vector(25, 9), GprHyper{1.5, 0.8, 0.05});
  const GPRModel back = round_trip(m, [](std::istream& in) { return load_gpr(in); });
  const Eigen::MatrixXd q = random_matrix(50, 2, 10);
  EXPECT_EQ(predict(m, q), predict(back, q));
}

TEST(Serialize, EnsemblePredictsIdenticallyAndResavesSameText) {
  std::istringstream cfg_text(testing_support::kQuickConfig);
  const PipelineConfig c = parse_config(cfg_text);
  const auto records = generate_synthetic_records(c.synth_n, c.synth_seed, c.synth);
  const EnsembleModel m = train_pipeline(records, synthetic_schema(c.synth), c).model;
  std::istringstream in(saved(m));
  const EnsembleModel back = load_ensemble(in);
  EXPECT_EQ(predict_ensemble(m, records), predict_ensemble(back, records));
  EXPECT_EQ(saved(back), saved(m));
  EXPECT_TRUE(back.preprocessor == m.preprocessor);
  EXPECT_EQ(back.weights, m.weights);
  EXPECT_EQ(saved(m).rfind("teayield-ensemble 1\n", 0), 0u);

  testing_support::TempDir dir;
  save_ensemble_file(dir.file("model.txt"), m);
  EXPECT_EQ(predict_ensemble(load_ensemble_file(dir.file("model.txt")), records), predict_ensemble(m, records));
}

TEST(Serialize, BadFilesThrow) {
  const auto load = [](const std::string& text) {
    std::istringstream in(text);
    return load_ensemble(in);
  };
  EXPECT_THROW(load(""), Error);
  EXPECT_THROW(load("teayield-mlp 1\n"), Error);
  EXPECT_THROW(load("teayield-ensemble 99\n"), Error);
  const Eigen::MatrixXd x = random_matrix(10, 2, 11);
  std::stringstream s;
  save_model(s, fit_linear(x, random_vector(10, 12), 0.0));
  std::string text = s.str();
  EXPECT_THROW(
      {
        std::istringstream in(text.substr(0, text.size() / 2));
        load_linear(in);
      },
      Error);
  const auto pos = text.find("intercept");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos + 10, 1, "x");
  EXPECT_THROW(
      {
        std::istringstream in(text);
        load_linear(in);
      },
      Error);
  EXPECT_THROW(load_ensemble_file("/nonexistent/model.txt"), Error);
}
