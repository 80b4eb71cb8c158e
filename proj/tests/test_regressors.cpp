#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "support.hpp"
#include "teayield/error.hpp"
#include "teayield/preprocess.hpp"
#include "teayield/regressors.hpp"

using namespace teayield;
using testing_support::matrix;
using testing_support::random_matrix;
using testing_support::random_vector;

namespace {

std::vector<double> row_values(const Eigen::MatrixXd& x, Eigen::Index i) {
  std::vector<double> out;
  for (Eigen::Index c = 0; c < x.cols(); ++c) out.push_back(x(i, c));
  return out;
}

MLPModel random_network(int hidden, int features, std::uint64_t seed, double scale = 1.0) {
  MLPModel m;
  const Eigen::MatrixXd w = random_matrix(hidden, features + 3, seed) * scale;
  m.input_weights = w.leftCols(features);
  m.hidden_bias = w.col(features);
  m.output_weights = w.col(features + 1);
  m.output_bias = w(0, features + 2);
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Linear

TEST(Ols, ExactLine) {
  Eigen::MatrixXd x(5, 1);
  x << -2, 0, 1, 3, 7;
  const LinearModel m = fit_ols(matrix(x, Eigen::VectorXd(2.0 * x.col(0).array() + 1.0)));
  EXPECT_NEAR(m.coefficients(0), 2.0, 1e-10);
  EXPECT_NEAR(m.intercept, 1.0, 1e-10);
}

TEST(Ols, LargeRidgeShrinksToMean) {
  const Eigen::MatrixXd x = random_matrix(30, 3, 1);
  const Eigen::VectorXd y = x.rowwise().sum().array() + 5.0;
  const LinearModel m = fit_ols(matrix(x, y), 1e12);
  EXPECT_LT(m.coefficients.cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(m.intercept, y.mean(), 1e-8);
}

TEST(Ols, ResidualsOrthogonalToDesign) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Eigen::MatrixXd x = random_matrix(50, 4, seed);
    const Eigen::VectorXd y = random_vector(50, seed + 10) + x.col(2);
    const LinearModel m = fit_ols(matrix(x, y));
    const Eigen::VectorXd e = y - predict(m, x);
    EXPECT_LT(std::abs(e.sum()), 1e-8);
    for (Eigen::Index c = 0; c < 4; ++c) EXPECT_LT(std::abs(e.dot(x.col(c))), 1e-8);
  }
}

TEST(Ols, PerfectFitResidualsVanish) {
  const Eigen::MatrixXd x = random_matrix(20, 2, 3);
  const Eigen::VectorXd y = x * Eigen::Vector2d(0.3, -4.0);
  EXPECT_LT((predict(fit_ols(matrix(x, y)), x) - y).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Ols, BatchEqualsLoop) {
  const Eigen::MatrixXd x = random_matrix(25, 3, 4);
  const LinearModel m = fit_ols(matrix(x, random_vector(25, 5)));
  const Eigen::VectorXd batch = predict(m, x);
  for (Eigen::Index i = 0; i < 25; ++i) EXPECT_EQ(batch(i), predict_one(m, row_values(x, i)));
}

TEST(Ols, PredictionsInvariantUnderRefitScaling) {
  const FeatureMatrix m = matrix(random_matrix(40, 3, 6) * 20.0, random_vector(40, 7));
  const ScalerState s = fit_scaler(m);
  const Eigen::VectorXd raw = predict(fit_ols(m), m.values());
  const FeatureMatrix z = apply_scaler(s, m);
  const Eigen::VectorXd scaled = predict(fit_ols(z), z.values());
  EXPECT_LT((raw - scaled).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Ols, AliasPolicies) {
  Eigen::MatrixXd x = random_matrix(20, 3, 8);
  x.col(2) = (x.col(0) - 2.0 * x.col(1)).array() + 1.0;
  const Eigen::VectorXd y = random_vector(20, 9);
  EXPECT_THROW(fit_ols(matrix(x, y)), Error);
  const LinearModel m = fit_ols(matrix(x, y), 0.0, AliasPolicy::Drop);
  EXPECT_EQ(m.coefficients(2), 0.0);
  EXPECT_EQ(independent_columns(x), (std::vector<std::size_t>{0, 1}));
  const LinearModel reduced = fit_ols(matrix(x.leftCols(2), y));
  EXPECT_NEAR(m.coefficients(0), reduced.coefficients(0), 1e-10);
  EXPECT_THROW(fit_ols(matrix(random_matrix(3, 3, 1), random_vector(3, 1))), Error);
}

// ---------------------------------------------------------------------------
// GPR

TEST(Gpr, MatchesDenseInverse) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(seed % 7);
    const Eigen::MatrixXd x = random_matrix(n, 2, seed);
    const Eigen::VectorXd y = random_vector(n, seed + 1);
    const GprHyper h{0.5 + 0.1 * static_cast<double>(seed), 0.7 + 0.05 * static_cast<double>(seed), 0.05};
    const GPRModel g = fit_gpr(x, y, h);
    const Eigen::MatrixXd q = random_matrix(5, 2, seed + 2);
    for (Eigen::Index i = 0; i < 5; ++i) {
      const auto ref = oracles::gp_by_inverse(x, y, h, q.row(i));
      const GprPrediction p = predict_gpr(g, row_values(q, i));
      EXPECT_NEAR(p.mean, ref.mean, 1e-8);
      EXPECT_NEAR(p.variance, ref.variance, 1e-8);
    }
  }
}

TEST(Gpr, NoiselessInterpolation) {
  const Eigen::MatrixXd x = random_matrix(8, 3, 11);
  const Eigen::VectorXd y = random_vector(8, 12);
  const GPRModel g = fit_gpr(x, y, {1.0, 1.0, 0.0});
  EXPECT_EQ(g.jitter, 0.0);
  for (Eigen::Index i = 0; i < 8; ++i) EXPECT_NEAR(predict_gpr(g, row_values(x, i)).mean, y(i), 1e-6);
}

TEST(Gpr, PriorReversionFarAway) {
  const Eigen::MatrixXd x = random_matrix(10, 2, 13);
  const GprHyper h{2.0, 0.5, 0.1};
  const GPRModel g = fit_gpr(x, random_vector(10, 14), h);
  const GprPrediction p = predict_gpr(g, std::vector<double>{100.0, -100.0});
  EXPECT_NEAR(p.mean, 0.0, 1e-12);
  EXPECT_NEAR(p.variance, 2.1, 1e-12);
}

TEST(Gpr, PosteriorContractsAtTrainingPoint) {
  const Eigen::MatrixXd x = random_matrix(10, 2, 15);
  const GprHyper h{1.5, 1.0, 0.1};
  const GPRModel g = fit_gpr(x, random_vector(10, 16), h);
  EXPECT_LT(predict_gpr(g, row_values(x, 3)).variance, h.signal_variance);
}

TEST(Gpr, MeanLinearInTargetsAndVarianceNonNegative) {
  const Eigen::MatrixXd x = random_matrix(12, 2, 17);
  const Eigen::VectorXd y1 = random_vector(12, 18), y2 = random_vector(12, 19);
  const GprHyper h{1.0, 0.8, 0.02};
  const Eigen::MatrixXd q = random_matrix(30, 2, 20) * 2.0;
  const Eigen::VectorXd a = predict(fit_gpr(x, y1, h), q);
  const Eigen::VectorXd b = predict(fit_gpr(x, y2, h), q);
  const GPRModel both = fit_gpr(x, y1 + y2, h);
  EXPECT_LT((predict(both, q) - a - b).cwiseAbs().maxCoeff(), 1e-10);
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    const GprPrediction p = predict_gpr(both, row_values(q, i));
    EXPECT_GE(p.variance, 0.0);
    EXPECT_EQ(p.mean, predict(both, q)(i));
  }
}

TEST(Gpr, JitterRescuesDuplicateInputs) {
  Eigen::MatrixXd x = random_matrix(6, 1, 21);
  x.row(5) = x.row(0);
  const GPRModel g = fit_gpr(x, random_vector(6, 22), {1.0, 1.0, 0.0});
  EXPECT_GT(g.jitter, 0.0);
  EXPECT_LE(g.jitter, 1e-4);
}

TEST(Gpr, InvalidHyperparametersAndCap) {
  const Eigen::MatrixXd x = random_matrix(5, 1, 1);
  EXPECT_THROW(fit_gpr(x, random_vector(5, 1), {0.0, 1.0, 0.1}), Error);
  EXPECT_THROW(fit_gpr(x, random_vector(5, 1), {1.0, -1.0, 0.1}), Error);
  EXPECT_THROW(fit_gpr(x, random_vector(5, 1), {1.0, 1.0, 0.1}, 4), Error);
}

// ---------------------------------------------------------------------------
// MLP

TEST(Mlp, GradientMatchesFiniteDifferences) {
  const int shapes[][2] = {{5, 1}, {7, 3}, {10, 2}, {20, 5}, {30, 8}};
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    for (const auto& s : shapes) {
      const MLPModel m = random_network(s[0], s[1], seed * 5 + static_cast<std::uint64_t>(s[0]), 0.7);
      const Eigen::MatrixXd x = random_matrix(15, s[1], seed + 100);
      const Eigen::VectorXd y = random_vector(15, seed + 200);
      const auto analytic = flatten_gradient(mlp_loss_gradient(m, x, y));
      EXPECT_LT(oracles::relative_error(analytic, oracles::numeric_gradient(m, x, y, 1e-5)), 1e-4);
    }
}

TEST(Mlp, ParameterRoundTrip) {
  MLPModel m = random_network(6, 3, 1);
  const auto p = mlp_parameters(m);
  EXPECT_EQ(p.size(), 6u * 3 + 2 * 6 + 1);
  MLPModel other = random_network(6, 3, 2);
  set_mlp_parameters(other, p);
  EXPECT_EQ(mlp_parameters(other), p);
  EXPECT_THROW(set_mlp_parameters(other, std::vector<double>(3)), Error);
}

TEST(Mlp, ZeroNetworkOutputsBias) {
  MLPModel m = random_network(5, 2, 3);
  m.input_weights.setZero();
  m.hidden_bias.setZero();
  m.output_weights.setZero();
  m.output_bias = 0.75;
  const Eigen::MatrixXd x = random_matrix(10, 2, 4) * 100.0;
  EXPECT_EQ(predict(m, x), Eigen::VectorXd::Constant(10, 0.75));
}

TEST(Mlp, OverfitsTinyDataset) {
  const Eigen::MatrixXd x = random_matrix(8, 2, 5);
  const Eigen::VectorXd y = x.col(0).array().sin() + 0.5 * x.col(1).array();
  MlpConfig cfg;
  cfg.hidden = 10;
  cfg.epochs = 20000;
  cfg.validation_fraction = 0.0;
  cfg.learning_rate = 0.05;
  const MlpTraining t = fit_mlp(x, y, cfg, 5);
  EXPECT_EQ(t.epochs_run, 20000);
  EXPECT_LT(t.train_mse, 1e-3);
}

TEST(Mlp, LossNonIncreasingAtSmallRate) {
  const FeatureMatrix m = generate_synthetic(120, 6, {});
  const FeatureMatrix z = apply_scaler(fit_scaler(m), m);
  MlpConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.epochs = 3000;
  cfg.patience = 3000;
  const MlpTraining t = fit_mlp(z, cfg, 6);
  std::size_t rises = 0;
  for (std::size_t e = 1; e < t.loss_history.size(); ++e) rises += t.loss_history[e] > t.loss_history[e - 1];
  EXPECT_LE(static_cast<double>(rises), 0.01 * static_cast<double>(t.loss_history.size()));
}

TEST(Mlp, DeterministicPredictions) {
  const FeatureMatrix m = matrix(random_matrix(40, 3, 7), random_vector(40, 8));
  const MlpTraining a = fit_mlp(m, {}, 9);
  const MlpTraining b = fit_mlp(m, {}, 9);
  EXPECT_EQ(mlp_parameters(a.model), mlp_parameters(b.model));
  EXPECT_EQ(predict(a.model, m.values()), predict(a.model, m.values()));
  EXPECT_NE(mlp_parameters(fit_mlp(m, {}, 10).model), mlp_parameters(a.model));
}

TEST(Mlp, BatchEqualsLoop) {
  const FeatureMatrix m = matrix(random_matrix(20, 2, 11), random_vector(20, 12));
  const MLPModel model = fit_mlp(m, {}, 13).model;
  const Eigen::VectorXd batch = predict(model, m.values());
  for (Eigen::Index i = 0; i < 20; ++i) EXPECT_EQ(batch(i), predict_one(model, row_values(m.values(), i)));
}

TEST(Mlp, EarlyStoppingKeepsBestShardModel) {
  // Pure noise with a wide network: the shard loss turns up early.
  const FeatureMatrix m = matrix(random_matrix(40, 3, 14), random_vector(40, 15));
  MlpConfig cfg;
  cfg.hidden = 30;
  cfg.learning_rate = 0.1;
  cfg.patience = 5;
  const MlpTraining t = fit_mlp(m, cfg, 16);
  EXPECT_LT(t.epochs_run, cfg.epochs);
  EXPECT_EQ(static_cast<int>(t.loss_history.size()), t.epochs_run);
}

TEST(Mlp, ConfigValidation) {
  const FeatureMatrix m = matrix(random_matrix(10, 1, 1), random_vector(10, 1));
  MlpConfig cfg;
  cfg.hidden = 4;
  EXPECT_THROW(fit_mlp(m, cfg, 1), Error);
  cfg.hidden = 31;
  EXPECT_THROW(fit_mlp(m, cfg, 1), Error);
  cfg = {};
  cfg.learning_rate = 0.0;
  EXPECT_THROW(fit_mlp(m, cfg, 1), Error);
  cfg = {};
  cfg.validation_fraction = 1.0;
  EXPECT_THROW(fit_mlp(m, cfg, 1), Error);
}

TEST(Mlp, TargetStandardizationOnlyRescales) {
  const Eigen::MatrixXd x = random_matrix(30, 2, 17);
  const Eigen::VectorXd y = 1000.0 + 50.0 * x.col(0).array();
  const MlpTraining t = fit_mlp(x, y, {}, 18);
  EXPECT_GT(t.model.target_scale, 1.0);
  EXPECT_NEAR(t.model.target_shift, y.mean(), 30.0);
  EXPECT_LT(std::sqrt(t.train_mse), 50.0);
}
