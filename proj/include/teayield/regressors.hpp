#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "teayield/dataset.hpp"
#include "teayield/kernels.hpp"

namespace teayield {

// ---------------------------------------------------------------------------
// Linear models

/// What to do with design columns that are linear combinations of earlier
/// columns and the intercept (e.g. avg_temp next to min_temp and max_temp).
enum class AliasPolicy {
  Error,  // rank deficiency is a fit error (for unpenalized fits)
  Drop,   // aliased columns get a zero coefficient, as R's lm does
};

/// Columns of x, scanned left to right, that add a new direction beyond the
/// intercept and the columns already kept. Relative tolerance on the
/// orthogonalized residual norm.
std::vector<std::size_t> independent_columns(const Eigen::MatrixXd& x, double tolerance = 1e-9);

struct LinearModel {
  Eigen::VectorXd coefficients;  // one per training feature; aliased ones are 0
  double intercept = 0.0;
  double ridge_lambda = 0.0;
};

/// Minimizes |y - Xb - c|^2 + lambda |b|^2 with an unpenalized intercept,
/// through a QR factorization of the centered (and, for ridge, augmented)
/// design rather than the normal equations.
LinearModel fit_ols(const FeatureMatrix& m, double ridge_lambda = 0.0, AliasPolicy aliases = AliasPolicy::Error);
LinearModel fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double ridge_lambda,
                       AliasPolicy aliases = AliasPolicy::Error);

Eigen::VectorXd predict(const LinearModel& model, const Eigen::MatrixXd& x);
double predict_one(const LinearModel& model, std::span<const double> x);

// ---------------------------------------------------------------------------
// Gaussian process regression, squared-exponential kernel, zero prior mean

struct GprHyper {
  double signal_variance = 1.0;
  double length_scale = 1.0;
  double noise_variance = 0.01;
};

struct GPRModel {
  GprHyper hyper;
  Eigen::MatrixXd train_x;
  Eigen::VectorXd train_y;
  Eigen::MatrixXd chol_lower;  // L with L L^T = K + (noise + jitter) I
  Eigen::VectorXd alpha;       // (K + (noise + jitter) I)^-1 y
  double jitter = 0.0;
};

struct GprPrediction {
  double mean = 0.0;
  double variance = 0.0;  // predictive: latent variance + noise variance
};

inline constexpr std::size_t kDefaultGprMaxSamples = 5000;

/// k(x, x') = signal_variance * exp(-|x - x'|^2 / (2 length_scale^2)).
double sq_exp_kernel(const GprHyper& hyper, std::span<const double> a, std::span<const double> b);

/// Cholesky of K + noise I. When that fails, jitter c * trace(K) / n is added
/// with c = 1e-10, 1e-9, ..., 1e-4 before giving up.
GPRModel fit_gpr(const FeatureMatrix& m, const GprHyper& hyper, std::size_t max_samples = kDefaultGprMaxSamples,
                 Execution exec = Execution::Parallel);
GPRModel fit_gpr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GprHyper& hyper,
                 std::size_t max_samples = kDefaultGprMaxSamples, Execution exec = Execution::Parallel);

GprPrediction predict_gpr(const GPRModel& model, std::span<const double> x);
Eigen::VectorXd predict(const GPRModel& model, const Eigen::MatrixXd& x);

// ---------------------------------------------------------------------------
// Single-hidden-layer network: tanh hidden units, identity output, MSE loss,
// full-batch gradient descent with early stopping on a held-out shard.

inline constexpr int kMinHidden = 5;
inline constexpr int kMaxHidden = 30;

struct MlpConfig {
  int hidden = 10;
  double learning_rate = 0.01;
  int epochs = 2000;
  int patience = 50;                 // epochs without shard improvement
  double validation_fraction = 0.15; // early-stopping shard; 0 disables
  bool standardize_target = true;
};

struct MLPModel {
  Eigen::MatrixXd input_weights;   // hidden x features
  Eigen::VectorXd hidden_bias;     // hidden
  Eigen::VectorXd output_weights;  // hidden
  double output_bias = 0.0;
  // prediction = target_shift + target_scale * network output
  double target_shift = 0.0;
  double target_scale = 1.0;

  int hidden() const { return static_cast<int>(input_weights.rows()); }
  int features() const { return static_cast<int>(input_weights.cols()); }
};

struct MlpTraining {
  MLPModel model;
  double train_mse = 0.0;           // on every row passed to fit, original units
  int epochs_run = 0;
  std::vector<double> loss_history; // per epoch, fit rows, network units
};

MlpTraining fit_mlp(const FeatureMatrix& m, const MlpConfig& config, std::uint64_t seed);
MlpTraining fit_mlp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const MlpConfig& config, std::uint64_t seed);

Eigen::VectorXd predict(const MLPModel& model, const Eigen::MatrixXd& x);
double predict_one(const MLPModel& model, std::span<const double> x);

/// Loss (mean squared error of the raw network output against y) and its
/// analytic gradient.
struct MlpGradient {
  double loss = 0.0;
  Eigen::MatrixXd input_weights;
  Eigen::VectorXd hidden_bias;
  Eigen::VectorXd output_weights;
  double output_bias = 0.0;
};

MlpGradient mlp_loss_gradient(const MLPModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// Flat parameter view: input weights (row-major), hidden bias, output
/// weights, output bias.
std::vector<double> mlp_parameters(const MLPModel& model);
void set_mlp_parameters(MLPModel& model, std::span<const double> params);
std::vector<double> flatten_gradient(const MlpGradient& g);

}  // namespace teayield
