#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "teayield/error.hpp"
#include "teayield/random.hpp"
#include "teayield/regressors.hpp"

namespace teayield {

namespace {

Eigen::VectorXd network_output(const MLPModel& m, const Eigen::MatrixXd& x, Eigen::MatrixXd* hidden = nullptr) {
  Eigen::MatrixXd h = ((x * m.input_weights.transpose()).rowwise() + m.hidden_bias.transpose()).array().tanh();
  Eigen::VectorXd out = (h * m.output_weights).array() + m.output_bias;
  if (hidden) *hidden = std::move(h);
  return out;
}

double mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).squaredNorm() / static_cast<double>(a.size()); }

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& x, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

Eigen::VectorXd rows_of(const Eigen::VectorXd& y, std::span<const std::size_t> rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(rows[i]));
  return out;
}

}  // namespace

MlpGradient mlp_loss_gradient(const MLPModel& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Eigen::MatrixXd h;
  const Eigen::VectorXd out = network_output(m, x, &h);
  const auto n = static_cast<double>(x.rows());
  const Eigen::VectorXd err = out - y;

  MlpGradient g;
  g.loss = err.squaredNorm() / n;
  const Eigen::VectorXd d_out = (2.0 / n) * err;
  g.output_weights = h.transpose() * d_out;
  g.output_bias = d_out.sum();
  // dL/dz for the hidden pre-activations; tanh' = 1 - tanh^2.
  const Eigen::MatrixXd d_z = ((d_out * m.output_weights.transpose()).array() * (1.0 - h.array().square())).matrix();
  g.input_weights = d_z.transpose() * x;
  g.hidden_bias = d_z.colwise().sum().transpose();
  return g;
}

std::vector<double> mlp_parameters(const MLPModel& m) {
  std::vector<double> p;
  for (Eigen::Index r = 0; r < m.input_weights.rows(); ++r)
    for (Eigen::Index c = 0; c < m.input_weights.cols(); ++c) p.push_back(m.input_weights(r, c));
  p.insert(p.end(), m.hidden_bias.data(), m.hidden_bias.data() + m.hidden_bias.size());
  p.insert(p.end(), m.output_weights.data(), m.output_weights.data() + m.output_weights.size());
  p.push_back(m.output_bias);
  return p;
}

void set_mlp_parameters(MLPModel& m, std::span<const double> p) {
  const auto h = m.input_weights.rows(), f = m.input_weights.cols();
  if (static_cast<Eigen::Index>(p.size()) != h * f + 2 * h + 1) throw Error("mlp: parameter count mismatch");
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < f; ++c) m.input_weights(r, c) = p[i++];
  for (Eigen::Index r = 0; r < h; ++r) m.hidden_bias(r) = p[i++];
  for (Eigen::Index r = 0; r < h; ++r) m.output_weights(r) = p[i++];
  m.output_bias = p[i];
}

std::vector<double> flatten_gradient(const MlpGradient& g) {
  std::vector<double> p;
  for (Eigen::Index r = 0; r < g.input_weights.rows(); ++r)
    for (Eigen::Index c = 0; c < g.input_weights.cols(); ++c) p.push_back(g.input_weights(r, c));
  p.insert(p.end(), g.hidden_bias.data(), g.hidden_bias.data() + g.hidden_bias.size());
  p.insert(p.end(), g.output_weights.data(), g.output_weights.data() + g.output_weights.size());
  p.push_back(g.output_bias);
  return p;
}

MlpTraining fit_mlp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const MlpConfig& cfg, std::uint64_t seed) {
  if (x.rows() == 0) throw Error("mlp: empty training set");
  if (x.rows() != y.size()) throw Error("mlp: row count mismatch");
  if (cfg.hidden < kMinHidden || cfg.hidden > kMaxHidden)
    throw Error("mlp: hidden size " + std::to_string(cfg.hidden) + " outside [" + std::to_string(kMinHidden) + ", " +
                std::to_string(kMaxHidden) + "]");
  if (!(cfg.learning_rate > 0.0)) throw Error("mlp: learning rate must be positive");
  if (cfg.epochs < 1) throw Error("mlp: epochs must be >= 1");
  if (!(cfg.validation_fraction >= 0.0 && cfg.validation_fraction < 1.0))
    throw Error("mlp: validation fraction must be in [0, 1)");

  const auto n = static_cast<std::size_t>(x.rows());
  const auto f = x.cols();
  const Eigen::Index h = cfg.hidden;
  Rng rng(seed);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t shard = static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(n)));
  if (n - shard < 2) shard = 0;
  if (shard > 0) std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> fit_rows(order.begin() + static_cast<std::ptrdiff_t>(shard), order.end());
  std::vector<std::size_t> shard_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(shard));
  std::sort(fit_rows.begin(), fit_rows.end());
  std::sort(shard_rows.begin(), shard_rows.end());

  const Eigen::MatrixXd x_fit = rows_of(x, fit_rows);
  const Eigen::MatrixXd x_shard = rows_of(x, shard_rows);
  Eigen::VectorXd y_fit = rows_of(y, fit_rows);
  Eigen::VectorXd y_shard = rows_of(y, shard_rows);

  MLPModel model;
  if (cfg.standardize_target) {
    model.target_shift = y_fit.mean();
    const double var = y_fit.size() > 1 ? (y_fit.array() - model.target_shift).square().sum() / static_cast<double>(y_fit.size() - 1) : 0.0;
    model.target_scale = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  y_fit = (y_fit.array() - model.target_shift) / model.target_scale;
  y_shard = (y_shard.array() - model.target_shift) / model.target_scale;

  std::uniform_real_distribution<double> in_init(-1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(f, 1))),
                                                 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(f, 1))));
  std::uniform_real_distribution<double> out_init(-1.0 / std::sqrt(static_cast<double>(h)), 1.0 / std::sqrt(static_cast<double>(h)));
  model.input_weights.resize(h, f);
  model.hidden_bias.resize(h);
  model.output_weights.resize(h);
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < f; ++c) model.input_weights(r, c) = in_init(rng);
  for (Eigen::Index r = 0; r < h; ++r) model.hidden_bias(r) = in_init(rng);
  for (Eigen::Index r = 0; r < h; ++r) model.output_weights(r) = out_init(rng);
  model.output_bias = out_init(rng);

  MlpTraining result;
  MLPModel best = model;
  double best_shard = std::numeric_limits<double>::infinity();
  int since_best = 0;
  const double lr = cfg.learning_rate;
  int epoch = 0;
  for (; epoch < cfg.epochs; ++epoch) {
    const MlpGradient g = mlp_loss_gradient(model, x_fit, y_fit);
    if (!std::isfinite(g.loss)) throw Error("mlp: non-finite training loss at epoch " + std::to_string(epoch + 1));
    result.loss_history.push_back(g.loss);
    model.input_weights -= lr * g.input_weights;
    model.hidden_bias -= lr * g.hidden_bias;
    model.output_weights -= lr * g.output_weights;
    model.output_bias -= lr * g.output_bias;

    if (shard > 0) {
      const double s = mse(network_output(model, x_shard), y_shard);
      if (!std::isfinite(s)) throw Error("mlp: non-finite validation loss at epoch " + std::to_string(epoch + 1));
      if (s < best_shard) {
        best_shard = s;
        best = model;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        ++epoch;
        break;
      }
    }
  }
  if (shard > 0) model = best;
  for (Eigen::Index r = 0; r < h; ++r)
    if (!std::isfinite(model.output_weights(r)) || !model.input_weights.row(r).allFinite())
      throw Error("mlp: non-finite weights after training");

  result.model = std::move(model);
  result.epochs_run = epoch;
  result.train_mse = mse(predict(result.model, x), y);
  return result;
}

MlpTraining fit_mlp(const FeatureMatrix& m, const MlpConfig& config, std::uint64_t seed) {
  return fit_mlp(m.values(), m.target(), config, seed);
}

Eigen::VectorXd predict(const MLPModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.input_weights.cols())
    throw Error("mlp predict: expected " + std::to_string(model.input_weights.cols()) + " features, got " +
                std::to_string(x.cols()));
  Eigen::VectorXd out(x.rows());
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) row[static_cast<std::size_t>(c)] = x(i, c);
    out(i) = predict_one(model, row);
  }
  return out;
}

double predict_one(const MLPModel& model, std::span<const double> x) {
  if (static_cast<Eigen::Index>(x.size()) != model.input_weights.cols())
    throw Error("mlp predict: feature dimension mismatch");
  double out = model.output_bias;
  for (Eigen::Index r = 0; r < model.input_weights.rows(); ++r) {
    double z = model.hidden_bias(r);
    for (std::size_t c = 0; c < x.size(); ++c) z += model.input_weights(r, static_cast<Eigen::Index>(c)) * x[c];
    out += model.output_weights(r) * std::tanh(z);
  }
  return model.target_shift + model.target_scale * out;
}

}  // namespace teayield
