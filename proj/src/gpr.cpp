#include <cmath>
#include <iostream>
#include <sstream>

#include "teayield/error.hpp"
#include "teayield/regressors.hpp"

namespace teayield {

double sq_exp_kernel(const GprHyper& hyper, std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return hyper.signal_variance * std::exp(-s / (2.0 * hyper.length_scale * hyper.length_scale));
}

GPRModel fit_gpr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GprHyper& hyper, std::size_t max_samples,
                 Execution exec) {
  if (!(hyper.signal_variance > 0.0) || !(hyper.length_scale > 0.0) || !(hyper.noise_variance >= 0.0))
    throw Error("gpr: need signal_variance > 0, length_scale > 0, noise_variance >= 0");
  if (x.rows() != y.size()) throw Error("gpr: row count mismatch");
  if (x.rows() < 1) throw Error("gpr: no training samples");
  if (static_cast<std::size_t>(x.rows()) > max_samples)
    throw Error("gpr: " + std::to_string(x.rows()) + " samples exceeds the exact-inference cap of " +
                std::to_string(max_samples));

  const Eigen::Index n = x.rows();
  const Eigen::MatrixXd k = kernels::sq_exp_kernel(x, x, hyper.signal_variance, hyper.length_scale, exec);
  const double base_jitter = k.trace() / static_cast<double>(n);

  GPRModel model{hyper, x, y, {}, {}, 0.0};
  double jitter = 0.0;
  double scale = 1e-10;
  while (true) {
    Eigen::MatrixXd a = k;
    a.diagonal().array() += hyper.noise_variance + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
      model.chol_lower = llt.matrixL();
      model.alpha = llt.solve(y);
      model.jitter = jitter;
      return model;
    }
    if (scale > 1e-4 * 1.0000001) {
      std::ostringstream msg;
      msg << "gpr: Cholesky factorization failed even with jitter " << jitter << " (noise variance "
          << hyper.noise_variance << ", length scale " << hyper.length_scale << ", mean kernel diagonal " << base_jitter
          << "); the kernel matrix is too ill-conditioned";
      throw Error(msg.str());
    }
    jitter = scale * base_jitter;
    scale *= 10.0;
  }
}

GPRModel fit_gpr(const FeatureMatrix& m, const GprHyper& hyper, std::size_t max_samples, Execution exec) {
  return fit_gpr(m.values(), m.target(), hyper, max_samples, exec);
}

namespace {

Eigen::VectorXd cross_kernel(const GPRModel& model, std::span<const double> x) {
  const Eigen::Index n = model.train_x.rows();
  if (static_cast<Eigen::Index>(x.size()) != model.train_x.cols())
    throw Error("gpr predict: expected " + std::to_string(model.train_x.cols()) + " features, got " +
                std::to_string(x.size()));
  Eigen::VectorXd ks(n);
  std::vector<double> row(x.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < x.size(); ++c) row[c] = model.train_x(i, static_cast<Eigen::Index>(c));
    ks(i) = sq_exp_kernel(model.hyper, row, x);
  }
  return ks;
}

}  // namespace

GprPrediction predict_gpr(const GPRModel& model, std::span<const double> x) {
  const Eigen::VectorXd ks = cross_kernel(model, x);
  GprPrediction out;
  out.mean = ks.dot(model.alpha);
  const Eigen::VectorXd v = model.chol_lower.triangularView<Eigen::Lower>().solve(ks);
  double latent = model.hyper.signal_variance - v.squaredNorm();
  if (latent < 0.0) {
    if (latent < -1e-8) std::clog << "warning: gpr posterior variance " << latent << " clamped to 0\n";
    latent = 0.0;
  }
  out.variance = latent + model.hyper.noise_variance;
  return out;
}

Eigen::VectorXd predict(const GPRModel& model, const Eigen::MatrixXd& x) {
  Eigen::VectorXd out(x.rows());
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) row[static_cast<std::size_t>(c)] = x(i, c);
    out(i) = cross_kernel(model, row).dot(model.alpha);
  }
  return out;
}

}  // namespace teayield
