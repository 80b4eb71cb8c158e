#pragma once

// Independent reference computations. Deliberately naive: they follow the
// textbook definitions directly and share no code with the library.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "teayield/regressors.hpp"

namespace oracles {

inline Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd d(x.rows(), x.cols() + 1);
  d.col(0).setOnes();
  d.rightCols(x.cols()) = x;
  return d;
}

inline Eigen::VectorXd ols_coefficients(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
  return design.colPivHouseholderQr().solve(y);
}

/// D_i = sum_j (yhat_j - yhat_j(i))^2 / (p s^2), refitting without sample i.
inline Eigen::VectorXd cooks_by_refit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd d = with_intercept(x);
  const Eigen::Index n = d.rows(), p = d.cols();
  const Eigen::VectorXd fitted = d * ols_coefficients(d, y);
  const double s2 = (y - fitted).squaredNorm() / static_cast<double>(n - p);
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::MatrixXd di(n - 1, p);
    Eigen::VectorXd yi(n - 1);
    for (Eigen::Index r = 0, k = 0; r < n; ++r) {
      if (r == i) continue;
      di.row(k) = d.row(r);
      yi(k++) = y(r);
    }
    const Eigen::VectorXd refit = d * ols_coefficients(di, yi);
    out(i) = (fitted - refit).squaredNorm() / (static_cast<double>(p) * s2);
  }
  return out;
}

/// RReliefF with every other sample as a neighbor, equal neighbor weights,
/// every sample used once as an instance.
inline std::vector<double> relief_all_pairs(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::Index n = x.rows(), f = x.cols();
  const auto norm = [](const Eigen::VectorXd& v) {
    return Eigen::VectorXd((v.array() - v.minCoeff()) / (v.maxCoeff() - v.minCoeff()));
  };
  Eigen::MatrixXd xn(n, f);
  for (Eigen::Index c = 0; c < f; ++c) xn.col(c) = norm(x.col(c));
  const Eigen::VectorXd yn = norm(y);
  const double w = 1.0 / static_cast<double>(n - 1);
  double n_dc = 0.0;
  std::vector<double> n_da(static_cast<std::size_t>(f), 0.0), n_dcda(static_cast<std::size_t>(f), 0.0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double dy = std::abs(yn(i) - yn(j));
      n_dc += dy * w;
      for (Eigen::Index c = 0; c < f; ++c) {
        const double da = std::abs(xn(i, c) - xn(j, c));
        n_da[static_cast<std::size_t>(c)] += da * w;
        n_dcda[static_cast<std::size_t>(c)] += dy * da * w;
      }
    }
  const double m = static_cast<double>(n);
  std::vector<double> out;
  for (std::size_t c = 0; c < static_cast<std::size_t>(f); ++c)
    out.push_back(n_dcda[c] / n_dc - (n_da[c] - n_dcda[c]) / (m - n_dc));
  return out;
}

struct DenseGp {
  double mean = 0.0;
  double variance = 0.0;
};

/// Posterior with an explicitly inverted (K + noise I).
inline DenseGp gp_by_inverse(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const teayield::GprHyper& h,
                             const Eigen::RowVectorXd& q) {
  const Eigen::Index n = x.rows();
  const auto k = [&](const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
    return h.signal_variance * std::exp(-(a - b).squaredNorm() / (2.0 * h.length_scale * h.length_scale));
  };
  Eigen::MatrixXd kk(n, n);
  Eigen::VectorXd ks(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ks(i) = k(x.row(i), q);
    for (Eigen::Index j = 0; j < n; ++j) kk(i, j) = k(x.row(i), x.row(j));
  }
  kk.diagonal().array() += h.noise_variance;
  const Eigen::MatrixXd inv = kk.fullPivLu().inverse();
  return {ks.dot(inv * y), h.signal_variance - ks.dot(inv * ks) + h.noise_variance};
}

/// Central differences of the MSE loss over the flat parameter vector.
inline std::vector<double> numeric_gradient(const teayield::MLPModel& model, const Eigen::MatrixXd& x,
                                            const Eigen::VectorXd& y, double step) {
  teayield::MLPModel probe = model;
  std::vector<double> p = teayield::mlp_parameters(model);
  std::vector<double> g(p.size());
  const auto loss = [&](const std::vector<double>& params) {
    teayield::set_mlp_parameters(probe, params);
    Eigen::VectorXd out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double s = probe.output_bias;
      for (Eigen::Index h = 0; h < probe.input_weights.rows(); ++h)
        s += probe.output_weights(h) * std::tanh(probe.input_weights.row(h).dot(x.row(i)) + probe.hidden_bias(h));
      out(i) = s;
    }
    return (out - y).squaredNorm() / static_cast<double>(x.rows());
  };
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + step;
    const double up = loss(p);
    p[i] = keep - step;
    const double down = loss(p);
    p[i] = keep;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

inline double skewness(const Eigen::VectorXd& v) {
  const double n = static_cast<double>(v.size());
  const double mu = v.mean();
  const double m2 = (v.array() - mu).square().sum() / n;
  const double m3 = (v.array() - mu).cube().sum() / n;
  return m3 / std::pow(m2, 1.5);
}

/// |a - b| / max(|a|, |b|), with 0 when both are zero.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

}  // namespace oracles
