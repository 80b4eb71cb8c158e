#include <cmath>

#include "teayield/error.hpp"
#include "teayield/regressors.hpp"

namespace teayield {

std::vector<std::size_t> independent_columns(const Eigen::MatrixXd& x, double tolerance) {
  const Eigen::Index n = x.rows();
  std::vector<std::size_t> kept;
  Eigen::MatrixXd basis(n, 0);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    Eigen::VectorXd v = x.col(j).array() - mean(j);
    const double scale = x.col(j).norm();
    const double norm = v.norm();
    // A constant column is aliased with the intercept.
    if (norm <= tolerance * scale || norm == 0.0) continue;
    v /= norm;
    for (int pass = 0; pass < 2; ++pass) v -= basis * (basis.transpose() * v);
    const double residual = v.norm();
    if (residual <= tolerance) continue;
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.col(basis.cols() - 1) = v / residual;
    kept.push_back(static_cast<std::size_t>(j));
  }
  return kept;
}

LinearModel fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double ridge_lambda, AliasPolicy aliases) {
  if (!(ridge_lambda >= 0.0) || !std::isfinite(ridge_lambda)) throw Error("ridge lambda must be finite and >= 0");
  if (x.rows() != y.size()) throw Error("linear fit: row count mismatch");
  const Eigen::Index n = x.rows();
  const Eigen::Index f = x.cols();
  if (n < 2) throw Error("linear fit: need at least two samples");

  std::vector<std::size_t> cols;
  if (aliases == AliasPolicy::Drop) {
    cols = independent_columns(x);
  } else {
    for (Eigen::Index j = 0; j < f; ++j) cols.push_back(static_cast<std::size_t>(j));
  }
  const auto p = static_cast<Eigen::Index>(cols.size());
  if (ridge_lambda == 0.0 && n <= p)
    throw Error("linear fit: " + std::to_string(n) + " samples cannot determine " + std::to_string(p) +
                " coefficients plus intercept");

  Eigen::MatrixXd xs(n, p);
  for (Eigen::Index j = 0; j < p; ++j) xs.col(j) = x.col(static_cast<Eigen::Index>(cols[static_cast<std::size_t>(j)]));
  const Eigen::RowVectorXd x_mean = xs.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = xs.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  Eigen::VectorXd beta(p);
  if (p == 0) {
    beta.resize(0);
  } else if (ridge_lambda == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xc);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) {
      if (aliases == AliasPolicy::Error)
        throw Error("linear fit: design matrix is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                    std::to_string(p) + " centered columns)");
    }
    beta = qr.solve(yc);
  } else {
    Eigen::MatrixXd aug(n + p, p);
    aug << xc, std::sqrt(ridge_lambda) * Eigen::MatrixXd::Identity(p, p);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + p);
    rhs.head(n) = yc;
    beta = Eigen::HouseholderQR<Eigen::MatrixXd>(aug).solve(rhs);
  }

  LinearModel model;
  model.ridge_lambda = ridge_lambda;
  model.coefficients = Eigen::VectorXd::Zero(f);
  for (Eigen::Index j = 0; j < p; ++j) model.coefficients(static_cast<Eigen::Index>(cols[static_cast<std::size_t>(j)])) = beta(j);
  model.intercept = y_mean - (p > 0 ? x_mean.dot(beta) : 0.0);
  return model;
}

LinearModel fit_ols(const FeatureMatrix& m, double ridge_lambda, AliasPolicy aliases) {
  return fit_linear(m.values(), m.target(), ridge_lambda, aliases);
}

Eigen::VectorXd predict(const LinearModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.coefficients.size())
    throw Error("linear predict: expected " + std::to_string(model.coefficients.size()) + " features, got " +
                std::to_string(x.cols()));
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double s = model.intercept;
    for (Eigen::Index j = 0; j < x.cols(); ++j) s += x(i, j) * model.coefficients(j);
    out(i) = s;
  }
  return out;
}

double predict_one(const LinearModel& model, std::span<const double> x) {
  if (static_cast<Eigen::Index>(x.size()) != model.coefficients.size())
    throw Error("linear predict: feature dimension mismatch");
  double s = model.intercept;
  for (std::size_t j = 0; j < x.size(); ++j) s += x[j] * model.coefficients(static_cast<Eigen::Index>(j));
  return s;
}

}  // namespace teayield
