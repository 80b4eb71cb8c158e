#include "teayield/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "teayield/error.hpp"
#include "teayield/text.hpp"

namespace teayield {

ScalerState fit_scaler(const FeatureMatrix& m, std::span<const std::string> columns) {
  if (m.rows() < 2) throw Error("scaler: need at least two samples");
  ScalerState s;
  if (columns.empty()) {
    s.columns = m.column_names();
  } else {
    s.columns.assign(columns.begin(), columns.end());
  }
  const auto n = static_cast<double>(m.rows());
  for (const auto& name : s.columns) {
    const Eigen::VectorXd x = m.column(name);
    const double mean = x.sum() / n;
    const double ss = (x.array() - mean).square().sum();
    const double sd = std::sqrt(ss / (n - 1.0));
    if (!(sd > 0.0)) throw Error("scaler: column '" + name + "' is constant");
    s.mean.push_back(mean);
    s.stddev.push_back(sd);
  }
  return s;
}

FeatureMatrix apply_scaler(const ScalerState& s, const FeatureMatrix& m) {
  Eigen::MatrixXd v = m.values();
  for (std::size_t j = 0; j < s.columns.size(); ++j) {
    const auto c = static_cast<Eigen::Index>(m.column_index(s.columns[j]));
    v.col(c) = (v.col(c).array() - s.mean[j]) / s.stddev[j];
  }
  return m.with_values(v);
}

FeatureMatrix invert_scaler(const ScalerState& s, const FeatureMatrix& m) {
  Eigen::MatrixXd v = m.values();
  for (std::size_t j = 0; j < s.columns.size(); ++j) {
    const auto c = static_cast<Eigen::Index>(m.column_index(s.columns[j]));
    v.col(c) = v.col(c).array() * s.stddev[j] + s.mean[j];
  }
  return m.with_values(v);
}

FeatureMatrix log_transform(const FeatureMatrix& m, std::span<const std::string> columns) {
  Eigen::MatrixXd v = m.values();
  Eigen::VectorXd t = m.target();
  const auto log_in_place = [](auto&& col, const std::string& name) {
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      if (!(col(i) > 0.0))
        throw Error("log transform: column '" + name + "', row " + std::to_string(i + 1) + ": value " +
                    text::format_double(col(i)) + " is not strictly positive");
      col(i) = std::log(col(i));
    }
  };
  for (const auto& name : columns) {
    if (name == m.target_name()) {
      log_in_place(t, name);
    } else {
      auto col = v.col(static_cast<Eigen::Index>(m.column_index(name)));
      log_in_place(col, name);
    }
  }
  return FeatureMatrix(m.column_names(), std::move(v), std::move(t), m.target_name());
}

// ---------------------------------------------------------------------------

OutlierRule parse_outlier_rule(std::string_view name) {
  if (name == "fixed") return OutlierRule::Fixed;
  if (name == "four_over_n") return OutlierRule::FourOverN;
  throw Error("unknown outlier rule '" + std::string(name) + "' (expected fixed or four_over_n)");
}

double outlier_threshold(OutlierRule rule, double fixed_threshold, std::size_t n) {
  return rule == OutlierRule::Fixed ? fixed_threshold : 4.0 / static_cast<double>(n);
}

OutlierReport cooks_distance(const FeatureMatrix& m, double threshold, AliasPolicy aliases) {
  const auto n = static_cast<Eigen::Index>(m.rows());
  std::vector<std::size_t> cols;
  if (aliases == AliasPolicy::Drop) {
    cols = independent_columns(m.values());
  } else {
    for (std::size_t j = 0; j < m.cols(); ++j) cols.push_back(j);
  }
  const auto p = static_cast<Eigen::Index>(cols.size()) + 1;
  if (n <= p)
    throw Error("cook's distance: need more samples (" + std::to_string(n) + ") than fitted coefficients (" +
                std::to_string(p) + ")");

  Eigen::MatrixXd design(n, p);
  design.col(0).setOnes();
  for (Eigen::Index j = 1; j < p; ++j) design.col(j) = m.values().col(static_cast<Eigen::Index>(cols[static_cast<std::size_t>(j - 1)]));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> rank_check(design);
  rank_check.setThreshold(1e-10);
  if (rank_check.rank() < p)
    throw Error("cook's distance: design matrix with intercept is rank deficient (rank " +
                std::to_string(rank_check.rank()) + " of " + std::to_string(p) + ")");

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(design);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
  const Eigen::VectorXd& y = m.target();
  const Eigen::VectorXd fitted = q * (q.transpose() * y);
  const Eigen::VectorXd resid = y - fitted;
  const double sse = resid.squaredNorm();
  const double s2 = sse / static_cast<double>(n - p);

  OutlierReport report;
  report.threshold = threshold;
  report.parameters = static_cast<std::size_t>(p);
  report.leverage = q.rowwise().squaredNorm();
  report.cooks_distance = Eigen::VectorXd::Zero(n);
  // Residuals at rounding level: a perfect fit has no influential points.
  const bool perfect_fit = sse <= 1e-24 * std::max(y.squaredNorm(), std::numeric_limits<double>::min());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = report.leverage(i);
    if (h >= 1.0 - 1e-10)
      throw Error("cook's distance: sample " + std::to_string(i) + " has leverage " + text::format_double(h) +
                  " (numerically 1); its influence is undefined");
    if (perfect_fit) continue;
    const double e = resid(i);
    report.cooks_distance(i) = (e * e / (static_cast<double>(p) * s2)) * (h / ((1.0 - h) * (1.0 - h)));
    if (report.cooks_distance(i) > threshold) report.flagged.push_back(static_cast<std::size_t>(i));
  }
  return report;
}

std::vector<std::size_t> surviving_rows(std::size_t n, std::span<const std::size_t> flagged) {
  std::vector<std::size_t> keep;
  std::vector<bool> drop(n, false);
  for (std::size_t idx : flagged) {
    if (idx >= n) throw Error("outlier index " + std::to_string(idx) + " out of range for " + std::to_string(n) + " rows");
    drop[idx] = true;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!drop[i]) keep.push_back(i);
  return keep;
}

FeatureMatrix remove_outliers(const FeatureMatrix& m, const OutlierReport& report) {
  const auto keep = surviving_rows(m.rows(), report.flagged);
  if (keep.empty()) throw Error("outlier removal would drop every sample");
  return m.select_rows(keep);
}

void write_outlier_csv(std::ostream& out, const OutlierReport& report) {
  std::vector<bool> flagged(static_cast<std::size_t>(report.cooks_distance.size()), false);
  for (std::size_t i : report.flagged) flagged[i] = true;
  out << "index,cooks_distance,flagged\n";
  for (Eigen::Index i = 0; i < report.cooks_distance.size(); ++i)
    out << i << ',' << text::format_double(report.cooks_distance(i)) << ',' << (flagged[static_cast<std::size_t>(i)] ? 1 : 0)
        << '\n';
}

// ---------------------------------------------------------------------------

FeatureMatrix Preprocessor::base_matrix(std::span<const SampleRecord> records) const {
  FeatureMatrix m = to_feature_matrix(records, schema);
  return derive_avg_temp ? teayield::derive_avg_temp(m) : m;
}

FeatureMatrix Preprocessor::transform(std::span<const SampleRecord> records, bool transform_target) const {
  return transform(base_matrix(records), transform_target);
}

FeatureMatrix Preprocessor::transform(const FeatureMatrix& base, bool transform_target) const {
  FeatureMatrix m = base;
  for (const auto& step : steps) {
    if (const auto* s = std::get_if<SelectStep>(&step)) {
      m = m.select_columns(std::span<const std::string>(s->columns));
    } else if (const auto* s = std::get_if<ScaleStep>(&step)) {
      m = apply_scaler(s->scaler, m);
    } else if (const auto* s = std::get_if<LogStep>(&step)) {
      std::vector<std::string> cols;
      for (const auto& c : s->columns)
        if (transform_target || c != m.target_name()) cols.push_back(c);
      m = log_transform(m, cols);
    }
  }
  return m;
}

bool Preprocessor::target_logged() const {
  for (const auto& step : steps)
    if (const auto* s = std::get_if<LogStep>(&step))
      if (std::find(s->columns.begin(), s->columns.end(), kTargetName) != s->columns.end()) return true;
  return false;
}

Eigen::VectorXd Preprocessor::untransform_target(const Eigen::VectorXd& values) const {
  return target_logged() ? Eigen::VectorXd(values.array().exp()) : values;
}

}  // namespace teayield
