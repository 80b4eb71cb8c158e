#include "teayield/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "teayield/error.hpp"
#include "teayield/text.hpp"

namespace teayield {

MonthEncoding parse_month_encoding(std::string_view name) {
  if (name == "cyclic") return MonthEncoding::Cyclic;
  if (name == "integer") return MonthEncoding::Integer;
  if (name == "onehot") return MonthEncoding::OneHot;
  throw Error("unknown month encoding '" + std::string(name) + "' (expected cyclic, integer or onehot)");
}

std::string_view to_string(MonthEncoding encoding) {
  switch (encoding) {
    case MonthEncoding::Cyclic: return "cyclic";
    case MonthEncoding::Integer: return "integer";
    case MonthEncoding::OneHot: return "onehot";
  }
  return "cyclic";
}

void validate_record(const SampleRecord& r, std::size_t line) {
  const auto fail = [line](const std::string& what) {
    throw Error("line " + std::to_string(line) + ": " + what);
  };
  if (r.month < 1 || r.month > 12) fail("month must be in 1..12");
  if (r.min_temp > r.max_temp) fail("min_temp exceeds max_temp");
  if (r.humidity < 0.0 || r.humidity > 100.0) fail("humidity must be in [0, 100]");
  if (r.rainfall < 0.0) fail("rainfall must be non-negative");
  if (r.soil_ph < 0.0 || r.soil_ph > 14.0) fail("soil_ph must be in [0, 14]");
  if (r.yield && *r.yield < 0.0) fail("yield must be non-negative");
}

std::vector<std::string> Schema::columns() const {
  std::vector<std::string> out(kCanonicalColumns.begin(), kCanonicalColumns.end());
  out.insert(out.end(), extra_columns.begin(), extra_columns.end());
  return out;
}

// ---------------------------------------------------------------------------

FeatureMatrix::FeatureMatrix(std::vector<std::string> names, Eigen::MatrixXd values,
                             Eigen::VectorXd target, std::string target_name)
    : names_(std::move(names)),
      values_(std::move(values)),
      target_(std::move(target)),
      target_name_(std::move(target_name)) {
  if (values_.rows() < 1) throw Error("feature matrix needs at least one sample");
  if (static_cast<std::size_t>(values_.cols()) != names_.size())
    throw Error("feature matrix has " + std::to_string(values_.cols()) + " columns but " +
                std::to_string(names_.size()) + " names");
  if (target_.size() != values_.rows())
    throw Error("target length " + std::to_string(target_.size()) + " differs from sample count " +
                std::to_string(values_.rows()));
  std::set<std::string_view> seen;
  for (const auto& name : names_)
    if (!seen.insert(name).second) throw Error("duplicate column name '" + name + "'");
  for (Eigen::Index j = 0; j < values_.cols(); ++j)
    for (Eigen::Index i = 0; i < values_.rows(); ++i)
      if (!std::isfinite(values_(i, j)))
        throw Error("non-finite value in column '" + names_[j] + "', row " + std::to_string(i + 1));
  for (Eigen::Index i = 0; i < target_.size(); ++i)
    if (!std::isfinite(target_(i)))
      throw Error("non-finite target value in row " + std::to_string(i + 1));
}

std::optional<std::size_t> FeatureMatrix::find_column(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

std::size_t FeatureMatrix::column_index(std::string_view name) const {
  if (auto idx = find_column(name)) return *idx;
  throw Error("missing column '" + std::string(name) + "'");
}

Eigen::VectorXd FeatureMatrix::column(std::string_view name) const {
  return values_.col(static_cast<Eigen::Index>(column_index(name)));
}

FeatureMatrix FeatureMatrix::with_column(std::string name, const Eigen::VectorXd& values) const {
  Eigen::MatrixXd v(values_.rows(), values_.cols() + 1);
  v << values_, values;
  auto names = names_;
  names.push_back(std::move(name));
  return FeatureMatrix(std::move(names), std::move(v), target_, target_name_);
}

FeatureMatrix FeatureMatrix::with_values(const Eigen::MatrixXd& values) const {
  return FeatureMatrix(names_, values, target_, target_name_);
}

FeatureMatrix FeatureMatrix::with_target(const Eigen::VectorXd& target) const {
  return FeatureMatrix(names_, values_, target, target_name_);
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::string> names) const {
  std::vector<std::size_t> idx;
  idx.reserve(names.size());
  for (const auto& n : names) idx.push_back(column_index(n));
  return select_columns(std::span<const std::size_t>(idx));
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::size_t> indices) const {
  Eigen::MatrixXd v(values_.rows(), static_cast<Eigen::Index>(indices.size()));
  std::vector<std::string> names;
  for (std::size_t j = 0; j < indices.size(); ++j) {
    if (indices[j] >= cols()) throw Error("column index out of range");
    v.col(static_cast<Eigen::Index>(j)) = values_.col(static_cast<Eigen::Index>(indices[j]));
    names.push_back(names_[indices[j]]);
  }
  return FeatureMatrix(std::move(names), std::move(v), target_, target_name_);
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  Eigen::MatrixXd v(static_cast<Eigen::Index>(rows.size()), values_.cols());
  Eigen::VectorXd t(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= this->rows()) throw Error("row index " + std::to_string(rows[i]) + " out of range");
    v.row(static_cast<Eigen::Index>(i)) = values_.row(static_cast<Eigen::Index>(rows[i]));
    t(static_cast<Eigen::Index>(i)) = target_(static_cast<Eigen::Index>(rows[i]));
  }
  return FeatureMatrix(names_, std::move(v), std::move(t), target_name_);
}

bool FeatureMatrix::operator==(const FeatureMatrix& other) const {
  return names_ == other.names_ && target_name_ == other.target_name_ &&
         values_.rows() == other.values_.rows() && values_.cols() == other.values_.cols() &&
         values_ == other.values_ && target_ == other.target_;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

bool parse_bool(std::string_view s, bool& out) {
  std::string v(text::trim(s));
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "1" || v == "true" || v == "yes") return out = true, true;
  if (v == "0" || v == "false" || v == "no") return out = false, true;
  return false;
}

[[noreturn]] void cell_error(std::size_t line, std::string_view column, std::string_view what) {
  throw Error("line " + std::to_string(line) + ", column '" + std::string(column) + "': " + std::string(what));
}

}  // namespace

std::vector<SampleRecord> read_records(std::istream& in, const Schema& schema, TargetPolicy target) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!text::trim(line).empty()) break;
  }
  if (text::trim(line).empty()) throw Error("empty file: no header row");
  for (auto cell : text::split(line, ',')) header.emplace_back(text::trim(cell));

  const auto expected = schema.columns();
  std::map<std::string, std::size_t, std::less<>> pos;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (!pos.emplace(header[i], i).second) throw Error("duplicate column '" + header[i] + "' in header");
  for (const auto& col : expected) {
    if (pos.contains(col)) continue;
    if (col == kTargetName && target == TargetPolicy::Optional) continue;
    throw Error("missing column '" + col + "' in header");
  }
  for (const auto& h : header)
    if (std::find(expected.begin(), expected.end(), h) == expected.end())
      throw Error("unexpected column '" + h + "' in header");
  const bool has_yield = pos.contains(kTargetName);

  std::vector<SampleRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto cells = text::split(line, ',');
    if (cells.size() != header.size())
      throw Error("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                  " cells, found " + std::to_string(cells.size()));
    const auto cell = [&](std::string_view name) { return cells[pos.find(name)->second]; };
    const auto number = [&](std::string_view name) {
      auto v = text::parse_double(cell(name));
      if (!v) cell_error(line_no, name, "missing or unparseable number");
      if (!std::isfinite(*v)) cell_error(line_no, name, "non-finite value");
      return *v;
    };
    const auto integer = [&](std::string_view name) {
      auto v = text::parse_int(cell(name));
      if (!v) cell_error(line_no, name, "missing or unparseable integer");
      return static_cast<int>(*v);
    };

    SampleRecord r;
    r.year = integer("year");
    r.month = integer("month");
    r.min_temp = number("min_temp");
    r.max_temp = number("max_temp");
    r.humidity = number("humidity");
    r.rainfall = number("rainfall");
    r.soil_ph = number("soil_ph");
    r.labor_cost = number("labor_cost");
    r.labor_training = std::string(text::trim(cell("labor_training")));
    if (!parse_bool(cell("pesticide_used"), r.pesticide_used))
      cell_error(line_no, "pesticide_used", "expected a boolean (0/1/true/false/yes/no)");
    if (has_yield) {
      if (target == TargetPolicy::Required || !text::trim(cell(kTargetName)).empty())
        r.yield = number(kTargetName);
    }
    for (const auto& extra : schema.extra_columns) r.extras.push_back(number(extra));
    validate_record(r, line_no);
    records.push_back(std::move(r));
  }
  if (records.empty()) throw Error("file contains a header but no data rows");
  return records;
}

std::vector<std::string> extra_columns_in_header(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!text::trim(line).empty()) break;
  }
  std::vector<std::string> extras;
  for (auto cell : text::split(line, ',')) {
    const std::string name(text::trim(cell));
    if (name.empty()) continue;
    if (std::find(kCanonicalColumns.begin(), kCanonicalColumns.end(), name) == kCanonicalColumns.end())
      extras.push_back(name);
  }
  return extras;
}

std::vector<SampleRecord> read_records(const std::string& path, const Schema& schema, TargetPolicy target) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_records(in, schema, target);
}

void write_records(std::ostream& out, std::span<const SampleRecord> records, const Schema& schema) {
  out << text::join(schema.columns(), ",") << '\n';
  for (const auto& r : records) {
    out << r.year << ',' << r.month << ',' << text::format_double(r.min_temp) << ','
        << text::format_double(r.max_temp) << ',' << text::format_double(r.humidity) << ','
        << text::format_double(r.rainfall) << ',' << text::format_double(r.soil_ph) << ','
        << text::format_double(r.labor_cost) << ',' << r.labor_training << ','
        << (r.pesticide_used ? 1 : 0) << ',' << (r.yield ? text::format_double(*r.yield) : "");
    for (double e : r.extras) out << ',' << text::format_double(e);
    out << '\n';
  }
}

FeatureMatrix to_feature_matrix(std::span<const SampleRecord> records, const Schema& schema) {
  if (records.empty()) throw Error("no records");
  std::vector<std::string> names;
  switch (schema.month_encoding) {
    case MonthEncoding::Cyclic: names = {"month_sin", "month_cos"}; break;
    case MonthEncoding::Integer: names = {"month"}; break;
    case MonthEncoding::OneHot:
      // January is the reference level so the dummies stay independent of the intercept.
      for (int m = 2; m <= 12; ++m) names.push_back("month_" + std::to_string(m));
      break;
  }
  const std::size_t month_cols = names.size();
  for (auto c : {"min_temp", "max_temp", "humidity", "rainfall", "soil_ph"}) names.emplace_back(c);
  names.insert(names.end(), schema.extra_columns.begin(), schema.extra_columns.end());

  const auto n = static_cast<Eigen::Index>(records.size());
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(names.size()));
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    if (r.extras.size() != schema.extra_columns.size())
      throw Error("record " + std::to_string(i + 1) + " has " + std::to_string(r.extras.size()) +
                  " extra values, schema expects " + std::to_string(schema.extra_columns.size()));
    switch (schema.month_encoding) {
      case MonthEncoding::Cyclic: {
        const double angle = 2.0 * std::numbers::pi * r.month / 12.0;
        v(i, 0) = std::sin(angle);
        v(i, 1) = std::cos(angle);
        break;
      }
      case MonthEncoding::Integer: v(i, 0) = r.month; break;
      case MonthEncoding::OneHot:
        if (r.month >= 2) v(i, r.month - 2) = 1.0;
        break;
    }
    Eigen::Index c = static_cast<Eigen::Index>(month_cols);
    v(i, c++) = r.min_temp;
    v(i, c++) = r.max_temp;
    v(i, c++) = r.humidity;
    v(i, c++) = r.rainfall;
    v(i, c++) = r.soil_ph;
    for (double e : r.extras) v(i, c++) = e;
    y(i) = r.yield.value_or(0.0);
  }
  return FeatureMatrix(std::move(names), std::move(v), std::move(y));
}

FeatureMatrix load_csv(const std::string& path, const Schema& schema) {
  return to_feature_matrix(read_records(path, schema), schema);
}

FeatureMatrix derive_avg_temp(const FeatureMatrix& m) {
  const Eigen::VectorXd lo = m.column("min_temp");
  const Eigen::VectorXd hi = m.column("max_temp");
  return m.with_column("avg_temp", (lo + hi) / 2.0);
}

// ---------------------------------------------------------------------------
// Correlation

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("pearson: vectors differ in length");
  if (x.size() < 2) throw Error("pearson: need at least two observations");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error("pearson: correlation undefined for a constant vector");
  // The (n - 1) factors of the sample covariance and deviations cancel.
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  return pearson(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                 std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
}

CorrelationReport correlation_report(const FeatureMatrix& m) {
  const auto f = static_cast<Eigen::Index>(m.cols());
  CorrelationReport report{m.column_names(), Eigen::MatrixXd::Identity(f, f), Eigen::VectorXd(f)};
  const auto column_error = [&](Eigen::Index j, const Error& e) {
    return Error("column '" + m.column_names()[static_cast<std::size_t>(j)] + "': " + e.what());
  };
  for (Eigen::Index a = 0; a < f; ++a) {
    const Eigen::VectorXd xa = m.values().col(a);
    try {
      report.target_correlations(a) = pearson(xa, m.target());
    } catch (const Error& e) {
      throw column_error(a, e);
    }
    for (Eigen::Index b = a + 1; b < f; ++b) {
      double r = 0.0;
      try {
        r = pearson(xa, Eigen::VectorXd(m.values().col(b)));
      } catch (const Error& e) {
        throw column_error(b, e);
      }
      report.matrix(a, b) = r;
      report.matrix(b, a) = r;
    }
  }
  return report;
}

void write_correlation_csv(std::ostream& out, const CorrelationReport& report, std::string_view target_name) {
  out << "feature";
  for (const auto& n : report.names) out << ',' << n;
  out << ',' << target_name << '\n';
  const auto f = static_cast<Eigen::Index>(report.names.size());
  for (Eigen::Index a = 0; a < f; ++a) {
    out << report.names[static_cast<std::size_t>(a)];
    for (Eigen::Index b = 0; b < f; ++b) out << ',' << text::format_double(report.matrix(a, b));
    out << ',' << text::format_double(report.target_correlations(a)) << '\n';
  }
  out << target_name;
  for (Eigen::Index a = 0; a < f; ++a) out << ',' << text::format_double(report.target_correlations(a));
  out << ",1\n";
}

}  // namespace teayield
