#include "teayield/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <omp.h>

namespace teayield::kernels {

int max_threads() { return omp_get_max_threads(); }

void ReliefTally::add(const ReliefTally& other) {
  n_dc += other.n_dc;
  for (std::size_t f = 0; f < n_da.size(); ++f) {
    n_da[f] += other.n_da[f];
    n_dc_da[f] += other.n_dc_da[f];
  }
}

ReliefTally relief_instance(const ReliefProblem& p, std::size_t instance) {
  const auto& x = p.features;
  const Eigen::Index n = x.rows();
  const Eigen::Index f = x.cols();
  const auto row = static_cast<Eigen::Index>(instance);

  std::vector<std::pair<double, Eigen::Index>> dist;
  dist.reserve(static_cast<std::size_t>(n - 1));
  for (Eigen::Index r = 0; r < n; ++r) {
    if (r == row) continue;
    double d = 0.0;
    for (Eigen::Index c = 0; c < f; ++c) d += std::abs(x(row, c) - x(r, c));
    dist.emplace_back(d, r);
  }
  const auto k = static_cast<std::ptrdiff_t>(p.k);
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());

  ReliefTally tally(static_cast<std::size_t>(f));
  for (std::ptrdiff_t j = 0; j < k; ++j) {
    const Eigen::Index r = dist[static_cast<std::size_t>(j)].second;
    const double w = p.rank_weights[static_cast<std::size_t>(j)];
    const double d_target = std::abs(p.target(row) - p.target(r));
    tally.n_dc += d_target * w;
    for (Eigen::Index c = 0; c < f; ++c) {
      const double d_attr = std::abs(x(row, c) - x(r, c));
      tally.n_da[static_cast<std::size_t>(c)] += d_attr * w;
      tally.n_dc_da[static_cast<std::size_t>(c)] += d_target * d_attr * w;
    }
  }
  return tally;
}

namespace {

double sq_distance(const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b, Eigen::Index j) {
  double s = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const double d = a(i, c) - b(j, c);
    s += d * d;
  }
  return s;
}

void fill_kernel_row(Eigen::MatrixXd& k, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Eigen::Index i,
                     double signal_variance, double inv_two_l2) {
  for (Eigen::Index j = 0; j < b.rows(); ++j) k(i, j) = signal_variance * std::exp(-sq_distance(a, i, b, j) * inv_two_l2);
}

void fill_manhattan_row(Eigen::MatrixXd& d, const Eigen::MatrixXd& x, Eigen::Index i) {
  for (Eigen::Index j = 0; j < x.rows(); ++j) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < x.cols(); ++c) s += std::abs(x(i, c) - x(j, c));
    d(i, j) = s;
  }
}

}  // namespace

namespace serial {

ReliefTally relief_accumulate(const ReliefProblem& p) {
  ReliefTally total(static_cast<std::size_t>(p.features.cols()));
  for (std::size_t inst : p.instances) total.add(relief_instance(p, inst));
  return total;
}

Eigen::MatrixXd sq_exp_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double signal_variance,
                              double length_scale) {
  Eigen::MatrixXd k(a.rows(), b.rows());
  const double inv = 1.0 / (2.0 * length_scale * length_scale);
  for (Eigen::Index i = 0; i < a.rows(); ++i) fill_kernel_row(k, a, b, i, signal_variance, inv);
  return k;
}

Eigen::MatrixXd manhattan_distances(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd d(x.rows(), x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) fill_manhattan_row(d, x, i);
  return d;
}

}  // namespace serial

namespace omp {

ReliefTally relief_accumulate(const ReliefProblem& p) {
  // Per-instance tallies are reduced in instance order afterwards so the
  // floating-point sum matches the serial loop exactly.
  std::vector<ReliefTally> parts(p.instances.size());
  const auto count = static_cast<long long>(p.instances.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < count; ++i)
    parts[static_cast<std::size_t>(i)] = relief_instance(p, p.instances[static_cast<std::size_t>(i)]);
  ReliefTally total(static_cast<std::size_t>(p.features.cols()));
  for (const auto& part : parts) total.add(part);
  return total;
}

Eigen::MatrixXd sq_exp_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double signal_variance,
                              double length_scale) {
  Eigen::MatrixXd k(a.rows(), b.rows());
  const double inv = 1.0 / (2.0 * length_scale * length_scale);
  const auto rows = static_cast<long long>(a.rows());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < rows; ++i) fill_kernel_row(k, a, b, static_cast<Eigen::Index>(i), signal_variance, inv);
  return k;
}

Eigen::MatrixXd manhattan_distances(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd d(x.rows(), x.rows());
  const auto rows = static_cast<long long>(x.rows());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < rows; ++i) fill_manhattan_row(d, x, static_cast<Eigen::Index>(i));
  return d;
}

}  // namespace omp

ReliefTally relief_accumulate(const ReliefProblem& p, Execution exec) {
  return exec == Execution::Parallel ? omp::relief_accumulate(p) : serial::relief_accumulate(p);
}

Eigen::MatrixXd sq_exp_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double signal_variance,
                              double length_scale, Execution exec) {
  return exec == Execution::Parallel ? omp::sq_exp_kernel(a, b, signal_variance, length_scale)
                                     : serial::sq_exp_kernel(a, b, signal_variance, length_scale);
}

}  // namespace teayield::kernels
