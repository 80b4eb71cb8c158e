#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "teayield/error.hpp"
#include "teayield/feature_select.hpp"
#include "teayield/random.hpp"
#include "teayield/text.hpp"

namespace teayield {

std::vector<double> relief_rank_weights(std::size_t k, double decay) {
  if (k == 0) throw Error("relief: k must be at least 1");
  if (!(decay >= 0.0)) throw Error("relief: decay must be >= 0");
  std::vector<double> w(k, 1.0);
  if (decay > 0.0) {
    for (std::size_t r = 0; r < k; ++r) {
      const double z = static_cast<double>(r + 1) / decay;
      w[r] = std::exp(-z * z);
    }
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= total;
  return w;
}

std::vector<std::size_t> rank_order(const std::vector<double>& weights) {
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
  return order;
}

namespace {

Eigen::VectorXd range_normalize(const Eigen::VectorXd& v, const std::string& name) {
  const double lo = v.minCoeff(), hi = v.maxCoeff();
  if (!(hi > lo)) throw Error("relief: column '" + name + "' has zero range");
  return (v.array() - lo) / (hi - lo);
}

}  // namespace

RankedFeatures rrelieff(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<std::string> names,
                        const ReliefParams& params, std::uint64_t seed, Execution exec) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (x.rows() != y.size()) throw Error("relief: row count mismatch");
  if (names.size() != static_cast<std::size_t>(x.cols())) throw Error("relief: name count mismatch");
  if (params.k < 1) throw Error("relief: k must be at least 1");
  if (params.k >= n)
    throw Error("relief: k = " + std::to_string(params.k) + " needs more than " + std::to_string(params.k) +
                " samples, got " + std::to_string(n));
  if (params.iterations > n)
    throw Error("relief: " + std::to_string(params.iterations) + " iterations exceed " + std::to_string(n) + " samples");

  Eigen::MatrixXd xn(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) xn.col(c) = range_normalize(x.col(c), names[static_cast<std::size_t>(c)]);
  const Eigen::VectorXd yn = range_normalize(y, "target");

  const std::size_t m = params.iterations == 0 ? n : params.iterations;
  std::vector<std::size_t> instances(n);
  std::iota(instances.begin(), instances.end(), std::size_t{0});
  if (m < n) {
    Rng rng(seed);
    std::shuffle(instances.begin(), instances.end(), rng);
    instances.resize(m);
  }

  const auto rank_w = relief_rank_weights(params.k, params.decay);
  const kernels::ReliefProblem problem{xn, yn, instances, params.k, rank_w};
  const kernels::ReliefTally t = kernels::relief_accumulate(problem, exec);

  RankedFeatures out;
  out.names = std::move(names);
  out.params = params;
  out.iterations_used = m;
  const double md = static_cast<double>(m);
  for (std::size_t f = 0; f < t.n_da.size(); ++f) {
    const double first = t.n_dc > 0.0 ? t.n_dc_da[f] / t.n_dc : 0.0;
    const double rest = md - t.n_dc;
    const double second = rest > 0.0 ? (t.n_da[f] - t.n_dc_da[f]) / rest : 0.0;
    out.weights.push_back(std::clamp(first - second, -1.0, 1.0));
  }
  out.order = rank_order(out.weights);
  return out;
}

RankedFeatures rrelieff(const FeatureMatrix& m, const ReliefParams& params, std::uint64_t seed, Execution exec) {
  return rrelieff(m.values(), m.target(), m.column_names(), params, seed, exec);
}

void write_ranked_features_csv(std::ostream& out, const RankedFeatures& ranked) {
  out << "feature,weight,rank\n";
  for (std::size_t r = 0; r < ranked.order.size(); ++r) {
    const std::size_t f = ranked.order[r];
    out << ranked.names[f] << ',' << text::format_double(ranked.weights[f]) << ',' << (r + 1) << '\n';
  }
}

}  // namespace teayield
