// Serial reference kernels against their OpenMP versions.
//   bench_kernels --benchmark_filter=Relief
// Thread count follows OMP_NUM_THREADS.

#include <numeric>
#include <random>

#include <benchmark/benchmark.h>

#include "teayield/ensemble.hpp"
#include "teayield/feature_select.hpp"
#include "teayield/kernels.hpp"

using namespace teayield;

namespace {

Eigen::MatrixXd uniform(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = u(rng);
  return x;
}

template <bool Parallel>
void Relief(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const Eigen::MatrixXd x = uniform(n, 8, 1);
  const Eigen::VectorXd y = uniform(n, 1, 2).col(0);
  std::vector<std::size_t> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const auto w = relief_rank_weights(10, 20.0);
  const kernels::ReliefProblem p{x, y, rows, 10, w};
  for (auto _ : state) {
    auto t = Parallel ? kernels::omp::relief_accumulate(p) : kernels::serial::relief_accumulate(p);
    benchmark::DoNotOptimize(t.n_dc);
  }
  state.SetComplexityN(n);
}

template <bool Parallel>
void SqExpKernel(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const Eigen::MatrixXd a = uniform(n, 8, 3);
  for (auto _ : state) {
    Eigen::MatrixXd k = Parallel ? kernels::omp::sq_exp_kernel(a, a, 1.0, 0.5)
                                 : kernels::serial::sq_exp_kernel(a, a, 1.0, 0.5);
    benchmark::DoNotOptimize(k.data());
  }
}

template <bool Parallel>
void ManhattanDistances(benchmark::State& state) {
  const Eigen::MatrixXd a = uniform(state.range(0), 8, 4);
  for (auto _ : state) {
    Eigen::MatrixXd d = Parallel ? kernels::omp::manhattan_distances(a) : kernels::serial::manhattan_distances(a);
    benchmark::DoNotOptimize(d.data());
  }
}

template <Execution Exec>
void TrainPool(benchmark::State& state) {
  const Eigen::MatrixXd x = uniform(120, 6, 5);
  const FeatureMatrix m({"a", "b", "c", "d", "e", "f"}, x, x.rowwise().sum());
  PoolConfig cfg;
  cfg.pool_size = static_cast<std::size_t>(state.range(0));
  cfg.mlp.epochs = 200;
  for (auto _ : state) {
    auto pool = train_pool(m, cfg, 6, Exec);
    benchmark::DoNotOptimize(pool.data());
  }
}

}  // namespace

BENCHMARK(Relief<false>)->Arg(120)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(Relief<true>)->Arg(120)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(SqExpKernel<false>)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(SqExpKernel<true>)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(ManhattanDistances<false>)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(ManhattanDistances<true>)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(TrainPool<Execution::Serial>)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(TrainPool<Execution::Parallel>)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
