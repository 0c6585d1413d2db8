// Parallel kernels against their serial reference versions.

#include <map>

#include <benchmark/benchmark.h>

#include "fisherlab/kernels.hpp"
#include "fisherlab/models.hpp"
#include "fisherlab/rng.hpp"

namespace {

using namespace fisherlab;

const ModelSpec& logistic16() {
  static const ModelSpec m = ModelSpec::logistic(Vector(16, 0.25));
  return m;
}

const Dataset& data(std::size_t n) {
  static std::map<std::size_t, Dataset> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, sample(logistic16(), n, 7)).first;
  return it->second;
}

void BM_ScoreMatrix(benchmark::State& state) {
  const Dataset& d = data(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::score_matrix(logistic16(), logistic16().theta_star, d));
}

void BM_ScoreMatrixSerial(benchmark::State& state) {
  const Dataset& d = data(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(kernels::reference::score_matrix(logistic16(), logistic16().theta_star, d));
}

void BM_OuterProduct(benchmark::State& state) {
  const Matrix s = kernels::score_matrix(logistic16(), logistic16().theta_star,
                                         data(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::outer_product_mean(s));
}

void BM_OuterProductSerial(benchmark::State& state) {
  const Matrix s = kernels::score_matrix(logistic16(), logistic16().theta_star,
                                         data(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::reference::outer_product_mean(s));
}

void BM_LossGradient(benchmark::State& state) {
  const Dataset& d = data(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(kernels::loss_and_gradient(logistic16(), logistic16().theta_star, d));
}

void BM_LossGradientSerial(benchmark::State& state) {
  const Dataset& d = data(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        kernels::reference::loss_and_gradient(logistic16(), logistic16().theta_star, d));
}

kernels::MomentSums normal_block(std::uint64_t seed, std::size_t len) {
  Rng rng(seed);
  kernels::MomentSums m;
  for (std::size_t i = 0; i < len; ++i) {
    const double z = rng.normal();
    m.sum += z;
    m.sum_sq += z * z;
  }
  m.count = len;
  return m;
}

void BM_MonteCarlo(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(kernels::blocked_mc_sum(static_cast<std::size_t>(state.range(0)), 3, normal_block));
}

void BM_MonteCarloSerial(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(
        kernels::reference::blocked_mc_sum(static_cast<std::size_t>(state.range(0)), 3, normal_block));
}

}  // namespace

BENCHMARK(BM_ScoreMatrix)->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK(BM_ScoreMatrixSerial)->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK(BM_OuterProduct)->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK(BM_OuterProductSerial)->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK(BM_LossGradient)->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK(BM_LossGradientSerial)->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK(BM_MonteCarlo)->Arg(1 << 18);
BENCHMARK(BM_MonteCarloSerial)->Arg(1 << 18);

BENCHMARK_MAIN();
