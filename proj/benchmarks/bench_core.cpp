#include <benchmark/benchmark.h>

#include <random>

#include "hmf/kernels.hpp"
#include "hmf/limit.hpp"
#include "hmf/network_sde.hpp"
#include "hmf/weights.hpp"

using namespace hmf;

namespace {

LatticeTrajectories random_paths(int E, int N, TimeGrid g, std::uint64_t seed) {
  LatticeTrajectories x(E, N, g);
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> nd;
  for (auto& v : x.data()) v = nd(eng);
  return x;
}

KernelStack stack(int N, int q, int m) {
  const auto x = random_paths(32, N, {2.0, m}, 1);
  return assemble_K(CovarianceModel::product(1.0), cf_from_paths(x, Activation::logistic(), q), q);
}

}  // namespace

static void BM_SampleWeights(benchmark::State& state) {
  const WeightSampler sampler(CovarianceModel::product(1.0), static_cast<int>(state.range(0)));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(seed++));
}
BENCHMARK(BM_SampleWeights)->Arg(7)->Arg(32)->Arg(64);

static void BM_SimulateQuenched(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto J = sample_weights(CovarianceModel::product(1.0), n, 3);
  SdeConfig cfg;
  cfg.grid = {2.0, 20};
  for (auto _ : state) benchmark::DoNotOptimize(simulate_quenched(J, cfg, 5, 16));
}
BENCHMARK(BM_SimulateQuenched)->Arg(8)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_FeatureCovariance(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const auto x = random_paths(64, N, {2.0, 20}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(cf_from_paths(x, Activation::logistic(), N / 2));
}
BENCHMARK(BM_FeatureCovariance)->Arg(17)->Arg(33)->Arg(65)->Unit(benchmark::kMillisecond);

static void BM_KToL(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const auto st = stack(N, N / 2 - 1, 20);
  for (auto _ : state) benchmark::DoNotOptimize(K_to_L(st, 1.0, N));
}
BENCHMARK(BM_KToL)->Arg(17)->Arg(33)->Arg(65)->Unit(benchmark::kMillisecond);

static void BM_CausalTilt(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const auto st = stack(N, N / 2 - 1, 20);
  for (auto _ : state) benchmark::DoNotOptimize(causal_tilt(st, 1.0, N));
}
BENCHMARK(BM_CausalTilt)->Arg(17)->Arg(33)->Arg(65)->Unit(benchmark::kMillisecond);

static void BM_Resolvent(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const auto st = causal_tilt(stack(N, N / 2 - 1, 20), 1.0, N);
  for (auto _ : state) benchmark::DoNotOptimize(iterated_kernels(st, 1.0, 1e-10));
}
BENCHMARK(BM_Resolvent)->Arg(17)->Arg(33)->Unit(benchmark::kMillisecond);

static void BM_March(benchmark::State& state) {
  MarchConfig cfg;
  cfg.lattice_size = static_cast<int>(state.range(0));
  cfg.q = cfg.lattice_size / 2 - 1;
  cfg.grid = {2.0, 20};
  cfg.ensemble = static_cast<int>(state.range(1));
  const auto model = CovarianceModel::product(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(march(model, cfg));
}
BENCHMARK(BM_March)->Args({17, 64})->Args({33, 64})->Args({33, 256})->Args({65, 1024})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
