#include <benchmark/benchmark.h>

#include "ssvb/batch.hpp"
#include "ssvb/componentwise.hpp"
#include "ssvb/simgen.hpp"

using namespace ssvb;

namespace {

// AR(0.6) design with three signals; range(0) = n, range(1) = p.
StandardizedDataset make_data(const benchmark::State& state) {
  return standardize(gen_example3(Ex3Variant::A, 1, Ex3Noise::Variance3, state.range(0), state.range(1)).data);
}

void BM_BatchDirect(benchmark::State& state) {
  const auto sd = make_data(state);
  Hyperparameters hp;
  BatchConfig cfg;
  cfg.record_elbo = false;
  for (auto _ : state) benchmark::DoNotOptimize(fit_batch(sd, hp, cfg).iterations);
}

void BM_BatchWoodbury(benchmark::State& state) {
  const auto sd = make_data(state);
  Hyperparameters hp;
  BatchConfig cfg;
  cfg.record_elbo = false;
  cfg.woodbury = true;
  for (auto _ : state) benchmark::DoNotOptimize(fit_batch(sd, hp, cfg).iterations);
}

void BM_Componentwise(benchmark::State& state) {
  const auto sd = make_data(state);
  Hyperparameters hp;
  ComponentwiseConfig cfg;
  cfg.record_elbo = false;
  for (auto _ : state) benchmark::DoNotOptimize(fit_componentwise(sd, hp, cfg).iterations);
}

void BM_SolveMu(benchmark::State& state) {
  const auto sd = make_data(state);
  BatchSystem sys(sd);
  const Vector phi = Vector::Constant(sd.p(), 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(sys.solve_mu(phi, 1.0).data());
}

void BM_ComputeAn(benchmark::State& state) {
  const auto sd = make_data(state);
  for (auto _ : state) benchmark::DoNotOptimize(compute_a_n(sd));
}

void shapes(benchmark::internal::Benchmark* b) {
  b->Args({100, 50})->Args({400, 200})->Args({100, 1000})->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(BM_BatchDirect)->Apply(shapes);
BENCHMARK(BM_BatchWoodbury)->Apply(shapes);
BENCHMARK(BM_Componentwise)->Apply(shapes);
BENCHMARK(BM_SolveMu)->Apply(shapes);
BENCHMARK(BM_ComputeAn)->Apply(shapes);

BENCHMARK_MAIN();
