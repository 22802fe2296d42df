#include <benchmark/benchmark.h>

#include "japan/flow.hpp"
#include "japan/rng.hpp"

using namespace japan;

namespace {

FlowModel make_model(std::size_t d, std::size_t c) {
  FlowModel model(d, c, 4, 32);
  Rng rng(3);
  model.init_params(rng);
  return model;
}

void BM_FlowLogLikelihoodBatch(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const FlowModel model = make_model(2, 0);
  Rng rng(7);
  const Matrix y = rng.gaussian_matrix(n, 2);
  const Matrix x(n, 0);
  for (auto _ : state) {
    auto ll = model.log_likelihood_batch(y, x);
    benchmark::DoNotOptimize(ll);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_FlowTrainEpoch(benchmark::State& state) {
  Rng rng(11);
  const Matrix y = rng.gaussian_matrix(2048, 2);
  const Matrix x(2048, 0);
  TrainConfig config;
  config.epochs = 1;
  config.batch_size = 512;
  for (auto _ : state) {
    auto result = train_nll(y, x, config);
    benchmark::DoNotOptimize(result);
  }
}

}  // namespace

BENCHMARK(BM_FlowLogLikelihoodBatch)->Arg(512)->Arg(4096);
BENCHMARK(BM_FlowTrainEpoch);
BENCHMARK_MAIN();
