#include <benchmark/benchmark.h>

#include "japan/area.hpp"
#include "japan/flow.hpp"
#include "japan/rng.hpp"

using namespace japan;

namespace {

void BM_McArea(benchmark::State& state) {
  FlowModel model(2, 0, 4, 32);
  Rng rng(5);
  model.init_params(rng);
  const std::uint64_t n = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    auto est = mc_area(model, {}, -2.3378770664, n, 17);
    benchmark::DoNotOptimize(est);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

}  // namespace

BENCHMARK(BM_McArea)->Arg(10000)->Arg(100000);
BENCHMARK_MAIN();
