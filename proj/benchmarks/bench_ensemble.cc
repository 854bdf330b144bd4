#include <benchmark/benchmark.h>

#include "fbmstm/lab.hpp"
#include "fbmstm/models.hpp"
#include "fbmstm/stm.hpp"

namespace {

void BM_LinearEnsemble(benchmark::State& state) {
  const std::int64_t n_steps = state.range(0);
  const fbmstm::LinearTestModel model{9.0, 2.0, 1.4, 3.0};
  const fbmstm::ThetaScheme scheme{0.8, 0.5, n_steps};
  const fbmstm::FbmGrid grid{0.7, 0.5, n_steps};
  fbmstm::EnsembleConfig config;
  config.n_paths = 256;
  config.record_stride = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fbmstm::run_ensemble(model, scheme, grid, config));
  }
  state.SetItemsProcessed(state.iterations() * config.n_paths * n_steps);
}
BENCHMARK(BM_LinearEnsemble)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_ImplicitCubicEnsemble(benchmark::State& state) {
  const std::int64_t n_steps = state.range(0);
  const fbmstm::NonlinearModel model = fbmstm::make_cubic_drift(3.0, 2.0, 4.0, 3.0);
  const fbmstm::ThetaScheme scheme{1.0, 0.5, n_steps};
  const fbmstm::FbmGrid grid{0.6, 0.5, n_steps};
  fbmstm::EnsembleConfig config;
  config.n_paths = 128;
  config.record_stride = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fbmstm::run_ensemble(model, scheme, grid, config));
  }
  state.SetItemsProcessed(state.iterations() * config.n_paths * n_steps);
}
BENCHMARK(BM_ImplicitCubicEnsemble)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_ProductMomentExact(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const fbmstm::LinearTestModel model{9.0, 2.0, 1.5, 3.0};
  const fbmstm::ThetaScheme scheme{0.8, 0.5, n};
  for (auto _ : state) {
    benchmark::DoNotOptimize(fbmstm::product_moment_exact(n, model, scheme, 0.75));
  }
}
BENCHMARK(BM_ProductMomentExact)->Arg(4)->Arg(6)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
