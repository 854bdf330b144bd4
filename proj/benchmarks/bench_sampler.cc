#include <benchmark/benchmark.h>

#include <vector>

#include "fbmstm/fbm.hpp"

namespace {

void BM_CirculantSample(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  const fbmstm::FbmGrid grid{0.75, 0.5, n};
  const fbmstm::FgnSampler sampler(grid, fbmstm::SamplingMethod::CirculantEmbedding);
  std::vector<double> buf(static_cast<std::size_t>(n));
  std::uint64_t stream = 0;
  for (auto _ : state) {
    sampler.sample_into(1, stream++, buf);
    benchmark::DoNotOptimize(buf.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_CirculantSample)->Arg(256)->Arg(1024)->Arg(4096)->Arg(16384);

void BM_CholeskySample(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  const fbmstm::FbmGrid grid{0.75, 0.5, n};
  const fbmstm::FgnSampler sampler(grid, fbmstm::SamplingMethod::ExactCholesky);
  std::vector<double> buf(static_cast<std::size_t>(n));
  std::uint64_t stream = 0;
  for (auto _ : state) {
    sampler.sample_into(1, stream++, buf);
    benchmark::DoNotOptimize(buf.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_CholeskySample)->Arg(256)->Arg(1024);

void BM_CovarianceMatrix(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fbmstm::covariance_matrix({0.75, 0.5, n}));
  }
}
BENCHMARK(BM_CovarianceMatrix)->Arg(256)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
