#include <benchmark/benchmark.h>

#include <random>

#include "rawnet/coder.hpp"
#include "rawnet/kernels.hpp"
#include "rawnet/signal.hpp"
#include "rawnet/voder.hpp"

using namespace rawnet;

namespace {

std::vector<Real> rand_v(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<Real> d(0, 1);
  std::vector<Real> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

template <bool Parallel>
void BM_gemv(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0)), cols = static_cast<std::size_t>(state.range(1));
  const auto W = rand_v(rows * cols, 1), x = rand_v(cols, 2), b = rand_v(rows, 3);
  std::vector<Real> y(rows);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::parallel::gemv(W, rows, cols, x, b, y);
    else
      kernels::serial::gemv(W, rows, cols, x, b, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows * cols));
}

template <bool Parallel>
void BM_conv1d(benchmark::State& state) {
  // second layer of the default coder stack on a 3200-sample window
  const kernels::Conv1dDims d{16, 32, 9, 2, static_cast<std::size_t>(state.range(0))};
  const auto x = rand_v(d.in_channels * d.in_length, 4);
  const auto w = rand_v(d.out_channels * d.in_channels * d.kernel, 5);
  const auto b = rand_v(d.out_channels, 6);
  std::vector<Real> y(d.out_channels * d.out_length());
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::parallel::conv1d_forward(d, x, w, b, y);
    else
      kernels::serial::conv1d_forward(d, x, w, b, y);
    benchmark::DoNotOptimize(y.data());
  }
}

void BM_synthesize_tiny(benchmark::State& state) {
  const ModelParams params = init_params(ModelConfig::tiny(), 1);
  FeatureMatrix f;
  f.n_frames = 2;
  f.feat_dim = 64;
  f.frame_size = 160;
  f.values = rand_v(2 * 64, 7);
  for (auto _ : state) benchmark::DoNotOptimize(synthesize(f, params, {}).samples.data());
  state.SetItemsProcessed(state.iterations() * 320);  // samples
}

}  // namespace

BENCHMARK(BM_gemv<false>)->Args({64, 64})->Args({768, 256})->Args({768, 384});
BENCHMARK(BM_gemv<true>)->Args({64, 64})->Args({768, 256})->Args({768, 384});
BENCHMARK(BM_conv1d<false>)->Arg(1705);
BENCHMARK(BM_conv1d<true>)->Arg(1705);
BENCHMARK(BM_synthesize_tiny)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
