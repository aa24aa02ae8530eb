#include <benchmark/benchmark.h>

#include "bcmg/generate.hpp"
#include "bcmg/host_api.hpp"

namespace {

using namespace bcmg;

RunOptions options(const benchmark::State& state) {
  RunOptions o;
  o.tile = {static_cast<std::size_t>(state.range(1))};
  o.devices = static_cast<std::size_t>(state.range(2));
  return o;
}

void BM_Potrs(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_spd<double>(n, 1);
  const auto b = ones<double>(n, 1);
  const auto o = options(state);
  for (auto _ : state) benchmark::DoNotOptimize(solve(a, b, o));
}

void BM_Potri(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_spd<double>(n, 1);
  const auto o = options(state);
  for (auto _ : state) benchmark::DoNotOptimize(inverse(a, o));
}

void BM_Syevd(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_hermitian<std::complex<double>>(n, 1);
  const auto o = options(state);
  for (auto _ : state) benchmark::DoNotOptimize(eigh(a, o));
}

void tile_sweep(benchmark::internal::Benchmark* b) {
  b->ArgNames({"n", "tile", "devices"});
  for (std::int64_t tile : {16, 64, 256}) {
    for (std::int64_t devices : {1, 4}) b->Args({512, tile, devices});
  }
  b->Unit(benchmark::kMillisecond);
}

BENCHMARK(BM_Potrs)->Apply(tile_sweep);
BENCHMARK(BM_Potri)->Apply(tile_sweep);
BENCHMARK(BM_Syevd)->ArgNames({"n", "tile", "devices"})->Args({256, 64, 1})->Args({256, 64, 4})->Unit(benchmark::kMillisecond);

}  // namespace
