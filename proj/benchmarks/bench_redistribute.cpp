#include <benchmark/benchmark.h>

#include "bcmg/generate.hpp"
#include "bcmg/host_api.hpp"
#include "bcmg/solvers.hpp"

namespace {

using namespace bcmg;

// Contiguous -> block-cyclic -> contiguous on N x N doubles.
void BM_RedistributeRoundTrip(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto tile = static_cast<std::size_t>(state.range(1));
  const auto devices = static_cast<std::size_t>(state.range(2));
  SplitMix64 g(1);
  const auto a = random_uniform<double>(n, n, g);
  DeviceRuntime rt(devices, CoordinationMode::shared_address);
  HandleRegistry reg(rt.mesh(), rt.mode());
  rt.run_workers([&](Worker& w) { publish_columns(w, reg, a, {tile}, devices); });
  rt.run_coordinated({&reg}, [&](Coordinator& c) {
    DistributedMatrix m{a.descriptor(), {tile}, Layout::contiguous, c.handles(0)};
    StagingPair staging = allocate_staging_pair(c, m.descriptor.column_bytes());
    for (auto _ : state) {
      redistribute_in(m, c, &staging);
      redistribute_out(m, c, &staging);
      c.mesh().clear_copy_log();
    }
  });
  state.SetBytesProcessed(std::int64_t(state.iterations()) * 2 * std::int64_t(a.size() * sizeof(double)));
}

BENCHMARK(BM_RedistributeRoundTrip)
    ->ArgNames({"n", "tile", "devices"})
    ->Args({1024, 1, 4})
    ->Args({1024, 16, 4})
    ->Args({1024, 64, 4})
    ->Args({1024, 256, 4})
    ->Args({1024, 64, 2})
    ->Unit(benchmark::kMillisecond);

}  // namespace
