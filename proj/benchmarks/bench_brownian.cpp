#include <benchmark/benchmark.h>

#include <vector>

#include "mvsim/brownian.hpp"

namespace {

void BM_CursorAdvance(benchmark::State& state) {
  mvsim::BrownianCursor cursor(1, 0, 0.001, 1);
  double dw = 0.0;
  for (auto _ : state) {
    cursor.advance(std::span<double>(&dw, 1));
    benchmark::DoNotOptimize(dw);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_CursorAdvance);

void BM_SampleIncrements(benchmark::State& state) {
  const auto grid = mvsim::TimeGrid::make(1.0 / static_cast<double>(state.range(0)),
                                          static_cast<std::size_t>(state.range(0)));
  std::uint64_t id = 0;
  for (auto _ : state) {
    auto stream = mvsim::sample_increments(7, id++, grid, 1);
    benchmark::DoNotOptimize(stream);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleIncrements)->Arg(1000)->Arg(25600);

void BM_Coarsen(benchmark::State& state) {
  const auto grid = mvsim::TimeGrid::make(1.0 / 25600.0, 25600);
  const auto fine = mvsim::sample_increments(7, 0, grid, 1);
  for (auto _ : state) {
    auto coarse = mvsim::coarsen(fine, static_cast<std::size_t>(state.range(0)));
    benchmark::DoNotOptimize(coarse);
  }
}
BENCHMARK(BM_Coarsen)->Arg(16)->Arg(256);

}  // namespace
