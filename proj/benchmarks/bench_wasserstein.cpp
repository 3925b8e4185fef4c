#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mvsim/measure.hpp"

namespace {

mvsim::EmpiricalMeasure cloud(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> pts(n * d);
  for (auto& x : pts) x = g(rng);
  return mvsim::EmpiricalMeasure(std::move(pts), d);
}

void BM_W2Assignment(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = cloud(n, 2, 1), b = cloud(n, 2, 2);
  for (auto _ : state) benchmark::DoNotOptimize(mvsim::w2_assignment(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_W2Assignment)->RangeMultiplier(2)->Range(8, 512)->Complexity(benchmark::oNCubed);

void BM_W2Sorted(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = cloud(n, 1, 1), b = cloud(n, 1, 2);
  for (auto _ : state) benchmark::DoNotOptimize(mvsim::w2_1d(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_W2Sorted)->RangeMultiplier(8)->Range(64, 262144)->Complexity(benchmark::oNLogN);

void BM_KdeSupDistance(benchmark::State& state) {
  const auto a = cloud(static_cast<std::size_t>(state.range(0)), 1, 1);
  const auto b = cloud(static_cast<std::size_t>(state.range(0)), 1, 2);
  for (auto _ : state) benchmark::DoNotOptimize(mvsim::kde_sup_distance(a, b, 1024, 3.0));
}
BENCHMARK(BM_KdeSupDistance)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
