#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mvsim/scheme.hpp"

namespace {

mvsim::ModelSpec linear_model() { return mvsim::make_linear_mean_field({1.2, 0.4, 1.0}); }

void BM_EmStepInteracting(benchmark::State& state) {
  const auto model = linear_model();
  const auto n = static_cast<std::size_t>(state.range(0));
  auto ens = mvsim::make_ensemble(model, mvsim::EnsembleKind::Interacting, n,
                                  mvsim::TimeGrid::make(0.001, 1u << 30),
                                  mvsim::InitialLaw::point({6.0}), 1);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, std::sqrt(0.001));
  std::vector<double> dw(n);
  for (auto& x : dw) x = g(rng);
  for (auto _ : state) {
    ens = mvsim::em_step_interacting(model, std::move(ens), dw);
    benchmark::DoNotOptimize(ens.states.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EmStepInteracting)->RangeMultiplier(8)->Range(64, 32768);

void BM_EmStepClones(benchmark::State& state) {
  const auto model = linear_model();
  const auto n = static_cast<std::size_t>(state.range(0));
  auto ens = mvsim::make_ensemble(model, mvsim::EnsembleKind::NonInteractingClones, n,
                                  mvsim::TimeGrid::make(0.001, 1u << 30),
                                  mvsim::InitialLaw::point({6.0}), 1);
  std::vector<double> dw(n, 0.01);
  for (auto _ : state) {
    ens = mvsim::em_step_clones(model, std::move(ens), dw);
    benchmark::DoNotOptimize(ens.states.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EmStepClones)->Arg(1024)->Arg(32768);

void BM_Simulate(benchmark::State& state) {
  const auto model = linear_model();
  mvsim::SimulationConfig cfg;
  cfg.kind = mvsim::EnsembleKind::Interacting;
  cfg.particles = static_cast<std::size_t>(state.range(0));
  cfg.h = 0.01;
  cfg.horizon = 1.0;
  cfg.seed = 1;
  cfg.thinning = 100;
  for (auto _ : state) benchmark::DoNotOptimize(mvsim::simulate(model, cfg));
}
BENCHMARK(BM_Simulate)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
