// Serial reference vs OpenMP kernels. Arg 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include "gennet/engine.hpp"
#include "gennet/evaluation.hpp"

using namespace gennet;

namespace {

ExecutionPolicy policy_of(const benchmark::State& state) {
  return state.range(0) == 0 ? ExecutionPolicy::serial : ExecutionPolicy::parallel;
}

EngineConfig config_of(int population) {
  EngineConfig c;
  c.population_size = population;
  c.master_seed = 11;
  return c;
}

void BM_SurrogateBatch(benchmark::State& state) {
  const Population pop = initialize_population(config_of(static_cast<int>(state.range(1))));
  std::vector<Genome> genomes;
  for (const auto& ind : pop) genomes.push_back(ind.genome);
  for (auto _ : state) benchmark::DoNotOptimize(surrogate_fitness_batch(genomes, policy_of(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(genomes.size()));
}

void BM_InitializePopulation(benchmark::State& state) {
  const auto config = config_of(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(initialize_population(config, policy_of(state)));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_Breed(benchmark::State& state) {
  const auto config = config_of(static_cast<int>(state.range(1)));
  Population pop = initialize_population(config);
  const auto scores = surrogate_fitness_batch([&] {
    std::vector<Genome> g;
    for (const auto& ind : pop) g.push_back(ind.genome);
    return g;
  }());
  for (std::size_t i = 0; i < pop.size(); ++i) pop[i].fitness = scores[i];
  int generation = 0;
  for (auto _ : state) benchmark::DoNotOptimize(breed(pop, config, generation++, policy_of(state)));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

}  // namespace

BENCHMARK(BM_SurrogateBatch)->ArgsProduct({{0, 1}, {64, 1024, 8192}});
BENCHMARK(BM_InitializePopulation)->ArgsProduct({{0, 1}, {64, 1024}});
BENCHMARK(BM_Breed)->ArgsProduct({{0, 1}, {64, 1024}});

BENCHMARK_MAIN();
