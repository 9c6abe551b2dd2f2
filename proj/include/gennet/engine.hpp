#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "gennet/evaluation.hpp"
#include "gennet/genome.hpp"
#include "gennet/operators.hpp"
#include "gennet/parallel.hpp"

namespace gennet {

enum class EvaluatorKind { surrogate, external };

std::string_view to_string(EvaluatorKind kind);

struct EvaluatorSettings {
  EvaluatorKind kind = EvaluatorKind::surrogate;
  std::vector<std::string> workers;  // command lines or host:port
  int parallelism = 1;
  double timeout_seconds = 3600.0;
  int max_retries = 1;
  std::string dataset = "mnist";
  TrainSettings train;

  bool operator==(const EvaluatorSettings&) const = default;
};

struct EngineConfig {
  int population_size = 20;
  int generations = 10;
  int num_classes = 10;
  std::uint64_t master_seed = 0;
  double crossover_rate = 0.9;
  /// Pins the per-individual mutation rate; unset means draw from [min(8/L,0.5), 0.5].
  std::optional<double> mutation_rate;
  SearchSpace search_space;
  EvaluatorSettings evaluator;

  /// Field-level diagnostics; empty when the config is usable.
  std::vector<std::string> problems() const;
  bool operator==(const EngineConfig&) const = default;
};

/// Canonical-hash keyed fitness memo. The first recorded value for a key is
/// kept; later puts are ignored so noisy retraining cannot rewrite history.
class FitnessCache {
 public:
  std::optional<double> get(std::uint64_t key) const;
  void put(std::uint64_t key, double fitness);
  std::size_t size() const { return entries_.size(); }
  /// Sorted by key.
  std::vector<std::pair<std::uint64_t, double>> entries() const;

 private:
  std::unordered_map<std::uint64_t, double> entries_;
};

struct GenerationStats {
  int generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  double median_fitness = 0.0;
  std::uint64_t best_genome_hash = 0;
  int evaluations_run = 0;
  int cache_hits = 0;
  /// Training seconds reported by the evaluator for this generation's new
  /// evaluations (0 for the surrogate and for cache hits).
  double wall_seconds = 0.0;

  bool operator==(const GenerationStats&) const = default;
};

struct EvolutionReport {
  EngineConfig config;
  std::vector<GenerationStats> generations;
  Individual best;
  bool complete = false;
};

/// Every pending evaluation of a generation failed.
class EvaluationAborted : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EvaluationTally {
  int evaluations_run = 0;
  int cache_hits = 0;
  double wall_seconds = 0.0;
};

/// T random genomes, individual i drawn from its own stream of the master seed.
Population initialize_population(const EngineConfig& config, ExecutionPolicy policy = ExecutionPolicy::parallel);

/// Fills every unset fitness. Cache first, then one evaluation per distinct
/// genome; failed evaluations score 0.
EvaluationTally evaluate_population(Population& population, FitnessEvaluator& evaluator, FitnessCache& cache,
                                    const SearchSpace& space);

GenerationStats summarize(const Population& evaluated, int generation, const EvaluationTally& tally);

/// Highest fitness, ties to the lower canonical hash.
const Individual& best_of(const Population& evaluated);

/// Next generation from an evaluated one: elites unaltered, then children.
/// Parents pair in draw order and cross with probability p_c; every child is
/// mutated; an odd last parent yields one mutated copy. Each pair owns an
/// rng stream keyed by (seed, generation, pair), so policy does not change
/// the result.
Population breed(const Population& evaluated, const EngineConfig& config, int generation,
                 ExecutionPolicy policy = ExecutionPolicy::parallel);

struct StepResult {
  Population next;
  GenerationStats stats;
};

/// Evaluate, summarize, select, cross over, mutate.
StepResult step_generation(Population population, const EngineConfig& config, FitnessEvaluator& evaluator,
                           FitnessCache& cache, int generation,
                           ExecutionPolicy policy = ExecutionPolicy::parallel);

/// Everything needed to continue a run from a generation boundary.
struct EvolutionState {
  int generation = 0;  // next generation to evaluate
  Population population;
  FitnessCache cache;
  std::vector<GenerationStats> history;
  std::optional<Individual> best;
};

EvolutionState initial_state(const EngineConfig& config, ExecutionPolicy policy = ExecutionPolicy::parallel);

struct RunHooks {
  /// Called after each completed generation with the advanced state.
  std::function<void(const EvolutionState&)> after_generation;
  /// Stop once this many generations have completed in this call.
  std::optional<int> stop_after;
  ExecutionPolicy policy = ExecutionPolicy::parallel;
};

EvolutionReport continue_evolution(EvolutionState& state, const EngineConfig& config, FitnessEvaluator& evaluator,
                                   const RunHooks& hooks = {});

EvolutionReport evolve(const EngineConfig& config, FitnessEvaluator& evaluator, const RunHooks& hooks = {});

std::unique_ptr<FitnessEvaluator> make_evaluator(const EvaluatorSettings& settings);

}  // namespace gennet
