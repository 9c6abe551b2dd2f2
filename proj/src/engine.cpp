#include "gennet/engine.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <mutex>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gennet/worker_pool.hpp"

namespace gennet {

std::string_view to_string(EvaluatorKind kind) {
  return kind == EvaluatorKind::surrogate ? "surrogate" : "external";
}

std::vector<std::string> EngineConfig::problems() const {
  std::vector<std::string> out;
  if (population_size < 2) out.push_back(fmt::format("population_size: {} is below the minimum of 2", population_size));
  if (generations < 1) out.push_back(fmt::format("generations: {} is below the minimum of 1", generations));
  if (num_classes < 2) out.push_back(fmt::format("num_classes: {} is below the minimum of 2", num_classes));
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0))
    out.push_back(fmt::format("crossover_rate: {} is outside [0, 1]", crossover_rate));
  if (mutation_rate && !(*mutation_rate >= 0.0 && *mutation_rate <= 1.0))
    out.push_back(fmt::format("mutation_rate: {} is outside [0, 1]", *mutation_rate));
  for (auto& p : search_space.problems()) out.push_back(std::move(p));

  const auto& ev = evaluator;
  if (ev.kind == EvaluatorKind::external && ev.workers.empty())
    out.emplace_back("workers: the external evaluator needs at least one worker");
  if (ev.parallelism < 1) out.push_back(fmt::format("parallelism: {} is below the minimum of 1", ev.parallelism));
  if (!(ev.timeout_seconds > 0.0)) out.emplace_back("timeout_seconds: must be positive");
  if (ev.max_retries < 0) out.emplace_back("max_retries: must not be negative");
  const auto& t = ev.train;
  if (t.max_epochs < 1) out.emplace_back("max_epochs: must be at least 1");
  if (t.batch_size < 1) out.emplace_back("batch_size: must be at least 1");
  if (!(t.learning_rate > 0.0)) out.emplace_back("learning_rate: must be positive");
  if (!(t.lr_decay_per_epoch > 0.0 && t.lr_decay_per_epoch <= 1.0))
    out.emplace_back("lr_decay_per_epoch: must be in (0, 1]");
  if (!(t.validation_fraction > 0.0 && t.validation_fraction < 1.0))
    out.emplace_back("validation_fraction: must be in (0, 1)");
  if (t.train_subset < 0) out.emplace_back("train_subset: must not be negative");
  return out;
}

std::optional<double> FitnessCache::get(std::uint64_t key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void FitnessCache::put(std::uint64_t key, double fitness) { entries_.try_emplace(key, fitness); }

std::vector<std::pair<std::uint64_t, double>> FitnessCache::entries() const {
  std::vector<std::pair<std::uint64_t, double>> out(entries_.begin(), entries_.end());
  std::ranges::sort(out);
  return out;
}

Population initialize_population(const EngineConfig& config, ExecutionPolicy policy) {
  if (auto p = config.problems(); !p.empty()) throw ConfigError(std::move(p));
  const auto n = static_cast<std::ptrdiff_t>(config.population_size);
  Population out(static_cast<std::size_t>(n));
  const auto draw = [&](std::ptrdiff_t i) {
    Rng rng = make_stream(config.master_seed, StreamTag::initialization, static_cast<std::uint64_t>(i));
    out[static_cast<std::size_t>(i)].genome = random_genome(config.search_space, config.num_classes, rng);
  };
  if (policy == ExecutionPolicy::serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) draw(i);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) draw(i);
  }
  return out;
}

EvaluationTally evaluate_population(Population& population, FitnessEvaluator& evaluator, FitnessCache& cache,
                                    const SearchSpace& space) {
  EvaluationTally tally;
  std::vector<Genome> pending;
  std::vector<std::uint64_t> pending_keys;
  std::unordered_map<std::uint64_t, std::size_t> slot_of;
  std::vector<std::pair<std::size_t, std::size_t>> waiting;  // (individual, slot)

  for (std::size_t i = 0; i < population.size(); ++i) {
    auto& ind = population[i];
    if (ind.fitness) continue;
    if (auto v = validate(ind.genome, space); !v.empty())
      throw std::logic_error(std::string("engine produced an invalid genome: ") + ValidationError(std::move(v)).what());
    const std::uint64_t key = canonical_hash(ind.genome);
    if (auto cached = cache.get(key)) {
      ind.fitness = *cached;
      ++tally.cache_hits;
    } else if (auto it = slot_of.find(key); it != slot_of.end()) {
      waiting.emplace_back(i, it->second);
      ++tally.cache_hits;
    } else {
      slot_of.emplace(key, pending.size());
      waiting.emplace_back(i, pending.size());
      pending.push_back(ind.genome);
      pending_keys.push_back(key);
    }
  }
  if (pending.empty()) return tally;

  const auto results = evaluator.evaluate(pending);
  if (results.size() != pending.size())
    throw std::logic_error(fmt::format("evaluator returned {} results for {} genomes", results.size(), pending.size()));

  const auto ok = std::ranges::count_if(results, [](const EvaluationResult& r) { return r.ok(); });
  if (ok == 0) {
    const auto& first = results.front();
    throw EvaluationAborted(fmt::format("all {} evaluations failed; first error: {}", results.size(),
                                        first.message.value_or("unknown")));
  }

  std::vector<double> fitness(pending.size());
  for (std::size_t s = 0; s < pending.size(); ++s) {
    const auto& r = results[s];
    if (r.ok()) {
      fitness[s] = *r.fitness;
    } else {
      spdlog::warn("evaluation of {} failed, scoring 0: {}", hash_hex(pending_keys[s]), r.message.value_or("unknown"));
      fitness[s] = 0.0;
    }
    tally.wall_seconds += r.wall_seconds.value_or(0.0);
    cache.put(pending_keys[s], fitness[s]);
  }
  for (auto [i, s] : waiting) population[i].fitness = fitness[s];
  tally.evaluations_run = static_cast<int>(pending.size());
  return tally;
}

const Individual& best_of(const Population& evaluated) {
  if (evaluated.empty()) throw ContractError("best of an empty population");
  const Individual* best = nullptr;
  std::uint64_t best_key = 0;
  for (const auto& ind : evaluated) {
    if (!ind.fitness) throw ContractError("best_of needs an evaluated population");
    const auto key = canonical_hash(ind.genome);
    if (!best || *ind.fitness > *best->fitness || (*ind.fitness == *best->fitness && key < best_key)) {
      best = &ind;
      best_key = key;
    }
  }
  return *best;
}

GenerationStats summarize(const Population& evaluated, int generation, const EvaluationTally& tally) {
  GenerationStats s;
  s.generation = generation;
  std::vector<double> f;
  f.reserve(evaluated.size());
  for (const auto& ind : evaluated) f.push_back(ind.fitness.value());

  const auto& best = best_of(evaluated);
  s.best_fitness = *best.fitness;
  s.best_genome_hash = canonical_hash(best.genome);
  double sum = 0.0;
  for (double v : f) sum += v;
  s.mean_fitness = sum / static_cast<double>(f.size());
  std::ranges::sort(f);
  const std::size_t mid = f.size() / 2;
  s.median_fitness = f.size() % 2 ? f[mid] : 0.5 * (f[mid - 1] + f[mid]);
  s.evaluations_run = tally.evaluations_run;
  s.cache_hits = tally.cache_hits;
  s.wall_seconds = tally.wall_seconds;
  return s;
}

Population breed(const Population& evaluated, const EngineConfig& config, int generation, ExecutionPolicy policy) {
  const auto gen = static_cast<std::uint64_t>(generation);
  Rng selection_rng = make_stream(config.master_seed, StreamTag::selection, gen);
  Selection sel = select(evaluated, selection_rng);

  const auto& space = config.search_space;
  const auto mutated = [&](const Genome& g, Rng& rng) {
    return config.mutation_rate ? mutate_with_rate(g, space, *config.mutation_rate, rng) : mutate(g, space, rng);
  };

  const std::size_t n_parents = sel.parents.size();
  std::vector<Individual> children(n_parents);
  const auto n_units = static_cast<std::ptrdiff_t>((n_parents + 1) / 2);

  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto make_pair_children = [&](std::ptrdiff_t p) {
    try {
      const auto a = static_cast<std::size_t>(2 * p);
      Rng rng = make_stream(config.master_seed, StreamTag::breeding, gen, static_cast<std::uint64_t>(p));
      if (a + 1 == n_parents) {
        children[a].genome = mutated(sel.parents[a].genome, rng);
        return;
      }
      const Genome& first = sel.parents[a].genome;
      const Genome& second = sel.parents[a + 1].genome;
      Genome c1 = first;
      Genome c2 = second;
      if (uniform01(rng) < config.crossover_rate) {
        const auto [k1, k2] = sample_cross_points(first, second, rng);
        std::tie(c1, c2) = splice(first, second, k1, k2);
      }
      children[a].genome = mutated(c1, rng);
      children[a + 1].genome = mutated(c2, rng);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  if (policy == ExecutionPolicy::serial) {
    for (std::ptrdiff_t p = 0; p < n_units; ++p) make_pair_children(p);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t p = 0; p < n_units; ++p) make_pair_children(p);
  }
  if (failure) std::rethrow_exception(failure);

  Population next = std::move(sel.elites);
  next.reserve(next.size() + children.size());
  for (auto& c : children) next.push_back(std::move(c));
  // ceil(T/10) + floor(9T/10) == T, so this only guards the invariant.
  next.resize(static_cast<std::size_t>(config.population_size));
  return next;
}

StepResult step_generation(Population population, const EngineConfig& config, FitnessEvaluator& evaluator,
                           FitnessCache& cache, int generation, ExecutionPolicy policy) {
  if (population.size() != static_cast<std::size_t>(config.population_size))
    throw ContractError(fmt::format("population has {} individuals, expected {}", population.size(),
                                    config.population_size));
  const auto tally = evaluate_population(population, evaluator, cache, config.search_space);
  StepResult out;
  out.stats = summarize(population, generation, tally);
  out.next = breed(population, config, generation, policy);
  return out;
}

EvolutionState initial_state(const EngineConfig& config, ExecutionPolicy policy) {
  EvolutionState s;
  s.population = initialize_population(config, policy);
  return s;
}

EvolutionReport continue_evolution(EvolutionState& state, const EngineConfig& config, FitnessEvaluator& evaluator,
                                   const RunHooks& hooks) {
  if (auto p = config.problems(); !p.empty()) throw ConfigError(std::move(p));
  int completed_here = 0;
  while (state.generation < config.generations) {
    if (hooks.stop_after && completed_here >= *hooks.stop_after) break;
    const int g = state.generation;
    // Keep the evaluated population around to pick the generation's best.
    Population evaluated = std::move(state.population);
    const auto tally = evaluate_population(evaluated, evaluator, state.cache, config.search_space);
    auto stats = summarize(evaluated, g, tally);
    const Individual& best = best_of(evaluated);
    if (!state.best || *best.fitness > *state.best->fitness) state.best = best;

    state.population = breed(evaluated, config, g, hooks.policy);
    state.history.push_back(stats);
    state.generation = g + 1;
    ++completed_here;
    spdlog::info("generation {}: best {:.6f} mean {:.6f} median {:.6f} ({} evaluated, {} cached)", g,
                 stats.best_fitness, stats.mean_fitness, stats.median_fitness, stats.evaluations_run,
                 stats.cache_hits);
    if (hooks.after_generation) hooks.after_generation(state);
  }

  EvolutionReport report;
  report.config = config;
  report.generations = state.history;
  if (state.best) report.best = *state.best;
  report.complete = state.generation >= config.generations;
  return report;
}

EvolutionReport evolve(const EngineConfig& config, FitnessEvaluator& evaluator, const RunHooks& hooks) {
  EvolutionState state = initial_state(config, hooks.policy);
  return continue_evolution(state, config, evaluator, hooks);
}

std::unique_ptr<FitnessEvaluator> make_evaluator(const EvaluatorSettings& settings) {
  if (settings.kind == EvaluatorKind::surrogate) return std::make_unique<SurrogateEvaluator>();
  std::vector<std::unique_ptr<WorkerChannel>> channels;
  for (const auto& endpoint : settings.workers) channels.push_back(make_channel(endpoint));
  const auto timeout = std::chrono::milliseconds(static_cast<std::int64_t>(settings.timeout_seconds * 1000.0));
  auto pool = std::make_unique<WorkerPool>(std::move(channels), timeout, settings.max_retries);
  return std::make_unique<WorkerPoolEvaluator>(std::move(pool), RequestTemplate{settings.dataset, settings.train},
                                               settings.parallelism);
}

}  // namespace gennet
