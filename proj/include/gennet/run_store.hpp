#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "gennet/engine.hpp"

namespace gennet {

/// Checkpoint missing, truncated or inconsistent.
class CheckpointError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  EngineConfig config;
  EvolutionState state;
};

nlohmann::json checkpoint_to_json(const EngineConfig& config, const EvolutionState& state);
Checkpoint checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const std::filesystem::path& path, const EngineConfig& config, const EvolutionState& state);
Checkpoint load_checkpoint(const std::filesystem::path& path);

inline constexpr std::string_view kGenerationsCsvHeader =
    "generation,best_fitness,mean_fitness,median_fitness,evaluations,cache_hits,wall_seconds";

/// Header plus one row per generation; fitness columns at 6 decimals.
std::string generations_csv(std::span<const GenerationStats> history);

/// Layout of a run directory:
///   config.json           resolved configuration
///   generations.csv       per-generation statistics
///   best/gen_NNN.json     best genome of each generation
///   best_genome.json      best genome of the run (written on completion)
///   checkpoint.json       resumable state after the last completed generation
///   run.log               log output
struct RunDirectory {
  std::filesystem::path root;

  std::filesystem::path config() const { return root / "config.json"; }
  std::filesystem::path generations() const { return root / "generations.csv"; }
  std::filesystem::path best_dir() const { return root / "best"; }
  std::filesystem::path best_of_generation(int generation) const;
  std::filesystem::path best_genome() const { return root / "best_genome.json"; }
  std::filesystem::path checkpoint() const { return root / "checkpoint.json"; }
  std::filesystem::path log() const { return root / "run.log"; }

  void create() const;
  /// Rewrites generations.csv, the newest per-generation best and the checkpoint.
  void record_generation(const EngineConfig& config, const EvolutionState& state) const;
  void record_completion(const EvolutionReport& report) const;
};

}  // namespace gennet
