#include "gennet/run_store.hpp"

#include <fstream>

#include <fmt/format.h>

#include "gennet/config.hpp"
#include "gennet/genome_json.hpp"
#include "gennet/io.hpp"

namespace gennet {

using nlohmann::json;

namespace {

constexpr std::string_view kFormat = "gennet-checkpoint";
constexpr int kVersion = 1;

json individual_to_json(const Individual& ind) {
  return json{{"genome", genome_to_json(ind.genome)},
              {"fitness", ind.fitness ? json(*ind.fitness) : json(nullptr)}};
}

Individual individual_from_json(const json& doc) {
  Individual ind;
  ind.genome = genome_from_json(doc.at("genome"));
  const auto& f = doc.at("fitness");
  if (!f.is_null()) ind.fitness = f.get<double>();
  return ind;
}

json stats_to_json(const GenerationStats& s) {
  return json{{"generation", s.generation},         {"best_fitness", s.best_fitness},
              {"mean_fitness", s.mean_fitness},     {"median_fitness", s.median_fitness},
              {"best_genome_hash", hash_hex(s.best_genome_hash)},
              {"evaluations_run", s.evaluations_run}, {"cache_hits", s.cache_hits},
              {"wall_seconds", s.wall_seconds}};
}

std::uint64_t parse_key(const std::string& hex) {
  std::size_t used = 0;
  const auto key = std::stoull(hex, &used, 16);
  if (used != hex.size()) throw CheckpointError("bad hash key '" + hex + "'");
  return key;
}

GenerationStats stats_from_json(const json& doc) {
  GenerationStats s;
  s.generation = doc.at("generation").get<int>();
  s.best_fitness = doc.at("best_fitness").get<double>();
  s.mean_fitness = doc.at("mean_fitness").get<double>();
  s.median_fitness = doc.at("median_fitness").get<double>();
  s.best_genome_hash = parse_key(doc.at("best_genome_hash").get<std::string>());
  s.evaluations_run = doc.at("evaluations_run").get<int>();
  s.cache_hits = doc.at("cache_hits").get<int>();
  s.wall_seconds = doc.at("wall_seconds").get<double>();
  return s;
}

}  // namespace

json checkpoint_to_json(const EngineConfig& config, const EvolutionState& state) {
  json population = json::array();
  for (const auto& ind : state.population) population.push_back(individual_to_json(ind));
  json cache = json::array();
  for (const auto& [key, fitness] : state.cache.entries()) cache.push_back(json::array({hash_hex(key), fitness}));
  json history = json::array();
  for (const auto& s : state.history) history.push_back(stats_to_json(s));

  return json{{"format", kFormat},
              {"version", kVersion},
              {"config", config_to_json(config)},
              {"master_seed", config.master_seed},
              {"generation", state.generation},
              {"population", std::move(population)},
              {"cache", std::move(cache)},
              {"history", std::move(history)},
              {"best", state.best ? individual_to_json(*state.best) : json(nullptr)}};
}

Checkpoint checkpoint_from_json(const json& doc) {
  try {
    if (doc.at("format").get<std::string>() != kFormat) throw CheckpointError("not a checkpoint document");
    if (doc.at("version").get<int>() != kVersion) throw CheckpointError("unsupported checkpoint version");

    Checkpoint cp;
    cp.config = config_from_json(doc.at("config"));
    if (doc.at("master_seed").get<std::uint64_t>() != cp.config.master_seed)
      throw CheckpointError("master_seed disagrees with the stored config");

    auto& st = cp.state;
    st.generation = doc.at("generation").get<int>();
    for (const auto& ind : doc.at("population")) st.population.push_back(individual_from_json(ind));
    for (const auto& entry : doc.at("cache")) {
      if (!entry.is_array() || entry.size() != 2) throw CheckpointError("bad cache entry");
      st.cache.put(parse_key(entry[0].get<std::string>()), entry[1].get<double>());
    }
    for (const auto& s : doc.at("history")) st.history.push_back(stats_from_json(s));
    if (const auto& best = doc.at("best"); !best.is_null()) st.best = individual_from_json(best);

    if (st.population.size() != static_cast<std::size_t>(cp.config.population_size))
      throw CheckpointError(fmt::format("population has {} individuals, config says {}", st.population.size(),
                                        cp.config.population_size));
    if (st.generation < 0 || st.history.size() != static_cast<std::size_t>(st.generation))
      throw CheckpointError("generation index does not match the recorded history");
    if (st.generation > 0 && !st.best) throw CheckpointError("missing best individual");
    return cp;
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const EngineConfig& config, const EvolutionState& state) {
  write_file_atomically(path, checkpoint_to_json(config, state).dump() + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
  }
  return checkpoint_from_json(doc);
}

std::string generations_csv(std::span<const GenerationStats> history) {
  std::string out(kGenerationsCsvHeader);
  out += '\n';
  for (const auto& s : history) {
    out += fmt::format("{},{:.6f},{:.6f},{:.6f},{},{},{:.3f}\n", s.generation, s.best_fitness, s.mean_fitness,
                       s.median_fitness, s.evaluations_run, s.cache_hits, s.wall_seconds);
  }
  return out;
}

std::filesystem::path RunDirectory::best_of_generation(int generation) const {
  return best_dir() / fmt::format("gen_{:03d}.json", generation);
}

void RunDirectory::create() const { std::filesystem::create_directories(best_dir()); }

void RunDirectory::record_generation(const EngineConfig& config, const EvolutionState& state) const {
  write_file_atomically(generations(), generations_csv(state.history));
  if (!state.history.empty() && !state.population.empty()) {
    // Elites lead the bred population, best first.
    const auto& leader = state.population.front();
    if (canonical_hash(leader.genome) == state.history.back().best_genome_hash)
      write_genome_file(best_of_generation(state.history.back().generation), leader.genome);
  }
  save_checkpoint(checkpoint(), config, state);
}

void RunDirectory::record_completion(const EvolutionReport& report) const {
  write_file_atomically(generations(), generations_csv(report.generations));
  if (!report.generations.empty()) write_genome_file(best_genome(), report.best.genome);
}

}  // namespace gennet
