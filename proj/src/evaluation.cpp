#include "gennet/evaluation.hpp"

#include <algorithm>
#include <bitset>
#include <cmath>

#include "gennet/genome_json.hpp"

namespace gennet {

using nlohmann::json;

EvaluationResult EvaluationResult::failure(std::string id, std::string message) {
  EvaluationResult r;
  r.id = std::move(id);
  r.status = EvalStatus::error;
  r.message = std::move(message);
  return r;
}

json train_to_json(const TrainSettings& t) {
  return json{{"max_epochs", t.max_epochs},
              {"batch_size", t.batch_size},
              {"learning_rate", t.learning_rate},
              {"lr_decay_per_epoch", t.lr_decay_per_epoch},
              {"validation_fraction", t.validation_fraction},
              {"augment", t.augment},
              {"train_subset", t.train_subset},
              {"seed", t.seed}};
}

TrainSettings train_from_json(const json& doc) {
  TrainSettings t;
  t.max_epochs = doc.at("max_epochs").get<int>();
  t.batch_size = doc.at("batch_size").get<int>();
  t.learning_rate = doc.at("learning_rate").get<double>();
  t.lr_decay_per_epoch = doc.at("lr_decay_per_epoch").get<double>();
  t.validation_fraction = doc.at("validation_fraction").get<double>();
  t.augment = doc.at("augment").get<bool>();
  t.train_subset = doc.at("train_subset").get<int>();
  t.seed = doc.at("seed").get<std::uint64_t>();
  return t;
}

json request_to_json(const EvaluationRequest& request) {
  return json{{"id", request.id},
              {"genome", genome_to_json(request.genome)},
              {"dataset", request.dataset},
              {"train", train_to_json(request.train)}};
}

EvaluationRequest request_from_json(const json& doc) {
  EvaluationRequest r;
  r.id = doc.at("id").get<std::string>();
  r.genome = genome_from_json(doc.at("genome"));
  r.dataset = doc.at("dataset").get<std::string>();
  r.train = train_from_json(doc.at("train"));
  return r;
}

std::string serialize_request(const EvaluationRequest& request) { return request_to_json(request).dump(); }

json result_to_json(const EvaluationResult& result) {
  json out{{"id", result.id}, {"status", result.ok() ? "ok" : "error"}};
  if (result.fitness) out["fitness"] = *result.fitness;
  if (result.test_accuracy) out["test_accuracy"] = *result.test_accuracy;
  if (result.epochs_run) out["epochs_run"] = *result.epochs_run;
  if (result.wall_seconds) out["wall_seconds"] = *result.wall_seconds;
  if (result.message) out["message"] = *result.message;
  return out;
}

EvaluationResult parse_result(std::string_view line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("response is not JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ProtocolError("response is not a JSON object");

  const auto id = doc.find("id");
  if (id == doc.end() || !id->is_string()) throw ProtocolError("response id missing or not a string");
  const auto status = doc.find("status");
  if (status == doc.end() || !status->is_string()) throw ProtocolError("response status missing");

  EvaluationResult r;
  r.id = id->get<std::string>();
  const auto s = status->get<std::string>();
  if (s == "ok")
    r.status = EvalStatus::ok;
  else if (s == "error")
    r.status = EvalStatus::error;
  else
    throw ProtocolError("unknown response status '" + s + "'");

  const auto number = [&](const char* key) -> std::optional<double> {
    auto it = doc.find(key);
    if (it == doc.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) throw ProtocolError(std::string("response field '") + key + "' is not a number");
    return it->get<double>();
  };
  r.fitness = number("fitness");
  r.test_accuracy = number("test_accuracy");
  r.wall_seconds = number("wall_seconds");
  if (auto e = number("epochs_run")) r.epochs_run = static_cast<int>(*e);
  if (auto it = doc.find("message"); it != doc.end() && it->is_string()) r.message = it->get<std::string>();

  if (r.ok()) {
    if (!r.fitness) throw ProtocolError("ok response without fitness");
    if (!(*r.fitness >= 0.0 && *r.fitness <= 1.0)) throw ProtocolError("fitness outside [0,1]");
  }
  return r;
}

double surrogate_fitness(const Genome& genome) {
  const auto hidden = genome.hidden_fc_blocks();
  const double blocks = static_cast<double>(genome.conv_blocks.size() + hidden.size());
  if (blocks == 0.0) return 0.0;

  int bn = 0;
  int drop_twentieths = 0;
  std::bitset<8> activations;
  const auto tally = [&](const auto& b) {
    bn += b.batch_norm ? 1 : 0;
    drop_twentieths += b.dropout;
    activations.set(static_cast<std::size_t>(b.activation) & 7u);
  };
  std::ranges::for_each(genome.conv_blocks, tally);
  std::ranges::for_each(hidden, tally);

  const double depth = static_cast<double>(genome.conv_blocks.size()) - 10.0;
  const double mean_drop = drop_twentieths / 20.0 / blocks;
  const double f = 0.4 * std::exp(-depth * depth / 18.0) + 0.2 * (bn / blocks) +
                   0.2 * (1.0 - std::min(std::abs(mean_drop - 0.25), 0.25) / 0.25) +
                   0.2 * static_cast<double>(activations.count()) / 5.0;
  return std::clamp(f, 0.0, 1.0);
}

std::vector<double> surrogate_fitness_batch(std::span<const Genome> genomes, ExecutionPolicy policy) {
  std::vector<double> out(genomes.size());
  const auto n = static_cast<std::ptrdiff_t>(genomes.size());
  if (policy == ExecutionPolicy::serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = surrogate_fitness(genomes[static_cast<std::size_t>(i)]);
    return out;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = surrogate_fitness(genomes[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<EvaluationResult> SurrogateEvaluator::evaluate(std::span<const Genome> genomes) {
  const auto fitness = surrogate_fitness_batch(genomes, policy_);
  std::vector<EvaluationResult> out(genomes.size());
  for (std::size_t i = 0; i < genomes.size(); ++i) {
    out[i].status = EvalStatus::ok;
    out[i].fitness = fitness[i];
    out[i].wall_seconds = 0.0;
  }
  return out;
}

}  // namespace gennet
