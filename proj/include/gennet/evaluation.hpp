#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gennet/genome.hpp"
#include "gennet/parallel.hpp"

namespace gennet {

/// Training protocol sent to workers. Defaults follow the reference setup:
/// 100 epochs, batch 256, learning rate 1e-4 with exponential decay,
/// 10% validation split, augmentation on.
struct TrainSettings {
  int max_epochs = 100;
  int batch_size = 256;
  double learning_rate = 0.0001;
  double lr_decay_per_epoch = 0.99;
  double validation_fraction = 0.1;
  bool augment = true;
  int train_subset = 0;  // 0 = whole training set
  std::uint64_t seed = 0;

  bool operator==(const TrainSettings&) const = default;
};

struct EvaluationRequest {
  std::string id;
  Genome genome;
  std::string dataset;
  TrainSettings train;
};

enum class EvalStatus { ok, error };

struct EvaluationResult {
  std::string id;
  EvalStatus status = EvalStatus::error;
  std::optional<double> fitness;  // validation accuracy in [0,1]
  std::optional<double> test_accuracy;
  std::optional<int> epochs_run;
  std::optional<double> wall_seconds;
  std::optional<std::string> message;

  bool ok() const { return status == EvalStatus::ok; }
  static EvaluationResult failure(std::string id, std::string message);
};

/// A response line that breaks the wire protocol.
class ProtocolError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Newline-delimited JSON, one object per line.
nlohmann::json request_to_json(const EvaluationRequest& request);
EvaluationRequest request_from_json(const nlohmann::json& doc);
std::string serialize_request(const EvaluationRequest& request);

nlohmann::json result_to_json(const EvaluationResult& result);
/// Schema check included: status=ok needs a fitness in [0,1]. Throws ProtocolError.
EvaluationResult parse_result(std::string_view line);

nlohmann::json train_to_json(const TrainSettings& t);
TrainSettings train_from_json(const nlohmann::json& doc);

/// Anything that turns genomes into fitness. Results are index-aligned with
/// the input; per-item failures come back as status=error results.
class FitnessEvaluator {
 public:
  virtual ~FitnessEvaluator() = default;
  virtual std::vector<EvaluationResult> evaluate(std::span<const Genome> genomes) = 0;
};

/// Deterministic stand-in for training:
///   0.4 * exp(-(N_C - 10)^2 / 18)
/// + 0.2 * fraction of non-output blocks with batch norm
/// + 0.2 * (1 - min(|mean dropout - 0.25|, 0.25) / 0.25)
/// + 0.2 * distinct hidden activation codes / 5
/// clamped to [0,1]. Averages run over conv and hidden fc blocks.
double surrogate_fitness(const Genome& genome);

/// Batch kernel; the serial policy is the reference for the parallel one.
std::vector<double> surrogate_fitness_batch(std::span<const Genome> genomes,
                                            ExecutionPolicy policy = ExecutionPolicy::parallel);

class SurrogateEvaluator final : public FitnessEvaluator {
 public:
  explicit SurrogateEvaluator(ExecutionPolicy policy = ExecutionPolicy::parallel) : policy_(policy) {}
  std::vector<EvaluationResult> evaluate(std::span<const Genome> genomes) override;

 private:
  ExecutionPolicy policy_;
};

}  // namespace gennet
