#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gennet/genome.hpp"

namespace gennet::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kBadInput = 2,        // unreadable/invalid config, genome file or checkpoint
  kEvaluatorAbort = 3,  // every evaluation in a generation failed
};

struct RunOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<int> population;
  std::optional<int> generations;
  std::optional<std::string> evaluator;
  std::vector<std::string> workers;
  std::optional<int> parallelism;
  std::optional<std::filesystem::path> out;
  std::optional<int> stop_after;
  bool force = false;
};

struct ResumeOptions {
  std::filesystem::path checkpoint;
  std::vector<std::string> workers;
  std::optional<int> parallelism;
};

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err);
int cmd_resume(const ResumeOptions& options, std::ostream& out, std::ostream& err);
int cmd_inspect(const std::filesystem::path& genome_file, std::ostream& out, std::ostream& err);

/// One line per block plus the optimizer, e.g.
///   conv 1: 64 filters 3x3, no pooling, batch-norm on, ReLU, dropout 0%
std::string describe_genome(const Genome& genome);

/// Parses argv and dispatches to the commands above.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

/// Applies GENNET_LOG (trace|debug|info|warn|error|critical|off) to the default logger.
void configure_logging();

}  // namespace gennet::cli
