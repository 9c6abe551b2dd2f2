#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "gennet/genome.hpp"

namespace gennet {

/// A genome document could not be read; `field()` is a JSON path such as
/// `conv_blocks[2].kernel`.
class GenomeFormatError : public GenomeError {
 public:
  GenomeFormatError(std::string field, std::string message);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Genome document layout, shared with trainer workers:
//   {"num_classes": 10, "optimizer": 5,
//    "conv_blocks": [{"filters", "kernel", "pooling", "batch_norm", "activation", "dropout_pct"}],
//    "fc_blocks":   [{"filters", "batch_norm", "activation", "dropout_pct"}]}
// dropout_pct is an integer percentage, a multiple of 5 in [0, 50].
nlohmann::json genome_to_json(const Genome& genome);
Genome genome_from_json(const nlohmann::json& doc);

void write_genome_file(const std::filesystem::path& path, const Genome& genome);
Genome read_genome_file(const std::filesystem::path& path);

}  // namespace gennet
