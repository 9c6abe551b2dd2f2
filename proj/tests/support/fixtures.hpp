#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gennet/engine.hpp"
#include "gennet/genome.hpp"

namespace gennet::testing {

/// VGG-19 as a flat vector, block by block.
const std::vector<int>& vgg19_code();

/// VGG-19 built from blocks (16 conv, 2 hidden fc of 4096, 1000-way output, SGD).
Genome vgg19();

/// Search space that admits VGG-19's 4096-unit fc blocks.
SearchSpace vgg_space();

/// Best MNIST network reported for the reference experiment: 3 conv blocks,
/// 3 hidden fc blocks, 10-way output, Adamax.
Genome mnist_best();

/// {[16,3,0,0,0,0]}, {[16,0,0,0],[C,0,5,0]}, O=0.
Genome minimal_genome(int num_classes = 10);

/// Genome with the given conv/hidden fc counts, every locus distinct enough to
/// trace where blocks end up after a splice.
Genome tagged_genome(int conv_blocks, int hidden_fc_blocks, int tag, int num_classes = 10);

/// Upper-tail p-value of Pearson's chi-square statistic for observed counts
/// against expected probabilities.
double chi_square_p(const std::vector<std::uint64_t>& observed, const std::vector<double>& expected);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& stem);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string slurp(const std::filesystem::path& path);
void spit(const std::filesystem::path& path, const std::string& text);

/// Small surrogate config for end-to-end runs.
EngineConfig small_config(std::uint64_t seed, int population = 20, int generations = 10);

}  // namespace gennet::testing
