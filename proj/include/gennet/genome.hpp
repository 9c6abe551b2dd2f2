#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gennet/random.hpp"

namespace gennet {

/// Loci per convolutional block: [filters, kernel, pooling, batch_norm, activation, dropout].
inline constexpr int kConvLoci = 6;
/// Loci per fully connected block: [units, batch_norm, activation, dropout].
inline constexpr int kFcLoci = 4;

enum class Pooling : int { none = 0, max = 1, average = 2 };

enum class Activation : int {
  trelu = 0,  // thresholded ReLU
  elu = 1,
  prelu = 2,
  leaky_relu = 3,
  relu = 4,
  softmax = 5,  // output block only
};

enum class Optimizer : int {
  sgd = 0,
  rmsprop = 1,
  adagrad = 2,
  adadelta = 3,
  adam = 4,
  adamax = 5,
  nadam = 6,
};

std::string_view to_string(Pooling p);
std::string_view to_string(Activation a);
std::string_view to_string(Optimizer o);

/// One [NSPBAD] block. Dropout is held in twentieths: 0..10 maps to 0.00..0.50.
struct ConvBlock {
  int filters = 16;
  int kernel = 3;
  Pooling pooling = Pooling::none;
  bool batch_norm = false;
  Activation activation = Activation::trelu;
  int dropout = 0;

  double dropout_probability() const { return dropout / 20.0; }
  bool operator==(const ConvBlock&) const = default;
};

/// One [NBAD] block.
struct FcBlock {
  int units = 16;
  bool batch_norm = false;
  Activation activation = Activation::trelu;
  int dropout = 0;

  double dropout_probability() const { return dropout / 20.0; }
  bool operator==(const FcBlock&) const = default;

  static FcBlock output(int num_classes) {
    return FcBlock{num_classes, false, Activation::softmax, 0};
  }
};

/// A sequential CNN architecture. The last fc block is always the
/// classifier: `num_classes` units, no batch norm, Softmax, no dropout.
struct Genome {
  std::vector<ConvBlock> conv_blocks;
  std::vector<FcBlock> fc_blocks;
  Optimizer optimizer = Optimizer::sgd;
  int num_classes = 0;

  std::span<const FcBlock> hidden_fc_blocks() const {
    return fc_blocks.empty() ? std::span<const FcBlock>{}
                             : std::span<const FcBlock>(fc_blocks).first(fc_blocks.size() - 1);
  }
  int learnable_layers() const { return static_cast<int>(conv_blocks.size() + fc_blocks.size()); }

  bool operator==(const Genome&) const = default;
};

struct IntRange {
  int lo = 0;
  int hi = 0;

  bool empty() const { return lo > hi; }
  bool contains(int v) const { return v >= lo && v <= hi; }
  bool operator==(const IntRange&) const = default;
};

/// Per-locus value ranges used for sampling, mutation and validation,
/// plus the block-count ranges used at initialization.
struct SearchSpace {
  IntRange conv_filters{16, 512};
  std::vector<int> kernel_sizes{3, 5, 7};
  IntRange pooling{0, 2};
  IntRange batch_norm{0, 1};
  IntRange activation{0, 4};
  IntRange dropout{0, 10};
  IntRange fc_units{16, 512};
  IntRange optimizer{0, 6};
  IntRange init_conv_blocks{1, 20};
  IntRange init_hidden_fc_blocks{1, 3};

  /// Problems with the space itself (empty ranges, codes outside the codec's domain).
  std::vector<std::string> problems() const;
  bool operator==(const SearchSpace&) const = default;
};

struct Violation {
  std::string locus;    // e.g. "conv[2].kernel"
  std::string message;  // e.g. "kernel size out of range"
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

class GenomeError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat vector length does not fit the conv/fc layout.
class MalformedCodeError : public GenomeError {
  using GenomeError::GenomeError;
};

/// A locus holds a value outside its domain.
class LocusRangeError : public GenomeError {
 public:
  LocusRangeError(std::string locus, std::string message);
  const std::string& locus() const { return locus_; }

 private:
  std::string locus_;
};

/// Genome fails structural or range checks; carries every violation found.
class ValidationError : public GenomeError {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// 6*N_C + 4*N_F; the trailing optimizer locus is not counted.
int code_length(const Genome& genome);

/// Checks the codec domain only: structure, output block, categorical codes
/// and positive widths. Unit counts are not bounded here, so reference
/// architectures wider than the search space still encode.
std::vector<Violation> check_well_formed(const Genome& genome);

/// Full check against `space`: well-formedness plus every locus inside its range.
std::vector<Violation> validate(const Genome& genome, const SearchSpace& space = {});

/// Conv loci, then fc loci, then the optimizer code. Throws ValidationError.
std::vector<int> encode(const Genome& genome);

/// Inverse of encode. Throws MalformedCodeError on a length mismatch and
/// LocusRangeError for the first locus outside the codec domain.
Genome decode(std::span<const int> code, int conv_count, int num_classes);

/// FNV-1a over the encoded loci and the class count, finished with a 64-bit mix.
std::uint64_t canonical_hash(const Genome& genome);

/// Uniform draw: block counts from the init ranges, every locus from its range,
/// then the output block appended.
Genome random_genome(const SearchSpace& space, int num_classes, Rng& rng);

std::string hash_hex(std::uint64_t key);

}  // namespace gennet
