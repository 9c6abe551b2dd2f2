#include "gennet/genome.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace gennet {

namespace {

constexpr int kCodecKernels[] = {3, 5, 7};
constexpr IntRange kCodecPooling{0, 2};
constexpr IntRange kCodecHiddenActivation{0, 4};
constexpr IntRange kCodecDropout{0, 10};
constexpr IntRange kCodecOptimizer{0, 6};

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string describe(const std::vector<Violation>& violations) {
  std::vector<std::string> parts;
  parts.reserve(violations.size());
  for (const auto& v : violations) parts.push_back(v.locus + ": " + v.message);
  return "invalid genome: " + join(parts, "; ");
}

bool codec_kernel(int k) { return std::ranges::find(kCodecKernels, k) != std::end(kCodecKernels); }

// Walks every locus once. Codec-domain failures are reported first; the
// search-space range is only consulted for loci inside the codec domain.
class Checker {
 public:
  explicit Checker(const SearchSpace* space) : space_(space) {}

  void check(const Genome& g) {
    if (g.num_classes < 2) add("num_classes", "class count must be at least 2");
    if (g.conv_blocks.empty()) add("conv_blocks", "at least one convolutional block is required");
    if (g.fc_blocks.size() < 2)
      add("fc_blocks", "at least one hidden block plus the output block is required");

    for (std::size_t i = 0; i < g.conv_blocks.size(); ++i) check_conv(g.conv_blocks[i], i);
    auto hidden = g.hidden_fc_blocks();
    for (std::size_t i = 0; i < hidden.size(); ++i) check_hidden_fc(hidden[i], i);
    if (!g.fc_blocks.empty()) check_output(g.fc_blocks.back(), g.fc_blocks.size() - 1, g.num_classes);

    const int opt = static_cast<int>(g.optimizer);
    if (!kCodecOptimizer.contains(opt))
      add("optimizer", fmt::format("optimizer code {} out of range", opt));
    else if (space_ && !space_->optimizer.contains(opt))
      add("optimizer", "optimizer out of range");
  }

  std::vector<Violation> take() { return std::move(out_); }

 private:
  void add(std::string locus, std::string message) {
    out_.push_back({std::move(locus), std::move(message)});
  }

  void check_conv(const ConvBlock& b, std::size_t i) {
    const auto at = [i](std::string_view f) { return fmt::format("conv_blocks[{}].{}", i, f); };
    if (b.filters < 1)
      add(at("filters"), "filters must be positive");
    else if (space_ && !space_->conv_filters.contains(b.filters))
      add(at("filters"), "filters out of range");

    if (!codec_kernel(b.kernel))
      add(at("kernel"), fmt::format("kernel size {} not in {{3,5,7}}", b.kernel));
    else if (space_ && std::ranges::find(space_->kernel_sizes, b.kernel) == space_->kernel_sizes.end())
      add(at("kernel"), "kernel size out of range");

    const int pool = static_cast<int>(b.pooling);
    if (!kCodecPooling.contains(pool))
      add(at("pooling"), fmt::format("pooling code {} out of range", pool));
    else if (space_ && !space_->pooling.contains(pool))
      add(at("pooling"), "pooling out of range");

    if (space_ && !space_->batch_norm.contains(b.batch_norm ? 1 : 0))
      add(at("batch_norm"), "batch_norm out of range");
    check_activation(at("activation"), b.activation);
    check_dropout(at("dropout"), b.dropout);
  }

  void check_hidden_fc(const FcBlock& b, std::size_t i) {
    const auto at = [i](std::string_view f) { return fmt::format("fc_blocks[{}].{}", i, f); };
    if (b.units < 1)
      add(at("units"), "units must be positive");
    else if (space_ && !space_->fc_units.contains(b.units))
      add(at("units"), "units out of range");
    if (space_ && !space_->batch_norm.contains(b.batch_norm ? 1 : 0))
      add(at("batch_norm"), "batch_norm out of range");
    check_activation(at("activation"), b.activation);
    check_dropout(at("dropout"), b.dropout);
  }

  void check_output(const FcBlock& b, std::size_t i, int num_classes) {
    const auto at = [i](std::string_view f) { return fmt::format("fc_blocks[{}].{}", i, f); };
    if (b.units != num_classes)
      add(at("units"), fmt::format("output block must have {} units", num_classes));
    if (b.batch_norm) add(at("batch_norm"), "output block must not use batch norm");
    if (b.activation != Activation::softmax) add(at("activation"), "output block must use Softmax");
    if (b.dropout != 0) add(at("dropout"), "output block must not use dropout");
  }

  void check_activation(std::string locus, Activation a) {
    const int code = static_cast<int>(a);
    if (!kCodecHiddenActivation.contains(code))
      add(std::move(locus), code == static_cast<int>(Activation::softmax)
                                ? "Softmax is reserved for the output block"
                                : fmt::format("activation code {} out of range", code));
    else if (space_ && !space_->activation.contains(code))
      add(std::move(locus), "activation out of range");
  }

  void check_dropout(std::string locus, int d) {
    if (!kCodecDropout.contains(d))
      add(std::move(locus), fmt::format("dropout code {} out of range", d));
    else if (space_ && !space_->dropout.contains(d))
      add(std::move(locus), "dropout out of range");
  }

  const SearchSpace* space_;
  std::vector<Violation> out_;
};

void append_loci(const Genome& g, std::vector<int>& out) {
  for (const auto& b : g.conv_blocks) {
    out.insert(out.end(), {b.filters, b.kernel, static_cast<int>(b.pooling), b.batch_norm ? 1 : 0,
                           static_cast<int>(b.activation), b.dropout});
  }
  for (const auto& b : g.fc_blocks) {
    out.insert(out.end(),
               {b.units, b.batch_norm ? 1 : 0, static_cast<int>(b.activation), b.dropout});
  }
  out.push_back(static_cast<int>(g.optimizer));
}

bool bit(int v, const std::string& locus) {
  if (v != 0 && v != 1) throw LocusRangeError(locus, fmt::format("batch_norm code {} not in {{0,1}}", v));
  return v == 1;
}

int draw(Rng& rng, IntRange r) { return uniform_int(rng, r.lo, r.hi); }

}  // namespace

std::string_view to_string(Pooling p) {
  switch (p) {
    case Pooling::none: return "none";
    case Pooling::max: return "max";
    case Pooling::average: return "average";
  }
  return "unknown";
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::trelu: return "TReLU";
    case Activation::elu: return "ELU";
    case Activation::prelu: return "PReLU";
    case Activation::leaky_relu: return "LeakyReLU";
    case Activation::relu: return "ReLU";
    case Activation::softmax: return "Softmax";
  }
  return "unknown";
}

std::string_view to_string(Optimizer o) {
  switch (o) {
    case Optimizer::sgd: return "SGD";
    case Optimizer::rmsprop: return "RMSprop";
    case Optimizer::adagrad: return "Adagrad";
    case Optimizer::adadelta: return "Adadelta";
    case Optimizer::adam: return "Adam";
    case Optimizer::adamax: return "Adamax";
    case Optimizer::nadam: return "Nadam";
  }
  return "unknown";
}

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error("invalid configuration: " + join(problems, "; ")),
      problems_(std::move(problems)) {}

LocusRangeError::LocusRangeError(std::string locus, std::string message)
    : GenomeError(locus + ": " + message), locus_(std::move(locus)) {}

ValidationError::ValidationError(std::vector<Violation> violations)
    : GenomeError(describe(violations)), violations_(std::move(violations)) {}

std::vector<std::string> SearchSpace::problems() const {
  std::vector<std::string> out;
  const auto within = [&](std::string_view name, IntRange r, IntRange domain) {
    if (r.empty())
      out.push_back(fmt::format("{}: empty range [{}, {}]", name, r.lo, r.hi));
    else if (r.lo < domain.lo || r.hi > domain.hi)
      out.push_back(fmt::format("{}: [{}, {}] exceeds [{}, {}]", name, r.lo, r.hi, domain.lo, domain.hi));
  };
  constexpr int kWide = 1 << 20;
  within("filters_range", conv_filters, {1, kWide});
  within("units_range", fc_units, {1, kWide});
  within("pooling_range", pooling, kCodecPooling);
  within("batch_norm_range", batch_norm, {0, 1});
  within("activation_range", activation, kCodecHiddenActivation);
  within("dropout_code_range", dropout, kCodecDropout);
  within("optimizer_range", optimizer, kCodecOptimizer);
  within("init_conv_range", init_conv_blocks, {1, kWide});
  within("init_hidden_fc_range", init_hidden_fc_blocks, {1, kWide});
  if (kernel_sizes.empty()) out.push_back("kernel_sizes: empty set");
  for (int k : kernel_sizes)
    if (!codec_kernel(k)) out.push_back(fmt::format("kernel_sizes: {} not in {{3,5,7}}", k));
  return out;
}

int code_length(const Genome& genome) {
  return kConvLoci * static_cast<int>(genome.conv_blocks.size()) +
         kFcLoci * static_cast<int>(genome.fc_blocks.size());
}

std::vector<Violation> check_well_formed(const Genome& genome) {
  Checker c(nullptr);
  c.check(genome);
  return c.take();
}

std::vector<Violation> validate(const Genome& genome, const SearchSpace& space) {
  Checker c(&space);
  c.check(genome);
  return c.take();
}

std::vector<int> encode(const Genome& genome) {
  if (auto v = check_well_formed(genome); !v.empty()) throw ValidationError(std::move(v));
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(code_length(genome)) + 1);
  append_loci(genome, out);
  return out;
}

Genome decode(std::span<const int> code, int conv_count, int num_classes) {
  const auto n = static_cast<std::ptrdiff_t>(code.size());
  const std::ptrdiff_t fc_loci = n - 1 - static_cast<std::ptrdiff_t>(kConvLoci) * conv_count;
  if (conv_count < 1 || fc_loci < 2 * kFcLoci || fc_loci % kFcLoci != 0) {
    throw MalformedCodeError(fmt::format(
        "code of length {} does not split into {} conv blocks, at least 2 fc blocks and an optimizer",
        code.size(), conv_count));
  }

  Genome g;
  g.num_classes = num_classes;
  std::size_t pos = 0;
  for (int i = 0; i < conv_count; ++i, pos += kConvLoci) {
    const auto at = [i](std::string_view f) { return fmt::format("conv_blocks[{}].{}", i, f); };
    g.conv_blocks.push_back(ConvBlock{code[pos], code[pos + 1], static_cast<Pooling>(code[pos + 2]),
                                      bit(code[pos + 3], at("batch_norm")),
                                      static_cast<Activation>(code[pos + 4]), code[pos + 5]});
  }
  const auto fc_count = static_cast<int>(fc_loci / kFcLoci);
  for (int i = 0; i < fc_count; ++i, pos += kFcLoci) {
    const auto at = [i](std::string_view f) { return fmt::format("fc_blocks[{}].{}", i, f); };
    g.fc_blocks.push_back(FcBlock{code[pos], bit(code[pos + 1], at("batch_norm")),
                                  static_cast<Activation>(code[pos + 2]), code[pos + 3]});
  }
  g.optimizer = static_cast<Optimizer>(code[pos]);

  if (auto v = check_well_formed(g); !v.empty()) throw LocusRangeError(v.front().locus, v.front().message);
  return g;
}

std::uint64_t canonical_hash(const Genome& genome) {
  std::vector<int> loci;
  loci.reserve(static_cast<std::size_t>(code_length(genome)) + 1);
  append_loci(genome, loci);
  loci.push_back(genome.num_classes);

  std::uint64_t h = 0xCBF29CE484222325ull;
  for (int v : loci) {
    auto x = static_cast<std::uint64_t>(static_cast<std::int64_t>(v));
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (x >> (8 * byte)) & 0xFFu;
      h *= 0x100000001B3ull;
    }
  }
  return splitmix64(h);
}

Genome random_genome(const SearchSpace& space, int num_classes, Rng& rng) {
  auto problems = space.problems();
  if (num_classes < 2) problems.push_back("num_classes: must be at least 2");
  if (!problems.empty()) throw ConfigError(std::move(problems));

  Genome g;
  g.num_classes = num_classes;
  const int n_conv = draw(rng, space.init_conv_blocks);
  const int n_hidden = draw(rng, space.init_hidden_fc_blocks);
  const auto n_kernels = static_cast<int>(space.kernel_sizes.size());

  g.conv_blocks.reserve(static_cast<std::size_t>(n_conv));
  for (int i = 0; i < n_conv; ++i) {
    ConvBlock b;
    b.filters = draw(rng, space.conv_filters);
    b.kernel = space.kernel_sizes[static_cast<std::size_t>(uniform_int(rng, 0, n_kernels - 1))];
    b.pooling = static_cast<Pooling>(draw(rng, space.pooling));
    b.batch_norm = draw(rng, space.batch_norm) == 1;
    b.activation = static_cast<Activation>(draw(rng, space.activation));
    b.dropout = draw(rng, space.dropout);
    g.conv_blocks.push_back(b);
  }
  g.fc_blocks.reserve(static_cast<std::size_t>(n_hidden) + 1);
  for (int i = 0; i < n_hidden; ++i) {
    FcBlock b;
    b.units = draw(rng, space.fc_units);
    b.batch_norm = draw(rng, space.batch_norm) == 1;
    b.activation = static_cast<Activation>(draw(rng, space.activation));
    b.dropout = draw(rng, space.dropout);
    g.fc_blocks.push_back(b);
  }
  g.fc_blocks.push_back(FcBlock::output(num_classes));
  g.optimizer = static_cast<Optimizer>(draw(rng, space.optimizer));
  return g;
}

std::string hash_hex(std::uint64_t key) { return fmt::format("{:016x}", key); }

}  // namespace gennet
