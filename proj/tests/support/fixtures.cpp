#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <unistd.h>

namespace gennet::testing {

const std::vector<int>& vgg19_code() {
  static const std::vector<int> code = {
      64,  3, 0, 1, 4, 0,  64,  3, 2, 1, 4, 0,  128, 3, 0, 1, 4, 0,  128, 3, 2, 1, 4, 0,
      256, 3, 0, 1, 4, 0,  256, 3, 0, 1, 4, 0,  256, 3, 0, 1, 4, 0,  256, 3, 2, 1, 4, 0,
      512, 3, 0, 1, 4, 0,  512, 3, 2, 1, 4, 0,  512, 3, 0, 1, 4, 0,  512, 3, 2, 1, 4, 0,
      512, 3, 0, 1, 4, 0,  512, 3, 2, 1, 4, 0,  512, 3, 0, 1, 4, 0,  512, 3, 2, 1, 4, 0,
      4096, 1, 4, 0,  4096, 1, 4, 0,  1000, 0, 5, 0,
      0,
  };
  return code;
}

Genome vgg19() {
  Genome g;
  g.num_classes = 1000;
  const int widths[] = {64, 64, 128, 128, 256, 256, 256, 256, 512, 512, 512, 512, 512, 512, 512, 512};
  // 0-based blocks carrying pooling code 2 in the reference list.
  const int pooled[] = {1, 3, 7, 9, 11, 13, 15};
  for (int i = 0; i < 16; ++i) {
    ConvBlock b{widths[i], 3, Pooling::none, true, Activation::relu, 0};
    for (int p : pooled)
      if (p == i) b.pooling = Pooling::average;
    g.conv_blocks.push_back(b);
  }
  g.fc_blocks.push_back({4096, true, Activation::relu, 0});
  g.fc_blocks.push_back({4096, true, Activation::relu, 0});
  g.fc_blocks.push_back(FcBlock::output(1000));
  g.optimizer = Optimizer::sgd;
  return g;
}

SearchSpace vgg_space() {
  SearchSpace s;
  s.fc_units = {16, 4096};
  return s;
}

Genome mnist_best() {
  Genome g;
  g.num_classes = 10;
  g.conv_blocks = {
      {419, 5, Pooling::none, true, Activation::elu, 4},
      {403, 5, Pooling::none, true, Activation::elu, 0},
      {288, 7, Pooling::average, true, Activation::prelu, 0},
  };
  g.fc_blocks = {
      {194, true, Activation::relu, 6},
      {414, true, Activation::elu, 9},
      {356, true, Activation::trelu, 1},
      FcBlock::output(10),
  };
  g.optimizer = Optimizer::adamax;
  return g;
}

Genome minimal_genome(int num_classes) {
  Genome g;
  g.num_classes = num_classes;
  g.conv_blocks = {{16, 3, Pooling::none, false, Activation::trelu, 0}};
  g.fc_blocks = {{16, false, Activation::trelu, 0}, FcBlock::output(num_classes)};
  g.optimizer = Optimizer::sgd;
  return g;
}

Genome tagged_genome(int conv_blocks, int hidden_fc_blocks, int tag, int num_classes) {
  Genome g;
  g.num_classes = num_classes;
  for (int i = 0; i < conv_blocks; ++i)
    g.conv_blocks.push_back({16 + tag * 100 + i, 3 + 2 * (i % 3), static_cast<Pooling>(i % 3), i % 2 == 1,
                             static_cast<Activation>(tag % 5), (i + tag) % 11});
  for (int i = 0; i < hidden_fc_blocks; ++i)
    g.fc_blocks.push_back({16 + tag * 100 + 50 + i, i % 2 == 0, static_cast<Activation>((tag + i) % 5), i % 11});
  g.fc_blocks.push_back(FcBlock::output(num_classes));
  g.optimizer = static_cast<Optimizer>(tag % 7);
  return g;
}

double chi_square_p(const std::vector<std::uint64_t>& observed, const std::vector<double>& expected) {
  if (observed.size() != expected.size() || observed.size() < 2)
    throw std::invalid_argument("chi_square_p: size mismatch");
  std::uint64_t total = 0;
  for (auto o : observed) total += o;
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = expected[i] * static_cast<double>(total);
    const double d = static_cast<double>(observed[i]) - e;
    stat += d * d / e;
  }
  boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

TempDir::TempDir(const std::string& stem) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          (stem + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

EngineConfig small_config(std::uint64_t seed, int population, int generations) {
  EngineConfig c;
  c.population_size = population;
  c.generations = generations;
  c.master_seed = seed;
  c.evaluator.kind = EvaluatorKind::surrogate;
  return c;
}

}  // namespace gennet::testing
