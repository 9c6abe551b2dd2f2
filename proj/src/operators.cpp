#include "gennet/operators.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include <fmt/format.h>

namespace gennet {

namespace {

using ConvLoci = std::array<int, kConvLoci>;
using FcLoci = std::array<int, kFcLoci>;

ConvLoci loci(const ConvBlock& b) {
  return {b.filters, b.kernel, static_cast<int>(b.pooling), b.batch_norm ? 1 : 0,
          static_cast<int>(b.activation), b.dropout};
}

FcLoci loci(const FcBlock& b) {
  return {b.units, b.batch_norm ? 1 : 0, static_cast<int>(b.activation), b.dropout};
}

ConvBlock conv_from(const ConvLoci& v) {
  return {v[0], v[1], static_cast<Pooling>(v[2]), v[3] == 1, static_cast<Activation>(v[4]), v[5]};
}

FcBlock fc_from(const FcLoci& v) {
  return {v[0], v[1] == 1, static_cast<Activation>(v[2]), v[3]};
}

// Loci [0, offset) from `head`, [offset, end) from `tail`.
template <class Block>
Block merge_block(const Block& head, const Block& tail, int offset) {
  auto a = loci(head);
  const auto b = loci(tail);
  std::copy(b.begin() + offset, b.end(), a.begin() + offset);
  if constexpr (std::is_same_v<Block, ConvBlock>)
    return conv_from(a);
  else
    return fc_from(a);
}

template <class Block>
std::vector<Block> splice_arm(const std::vector<Block>& head, const std::vector<Block>& tail, int m_head,
                              int m_tail, int offset) {
  std::vector<Block> out(head.begin(), head.begin() + (m_head - 1));
  out.push_back(merge_block(head[static_cast<std::size_t>(m_head - 1)],
                            tail[static_cast<std::size_t>(m_tail - 1)], offset));
  out.insert(out.end(), tail.begin() + m_tail, tail.end());
  return out;
}

int arm_blocks(const Genome& g, Arm arm) {
  return arm == Arm::conv ? static_cast<int>(g.conv_blocks.size())
                          : static_cast<int>(g.hidden_fc_blocks().size());
}

int arm_loci(Arm arm) { return arm == Arm::conv ? kConvLoci : kFcLoci; }

void require_point(const Genome& g, const CrossPoint& k, const char* which) {
  if (k.block < 1 || k.block > arm_blocks(g, k.arm) || k.offset < 0 || k.offset >= arm_loci(k.arm))
    throw ContractError(fmt::format("{} cross point (block {}, offset {}) is outside its arm", which,
                                    k.block, k.offset));
}

int resample(Rng& rng, IntRange r) { return uniform_int(rng, r.lo, r.hi); }

}  // namespace

std::vector<std::size_t> roulette_draws(std::span<const double> fitness, std::size_t count, Rng& rng) {
  if (fitness.empty()) throw ContractError("roulette over an empty population");
  std::vector<double> cumulative(fitness.size());
  std::partial_sum(fitness.begin(), fitness.end(), cumulative.begin());
  const double total = cumulative.back();

  std::vector<std::size_t> out;
  out.reserve(count);
  const int last = static_cast<int>(fitness.size()) - 1;
  for (std::size_t i = 0; i < count; ++i) {
    if (total <= 0.0) {
      out.push_back(static_cast<std::size_t>(uniform_int(rng, 0, last)));
      continue;
    }
    const double spin = uniform01(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), spin);
    // Rounding can leave spin == total; the last slot with positive weight wins.
    if (it == cumulative.end()) it = std::prev(it);
    while (it != cumulative.begin() && fitness[static_cast<std::size_t>(it - cumulative.begin())] <= 0.0)
      --it;
    out.push_back(static_cast<std::size_t>(it - cumulative.begin()));
  }
  return out;
}

Selection select(std::span<const Individual> population, Rng& rng) {
  const std::size_t t = population.size();
  if (t < 2) throw ContractError("selection needs at least 2 individuals");

  std::vector<double> fitness(t);
  std::vector<std::uint64_t> keys(t);
  for (std::size_t i = 0; i < t; ++i) {
    const auto& f = population[i].fitness;
    if (!f) throw ContractError(fmt::format("individual {} has no fitness", i));
    if (!(*f >= 0.0 && *f <= 1.0)) throw ContractError(fmt::format("individual {} fitness {} outside [0,1]", i, *f));
    fitness[i] = *f;
    keys[i] = canonical_hash(population[i].genome);
  }

  std::vector<std::size_t> order(t);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (fitness[a] != fitness[b]) return fitness[a] > fitness[b];
    return keys[a] < keys[b];
  });

  Selection out;
  const std::size_t n_elite = elite_count(t);
  out.elites.reserve(n_elite);
  for (std::size_t i = 0; i < n_elite; ++i) out.elites.push_back(population[order[i]]);

  for (std::size_t idx : roulette_draws(fitness, parent_count(t), rng)) out.parents.push_back(population[idx]);
  return out;
}

int cross_position(const Genome& genome, const CrossPoint& point) {
  const int base = point.arm == Arm::conv ? 0 : kConvLoci * static_cast<int>(genome.conv_blocks.size());
  return base + (point.block - 1) * arm_loci(point.arm) + point.offset;
}

std::pair<CrossPoint, CrossPoint> sample_cross_points(const Genome& first, const Genome& second, Rng& rng) {
  Arm arm = uniform_int(rng, 0, 1) == 0 ? Arm::conv : Arm::fc;
  if (arm_blocks(first, Arm::fc) == 0 || arm_blocks(second, Arm::fc) == 0) arm = Arm::conv;

  CrossPoint k1{arm, uniform_int(rng, 1, arm_blocks(first, arm)), 0};
  CrossPoint k2{arm, uniform_int(rng, 1, arm_blocks(second, arm)), 0};
  k1.offset = k2.offset = uniform_int(rng, 0, arm_loci(arm) - 1);
  return {k1, k2};
}

std::pair<Genome, Genome> splice(const Genome& first, const Genome& second, const CrossPoint& k1,
                                 const CrossPoint& k2) {
  if (first.num_classes != second.num_classes)
    throw ContractError(fmt::format("parents disagree on class count ({} vs {})", first.num_classes,
                                    second.num_classes));
  if (k1.arm != k2.arm || k1.offset != k2.offset)
    throw ContractError("cross points must share arm and offset");
  require_point(first, k1, "first");
  require_point(second, k2, "second");

  Genome c1;
  Genome c2;
  c1.num_classes = c2.num_classes = first.num_classes;
  if (k1.arm == Arm::conv) {
    c1.conv_blocks = splice_arm(first.conv_blocks, second.conv_blocks, k1.block, k2.block, k1.offset);
    c2.conv_blocks = splice_arm(second.conv_blocks, first.conv_blocks, k2.block, k1.block, k1.offset);
    c1.fc_blocks = second.fc_blocks;
    c2.fc_blocks = first.fc_blocks;
  } else {
    c1.conv_blocks = first.conv_blocks;
    c2.conv_blocks = second.conv_blocks;
    c1.fc_blocks = splice_arm(first.fc_blocks, second.fc_blocks, k1.block, k2.block, k1.offset);
    c2.fc_blocks = splice_arm(second.fc_blocks, first.fc_blocks, k2.block, k1.block, k1.offset);
  }
  c1.optimizer = second.optimizer;
  c2.optimizer = first.optimizer;
  return {std::move(c1), std::move(c2)};
}

std::pair<double, double> mutation_rate_bounds(int code_length) {
  const double lo = code_length > 0 ? std::min(8.0 / code_length, 0.5) : 0.5;
  return {lo, 0.5};
}

double sample_mutation_rate(const Genome& genome, Rng& rng) {
  const auto [lo, hi] = mutation_rate_bounds(code_length(genome));
  if (lo >= hi) return hi;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t mutable_locus_count(const Genome& genome) {
  return kConvLoci * genome.conv_blocks.size() + kFcLoci * genome.hidden_fc_blocks().size() + 1;
}

Genome mutate_with_rate(const Genome& genome, const SearchSpace& space, double rate, Rng& rng,
                        MutationTrace* trace) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ContractError(fmt::format("mutation rate {} outside [0,1]", rate));
  if (trace) trace->resampled.clear();

  const auto kernels = static_cast<int>(space.kernel_sizes.size());
  const auto fire = [&] {
    const bool hit = uniform01(rng) < rate;
    if (trace) trace->resampled.push_back(hit);
    return hit;
  };

  Genome out = genome;
  for (auto& b : out.conv_blocks) {
    if (fire()) b.filters = resample(rng, space.conv_filters);
    if (fire()) b.kernel = space.kernel_sizes[static_cast<std::size_t>(uniform_int(rng, 0, kernels - 1))];
    if (fire()) b.pooling = static_cast<Pooling>(resample(rng, space.pooling));
    if (fire()) b.batch_norm = resample(rng, space.batch_norm) == 1;
    if (fire()) b.activation = static_cast<Activation>(resample(rng, space.activation));
    if (fire()) b.dropout = resample(rng, space.dropout);
  }
  for (std::size_t i = 0; i + 1 < out.fc_blocks.size(); ++i) {
    auto& b = out.fc_blocks[i];
    if (fire()) b.units = resample(rng, space.fc_units);
    if (fire()) b.batch_norm = resample(rng, space.batch_norm) == 1;
    if (fire()) b.activation = static_cast<Activation>(resample(rng, space.activation));
    if (fire()) b.dropout = resample(rng, space.dropout);
  }
  if (fire()) out.optimizer = static_cast<Optimizer>(resample(rng, space.optimizer));
  return out;
}

Genome mutate(const Genome& genome, const SearchSpace& space, Rng& rng) {
  const double rate = sample_mutation_rate(genome, rng);
  return mutate_with_rate(genome, space, rate, rng);
}

}  // namespace gennet
