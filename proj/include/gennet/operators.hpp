#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gennet/genome.hpp"
#include "gennet/random.hpp"

namespace gennet {

struct Individual {
  Genome genome;
  std::optional<double> fitness;

  bool operator==(const Individual&) const = default;
};

using Population = std::vector<Individual>;

/// Caller broke an operator precondition.
class ContractError : public std::logic_error {
  using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------
// Selection

/// ceil(T/10): individuals copied unaltered into the next generation.
inline std::size_t elite_count(std::size_t population_size) { return (population_size + 9) / 10; }
/// floor(9T/10): roulette draws feeding crossover and mutation.
inline std::size_t parent_count(std::size_t population_size) {
  return population_size - elite_count(population_size);
}

struct Selection {
  std::vector<Individual> elites;   // best first
  std::vector<Individual> parents;  // in draw order
};

/// Elitism plus roulette wheel. Elites are the top ceil(T/10) by fitness,
/// ties broken by lower canonical hash. Parents are floor(9T/10) draws with
/// replacement, each with probability fitness_i / sum(fitness); uniform when
/// every fitness is zero.
Selection select(std::span<const Individual> population, Rng& rng);

/// Index draws only; `select` is built on it.
std::vector<std::size_t> roulette_draws(std::span<const double> fitness, std::size_t count, Rng& rng);

// ---------------------------------------------------------------------------
// Crossover

enum class Arm { conv, fc };

/// Cut position inside one genome: 1-based block on an arm plus a 0-based
/// locus offset within that block. Fc cut points never address the output block.
struct CrossPoint {
  Arm arm = Arm::conv;
  int block = 1;
  int offset = 0;

  bool operator==(const CrossPoint&) const = default;
};

/// Flat index of the cut in the genome's encoding.
int cross_position(const Genome& genome, const CrossPoint& point);

/// Both points share arm and offset. The arm is a fair coin between conv and
/// fc; block indices are uniform over each parent's candidate blocks.
std::pair<CrossPoint, CrossPoint> sample_cross_points(const Genome& first, const Genome& second, Rng& rng);

/// Swaps tails: the first child is the head of `first` before `k1` followed
/// by the tail of `second` from `k2` (rest of that arm, any later arm and the
/// optimizer); the second child is the mirror image. Child code lengths are
/// L(second) + (m1 - m2) * l and L(first) + (m2 - m1) * l.
std::pair<Genome, Genome> splice(const Genome& first, const Genome& second, const CrossPoint& k1,
                                 const CrossPoint& k2);

// ---------------------------------------------------------------------------
// Mutation

/// [min(8/L, 0.5), 0.5] for a genome of code length L.
std::pair<double, double> mutation_rate_bounds(int code_length);

double sample_mutation_rate(const Genome& genome, Rng& rng);

/// Conv loci, hidden fc loci and the optimizer; the output block is fixed.
std::size_t mutable_locus_count(const Genome& genome);

/// Resample decision for each mutable locus, in encoding order.
struct MutationTrace {
  std::vector<bool> resampled;
};

/// Each mutable locus is independently redrawn uniformly from its range in
/// `space` with probability `rate`. Block counts never change.
Genome mutate_with_rate(const Genome& genome, const SearchSpace& space, double rate, Rng& rng,
                        MutationTrace* trace = nullptr);

/// mutate_with_rate with a rate drawn from mutation_rate_bounds.
Genome mutate(const Genome& genome, const SearchSpace& space, Rng& rng);

}  // namespace gennet
