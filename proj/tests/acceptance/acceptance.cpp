// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "fixtures.hpp"
#include "gennet/cli.hpp"
#include "gennet/engine.hpp"
#include "gennet/operators.hpp"
#include "gennet/run_store.hpp"
#include "gennet/worker_pool.hpp"
#include "mock_channel.hpp"

using namespace gennet;
using namespace gennet::testing;
using namespace std::chrono_literals;

namespace {

// Pinned tolerances and budgets.
constexpr int kConservationDraws = 10000;
constexpr int kRouletteDraws = 100000;
constexpr double kMinPValue = 0.01;
constexpr int kElitismSeeds = 50;
constexpr double kMinImprovingShare = 0.90;
constexpr int kMutationTrials = 100000;
constexpr double kPinnedRate = 0.3;
constexpr double kRateTolerance = 0.01;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

struct Criterion {
  std::string name;
  std::chrono::seconds budget;
  std::function<Verdict()> check;
};

Verdict vgg_codec() {
  Verdict v;
  const auto code = encode(vgg19());
  v.require(code == vgg19_code(), "encoded vector differs from the reference list");
  v.require(std::vector<int>(code.begin(), code.begin() + 6) == std::vector<int>{64, 3, 0, 1, 4, 0},
            "first block is not [64,3,0,1,4,0]");
  v.require(std::vector<int>(code.end() - 5, code.end() - 1) == std::vector<int>{1000, 0, 5, 0},
            "output block is not [1000,0,5,0]");
  v.require(code.back() == 0, "optimizer is not 0");
  v.require(code_length(vgg19()) == 108, "code length is not 108");
  v.require(decode(vgg19_code(), 16, 1000) == vgg19(), "decode does not give back the genome");
  if (v.pass) v.detail = "109-element vector exact, code length 108";
  return v;
}

Verdict figure_crossover() {
  Verdict v;
  const Genome g1 = tagged_genome(6, 1, 1);
  const Genome g2 = tagged_genome(8, 2, 2);
  v.require(g1.learnable_layers() == 8 && g2.learnable_layers() == 11, "parents are not 8 and 11 layers");
  const CrossPoint k1{Arm::conv, 4, 1};
  const CrossPoint k2{Arm::conv, 6, 1};
  v.require(cross_position(g1, k1) == 3 * 6 + 1 && cross_position(g2, k2) == 5 * 6 + 1,
            "cut positions are not 3*6+1 and 5*6+1");
  const auto [c1, c2] = splice(g1, g2, k1, k2);
  v.require(c1.learnable_layers() == 9, fmt::format("first child has {} layers", c1.learnable_layers()));
  v.require(c2.learnable_layers() == 10, fmt::format("second child has {} layers", c2.learnable_layers()));
  if (v.pass) v.detail = "8 + 11 layers -> 9 + 10 layers";
  return v;
}

Verdict crossover_conservation() {
  Verdict v;
  Rng rng(20240601);
  int block_form = 0;
  for (int i = 0; i < kConservationDraws && v.pass; ++i) {
    const Genome g1 = random_genome({}, 10, rng);
    const Genome g2 = random_genome({}, 10, rng);
    const auto [k1, k2] = sample_cross_points(g1, g2, rng);
    const auto [c1, c2] = splice(g1, g2, k1, k2);
    const int l = k1.arm == Arm::conv ? kConvLoci : kFcLoci;
    v.require(code_length(c1) + code_length(c2) == code_length(g1) + code_length(g2),
              fmt::format("draw {}: total length changed", i));
    const int shift = cross_position(g1, k1) - cross_position(g2, k2);
    v.require(code_length(c1) == code_length(g2) + shift && code_length(c2) == code_length(g1) - shift,
              fmt::format("draw {}: child length off the formula", i));
    // Block-count form; on the fc arm it also needs equal conv counts.
    if (k1.arm == Arm::conv || g1.conv_blocks.size() == g2.conv_blocks.size()) {
      ++block_form;
      v.require(code_length(c1) == code_length(g2) + (k1.block - k2.block) * l &&
                    code_length(c2) == code_length(g1) + (k2.block - k1.block) * l,
                fmt::format("draw {}: child length off the block-count formula", i));
    }
    v.require(validate(c1).empty() && validate(c2).empty(), fmt::format("draw {}: invalid child", i));
  }
  if (v.pass) v.detail = fmt::format("{} draws conserved and valid, {} on the block-count form", kConservationDraws, block_form);
  return v;
}

Verdict roulette_statistics() {
  Verdict v;
  Rng rng(424242);
  const std::vector<double> probs{0.1, 0.2, 0.3, 0.4};
  std::vector<std::uint64_t> counts(4, 0);
  for (auto i : roulette_draws(probs, kRouletteDraws, rng)) ++counts[i];
  const double p_weighted = chi_square_p(counts, probs);
  v.require(p_weighted > kMinPValue, fmt::format("weighted draws p = {:.4g}", p_weighted));

  std::vector<std::uint64_t> flat(4, 0);
  for (auto i : roulette_draws(std::vector<double>(4, 0.7), kRouletteDraws, rng)) ++flat[i];
  const double p_uniform = chi_square_p(flat, std::vector<double>(4, 0.25));
  v.require(p_uniform > kMinPValue, fmt::format("uniform draws p = {:.4g}", p_uniform));
  if (v.pass) v.detail = fmt::format("p = {:.3f} weighted, {:.3f} uniform", p_weighted, p_uniform);
  return v;
}

Verdict elitism_monotonicity() {
  Verdict v;
  int improving = 0;
  for (int s = 0; s < kElitismSeeds && v.pass; ++s) {
    SurrogateEvaluator ev;
    const auto report = evolve(small_config(static_cast<std::uint64_t>(1000 + s), 20, 10), ev);
    const auto& gens = report.generations;
    v.require(gens.size() == 10, fmt::format("seed {}: {} generations", 1000 + s, gens.size()));
    for (std::size_t g = 1; g < gens.size(); ++g)
      v.require(gens[g].best_fitness >= gens[g - 1].best_fitness,
                fmt::format("seed {}: best fell at generation {}", 1000 + s, g));
    if (gens.back().best_fitness > gens.front().best_fitness) ++improving;
  }
  const double share = improving / double(kElitismSeeds);
  v.require(share >= kMinImprovingShare, fmt::format("only {}/{} seeds improved", improving, kElitismSeeds));
  if (v.pass) v.detail = fmt::format("monotone on {} seeds, {}/{} strictly improved", kElitismSeeds, improving,
                                     kElitismSeeds);
  return v;
}

Verdict mutation_contract() {
  Verdict v;
  Rng rng(8675309);
  for (int i = 0; i < 20000 && v.pass; ++i) {
    const Genome g = random_genome({}, 10, rng);
    const auto [lo, hi] = mutation_rate_bounds(code_length(g));
    const double q = sample_mutation_rate(g, rng);
    v.require(lo == std::min(8.0 / code_length(g), 0.5) && hi == 0.5, "bounds are not [min(8/L,0.5), 0.5]");
    v.require(q >= lo && q <= hi, fmt::format("q_m {} outside [{}, {}]", q, lo, hi));
    const Genome m = mutate(g, {}, rng);
    v.require(m.fc_blocks.back() == g.fc_blocks.back(), "output block changed");
    v.require(m.conv_blocks.size() == g.conv_blocks.size() && m.fc_blocks.size() == g.fc_blocks.size(),
              "block counts changed");
    v.require(validate(m).empty(), "mutant fails validation");
  }

  const Genome g = mnist_best();
  std::vector<int> hits(mutable_locus_count(g), 0);
  for (int t = 0; t < kMutationTrials; ++t) {
    MutationTrace trace;
    const Genome m = mutate_with_rate(g, {}, kPinnedRate, rng, &trace);
    for (std::size_t i = 0; i < hits.size(); ++i) hits[i] += trace.resampled[i];
    if (!(m.fc_blocks.back() == g.fc_blocks.back())) v.require(false, "output block changed at pinned rate");
    if (t % 1000 == 0) v.require(validate(m).empty(), "mutant fails validation at pinned rate");
  }
  double worst = 0;
  for (int h : hits) worst = std::max(worst, std::abs(h / double(kMutationTrials) - kPinnedRate));
  v.require(worst <= kRateTolerance, fmt::format("locus trigger rate off by {:.4f}", worst));
  if (v.pass)
    v.detail = fmt::format("q_m in bounds; {} loci within {:.4f} of 0.3", hits.size(), worst);
  return v;
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "gennet");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  return cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
}

Verdict determinism_and_resume() {
  Verdict v;
  TempDir tmp("gennet-accept");
  spit(tmp / "small.conf", "population_size = 20\ngenerations = 10\nmaster_seed = 7\nevaluator = \"surrogate\"\n");
  const auto conf = (tmp / "small.conf").string();
  v.require(run_cli({"run", "--config", conf, "--out", (tmp / "a").string()}) == 0, "first run failed");
  v.require(run_cli({"run", "--config", conf, "--out", (tmp / "b").string()}) == 0, "second run failed");
  if (!v.pass) return v;
  const auto csv_a = slurp(tmp / "a" / "generations.csv");
  v.require(csv_a == slurp(tmp / "b" / "generations.csv"), "generations.csv differs between identical runs");

  v.require(run_cli({"run", "--config", conf, "--stop-after", "3", "--out", (tmp / "c").string()}) == 0,
            "interrupted run failed");
  v.require(run_cli({"resume", (tmp / "c" / "checkpoint.json").string()}) == 0, "resume failed");
  if (!v.pass) return v;
  v.require(slurp(tmp / "c" / "generations.csv") == csv_a, "resumed generations.csv differs");
  v.require(slurp(tmp / "c" / "best_genome.json") == slurp(tmp / "a" / "best_genome.json"),
            "resumed best genome differs");
  if (v.pass) v.detail = "byte-identical csv; 3 + resume == 10 uninterrupted";
  return v;
}

Verdict protocol_conformance() {
  Verdict v;
  auto stats = std::make_shared<MockStats>();
  // ok, timeout, malformed, worker error; later indices answer sooner.
  auto script = [](const EvaluationRequest& r) {
    const int k = script_key(r);
    switch (k) {
      case 102: return MockReply::timeout();
      case 104: return MockReply::malformed();
      case 106: return MockReply::error("spatial size collapsed");
      default: return MockReply::ok(k / 1000.0, std::chrono::milliseconds(4 * (20 - (k - 100))));
    }
  };
  constexpr int kParallelism = 4;
  auto pool = mock_pool(6, script, stats, 40ms, 1);
  RequestIds ids("accept");
  std::vector<Genome> genomes;
  for (int i = 0; i < 20; ++i) genomes.push_back(genome_with_filters(100 + i));
  const auto results = evaluate_batch(genomes, *pool, RequestTemplate{"mnist", {}}, kParallelism, ids);

  v.require(results.size() == genomes.size(), "result count differs from input");
  for (int i = 0; i < 20 && v.pass; ++i) {
    const bool should_fail = i == 2 || i == 4 || i == 6;
    v.require(results[i].ok() != should_fail, fmt::format("result {} has the wrong status", i));
    if (!should_fail)
      v.require(results[i].fitness && std::abs(*results[i].fitness - (100 + i) / 1000.0) < 1e-12,
                fmt::format("result {} is misaligned", i));
  }
  v.require(results[6].message == "spatial size collapsed", "worker error message lost");
  v.require(stats->max_in_flight <= kParallelism, fmt::format("{} requests in flight", stats->max_in_flight.load()));
  {
    std::lock_guard lock(stats->mutex);
    std::vector<std::string> sent;
    for (const auto& r : stats->seen) sent.push_back(r.id);
    v.require(stats->completed != sent, "completions never arrived out of order");
  }
  if (v.pass)
    v.detail = fmt::format("20 aligned results, max {} in flight of {}", stats->max_in_flight.load(), kParallelism);
  return v;
}

}  // namespace

int main() {
  cli::configure_logging();
  const std::vector<Criterion> criteria{
      {"vgg19-codec-golden", 1s, vgg_codec},
      {"conv-arm-crossover-8-11-to-9-10", 1s, figure_crossover},
      {"crossover-length-conservation", 30s, crossover_conservation},
      {"roulette-chi-square", 30s, roulette_statistics},
      {"elitism-monotonicity-50-seeds", 120s, elitism_monotonicity},
      {"mutation-contract", 60s, mutation_contract},
      {"determinism-and-resume", 60s, determinism_and_resume},
      {"protocol-conformance-mocks", 30s, protocol_conformance},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
    if (v.pass && took > c.budget) v = {false, fmt::format("took {:.1f}s, budget {}s", took.count(), c.budget.count())};
    std::cout << fmt::format("{} {} ({:.2f}s) {}\n", v.pass ? "PASS" : "FAIL", c.name, took.count(), v.detail);
    if (!v.pass) ++failed;
  }
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
