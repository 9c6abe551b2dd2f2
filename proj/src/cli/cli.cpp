#include "gennet/cli.hpp"

#include <cstdlib>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "gennet/config.hpp"
#include "gennet/engine.hpp"
#include "gennet/genome_json.hpp"
#include "gennet/io.hpp"
#include "gennet/run_store.hpp"

namespace gennet::cli {

namespace {

// Mirrors log output into run.log for the lifetime of a command.
class ScopedLogFile {
 public:
  explicit ScopedLogFile(const std::filesystem::path& path) {
    try {
      sink_ = std::make_shared<spdlog::sinks::basic_file_sink_mt>(path.string(), false);
      spdlog::default_logger()->sinks().push_back(sink_);
    } catch (const spdlog::spdlog_ex& e) {
      spdlog::warn("cannot open log file {}: {}", path.string(), e.what());
    }
  }
  ~ScopedLogFile() {
    if (!sink_) return;
    auto& sinks = spdlog::default_logger()->sinks();
    std::erase(sinks, sink_);
  }
  ScopedLogFile(const ScopedLogFile&) = delete;
  ScopedLogFile& operator=(const ScopedLogFile&) = delete;

 private:
  spdlog::sink_ptr sink_;
};

void print_problems(std::ostream& err, const std::vector<std::string>& problems) {
  err << "error: invalid configuration\n";
  for (const auto& p : problems) err << "  " << p << "\n";
}

std::string_view pooling_phrase(Pooling p) {
  switch (p) {
    case Pooling::none: return "no pooling";
    case Pooling::max: return "max pooling";
    case Pooling::average: return "average pooling";
  }
  return "unknown pooling";
}

int run_evolution(EvolutionState& state, const EngineConfig& config, const RunDirectory& dir,
                  std::optional<int> stop_after, std::ostream& out, std::ostream& err) {
  std::unique_ptr<FitnessEvaluator> evaluator;
  try {
    evaluator = make_evaluator(config.evaluator);
  } catch (const ConfigError& e) {
    print_problems(err, e.problems());
    return kBadInput;
  }

  RunHooks hooks;
  hooks.stop_after = stop_after;
  hooks.after_generation = [&](const EvolutionState& s) { dir.record_generation(config, s); };
  try {
    const auto report = continue_evolution(state, config, *evaluator, hooks);
    if (report.complete) {
      dir.record_completion(report);
      out << fmt::format("completed {} generations; best fitness {:.6f}\n", report.generations.size(),
                         report.best.fitness.value_or(0.0));
    } else {
      out << fmt::format("stopped after generation {}; resume with: gennet resume {}\n", state.generation - 1,
                         dir.checkpoint().string());
    }
    out << "run directory: " << dir.root.string() << "\n";
    return kOk;
  } catch (const EvaluationAborted& e) {
    spdlog::error("{}", e.what());
    err << "error: evaluator abort: " << e.what() << "\n";
    return kEvaluatorAbort;
  }
}

}  // namespace

void configure_logging() {
  static const bool once = [] {
    auto logger = std::make_shared<spdlog::logger>("gennet", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    spdlog::set_default_logger(logger);
    return true;
  }();
  (void)once;
  const char* level = std::getenv("GENNET_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
}

std::string describe_genome(const Genome& genome) {
  std::string out = fmt::format("architecture: {} conv blocks, {} fc blocks, code length {}\n",
                                genome.conv_blocks.size(), genome.fc_blocks.size(), code_length(genome));
  for (std::size_t i = 0; i < genome.conv_blocks.size(); ++i) {
    const auto& b = genome.conv_blocks[i];
    out += fmt::format("conv {}: {} filters {}x{}, {}, batch-norm {}, {}, dropout {}%\n", i + 1, b.filters, b.kernel,
                       b.kernel, pooling_phrase(b.pooling), b.batch_norm ? "on" : "off", to_string(b.activation),
                       b.dropout * 5);
  }
  for (std::size_t i = 0; i < genome.fc_blocks.size(); ++i) {
    const auto& b = genome.fc_blocks[i];
    const bool output = i + 1 == genome.fc_blocks.size();
    out += fmt::format("fc {}{}: {} units, batch-norm {}, {}, dropout {}%\n", i + 1, output ? " (output)" : "",
                       b.units, b.batch_norm ? "on" : "off", to_string(b.activation), b.dropout * 5);
  }
  out += fmt::format("optimizer: {}\n", to_string(genome.optimizer));
  return out;
}

int cmd_inspect(const std::filesystem::path& genome_file, std::ostream& out, std::ostream& err) {
  try {
    out << describe_genome(read_genome_file(genome_file));
    return kOk;
  } catch (const GenomeFormatError& e) {
    err << "error: " << genome_file.string() << ": " << e.what() << "\n";
    return kBadInput;
  }
}

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  EngineConfig config;
  try {
    config = load_config(options.config, false);
    if (options.seed) config.master_seed = *options.seed;
    if (options.population) config.population_size = *options.population;
    if (options.generations) config.generations = *options.generations;
    if (options.evaluator) {
      if (*options.evaluator == "surrogate")
        config.evaluator.kind = EvaluatorKind::surrogate;
      else if (*options.evaluator == "external")
        config.evaluator.kind = EvaluatorKind::external;
      else
        throw ConfigError({"evaluator: expected surrogate or external, got '" + *options.evaluator + "'"});
    }
    if (!options.workers.empty()) config.evaluator.workers = options.workers;
    if (options.parallelism) config.evaluator.parallelism = *options.parallelism;
    if (auto p = config.problems(); !p.empty()) throw ConfigError(std::move(p));
  } catch (const ConfigError& e) {
    print_problems(err, e.problems());
    return kBadInput;
  }
  if (options.stop_after && *options.stop_after < 1) {
    print_problems(err, {"stop-after: must be at least 1"});
    return kBadInput;
  }

  RunDirectory dir{options.out.value_or(
      std::filesystem::path("runs") / fmt::format("{}-seed{}", options.config.stem().string(), config.master_seed))};
  if (std::filesystem::exists(dir.checkpoint())) {
    if (!options.force) {
      err << "error: " << dir.root.string()
          << " already holds a run; use `resume`, pick another --out, or pass --force to overwrite\n";
      return kBadInput;
    }
    for (const auto& p : {dir.checkpoint(), dir.generations(), dir.best_genome(), dir.config()})
      std::filesystem::remove(p);
    std::filesystem::remove_all(dir.best_dir());
  }
  dir.create();
  write_file_atomically(dir.config(), config_to_json(config).dump(2) + "\n");
  ScopedLogFile log(dir.log());
  spdlog::info("run: T={} G={} seed={} evaluator={} -> {}", config.population_size, config.generations,
               config.master_seed, to_string(config.evaluator.kind), dir.root.string());

  EvolutionState state = initial_state(config);
  return run_evolution(state, config, dir, options.stop_after, out, err);
}

int cmd_resume(const ResumeOptions& options, std::ostream& out, std::ostream& err) {
  Checkpoint cp;
  try {
    cp = load_checkpoint(options.checkpoint);
  } catch (const CheckpointError& e) {
    err << "error: " << options.checkpoint.string() << ": " << e.what() << "\n";
    return kBadInput;
  } catch (const ConfigError& e) {
    print_problems(err, e.problems());
    return kBadInput;
  }
  if (!options.workers.empty()) cp.config.evaluator.workers = options.workers;
  if (options.parallelism) cp.config.evaluator.parallelism = *options.parallelism;
  if (auto p = cp.config.problems(); !p.empty()) {
    print_problems(err, p);
    return kBadInput;
  }

  RunDirectory dir{options.checkpoint.parent_path().empty() ? std::filesystem::path(".")
                                                            : options.checkpoint.parent_path()};
  dir.create();
  ScopedLogFile log(dir.log());
  if (cp.state.generation >= cp.config.generations) {
    if (!std::filesystem::exists(dir.best_genome()) && cp.state.best)
      write_genome_file(dir.best_genome(), cp.state.best->genome);
    out << "run already complete (" << cp.state.generation << " generations); nothing to do\n";
    return kOk;
  }
  spdlog::info("resuming at generation {} of {}", cp.state.generation, cp.config.generations);
  return run_evolution(cp.state, cp.config, dir, std::nullopt, out, err);
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  configure_logging();
  CLI::App app{"gennet: genetic architecture search for sequential CNNs"};
  app.require_subcommand(1);

  RunOptions run;
  std::uint64_t seed = 0;
  int population = 0;
  int generations = 0;
  int parallelism = 0;
  int stop_after = 0;
  std::string evaluator;
  std::string out_dir;
  auto* run_cmd = app.add_subcommand("run", "start a new evolution run");
  run_cmd->add_option("--config", run.config, "flat key = value config file")->required();
  auto* seed_opt = run_cmd->add_option("--seed", seed, "master seed");
  auto* pop_opt = run_cmd->add_option("--population", population, "population size T");
  auto* gen_opt = run_cmd->add_option("--generations", generations, "generation budget G");
  auto* eval_opt = run_cmd->add_option("--evaluator", evaluator, "surrogate | external");
  run_cmd->add_option("--workers", run.workers, "worker command line or host:port (repeatable)");
  auto* par_opt = run_cmd->add_option("--parallelism", parallelism, "max evaluations in flight");
  auto* out_opt = run_cmd->add_option("--out", out_dir, "run directory");
  auto* stop_opt =
      run_cmd->add_option("--stop-after", stop_after, "stop after N generations, leaving a resumable checkpoint");
  run_cmd->add_flag("--force", run.force, "overwrite an existing run directory");

  ResumeOptions resume;
  int resume_parallelism = 0;
  auto* resume_cmd = app.add_subcommand("resume", "continue a run from its checkpoint");
  resume_cmd->add_option("checkpoint", resume.checkpoint, "checkpoint.json of the run")->required();
  resume_cmd->add_option("--workers", resume.workers, "replace the stored worker list");
  auto* rpar_opt = resume_cmd->add_option("--parallelism", resume_parallelism, "max evaluations in flight");

  std::filesystem::path genome_file;
  auto* inspect_cmd = app.add_subcommand("inspect", "print a genome file as an architecture summary");
  inspect_cmd->add_option("genome", genome_file, "genome JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  }

  if (*run_cmd) {
    if (*seed_opt) run.seed = seed;
    if (*pop_opt) run.population = population;
    if (*gen_opt) run.generations = generations;
    if (*eval_opt) run.evaluator = evaluator;
    if (*par_opt) run.parallelism = parallelism;
    if (*out_opt) run.out = out_dir;
    if (*stop_opt) run.stop_after = stop_after;
    return cmd_run(run, out, err);
  }
  if (*resume_cmd) {
    if (*rpar_opt) resume.parallelism = resume_parallelism;
    return cmd_resume(resume, out, err);
  }
  return cmd_inspect(genome_file, out, err);
}

}  // namespace gennet::cli
