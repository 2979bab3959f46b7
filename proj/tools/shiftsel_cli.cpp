// shiftsel: generate tasks, build the meta-dataset, train and evaluate
// algorithm selectors, run the analyses and export trees.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "shiftsel/config.hpp"
#include "shiftsel/error.hpp"
#include "shiftsel/kernels.hpp"
#include "shiftsel/pipeline.hpp"

namespace {

using shiftsel::ErrorKind;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kParse:
    case ErrorKind::kSchema:
      return 2;
    case ErrorKind::kIo:
      return 3;
    case ErrorKind::kInfeasible:
    case ErrorKind::kSampling:
    case ErrorKind::kDegenerateInput:
    case ErrorKind::kCapacity:
      return 4;
    case ErrorKind::kUnsupported:
      return 5;
    case ErrorKind::kDivergence:
      return 6;
  }
  return 1;
}

// --workers beats SHIFTSEL_WORKERS beats the config file.
int resolve_workers(std::optional<int> flag, int from_config) {
  if (flag) return *flag;
  if (const char* env = std::getenv("SHIFTSEL_WORKERS"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const int w = std::stoi(env, &used);
      if (used != std::string(env).size() || w < 0) throw std::invalid_argument(env);
      return w;
    } catch (const std::exception&) {
      throw shiftsel::Error(ErrorKind::kInvalidArgument,
                            "SHIFTSEL_WORKERS must be a non-negative integer (got '" + std::string(env) + "')");
    }
  }
  return from_config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Algorithm selection for distribution shift on synthetic tasks"};
  app.require_subcommand(1);
  // Global flags are also accepted after the subcommand.
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out = "runs";
  bool dry_run = false;
  app.add_option("-c,--config", config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Override the master seed");
  app.add_option("-w,--workers", workers, "Worker threads (0: all cores; env SHIFTSEL_WORKERS)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("-o,--out", out, "Output root; results go to <out>/<config hash>/");
  app.add_flag("--dry-run", dry_run, "Print the planned work and write nothing");

  auto* gen = app.add_subcommand("gen-tasks", "Write the task specification file");
  auto* build = app.add_subcommand("build-meta", "Train every algorithm on every task (resumable)");
  auto* train = app.add_subcommand("train-selector", "Train the configured selectors on the meta-train split");
  std::vector<std::string> only;
  train->add_option("-s,--selector", only, "Train only these selectors (repeatable)");
  auto* evaluate = app.add_subcommand("evaluate", "Score trained selectors on the held-out split");
  auto* analyze = app.add_subcommand("analyze", "Gap distributions, scaling, ablations, epsilon sweep");
  auto* run = app.add_subcommand("run", "gen-tasks, build-meta, train-selector, evaluate and analyze in order");
  auto* export_tree = app.add_subcommand("export-tree", "Write DOT and text rules for a tree selector artifact");
  std::string artifact;
  export_tree->add_option("artifact", artifact, "Selector artifact (JSON)")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (export_tree->parsed()) {
      if (dry_run) {
        std::cerr << "dry run: would export " << artifact << " to " << out << '\n';
        return 0;
      }
      const auto ex = shiftsel::export_tree_files(artifact, out);
      std::cout << ex.rules;
      return 0;
    }
    if (config_path.empty()) {
      std::cerr << "error: --config is required for this command\n";
      return 2;
    }
    auto config = shiftsel::ExperimentConfig::load(config_path);
    if (seed) {
      config.seed = *seed;
      config.validate();
    }
    shiftsel::PipelineOptions options;
    options.out = out;
    options.workers = resolve_workers(workers, config.workers);
    options.dry_run = dry_run;
    if (options.workers > 0) shiftsel::kernels::set_threads(options.workers);
    shiftsel::Pipeline pipeline(std::move(config), options);
    std::cerr << "output directory: " << pipeline.dir().string() << '\n';

    if (gen->parsed() || run->parsed()) pipeline.gen_tasks();
    if (build->parsed() || run->parsed()) {
      const auto result = pipeline.build_meta();
      if (result.interrupted) return 1;
    }
    if (train->parsed() || run->parsed()) pipeline.train_selectors(only);
    if (evaluate->parsed() || run->parsed()) {
      const auto report = pipeline.evaluate();
      if (!dry_run) std::cout << report.table();
    }
    if (analyze->parsed() || run->parsed()) pipeline.analyze();
    return 0;
  } catch (const shiftsel::Error& e) {
    std::cerr << "error [" << shiftsel::to_string(e.kind()) << "]: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error [parse]: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error [io]: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << '\n';
    return 1;
  }
}
