#pragma once
// End-to-end orchestration behind the CLI commands. Every output lands in
// `<out>/<config hash>/`, so reruns of one config share a directory and
// different configs never collide.
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "shiftsel/config.hpp"
#include "shiftsel/eval.hpp"
#include "shiftsel/meta.hpp"
#include "shiftsel/selectors.hpp"
#include "shiftsel/task.hpp"

namespace shiftsel {

/// Shared degree list: `triple_samples` feasible triples drawn from the
/// master seed, then the single-shift grid over all three shift kinds with
/// duplicates dropped.
std::vector<ShiftDegrees> degree_list(const GridConfig& grid, std::uint64_t seed);

struct TaskPlan {
  std::vector<TaskSpec> specs;
  std::vector<std::string> skipped;  // one message per dropped grid entry
};

/// sizes x dims x availabilities x degree list. Entries that are infeasible
/// or leave a training group empty are skipped. Ids are "t00000", ... in grid
/// order; the task seed is derived from (master seed, grid index).
TaskPlan plan_tasks(const ExperimentConfig& config);

/// Split by task_id hash, then apply the size-generalization filters.
MetaSplit split_for_config(const MetaDataset& meta, const ExperimentConfig& config);

struct PipelineOptions {
  std::filesystem::path out = "runs";
  int workers = 0;
  bool dry_run = false;
  std::ostream* log = nullptr;  // nullptr: std::cerr
};

class Pipeline {
 public:
  Pipeline(ExperimentConfig config, PipelineOptions options);

  const ExperimentConfig& config() const noexcept { return config_; }
  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::filesystem::path tasks_path() const { return dir_ / "tasks.jsonl"; }
  std::filesystem::path meta_path() const { return dir_ / "meta.jsonl"; }
  std::filesystem::path selectors_dir() const { return dir_ / "selectors"; }
  std::filesystem::path report_path() const { return dir_ / "eval_report.json"; }
  std::filesystem::path summary_path() const { return dir_ / "summary.txt"; }
  std::filesystem::path analysis_dir() const { return dir_ / "analysis"; }
  std::filesystem::path artifact_path(const std::string& name, std::uint64_t seed) const;

  TaskPlan gen_tasks();
  /// Resumes from the journal if a previous run was interrupted.
  AssemblyResult build_meta(std::optional<std::size_t> stop_after = std::nullopt);
  /// Trains every configured selector (or those in `only`) for every seed,
  /// plus the mimic tree when enabled.
  std::vector<std::filesystem::path> train_selectors(const std::vector<std::string>& only = {});
  EvalReport evaluate();
  std::vector<std::filesystem::path> analyze();

 private:
  ExperimentConfig config_;
  PipelineOptions options_;
  std::filesystem::path dir_;

  std::ostream& log() const;
  void prepare_dir() const;
  MetaDataset load_meta_checked() const;
  std::vector<Selector> load_artifacts(const SelectorSpec& spec) const;
};

/// Write `<stem>.dot` and `<stem>.rules.txt` for a tree artifact.
TreeExport export_tree_files(const std::filesystem::path& artifact, const std::filesystem::path& out_dir);

}  // namespace shiftsel
