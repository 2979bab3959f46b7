#pragma once
// Meta-dataset: one record per task with its descriptor, the worst-group (and
// averaged-group) test error of every candidate algorithm, and the
// epsilon-suitability labels.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "shiftsel/algorithms.hpp"
#include "shiftsel/descriptor.hpp"
#include "shiftsel/task.hpp"

namespace shiftsel {

inline constexpr int kMetaSchemaVersion = 1;
inline constexpr double kDefaultEpsilon = 0.05;

/// Which per-algorithm error drives labels and realized-error scoring.
enum class PerfMetric { kWorstGroup, kAverageGroup };
std::string_view to_string(PerfMetric metric);
PerfMetric parse_perf_metric(std::string_view text);

/// label_m = 1 iff perf_m - min(perf) <= epsilon (with 1e-12 slack for
/// errors that are exact multiples of 1/group size).
std::vector<std::uint8_t> suitability_labels(std::span<const double> perf, double epsilon);

struct MetaRecord {
  std::string task_id;
  DatasetDescriptor descriptor;
  std::vector<double> perf;      // worst-group error per algorithm
  std::vector<double> perf_avg;  // averaged-group error per algorithm
  std::vector<std::uint8_t> labels;

  const std::vector<double>& errors(PerfMetric metric) const {
    return metric == PerfMetric::kWorstGroup ? perf : perf_avg;
  }
  bool operator==(const MetaRecord&) const = default;
};

struct MetaDataset {
  double epsilon = kDefaultEpsilon;
  PerfMetric metric = PerfMetric::kWorstGroup;
  DescriptorMode descriptor_mode = DescriptorMode::kOracle;
  std::vector<std::string> algorithms = algorithm_names();
  std::vector<MetaRecord> records;

  std::size_t size() const noexcept { return records.size(); }
  std::size_t num_algorithms() const noexcept { return algorithms.size(); }
  /// Throws kSchema when a record is inconsistent with the header.
  void validate() const;
  bool operator==(const MetaDataset&) const = default;
};

/// Labels recomputed for a new threshold and/or metric.
MetaDataset relabel(const MetaDataset& meta, double epsilon, PerfMetric metric);

/// Keep only the given algorithm columns (in the given order) and relabel.
/// Rejects fewer than two or repeated columns.
MetaDataset restrict_algorithms(const MetaDataset& meta, std::span<const std::size_t> columns);

/// Records whose task_id passes `keep`.
template <class Pred>
MetaDataset filter_records(const MetaDataset& meta, Pred keep) {
  MetaDataset out = meta;
  out.records.clear();
  for (const auto& r : meta.records) {
    if (keep(r)) out.records.push_back(r);
  }
  return out;
}

void to_json(nlohmann::json& j, const MetaRecord& r);
void from_json(const nlohmann::json& j, MetaRecord& r);

void save_meta(const std::filesystem::path& path, const MetaDataset& meta);
MetaDataset load_meta(const std::filesystem::path& path);
/// Hex FNV-1a of the file bytes.
std::string file_fingerprint(const std::filesystem::path& path);

/// One trained (task, algorithm) run.
struct RunRecord {
  std::string task_id;
  std::string algorithm;
  double wg_error = 0.0;
  double avg_error = 0.0;
  GroupVector per_group_errors{};
  double train_loss_final = 0.0;
  std::uint64_t seed = 0;
  bool operator==(const RunRecord&) const = default;
};
void to_json(nlohmann::json& j, const RunRecord& r);
void from_json(const nlohmann::json& j, RunRecord& r);

struct TaskFailure {
  std::string task_id;
  std::string kind;
  std::string message;
  bool operator==(const TaskFailure&) const = default;
};
void to_json(nlohmann::json& j, const TaskFailure& f);
void from_json(const nlohmann::json& j, TaskFailure& f);

struct AssemblyOptions {
  TrainConfig train;
  double epsilon = kDefaultEpsilon;
  DescriptorOptions descriptor;
  int workers = 0;  // <= 0: OpenMP default
  const GroupedPool* pool = nullptr;
  /// Stop after this many newly completed tasks (crash simulation for tests).
  std::optional<std::size_t> stop_after;
};

/// Per-task seed streams.
std::uint64_t algorithm_seed(std::uint64_t task_seed, AlgorithmId id);
std::uint64_t descriptor_seed(std::uint64_t task_seed);

/// Materialize one task, describe it and train every algorithm on it.
MetaRecord build_record(const TaskSpec& spec, const AssemblyOptions& options, std::vector<RunRecord>* runs = nullptr);

struct AssemblyResult {
  MetaDataset meta;
  std::vector<RunRecord> runs;
  std::vector<TaskFailure> failures;
  std::size_t resumed = 0;     // tasks taken from the journal
  bool interrupted = false;    // stop_after reached before all tasks finished
};

/// In-memory sweep (no files). Records come back sorted by task_id.
AssemblyResult assemble_meta_dataset(std::span<const TaskSpec> specs, const AssemblyOptions& options);

/// Resumable sweep writing `meta_path`, `<dir>/runs.jsonl` and
/// `<dir>/failures.jsonl`. Completed tasks are appended to
/// `<meta_path>.journal` as they finish; a rerun picks up from the journal.
/// The journal is removed once the final files are written.
AssemblyResult assemble_meta_dataset(std::span<const TaskSpec> specs, const AssemblyOptions& options,
                                     const std::filesystem::path& meta_path);

std::filesystem::path journal_path(const std::filesystem::path& meta_path);

/// Recompute descriptors for existing records (matched by task_id) under a
/// different descriptor mode; performance columns are unchanged.
MetaDataset redescribe(const MetaDataset& meta, std::span<const TaskSpec> specs, const DescriptorOptions& options,
                       const GroupedPool* pool = nullptr, int workers = 0);

}  // namespace shiftsel
