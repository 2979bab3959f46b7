#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "shiftsel/rng.hpp"
#include "shiftsel/shift.hpp"

namespace shiftsel {

/// Row-major sample matrix with class labels and attributes in {-1, +1}.
struct Split {
  std::size_t dim = 0;
  std::vector<double> x;
  std::vector<std::int8_t> y;
  std::vector<std::int8_t> a;

  std::size_t size() const noexcept { return y.size(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * dim, dim}; }
  int group(std::size_t i) const { return group_index(y[i], a[i]); }

  void reserve(std::size_t rows);
  void push_back(std::span<const double> features, int label, int attribute);
  /// Append row `i` of `other`.
  void append_row(const Split& other, std::size_t i);

  bool operator==(const Split&) const = default;
};

GroupCounts group_histogram(const Split& split);

/// Per-group index lists, in group order G1..G4.
std::array<std::vector<std::size_t>, kNumGroups> group_indices(const Split& split);

enum class TaskSource { kSynthetic, kPool };

struct TaskMeta {
  std::string task_id;
  TaskSource source = TaskSource::kSynthetic;
  std::int64_t n = 0;
  std::int64_t n_test = 0;
  int block_dim = 0;  // d: per-block dimension (synthetic) or feature length (pool)
  std::uint64_t seed = 0;
  ShiftDegrees degrees;
  std::optional<double> availability;  // generative r, synthetic only
};

struct TaskDataset {
  Split train;
  Split test;
  TaskMeta meta;
};

/// Annotated source data that tasks can be resampled from.
struct GroupedPool {
  Split samples;
  std::array<std::vector<std::size_t>, kNumGroups> by_group;

  static GroupedPool from_split(Split samples);
};

/// Gaussian task: x = [x_c, x_a] with x_c | y ~ N(y·1, v·I_d) and
/// x_a | a ~ N(a·1, (v/r)·I_d), v the core variance.
TaskDataset generate_synthetic_task(std::int64_t n, int d, double r, const ShiftDegrees& s,
                                    std::int64_t n_test, Rng& rng, double core_variance = 1.0);

/// Draw a training split with `counts` per group and a balanced test split of
/// n_test samples. Without replacement the two splits are disjoint.
TaskDataset build_task_from_pool(const GroupedPool& pool, const GroupCounts& counts,
                                 std::int64_t n_test, Rng& rng, bool replace);

/// One line of the task specification file.
struct TaskSpec {
  std::string task_id;
  TaskSource source = TaskSource::kSynthetic;
  std::int64_t n = 0;
  int d = 0;
  double r = 1.0;
  ShiftDegrees degrees;
  std::int64_t n_test = 0;
  std::uint64_t seed = 0;
  double core_variance = 1.0;  // synthetic only

  bool operator==(const TaskSpec&) const = default;
};

/// Test-set size convention: n for synthetic tasks, n/2 rounded down to a
/// multiple of 4 for pool tasks.
std::int64_t default_test_size(TaskSource source, std::int64_t n);

TaskDataset materialize(const TaskSpec& spec, const GroupedPool* pool = nullptr);

std::string_view to_string(TaskSource source);
TaskSource parse_task_source(std::string_view text);

void to_json(nlohmann::json& j, const TaskSpec& spec);
void from_json(const nlohmann::json& j, TaskSpec& spec);

void write_task_specs(const std::filesystem::path& path, std::span<const TaskSpec> specs);
std::vector<TaskSpec> read_task_specs(const std::filesystem::path& path);

/// Pool file: CSV with header `y,a,f0,f1,...`.
GroupedPool read_pool_csv(const std::filesystem::path& path);

/// Cache a materialized task as train.csv / test.csv plus manifest.json.
void write_task_csv(const TaskDataset& task, const std::filesystem::path& dir);

}  // namespace shiftsel
