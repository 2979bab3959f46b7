#pragma once
// Experiment configuration: one JSON file drives every CLI command.
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "shiftsel/algorithms.hpp"
#include "shiftsel/descriptor.hpp"
#include "shiftsel/eval.hpp"
#include "shiftsel/meta.hpp"
#include "shiftsel/selectors.hpp"

namespace shiftsel {

/// Task grid: sizes x dims x availabilities x one shared degree list made of
/// `triple_samples` random feasible triples followed by every single-shift
/// entry from `single_shift_grid` (duplicates removed).
struct GridConfig {
  std::vector<std::int64_t> sizes{200, 500, 1000};
  std::vector<int> dims{2, 10, 50};
  std::vector<double> availabilities{1.0, 10.0, 100.0};
  int triple_samples = 20;
  std::vector<double> single_shift_grid{0.01, 0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 0.99};
  /// Optional explicit test size; otherwise the per-source default.
  std::optional<std::int64_t> n_test;
  /// Per-coordinate variance of the core block; the attribute block gets
  /// core_variance / r.
  double core_variance = 1.0;
};

/// Meta-dataset split. `meta_train_max_n` / `eval_min_n` restrict the two
/// sides by task size (size-generalization experiments).
struct SplitConfig {
  double eval_fraction = 0.2;
  std::optional<std::int64_t> meta_train_max_n;
  std::optional<std::int64_t> eval_min_n;
};

struct AnalysisConfig {
  std::vector<std::pair<std::string, std::string>> gap_pairs{{"ERM", "Undersample"}, {"ERM", "GroupDRO"}};
  std::vector<std::size_t> scaling_sizes{50, 100, 200, 400};
  bool leave_one_out = true;
  AblationMode loo_mode = AblationMode::kRetrain;
  std::vector<std::pair<std::string, std::string>> pairwise{{"ERM", "Undersample"}};
  std::vector<double> epsilon_grid{0.0, 0.025, 0.05, 0.10};
  bool mimic_tree = true;
  /// Selector (by name) used for scaling, ablations and the mimic tree.
  std::string subject = "mlp";
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  GridConfig grid;
  TrainConfig train;
  double epsilon = kDefaultEpsilon;
  PerfMetric metric = PerfMetric::kWorstGroup;
  DescriptorOptions descriptor;
  SplitConfig split;
  std::vector<SelectorSpec> selectors;
  std::vector<std::uint64_t> selector_seeds{0, 1, 2};
  SelectionRule selection_rule = SelectionRule::kTopLogit;
  AnalysisConfig analysis;
  int workers = 0;  // <= 0: OpenMP default

  /// Throws kInvalidArgument naming the offending field.
  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys take defaults; unknown keys are rejected.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  /// 16 hex digits of the canonical JSON hash; names the output directory.
  std::string hash() const;
  const SelectorSpec& selector(std::string_view name) const;
};

/// The Table-1 line-up: oracle, random, global best, naive (n, d only),
/// regression, multi-label MLP, plus linear / kNN / tree alternatives.
std::vector<SelectorSpec> default_selector_lineup();

}  // namespace shiftsel
