#pragma once
// Algorithm selectors: descriptor -> M suitability scores.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "shiftsel/meta.hpp"
#include "shiftsel/mlp.hpp"
#include "shiftsel/rng.hpp"
#include "shiftsel/tree.hpp"

namespace shiftsel {

enum class SelectorKind { kMlp, kRegression, kLinear, kKnn, kTree, kMimicTree, kGlobalBest, kRandom, kOracle };
std::string_view to_string(SelectorKind kind);
SelectorKind parse_selector_kind(std::string_view text);

/// Descriptor -> model input. Features are taken in `active` order; n and r go
/// through log10 when `log_scale`; degrees become |d - 0.5| when
/// `fold_degrees`; then z-scored with meta-train statistics when
/// `standardize`. Features with zero training spread are dropped (always 0),
/// as are `masked` ones (the value a feature takes at its training mean).
struct FeatureTransform {
  std::vector<std::size_t> active;
  bool log_scale = true;
  bool fold_degrees = false;
  bool standardize = true;
  std::vector<std::size_t> masked;  // indices into `active`
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<std::uint8_t> dropped;

  std::size_t size() const noexcept { return active.size(); }
  /// Raw -> pre-standardization values (selection, log, fold).
  std::vector<double> project(const DescriptorVector& v) const;
  void fit(std::span<const DescriptorVector> rows);
  std::vector<double> standardize_values(std::span<const double> projected) const;
  std::vector<double> destandardize_values(std::span<const double> standardized) const;
  std::vector<double> apply(const DescriptorVector& v) const;
  /// Display names of the model inputs, e.g. "log10(n)", "|d_sc-0.5|".
  std::vector<std::string> input_names() const;

  nlohmann::json to_json() const;
  static FeatureTransform from_json(const nlohmann::json& j);
  bool operator==(const FeatureTransform&) const = default;
};

struct SelectorSpec {
  std::string name;
  SelectorKind kind = SelectorKind::kMlp;
  std::vector<std::string> features{kDescriptorNames.begin(), kDescriptorNames.end()};
  std::vector<std::string> masked;  // mask-mode leave-one-out
  MlpSpec mlp;
  MlpTrainConfig train;
  TreeSpec tree;
  int knn_k = 5;

  void validate() const;
  nlohmann::json to_json() const;
  static SelectorSpec from_json(const nlohmann::json& j);
  bool operator==(const SelectorSpec&) const = default;
};

/// Defaults per kind: linear is an MLP without hidden layers; the naive view
/// uses only n and d.
SelectorSpec default_selector_spec(SelectorKind kind, std::string name = {});
std::vector<std::string> naive_feature_names();
/// (n, d) projection of a descriptor.
std::array<double, 2> naive_descriptor_view(const DatasetDescriptor& descriptor);

class Selector {
 public:
  SelectorSpec spec;
  FeatureTransform transform;
  std::vector<std::string> algorithms;
  std::uint64_t seed = 0;
  std::string meta_fingerprint;
  std::vector<std::string> warnings;
  std::vector<double> train_trace;  // loss per epoch for learned kinds

  SelectorKind kind() const noexcept { return spec.kind; }
  std::size_t num_algorithms() const noexcept { return algorithms.size(); }

  /// M scores; higher means more suitable. The oracle kind needs the
  /// record's performance row and throws kUnsupported here.
  std::vector<double> predict_scores(const DatasetDescriptor& descriptor) const;
  /// Like the above; the oracle kind returns -perf under `metric`.
  std::vector<double> predict_scores(const MetaRecord& record, PerfMetric metric = PerfMetric::kWorstGroup) const;
  /// Scores mapped to per-algorithm suitability in [0,1] for the binary rule.
  std::vector<double> probabilities(std::span<const double> scores) const;

  const Mlp& network() const { return net_; }
  const DecisionTree& tree() const { return tree_; }

  nlohmann::json to_json() const;
  static Selector from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Selector load(const std::filesystem::path& path);

  friend Selector train_selector(const MetaDataset&, const SelectorSpec&, std::uint64_t);
  friend Selector train_mimic_tree(const MetaDataset&, const Selector&, const TreeSpec&);

 private:
  Mlp net_;
  DecisionTree tree_;
  std::vector<double> knn_x_;  // standardized inputs, row-major
  std::vector<double> knn_y_;  // label vectors, row-major
  std::vector<double> constant_;
};

/// Train any kind except the mimic tree on the given (meta-train) records.
Selector train_selector(const MetaDataset& meta, const SelectorSpec& spec, std::uint64_t seed);

/// Depth-limited tree fit to the MLP's top-logit choices on `meta`, with
/// degrees folded to |d - 0.5|.
Selector train_mimic_tree(const MetaDataset& meta, const Selector& mlp, const TreeSpec& spec = {});

enum class SelectionRule { kTopLogit, kBinaryRandom };
std::string_view to_string(SelectionRule rule);
SelectionRule parse_selection_rule(std::string_view text);

/// Index of the first maximum.
std::size_t argmax(std::span<const double> scores);

/// top_logit: argmax of scores. binary_random: uniform among algorithms with
/// probability >= 0.5, argmax of scores when there are none.
std::size_t select_algorithm(std::span<const double> scores, std::span<const double> probabilities, SelectionRule rule,
                             Rng& rng);

/// Selection for one record with the selector's own scores/probabilities.
std::size_t select_for(const Selector& selector, const MetaRecord& record, SelectionRule rule, Rng& rng,
                       PerfMetric metric = PerfMetric::kWorstGroup);

/// Hash-derived meta-dataset split: a record goes to the eval side with
/// probability `eval_fraction`, decided by (task_id, seed).
struct MetaSplit {
  MetaDataset train;
  MetaDataset eval;
};
MetaSplit split_meta(const MetaDataset& meta, double eval_fraction, std::uint64_t seed);

}  // namespace shiftsel
