#pragma once
// Scoring selectors against precomputed performance and the analyses built
// on top of it.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "shiftsel/meta.hpp"
#include "shiftsel/selectors.hpp"

namespace shiftsel {

/// Fraction of records whose selected algorithm carries label 1.
double zero_one_accuracy(std::span<const std::size_t> selections, const MetaDataset& meta);

/// Mean over records of the selected algorithm's error (under meta.metric).
double realized_error(std::span<const std::size_t> selections, const MetaDataset& meta);

/// Mean and population standard deviation.
struct Summary {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
};
Summary summarize(std::span<const double> values);

/// Selections for every record; the binary rule draws from a stream derived
/// from `seed`.
std::vector<std::size_t> select_all(const Selector& selector, const MetaDataset& meta, SelectionRule rule,
                                    std::uint64_t seed);

struct SelectorEval {
  std::string name;
  SelectorKind kind = SelectorKind::kMlp;
  std::vector<std::uint64_t> seeds;
  std::vector<double> accuracy;  // per seed
  std::vector<double> realized;  // per seed
  Summary accuracy_summary;
  Summary realized_summary;
  std::vector<std::size_t> histogram;               // selections over all seeds
  std::vector<std::vector<std::size_t>> selections;  // per seed, aligned with EvalReport::task_ids
};

struct EvalReport {
  std::vector<std::string> algorithms;
  std::vector<std::string> task_ids;
  PerfMetric metric = PerfMetric::kWorstGroup;
  double epsilon = kDefaultEpsilon;
  SelectionRule rule = SelectionRule::kTopLogit;
  std::vector<SelectorEval> selectors;

  const SelectorEval& find(std::string_view name) const;
  nlohmann::json to_json() const;
  /// Fixed-width table: selector, 0-1 accuracy and realized error as mean ± std.
  std::string table() const;
};

/// Score trained selectors (one per seed, same name) on `eval`.
SelectorEval evaluate_selector(std::span<const Selector> per_seed, const MetaDataset& eval, SelectionRule rule);

/// Train every spec for every seed on `train` and score on `eval`.
EvalReport evaluate_specs(const MetaDataset& train, const MetaDataset& eval, std::span<const SelectorSpec> specs,
                          std::span<const std::uint64_t> seeds, SelectionRule rule, int workers = 0);

EvalReport make_report(const MetaDataset& eval, SelectionRule rule, std::vector<SelectorEval> selectors);

/// perf[a] - perf[b] per record under meta.metric.
std::vector<double> perf_gap_distribution(const MetaDataset& meta, std::size_t a, std::size_t b);
void write_gap_csv(const std::filesystem::path& path, const MetaDataset& meta, std::size_t a, std::size_t b);

struct CurvePoint {
  std::size_t size = 0;
  std::vector<double> accuracy;  // per seed
  Summary summary;
};

/// For each size: subsample the meta-train records (seeded per size/seed),
/// train the spec and score on `eval`. Sizes above the record count are
/// clamped (reported in `warnings`).
std::vector<CurvePoint> scaling_curve(const MetaDataset& train, const MetaDataset& eval, std::span<const std::size_t> sizes,
                                      const SelectorSpec& spec, std::span<const std::uint64_t> seeds, SelectionRule rule,
                                      std::vector<std::string>* warnings = nullptr, int workers = 0);

/// Deterministic subsample of `count` records.
MetaDataset subsample(const MetaDataset& meta, std::size_t count, std::uint64_t seed);

enum class AblationMode { kRetrain, kMask };
std::string_view to_string(AblationMode mode);
AblationMode parse_ablation_mode(std::string_view text);

struct FeatureDrop {
  std::string feature;
  std::vector<double> full;    // per seed
  std::vector<double> masked;  // per seed
  Summary drop;                // full - masked
};

/// Leave-one-descriptor-out: for every input feature of `spec`, retrain
/// without it (or with it masked) and report the accuracy drop.
std::vector<FeatureDrop> leave_one_descriptor_out(const MetaDataset& train, const MetaDataset& eval,
                                                  const SelectorSpec& spec, std::span<const std::uint64_t> seeds,
                                                  SelectionRule rule, AblationMode mode, int workers = 0);

/// Same analysis on the meta-dataset restricted to two algorithms.
std::vector<FeatureDrop> pairwise_selector_analysis(const MetaDataset& train, const MetaDataset& eval, std::size_t a,
                                                    std::size_t b, const SelectorSpec& spec,
                                                    std::span<const std::uint64_t> seeds, SelectionRule rule,
                                                    AblationMode mode, int workers = 0);

void write_drops_csv(const std::filesystem::path& path, std::span<const FeatureDrop> drops);
void write_curve_csv(const std::filesystem::path& path, std::span<const CurvePoint> curve);

struct TreeExport {
  std::string dot;
  std::string rules;
};

/// DOT digraph and nested if/else rules (thresholds printed to round-trip
/// precision). Throws kUnsupported for non-tree selectors.
TreeExport export_tree(const Selector& selector);

}  // namespace shiftsel
