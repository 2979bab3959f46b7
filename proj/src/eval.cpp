#include "shiftsel/eval.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "shiftsel/error.hpp"

namespace shiftsel {

using nlohmann::json;

namespace {

void check_aligned(std::span<const std::size_t> selections, const MetaDataset& meta) {
  if (selections.size() != meta.size()) {
    throw Error(ErrorKind::kInvalidArgument, "selections (" + std::to_string(selections.size()) +
                                                 ") and records (" + std::to_string(meta.size()) +
                                                 ") differ in length");
  }
  if (meta.records.empty()) throw Error(ErrorKind::kDegenerateInput, "no evaluation records");
  for (auto s : selections) {
    if (s >= meta.num_algorithms()) throw Error(ErrorKind::kInvalidArgument, "selection index out of range");
  }
}

std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int resolve_workers(int workers) { return workers > 0 ? workers : omp_get_max_threads(); }

// Run `count` independent jobs; job i writes only to slot i.
template <class Job>
void run_jobs(std::size_t count, int workers, Job&& job) {
  std::vector<std::string> errors(count);
  std::vector<int> kinds(count, -1);
  const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(resolve_workers(workers))
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      job(static_cast<std::size_t>(i));
    } catch (const Error& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
      kinds[static_cast<std::size_t>(i)] = static_cast<int>(e.kind());
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
      kinds[static_cast<std::size_t>(i)] = static_cast<int>(ErrorKind::kInvalidArgument);
    }
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (kinds[i] >= 0) throw Error(static_cast<ErrorKind>(kinds[i]), errors[i]);
  }
}

}  // namespace

double zero_one_accuracy(std::span<const std::size_t> selections, const MetaDataset& meta) {
  check_aligned(selections, meta);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < selections.size(); ++i) hits += meta.records[i].labels[selections[i]] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(selections.size());
}

double realized_error(std::span<const std::size_t> selections, const MetaDataset& meta) {
  check_aligned(selections, meta);
  double total = 0.0;
  for (std::size_t i = 0; i < selections.size(); ++i) total += meta.records[i].errors(meta.metric)[selections[i]];
  return total / static_cast<double>(selections.size());
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

std::vector<std::size_t> select_all(const Selector& selector, const MetaDataset& meta, SelectionRule rule,
                                    std::uint64_t seed) {
  if (selector.num_algorithms() != meta.num_algorithms()) {
    throw Error(ErrorKind::kInvalidArgument, "selector '" + selector.spec.name + "' scores " +
                                                 std::to_string(selector.num_algorithms()) + " algorithms, meta has " +
                                                 std::to_string(meta.num_algorithms()));
  }
  Rng rng(derive_seed(seed, 0x5e1ec7));
  std::vector<std::size_t> out;
  out.reserve(meta.size());
  for (const auto& r : meta.records) out.push_back(select_for(selector, r, rule, rng, meta.metric));
  return out;
}

const SelectorEval& EvalReport::find(std::string_view name) const {
  for (const auto& s : selectors) {
    if (s.name == name) return s;
  }
  throw Error(ErrorKind::kInvalidArgument, "no selector named '" + std::string(name) + "' in the report");
}

json EvalReport::to_json() const {
  json sel = json::array();
  for (const auto& s : selectors) {
    sel.push_back({{"name", s.name},
                   {"kind", to_string(s.kind)},
                   {"seeds", s.seeds},
                   {"zero_one_accuracy", s.accuracy},
                   {"zero_one_accuracy_mean", s.accuracy_summary.mean},
                   {"zero_one_accuracy_std", s.accuracy_summary.std},
                   {"realized_error", s.realized},
                   {"realized_error_mean", s.realized_summary.mean},
                   {"realized_error_std", s.realized_summary.std},
                   {"selection_histogram", s.histogram},
                   {"selections", s.selections}});
  }
  return json{{"algorithms", algorithms}, {"task_ids", task_ids},   {"metric", to_string(metric)},
              {"epsilon", epsilon},       {"rule", to_string(rule)}, {"selectors", sel}};
}

std::string EvalReport::table() const {
  // Pad by displayed characters: "±" is two bytes in UTF-8.
  auto pad = [](std::string text, std::size_t width) {
    std::size_t shown = 0;
    for (unsigned char c : text) shown += (c & 0xC0) != 0x80 ? 1 : 0;
    if (shown < width) text.append(width - shown, ' ');
    return text;
  };
  std::ostringstream out;
  out << pad("selector", 16) << pad("0-1 accuracy (%)", 20)
      << (metric == PerfMetric::kWorstGroup ? "worst-group error (%)" : "avg-group error (%)") << '\n';
  for (const auto& s : selectors) {
    char acc[48], err[48];
    std::snprintf(acc, sizeof acc, "%.1f ± %.1f", 100.0 * s.accuracy_summary.mean, 100.0 * s.accuracy_summary.std);
    std::snprintf(err, sizeof err, "%.2f ± %.2f", 100.0 * s.realized_summary.mean, 100.0 * s.realized_summary.std);
    out << pad(s.name, 16) << pad(acc, 20) << err << '\n';
  }
  return out.str();
}

SelectorEval evaluate_selector(std::span<const Selector> per_seed, const MetaDataset& eval, SelectionRule rule) {
  if (per_seed.empty()) throw Error(ErrorKind::kInvalidArgument, "evaluate_selector: no trained selectors");
  SelectorEval out;
  out.name = per_seed.front().spec.name;
  out.kind = per_seed.front().kind();
  out.histogram.assign(eval.num_algorithms(), 0);
  for (const auto& sel : per_seed) {
    auto picks = select_all(sel, eval, rule, sel.seed);
    out.seeds.push_back(sel.seed);
    out.accuracy.push_back(zero_one_accuracy(picks, eval));
    out.realized.push_back(realized_error(picks, eval));
    for (auto p : picks) out.histogram[p] += 1;
    out.selections.push_back(std::move(picks));
  }
  out.accuracy_summary = summarize(out.accuracy);
  out.realized_summary = summarize(out.realized);
  return out;
}

EvalReport make_report(const MetaDataset& eval, SelectionRule rule, std::vector<SelectorEval> selectors) {
  EvalReport report;
  report.algorithms = eval.algorithms;
  for (const auto& r : eval.records) report.task_ids.push_back(r.task_id);
  report.metric = eval.metric;
  report.epsilon = eval.epsilon;
  report.rule = rule;
  report.selectors = std::move(selectors);
  return report;
}

EvalReport evaluate_specs(const MetaDataset& train, const MetaDataset& eval, std::span<const SelectorSpec> specs,
                          std::span<const std::uint64_t> seeds, SelectionRule rule, int workers) {
  if (seeds.empty()) throw Error(ErrorKind::kInvalidArgument, "evaluate: no selector seeds");
  const std::size_t ns = seeds.size();
  std::vector<Selector> trained(specs.size() * ns);
  run_jobs(trained.size(), workers, [&](std::size_t job) {
    trained[job] = train_selector(train, specs[job / ns], seeds[job % ns]);
  });
  std::vector<SelectorEval> evals;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    evals.push_back(evaluate_selector(std::span<const Selector>(trained).subspan(s * ns, ns), eval, rule));
  }
  return make_report(eval, rule, std::move(evals));
}

std::vector<double> perf_gap_distribution(const MetaDataset& meta, std::size_t a, std::size_t b) {
  if (a >= meta.num_algorithms() || b >= meta.num_algorithms()) {
    throw Error(ErrorKind::kInvalidArgument, "perf gap: algorithm index out of range");
  }
  std::vector<double> gaps;
  gaps.reserve(meta.size());
  for (const auto& r : meta.records) gaps.push_back(r.errors(meta.metric)[a] - r.errors(meta.metric)[b]);
  return gaps;
}

void write_gap_csv(const std::filesystem::path& path, const MetaDataset& meta, std::size_t a, std::size_t b) {
  const auto gaps = perf_gap_distribution(meta, a, b);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << "task_id,d_sc,d_ls,d_cs,r,n,d,gap\n";
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    const auto& r = meta.records[i];
    out << r.task_id;
    for (double v : r.descriptor.values()) out << ',' << fmt_full(v);
    out << ',' << fmt_full(gaps[i]) << '\n';
  }
}

MetaDataset subsample(const MetaDataset& meta, std::size_t count, std::uint64_t seed) {
  std::vector<std::pair<std::uint64_t, std::size_t>> keys;
  keys.reserve(meta.size());
  for (std::size_t i = 0; i < meta.size(); ++i) {
    keys.emplace_back(mix64(hash_bytes(meta.records[i].task_id) ^ mix64(seed)), i);
  }
  std::sort(keys.begin(), keys.end());
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < std::min(count, keys.size()); ++k) keep.push_back(keys[k].second);
  std::sort(keep.begin(), keep.end());
  MetaDataset out = meta;
  out.records.clear();
  for (auto i : keep) out.records.push_back(meta.records[i]);
  return out;
}

std::vector<CurvePoint> scaling_curve(const MetaDataset& train, const MetaDataset& eval,
                                      std::span<const std::size_t> sizes, const SelectorSpec& spec,
                                      std::span<const std::uint64_t> seeds, SelectionRule rule,
                                      std::vector<std::string>* warnings, int workers) {
  std::vector<CurvePoint> curve(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    curve[i].size = std::min(sizes[i], train.size());
    if (sizes[i] > train.size() && warnings != nullptr) {
      warnings->push_back("scaling size " + std::to_string(sizes[i]) + " clamped to " + std::to_string(train.size()));
    }
    curve[i].accuracy.assign(seeds.size(), 0.0);
  }
  const std::size_t ns = seeds.size();
  run_jobs(sizes.size() * ns, workers, [&](std::size_t job) {
    auto& point = curve[job / ns];
    const std::uint64_t seed = seeds[job % ns];
    const MetaDataset sub = subsample(train, point.size, derive_seed(seed, point.size));
    const Selector sel = train_selector(sub, spec, seed);
    point.accuracy[job % ns] = zero_one_accuracy(select_all(sel, eval, rule, seed), eval);
  });
  for (auto& p : curve) p.summary = summarize(p.accuracy);
  return curve;
}

std::string_view to_string(AblationMode mode) { return mode == AblationMode::kRetrain ? "retrain" : "mask"; }

AblationMode parse_ablation_mode(std::string_view text) {
  if (text == "retrain") return AblationMode::kRetrain;
  if (text == "mask") return AblationMode::kMask;
  throw Error(ErrorKind::kParse, "unknown ablation mode '" + std::string(text) + "'");
}

std::vector<FeatureDrop> leave_one_descriptor_out(const MetaDataset& train, const MetaDataset& eval,
                                                  const SelectorSpec& spec, std::span<const std::uint64_t> seeds,
                                                  SelectionRule rule, AblationMode mode, int workers) {
  if (spec.features.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "leave-one-descriptor-out needs at least two input features");
  }
  const std::size_t nf = spec.features.size();
  const std::size_t ns = seeds.size();
  std::vector<SelectorSpec> variants{spec};
  for (const auto& f : spec.features) {
    SelectorSpec v = spec;
    v.name = spec.name + "-" + f;
    if (mode == AblationMode::kRetrain) {
      v.features.erase(std::find(v.features.begin(), v.features.end(), f));
      v.masked.erase(std::remove(v.masked.begin(), v.masked.end(), f), v.masked.end());
    } else if (std::find(v.masked.begin(), v.masked.end(), f) == v.masked.end()) {
      v.masked.push_back(f);
    }
    variants.push_back(std::move(v));
  }
  std::vector<double> acc(variants.size() * ns);
  run_jobs(acc.size(), workers, [&](std::size_t job) {
    const std::uint64_t seed = seeds[job % ns];
    const Selector sel = train_selector(train, variants[job / ns], seed);
    acc[job] = zero_one_accuracy(select_all(sel, eval, rule, seed), eval);
  });
  std::vector<FeatureDrop> drops(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    drops[f].feature = spec.features[f];
    std::vector<double> d(ns);
    for (std::size_t s = 0; s < ns; ++s) {
      drops[f].full.push_back(acc[s]);
      drops[f].masked.push_back(acc[(f + 1) * ns + s]);
      d[s] = acc[s] - acc[(f + 1) * ns + s];
    }
    drops[f].drop = summarize(d);
  }
  return drops;
}

std::vector<FeatureDrop> pairwise_selector_analysis(const MetaDataset& train, const MetaDataset& eval, std::size_t a,
                                                    std::size_t b, const SelectorSpec& spec,
                                                    std::span<const std::uint64_t> seeds, SelectionRule rule,
                                                    AblationMode mode, int workers) {
  const std::array<std::size_t, 2> pair{a, b};
  return leave_one_descriptor_out(restrict_algorithms(train, pair), restrict_algorithms(eval, pair), spec, seeds, rule,
                                  mode, workers);
}

void write_drops_csv(const std::filesystem::path& path, std::span<const FeatureDrop> drops) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << "feature,full_accuracy_mean,ablated_accuracy_mean,drop_mean,drop_std\n";
  for (const auto& d : drops) {
    out << d.feature << ',' << fmt_full(summarize(d.full).mean) << ',' << fmt_full(summarize(d.masked).mean) << ','
        << fmt_full(d.drop.mean) << ',' << fmt_full(d.drop.std) << '\n';
  }
}

void write_curve_csv(const std::filesystem::path& path, std::span<const CurvePoint> curve) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << "size,accuracy_mean,accuracy_std,seeds\n";
  for (const auto& p : curve) {
    out << p.size << ',' << fmt_full(p.summary.mean) << ',' << fmt_full(p.summary.std) << ',' << p.summary.count
        << '\n';
  }
}

namespace {

std::string vector_text(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + fmt_full(v[k]);
  return s + "]";
}

}  // namespace

TreeExport export_tree(const Selector& selector) {
  if (selector.kind() != SelectorKind::kTree && selector.kind() != SelectorKind::kMimicTree) {
    throw Error(ErrorKind::kUnsupported, "export-tree: selector '" + selector.spec.name + "' is of kind " +
                                             std::string(to_string(selector.kind())) + ", not a tree");
  }
  const auto& nodes = selector.tree().nodes();
  const auto names = selector.transform.input_names();
  std::ostringstream dot;
  dot << "digraph selector {\n  node [shape=box, fontname=\"Helvetica\"];\n";
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    dot << "  n" << i << " [label=\"";
    if (n.is_leaf()) {
      dot << selector.algorithms[argmax(n.value)] << "\\nsamples = " << n.samples << "\\nvalue = " << vector_text(n.value);
    } else {
      dot << names[static_cast<std::size_t>(n.feature)] << " <= " << fmt_full(n.threshold) << "\\nsamples = " << n.samples;
    }
    dot << "\"];\n";
    if (!n.is_leaf()) {
      dot << "  n" << i << " -> n" << n.left << " [label=\"yes\"];\n";
      dot << "  n" << i << " -> n" << n.right << " [label=\"no\"];\n";
    }
  }
  dot << "}\n";

  std::ostringstream rules;
  rules << "# inputs:";
  for (const auto& n : names) rules << ' ' << n;
  rules << "\n# outputs:";
  for (const auto& a : selector.algorithms) rules << ' ' << a;
  rules << '\n';
  auto emit = [&](auto&& self, int id, int indent) -> void {
    const auto& n = nodes[static_cast<std::size_t>(id)];
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    if (n.is_leaf()) {
      rules << pad << "return " << vector_text(n.value) << ";  # " << selector.algorithms[argmax(n.value)]
            << ", samples = " << n.samples << '\n';
      return;
    }
    rules << pad << "if (" << names[static_cast<std::size_t>(n.feature)] << " <= " << fmt_full(n.threshold) << ") {\n";
    self(self, n.left, indent + 1);
    rules << pad << "} else {\n";
    self(self, n.right, indent + 1);
    rules << pad << "}\n";
  };
  emit(emit, 0, 0);
  return TreeExport{dot.str(), rules.str()};
}

}  // namespace shiftsel
