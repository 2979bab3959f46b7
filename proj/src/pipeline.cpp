#include "shiftsel/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#include "shiftsel/error.hpp"
#include "shiftsel/rng.hpp"
#include "shiftsel/shift.hpp"

namespace fs = std::filesystem;

namespace shiftsel {

namespace {

constexpr std::uint64_t kDegreeStream = 0xde9ee5;

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
    out << text;
    if (!out.flush()) throw Error(ErrorKind::kIo, "write failed for " + path.string());
  }
  fs::rename(tmp, path);
}

std::string pair_tag(const std::pair<std::string, std::string>& p) { return p.first + "_" + p.second; }

std::string mimic_name(const std::string& subject) { return "mimic_" + subject; }

std::size_t column_of(const MetaDataset& meta, const std::string& algorithm) {
  const auto it = std::find(meta.algorithms.begin(), meta.algorithms.end(), algorithm);
  if (it == meta.algorithms.end()) {
    throw Error(ErrorKind::kInvalidArgument, "algorithm '" + algorithm + "' is not a column of the meta-dataset");
  }
  return static_cast<std::size_t>(it - meta.algorithms.begin());
}

int resolve_workers(int workers) { return workers > 0 ? workers : omp_get_max_threads(); }

}  // namespace

std::vector<ShiftDegrees> degree_list(const GridConfig& grid, std::uint64_t seed) {
  std::vector<ShiftDegrees> out;
  Rng rng(derive_seed(seed, kDegreeStream));
  for (int i = 0; i < grid.triple_samples; ++i) out.push_back(sample_degrees(rng, DegreeMode::kTriple));
  for (auto kind : {ShiftKind::kSpurious, ShiftKind::kLabel, ShiftKind::kCovariate}) {
    for (double v : grid.single_shift_grid) {
      const ShiftDegrees s = single_shift(kind, v);
      if (std::find(out.begin() + grid.triple_samples, out.end(), s) == out.end()) out.push_back(s);
    }
  }
  return out;
}

TaskPlan plan_tasks(const ExperimentConfig& config) {
  const auto& grid = config.grid;
  const auto degrees = degree_list(grid, config.seed);
  TaskPlan plan;
  std::uint64_t index = 0;
  for (auto n : grid.sizes) {
    for (auto d : grid.dims) {
      for (auto r : grid.availabilities) {
        for (const auto& s : degrees) {
          const std::uint64_t grid_index = index++;
          char where[160];
          std::snprintf(where, sizeof where, "n=%lld d=%d r=%g degrees=(%.4f, %.4f, %.4f)",
                        static_cast<long long>(n), d, r, s.spurious, s.label, s.covariate);
          if (!is_feasible(s)) {
            plan.skipped.push_back(std::string(where) + ": infeasible degrees");
            continue;
          }
          GroupCounts counts;
          try {
            counts = solve_group_counts(n, s);
          } catch (const Error& e) {
            plan.skipped.push_back(std::string(where) + ": " + e.what());
            continue;
          }
          if (std::any_of(counts.counts.begin(), counts.counts.end(), [](auto c) { return c == 0; })) {
            plan.skipped.push_back(std::string(where) + ": a training group would be empty");
            continue;
          }
          TaskSpec spec;
          char id[16];
          std::snprintf(id, sizeof id, "t%05zu", plan.specs.size());
          spec.task_id = id;
          spec.source = TaskSource::kSynthetic;
          spec.n = n;
          spec.d = d;
          spec.r = r;
          spec.degrees = s;
          spec.n_test = grid.n_test.value_or(std::max<std::int64_t>(4, n / 4 * 4));
          spec.seed = derive_seed(config.seed, grid_index);
          spec.core_variance = grid.core_variance;
          plan.specs.push_back(std::move(spec));
        }
      }
    }
  }
  return plan;
}

MetaSplit split_for_config(const MetaDataset& meta, const ExperimentConfig& config) {
  MetaSplit split = split_meta(meta, config.split.eval_fraction, config.seed);
  if (const auto max_n = config.split.meta_train_max_n) {
    split.train = filter_records(split.train, [&](const MetaRecord& r) { return r.descriptor.n <= *max_n; });
  }
  if (const auto min_n = config.split.eval_min_n) {
    split.eval = filter_records(split.eval, [&](const MetaRecord& r) { return r.descriptor.n >= *min_n; });
  }
  if (split.train.records.empty() || split.eval.records.empty()) {
    throw Error(ErrorKind::kDegenerateInput, "meta split leaves an empty side (train " +
                                                 std::to_string(split.train.size()) + ", eval " +
                                                 std::to_string(split.eval.size()) + " records)");
  }
  return split;
}

Pipeline::Pipeline(ExperimentConfig config, PipelineOptions options)
    : config_(std::move(config)), options_(std::move(options)) {
  config_.validate();
  if (options_.workers <= 0) options_.workers = config_.workers;
  dir_ = options_.out / config_.hash();
}

std::ostream& Pipeline::log() const { return options_.log != nullptr ? *options_.log : std::cerr; }

fs::path Pipeline::artifact_path(const std::string& name, std::uint64_t seed) const {
  return selectors_dir() / (name + "_s" + std::to_string(seed) + ".json");
}

void Pipeline::prepare_dir() const {
  fs::create_directories(dir_);
  write_text(dir_ / "config.json", config_.to_json().dump(2) + "\n");
}

MetaDataset Pipeline::load_meta_checked() const {
  if (!fs::exists(meta_path())) {
    throw Error(ErrorKind::kIo, "no meta-dataset at " + meta_path().string() + " (run build-meta first)");
  }
  MetaDataset meta = load_meta(meta_path());
  if (meta.epsilon != config_.epsilon || meta.metric != config_.metric) {
    meta = relabel(meta, config_.epsilon, config_.metric);
  }
  return meta;
}

TaskPlan Pipeline::gen_tasks() {
  TaskPlan plan = plan_tasks(config_);
  for (const auto& s : plan.skipped) log() << "skipped " << s << '\n';
  log() << "gen-tasks: " << plan.specs.size() << " tasks, " << plan.skipped.size() << " grid entries skipped\n";
  if (options_.dry_run) {
    log() << "dry run: would write " << tasks_path().string() << '\n';
    return plan;
  }
  prepare_dir();
  write_task_specs(tasks_path(), plan.specs);
  std::string skipped;
  for (const auto& s : plan.skipped) skipped += s + '\n';
  write_text(dir_ / "gen_tasks.log", skipped);
  return plan;
}

AssemblyResult Pipeline::build_meta(std::optional<std::size_t> stop_after) {
  const bool have_tasks = fs::exists(tasks_path());
  if (!have_tasks && !options_.dry_run) {
    throw Error(ErrorKind::kIo, "no task specs at " + tasks_path().string() + " (run gen-tasks first)");
  }
  // A dry run before gen-tasks plans from the config instead.
  const auto specs = have_tasks ? read_task_specs(tasks_path()) : plan_tasks(config_).specs;
  AssemblyOptions options;
  options.train = config_.train;
  options.epsilon = config_.epsilon;
  options.descriptor = config_.descriptor;
  options.workers = options_.workers;
  options.stop_after = stop_after;
  if (options_.dry_run) {
    std::size_t done = 0;
    if (std::ifstream journal(journal_path(meta_path())); journal) {
      std::string line;
      while (std::getline(journal, line)) done += line.empty() ? 0 : 1;
    }
    log() << "dry run: " << specs.size() << " tasks x " << kNumAlgorithms << " algorithms ("
          << (specs.size() - std::min(done, specs.size())) << " pending, " << done << " journaled), descriptor mode "
          << to_string(config_.descriptor.mode) << ", " << resolve_workers(options_.workers)
          << " workers; would write " << meta_path().string() << '\n';
    return {};
  }
  prepare_dir();
  auto result = assemble_meta_dataset(specs, options, meta_path());
  log() << "build-meta: " << result.meta.size() << " records, " << result.failures.size() << " failures";
  if (result.resumed > 0) log() << ", " << result.resumed << " resumed from journal";
  if (result.interrupted) log() << " (interrupted; rerun to resume)";
  log() << '\n';
  for (const auto& f : result.failures) log() << "failed " << f.task_id << " [" << f.kind << "]: " << f.message << '\n';
  return result;
}

std::vector<fs::path> Pipeline::train_selectors(const std::vector<std::string>& only) {
  std::vector<const SelectorSpec*> specs;
  for (const auto& name : only) specs.push_back(&config_.selector(name));
  if (only.empty()) {
    for (const auto& s : config_.selectors) specs.push_back(&s);
  }
  const auto& seeds = config_.selector_seeds;
  const bool mimic = config_.analysis.mimic_tree &&
                     std::any_of(specs.begin(), specs.end(), [&](const SelectorSpec* s) {
                       return s->name == config_.analysis.subject && s->kind == SelectorKind::kMlp;
                     });
  if (options_.dry_run) {
    for (const auto* s : specs) {
      log() << "dry run: would train " << s->name << " (" << to_string(s->kind) << ") for " << seeds.size()
            << " seeds\n";
    }
    if (mimic) log() << "dry run: would fit " << mimic_name(config_.analysis.subject) << " to " << config_.analysis.subject << '\n';
    return {};
  }
  const MetaDataset meta = load_meta_checked();
  const MetaSplit split = split_for_config(meta, config_);
  const std::string fingerprint = file_fingerprint(meta_path());
  log() << "train-selector: " << split.train.size() << " meta-train / " << split.eval.size() << " eval records\n";
  fs::create_directories(selectors_dir());
  prepare_dir();

  const std::size_t ns = seeds.size();
  std::vector<Selector> trained(specs.size() * ns);
  std::vector<std::string> errors(trained.size());
  std::vector<int> kinds(trained.size(), -1);
  const auto jobs = static_cast<std::int64_t>(trained.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(resolve_workers(options_.workers))
  for (std::int64_t job = 0; job < jobs; ++job) {
    const auto j = static_cast<std::size_t>(job);
    try {
      trained[j] = train_selector(split.train, *specs[j / ns], seeds[j % ns]);
    } catch (const Error& e) {
      errors[j] = e.what();
      kinds[j] = static_cast<int>(e.kind());
    }
  }
  std::vector<fs::path> written;
  for (std::size_t j = 0; j < trained.size(); ++j) {
    if (kinds[j] >= 0) {
      throw Error(static_cast<ErrorKind>(kinds[j]),
                  "selector '" + specs[j / ns]->name + "' seed " + std::to_string(seeds[j % ns]) + ": " + errors[j]);
    }
    auto& sel = trained[j];
    sel.meta_fingerprint = fingerprint;
    for (const auto& w : sel.warnings) log() << "warning [" << sel.spec.name << "]: " << w << '\n';
    written.push_back(artifact_path(sel.spec.name, sel.seed));
    sel.save(written.back());
    if (mimic && sel.spec.name == config_.analysis.subject) {
      Selector tree = train_mimic_tree(split.train, sel);
      tree.meta_fingerprint = fingerprint;
      written.push_back(artifact_path(tree.spec.name, sel.seed));
      tree.save(written.back());
    }
  }
  log() << "train-selector: wrote " << written.size() << " artifacts to " << selectors_dir().string() << '\n';
  return written;
}

std::vector<Selector> Pipeline::load_artifacts(const SelectorSpec& spec) const {
  std::vector<Selector> out;
  for (auto seed : config_.selector_seeds) {
    const fs::path path = artifact_path(spec.name, seed);
    if (!fs::exists(path)) {
      throw Error(ErrorKind::kIo, "missing selector artifact " + path.string() + " (run train-selector first)");
    }
    out.push_back(Selector::load(path));
    if (out.back().meta_fingerprint != file_fingerprint(meta_path())) {
      log() << "warning: " << path.string() << " was trained on a different meta-dataset (rerun train-selector)\n";
    }
  }
  return out;
}

EvalReport Pipeline::evaluate() {
  if (options_.dry_run) {
    log() << "dry run: would evaluate " << config_.selectors.size() << " selectors x "
          << config_.selector_seeds.size() << " seeds, rule " << to_string(config_.selection_rule) << '\n';
    return {};
  }
  const MetaDataset meta = load_meta_checked();
  const MetaSplit split = split_for_config(meta, config_);
  std::vector<SelectorEval> evals;
  for (const auto& spec : config_.selectors) {
    evals.push_back(evaluate_selector(load_artifacts(spec), split.eval, config_.selection_rule));
  }
  const std::string mimic = mimic_name(config_.analysis.subject);
  if (config_.analysis.mimic_tree && fs::exists(artifact_path(mimic, config_.selector_seeds.front()))) {
    SelectorSpec mimic_spec;
    mimic_spec.name = mimic;
    evals.push_back(evaluate_selector(load_artifacts(mimic_spec), split.eval, config_.selection_rule));
  }
  EvalReport report = make_report(split.eval, config_.selection_rule, std::move(evals));
  prepare_dir();
  write_text(report_path(), report.to_json().dump(2) + "\n");
  std::string summary = "held-out tasks: " + std::to_string(split.eval.size()) + ", meta-train tasks: " +
                        std::to_string(split.train.size()) + ", selector seeds: " +
                        std::to_string(config_.selector_seeds.size()) + "\n\n" + report.table();
  write_text(summary_path(), summary);
  log() << "evaluate: wrote " << report_path().string() << " and " << summary_path().string() << '\n';
  return report;
}

std::vector<fs::path> Pipeline::analyze() {
  const auto& a = config_.analysis;
  if (options_.dry_run) {
    log() << "dry run: " << a.gap_pairs.size() << " gap distributions, " << a.scaling_sizes.size()
          << " scaling sizes, leave-one-out " << (a.leave_one_out ? to_string(a.loo_mode) : "off") << ", "
          << a.pairwise.size() << " pairwise analyses, " << a.epsilon_grid.size() << " epsilon values\n";
    return {};
  }
  const MetaDataset meta = load_meta_checked();
  const MetaSplit split = split_for_config(meta, config_);
  fs::create_directories(analysis_dir());
  prepare_dir();
  std::vector<fs::path> written;
  const auto& seeds = config_.selector_seeds;
  const int workers = options_.workers;

  for (const auto& p : a.gap_pairs) {
    written.push_back(analysis_dir() / ("gaps_" + pair_tag(p) + ".csv"));
    write_gap_csv(written.back(), meta, column_of(meta, p.first), column_of(meta, p.second));
  }

  const bool have_subject = std::any_of(config_.selectors.begin(), config_.selectors.end(),
                                        [&](const SelectorSpec& s) { return s.name == a.subject; });
  if (have_subject) {
    const SelectorSpec& subject = config_.selector(a.subject);
    if (!a.scaling_sizes.empty()) {
      std::vector<std::string> warnings;
      const auto curve = scaling_curve(split.train, split.eval, a.scaling_sizes, subject, seeds,
                                       config_.selection_rule, &warnings, workers);
      for (const auto& w : warnings) log() << "warning: " << w << '\n';
      written.push_back(analysis_dir() / "scaling.csv");
      write_curve_csv(written.back(), curve);
    }
    if (a.leave_one_out) {
      const auto drops = leave_one_descriptor_out(split.train, split.eval, subject, seeds, config_.selection_rule,
                                                  a.loo_mode, workers);
      written.push_back(analysis_dir() / ("leave_one_out_" + std::string(to_string(a.loo_mode)) + ".csv"));
      write_drops_csv(written.back(), drops);
    }
    for (const auto& p : a.pairwise) {
      const auto drops =
          pairwise_selector_analysis(split.train, split.eval, column_of(meta, p.first), column_of(meta, p.second),
                                     subject, seeds, config_.selection_rule, a.loo_mode, workers);
      written.push_back(analysis_dir() / ("pairwise_" + pair_tag(p) + ".csv"));
      write_drops_csv(written.back(), drops);
    }
    if (!a.epsilon_grid.empty()) {
      std::string csv = "epsilon,mean_positive_labels,min_positive_labels,accuracy_mean,accuracy_std\n";
      for (double eps : a.epsilon_grid) {
        const MetaDataset train = relabel(split.train, eps, config_.metric);
        const MetaDataset eval = relabel(split.eval, eps, config_.metric);
        const std::array<SelectorSpec, 1> one{subject};
        const auto report = evaluate_specs(train, eval, one, seeds, config_.selection_rule, workers);
        double positives = 0.0;
        std::size_t min_pos = eval.num_algorithms();
        for (const auto* side : {&train, &eval}) {
          for (const auto& r : side->records) {
            const auto k = static_cast<std::size_t>(std::count(r.labels.begin(), r.labels.end(), 1));
            positives += static_cast<double>(k);
            min_pos = std::min(min_pos, k);
          }
        }
        positives /= static_cast<double>(train.size() + eval.size());
        char line[200];
        std::snprintf(line, sizeof line, "%.17g,%.17g,%zu,%.17g,%.17g\n", eps, positives, min_pos,
                      report.selectors[0].accuracy_summary.mean, report.selectors[0].accuracy_summary.std);
        csv += line;
      }
      written.push_back(analysis_dir() / "epsilon.csv");
      write_text(written.back(), csv);
    }
  } else {
    log() << "analyze: subject selector '" << a.subject << "' not configured; skipping selector analyses\n";
  }

  if (a.mimic_tree && fs::exists(artifact_path(mimic_name(a.subject), seeds.front()))) {
    std::string csv = "seed,agreement_meta_train,agreement_eval\n";
    for (auto seed : seeds) {
      const Selector mlp = Selector::load(artifact_path(a.subject, seed));
      const Selector tree = Selector::load(artifact_path(mimic_name(a.subject), seed));
      double agree[2] = {0.0, 0.0};
      const MetaDataset* sides[2] = {&split.train, &split.eval};
      for (int s = 0; s < 2; ++s) {
        std::size_t same = 0;
        for (const auto& r : sides[s]->records) {
          same += argmax(mlp.predict_scores(r.descriptor)) == argmax(tree.predict_scores(r.descriptor)) ? 1 : 0;
        }
        agree[s] = static_cast<double>(same) / static_cast<double>(sides[s]->size());
      }
      char line[120];
      std::snprintf(line, sizeof line, "%llu,%.17g,%.17g\n", static_cast<unsigned long long>(seed), agree[0],
                    agree[1]);
      csv += line;
    }
    written.push_back(analysis_dir() / "mimic_agreement.csv");
    write_text(written.back(), csv);
  }
  for (const auto& p : written) log() << "analyze: wrote " << p.string() << '\n';
  return written;
}

TreeExport export_tree_files(const fs::path& artifact, const fs::path& out_dir) {
  const Selector selector = Selector::load(artifact);
  TreeExport ex = export_tree(selector);
  fs::create_directories(out_dir);
  const std::string stem = artifact.stem().string();
  write_text(out_dir / (stem + ".dot"), ex.dot);
  write_text(out_dir / (stem + ".rules.txt"), ex.rules);
  return ex;
}

}  // namespace shiftsel
