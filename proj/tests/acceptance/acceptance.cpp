// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only when
// every selected criterion passes.
//
// Gaps between selectors are judged on per-seed paired differences: "A beats
// B" means mean(diff) - std(diff) > 0 (>= 0 for "at least"), with a margin
// added for point thresholds.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "../support/rules_eval.hpp"
#include "CLI11.hpp"
#include "shiftsel/algorithms.hpp"
#include "shiftsel/descriptor.hpp"
#include "shiftsel/error.hpp"
#include "shiftsel/eval.hpp"
#include "shiftsel/mlp.hpp"
#include "shiftsel/pipeline.hpp"

using namespace shiftsel;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  // Records one check; failing checks are marked in the detail line.
  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (detail.tellp() > 0) detail << "; ";
    detail << (ok ? "" : "FAILED ") << what;
  }
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

Summary paired(std::span<const double> a, std::span<const double> b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return summarize(d);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Shared desk-scale run (criteria 2, 3, 4, 6, 7, 8).

struct DeskRun {
  ExperimentConfig config;
  fs::path dir;
  MetaDataset meta;
  MetaSplit split;
  EvalReport report;
  std::vector<TaskSpec> specs;
  double seconds = 0.0;
  std::string error;
};

DeskRun& desk(const fs::path& work_dir) {
  static DeskRun run;
  static bool done = false;
  if (done) return run;
  done = true;
  const auto start = Clock::now();
  try {
    run.config = ExperimentConfig::load(fs::path(SHIFTSEL_SOURCE_DIR) / "configs" / "desk.json");
    std::ostringstream log;
    Pipeline pipeline(run.config, {work_dir / "desk", 0, false, &log});
    // Start from scratch so the timing covers the whole pipeline.
    fs::remove_all(pipeline.dir());
    pipeline.gen_tasks();
    const auto assembled = pipeline.build_meta();
    if (!assembled.failures.empty()) {
      run.error = std::to_string(assembled.failures.size()) + " tasks failed during build-meta";
    }
    pipeline.train_selectors();
    run.report = pipeline.evaluate();
    run.dir = pipeline.dir();
    run.meta = load_meta(pipeline.meta_path());
    run.split = split_for_config(run.meta, run.config);
    run.specs = read_task_specs(pipeline.tasks_path());
  } catch (const std::exception& e) {
    run.error = e.what();
  }
  run.seconds = seconds_since(start);
  std::cerr << "desk pipeline finished in " << fmt("%.0f s", run.seconds) << '\n';
  return run;
}

// ---------------------------------------------------------------------------

Verdict criterion1(const fs::path&) {
  Verdict v;
  const auto start = Clock::now();
  const auto counts = solve_group_counts(8, {3.0 / 8.0, 0.5, 5.0 / 8.0});
  v.require(counts == GroupCounts{{2, 3, 2, 1}}, "worked example counts (2,3,2,1)");
  const auto back = quantify_shifts(counts);
  v.require(back == ShiftDegrees{3.0 / 8.0, 0.5, 5.0 / 8.0}, "exact inverse of the worked example");

  Rng rng(20240);
  double worst = 0.0;
  bool bounded = true;
  std::uniform_int_distribution<std::int64_t> sizes(8, 5000);
  for (int i = 0; i < 10000; ++i) {
    const auto s = sample_degrees(rng, DegreeMode::kTriple);
    const auto n = sizes(rng);
    const auto c = solve_group_counts(n, s);
    const auto q = quantify_shifts(c);
    const double err = std::max({std::abs(q.spurious - s.spurious), std::abs(q.label - s.label),
                                 std::abs(q.covariate - s.covariate)});
    const double scaled = err * static_cast<double>(n);
    worst = std::max(worst, scaled);
    if (c.total() != n || err > 2.0 / static_cast<double>(n)) bounded = false;
  }
  v.require(bounded, fmt("10^4 round trips within 2/n (worst n*err %.3f)", worst));
  const double took = seconds_since(start);
  v.require(took < 1.0, fmt("runtime %.3f s", took));
  return v;
}

Verdict criterion2(const fs::path& work_dir) {
  Verdict v;
  auto& run = desk(work_dir);
  if (!run.error.empty()) {
    v.require(false, "desk pipeline: " + run.error);
    return v;
  }
  const auto& r = run.report;
  v.require(true, fmt("%.0f meta-train / %.0f eval tasks", static_cast<double>(run.split.train.size()),
                      static_cast<double>(run.split.eval.size())));
  const char* order[] = {"oracle", "mlp", "global_best", "random"};
  for (int i = 0; i < 3; ++i) {
    const auto d = paired(r.find(order[i + 1]).realized, r.find(order[i]).realized);
    v.require(d.mean - d.std > 0.0, std::string("WG error ") + order[i] + " < " + order[i + 1] +
                                        fmt(" (gap %.4f +- %.4f)", d.mean, d.std));
  }
  const auto gb = paired(r.find("mlp").accuracy, r.find("global_best").accuracy);
  v.require(gb.mean - gb.std >= 0.05, fmt("accuracy mlp - global_best = %.1f +- %.1f points", 100 * gb.mean, 100 * gb.std));
  const auto reg = paired(r.find("mlp").accuracy, r.find("regression").accuracy);
  v.require(reg.mean - reg.std >= 0.0,
            fmt("accuracy mlp - regression = %.1f +- %.1f points", 100 * reg.mean, 100 * reg.std));
  v.require(run.seconds < 45 * 60, fmt("pipeline %.0f s", run.seconds));
  std::cerr << r.table();
  return v;
}

Verdict criterion3(const fs::path& work_dir) {
  Verdict v;
  auto& run = desk(work_dir);
  if (!run.error.empty()) {
    v.require(false, "desk pipeline: " + run.error);
    return v;
  }
  const auto& mlp_spec = run.config.selector("mlp");
  const std::array<SelectorSpec, 1> one{mlp_spec};
  std::vector<double> mlp, gb;
  const double global = run.report.find("global_best").accuracy_summary.mean;
  std::string picks;
  for (auto seed : run.config.selector_seeds) {
    const auto sub = subsample(run.split.train, 200, seed);
    const std::array<std::uint64_t, 1> seeds{seed};
    // Epoch budget chosen by 4-fold validation inside the 200 records; the eval split stays unseen.
    std::array<SelectorSpec, 1> tuned = one;
    double best = -1.0;
    for (int epochs : {50, 100, 150, 300, 600}) {
      auto candidate = mlp_spec;
      candidate.train.epochs = epochs;
      double score = 0.0;
      for (std::uint64_t fold = 0; fold < 4; ++fold) {
        const auto inner = split_meta(sub, 0.25, 99 + fold);
        const auto sel = train_selector(inner.train, candidate, seed);
        score += zero_one_accuracy(select_all(sel, inner.eval, run.config.selection_rule, 0), inner.eval);
      }
      if (score > best) {
        best = score;
        tuned[0] = candidate;
      }
    }
    picks += (picks.empty() ? "" : "/") + std::to_string(tuned[0].train.epochs);
    const auto rep = evaluate_specs(sub, run.split.eval, tuned, seeds, run.config.selection_rule);
    mlp.push_back(rep.selectors[0].accuracy[0]);
    gb.push_back(global);
  }
  const auto d = paired(mlp, gb);
  v.require(d.mean - d.std > 0.0, fmt("200-record mlp %.1f%% vs global_best %.1f%% (gap std %.1f)",
                                      100 * summarize(mlp).mean, 100 * global, 100 * d.std) +
                                      "; inner-validated epochs " + picks);
  return v;
}

Verdict criterion4(const fs::path& work_dir) {
  Verdict v;
  auto& run = desk(work_dir);
  if (!run.error.empty()) {
    v.require(false, "desk pipeline: " + run.error);
    return v;
  }
  const auto& r = run.report;
  const std::pair<const char*, const char*> pairs[] = {{"mlp", "tree"}, {"tree", "linear"}, {"mlp", "knn"}};
  for (const auto& [a, b] : pairs) {
    const auto d = paired(r.find(a).accuracy, r.find(b).accuracy);
    v.require(d.mean - d.std >= 0.0, std::string(a) + " >= " + b +
                                         fmt(" (%.1f vs %.1f, gap std %.1f)", 100 * r.find(a).accuracy_summary.mean,
                                             100 * r.find(b).accuracy_summary.mean, 100 * d.std));
  }
  return v;
}

Split noisy_split(std::size_t n, std::uint64_t seed) {
  Split s;
  s.dim = 3;
  Rng rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> f(s.dim);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = (i % 2 == 0) ? 1 : -1;
    const int a = (i % 3 == 0) ? 1 : -1;
    for (auto& x : f) x = normal(rng) + 0.3 * y;
    s.push_back(f, y, a);
  }
  return s;
}

// Weighted logistic objective evaluated directly from its definition.
double logistic_value(const Split& data, const LinearModel& m, const std::vector<double>& w,
                      const std::vector<double>& off) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double s = m.b;
    for (std::size_t j = 0; j < data.dim; ++j) s += m.w[j] * data.row(i)[j];
    const double z = -data.y[i] * s + (off.empty() ? 0.0 : off[i]);
    total += w[i] * std::log1p(std::exp(z));
  }
  return total;
}

Verdict criterion5(const fs::path&) {
  Verdict v;
  const TrainConfig defaults;
  // (a) tau = 0 is plain ERM.
  {
    TaskSpec spec{"a", TaskSource::kSynthetic, 400, 5, 10.0, {0.8, 0.4, 0.6}, 400, 77};
    const auto task = materialize(spec);
    auto cfg = defaults;
    cfg.tau = 0.0;
    const auto erm = train_model(AlgorithmId::kERM, task.train, cfg, 1);
    const auto la = train_model(AlgorithmId::kLogitAdjust, task.train, cfg, 1);
    v.require(erm.model == la.model && erm.loss_trace == la.loss_trace, "(a) LogitAdjust(tau=0) == ERM bitwise");
  }
  // (b) resampling balances groups.
  {
    TaskSpec spec{"b", TaskSource::kSynthetic, 1000, 3, 1.0, {0.9, 0.5, 0.5}, 400, 78};
    const auto task = materialize(spec);
    Rng rng(3);
    const auto over = group_histogram(resample_groups(task.train, ResampleMode::kOver, rng));
    const auto under = group_histogram(resample_groups(task.train, ResampleMode::kUnder, rng));
    const auto flat = [](const GroupCounts& c) { return c[0] == c[1] && c[1] == c[2] && c[2] == c[3]; };
    v.require(flat(over) && flat(under), "(b) uniform histograms after over/undersampling");
  }
  // (c) DRO weights on the simplex, concentrating on the worst group.
  {
    GroupVector q{0.25, 0.25, 0.25, 0.25};
    const GroupVector frozen{0.2, 0.1, 0.6, 0.4};
    bool simplex = true;
    for (int step = 0; step < 5000; ++step) {
      q = dro_weight_update(q, frozen, 0.01);
      double sum = 0.0;
      for (double x : q) {
        simplex = simplex && x >= 0.0;
        sum += x;
      }
      simplex = simplex && std::abs(sum - 1.0) < 1e-9;
    }
    v.require(simplex && q[2] > 0.99, fmt("(c) DRO simplex kept, q_worst = %.4f", q[2]));
  }
  // (d) gradients vs central differences.
  {
    const auto data = noisy_split(50, 4);
    const auto priors = group_priors(data);
    std::vector<double> w(data.size(), 1.0 / static_cast<double>(data.size())), off(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) off[i] = logit_offset(priors[static_cast<std::size_t>(data.group(i))], 1.0);
    std::mt19937_64 rng(6);
    std::normal_distribution<double> normal;
    double worst = 0.0;
    for (int point = 0; point < 20; ++point) {
      LinearModel m;
      m.w = {normal(rng), normal(rng), normal(rng)};
      m.b = normal(rng);
      for (const auto& o : {std::vector<double>{}, off}) {
        const auto g = logistic_objective(data, m, w, o, 0.0);
        for (std::size_t j = 0; j <= m.w.size(); ++j) {
          LinearModel p = m, q = m;
          (j < m.w.size() ? p.w[j] : p.b) += 1e-5;
          (j < m.w.size() ? q.w[j] : q.b) -= 1e-5;
          const double fd = (logistic_value(data, p, w, o) - logistic_value(data, q, w, o)) / 2e-5;
          const double an = j < m.w.size() ? g.grad_w[j] : g.grad_b;
          worst = std::max(worst, std::abs(an - fd) / std::max(1e-8, std::abs(an) + std::abs(fd)));
        }
      }
    }
    double worst_net = 0.0;
    for (auto kind : {MlpLoss::kBinaryCrossEntropy, MlpLoss::kSquaredError}) {
      const Mlp base(4, 3, MlpSpec{2, 6}, 11);
      const std::size_t rows = 9;
      std::vector<double> x(rows * 4), t(rows * 3);
      for (auto& e : x) e = normal(rng);
      for (auto& e : t) e = kind == MlpLoss::kBinaryCrossEntropy ? (normal(rng) > 0 ? 1.0 : 0.0) : normal(rng);
      std::vector<double> grad;
      base.loss(x, rows, t, kind, &grad);
      for (std::size_t i = 0; i < grad.size(); ++i) {
        Mlp p = base, q = base;
        p.parameters()[i] += 1e-6;
        q.parameters()[i] -= 1e-6;
        const double fd = (p.loss(x, rows, t, kind, nullptr) - q.loss(x, rows, t, kind, nullptr)) / 2e-6;
        worst_net = std::max(worst_net, std::abs(fd - grad[i]) / std::max(1e-6, std::abs(fd) + std::abs(grad[i])));
      }
    }
    v.require(worst < 1e-4 && worst_net < 1e-4,
              fmt("(d) gradient rel. error logistic %.1e, selector %.1e", worst, worst_net));
  }
  // (e) undersampling wins under strong spurious correlation.
  {
    std::vector<double> erm, under;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      TaskSpec spec{"e", TaskSource::kSynthetic, 2000, 10, 100.0, {0.95, 0.5, 0.5}, 2000, 900 + seed};
      const auto task = materialize(spec);
      erm.push_back(worst_group_error(train_model(AlgorithmId::kERM, task.train, defaults, seed).model, task.test));
      under.push_back(
          worst_group_error(train_model(AlgorithmId::kUndersample, task.train, defaults, seed).model, task.test));
    }
    const auto d = paired(erm, under);
    v.require(d.mean - d.std > 0.0, fmt("(e) WG error ERM %.3f vs Undersample %.3f", summarize(erm).mean,
                                        summarize(under).mean));
  }
  return v;
}

Verdict criterion6(const fs::path& work_dir) {
  Verdict v;
  auto& run = desk(work_dir);
  if (!run.error.empty()) {
    v.require(false, "desk pipeline: " + run.error);
    return v;
  }
  const std::vector<double> grid{0.0, 0.025, 0.05, 0.10};
  std::vector<MetaDataset> labelled;
  for (double e : grid) labelled.push_back(relabel(run.meta, e, run.meta.metric));
  bool positive = true, monotone = true;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (std::size_t i = 0; i < run.meta.size(); ++i) {
      const auto& labels = labelled[k].records[i].labels;
      positive = positive && std::count(labels.begin(), labels.end(), 1) >= 1;
      if (k > 0) {
        const auto& prev = labelled[k - 1].records[i].labels;
        for (std::size_t m = 0; m < labels.size(); ++m) monotone = monotone && prev[m] <= labels[m];
      }
    }
  }
  v.require(positive, fmt("every one of %.0f records has a positive label at every epsilon",
                          static_cast<double>(run.meta.size())));
  v.require(monotone, "label sets grow with epsilon over {0, 0.025, 0.05, 0.1}");
  return v;
}

ShiftDegrees usable_triple(Rng& rng, std::int64_t n) {
  for (;;) {
    const auto s = sample_degrees(rng, DegreeMode::kTriple);
    const auto c = solve_group_counts(n, s);
    if (std::all_of(c.counts.begin(), c.counts.end(), [](auto k) { return k > 0; })) return s;
  }
}

Verdict criterion7(const fs::path& work_dir) {
  Verdict v;
  // Pseudo-attribute agreement at r = 100.
  {
    Rng rng(7007);
    std::vector<double> agree;
    for (int t = 0; t < 20; ++t) {
      TaskSpec spec{"p", TaskSource::kSynthetic, 2000, 10, 100.0, usable_triple(rng, 2000), 4,
                    static_cast<std::uint64_t>(5000 + t)};
      const auto task = materialize(spec);
      const auto est = estimate_attributes(task.train, spec.seed);
      std::size_t same = 0;
      for (std::size_t i = 0; i < task.train.size(); ++i) same += est.attributes[i] == task.train.a[i] ? 1 : 0;
      const double f = static_cast<double>(same) / static_cast<double>(task.train.size());
      agree.push_back(std::max(f, 1.0 - f));
    }
    const double lowest = *std::min_element(agree.begin(), agree.end());
    v.require(lowest >= 0.9, fmt("pseudo-attribute agreement >= %.3f on 20 tasks", lowest));
  }
  // Estimated availability follows the generative one.
  {
    std::vector<double> medians;
    for (double r : {1.0, 10.0, 100.0}) {
      Rng rng(8008);
      std::vector<double> est;
      for (int t = 0; t < 20; ++t) {
        TaskSpec spec{"r", TaskSource::kSynthetic, 1000, 10, r, usable_triple(rng, 1000), 4,
                      static_cast<std::uint64_t>(6000 + t)};
        DescriptorOptions options;
        options.mode = DescriptorMode::kEstimated;
        est.push_back(compute_descriptor(materialize(spec), options, spec.seed).descriptor.availability);
      }
      medians.push_back(median(est));
    }
    v.require(medians[0] < medians[1] && medians[1] < medians[2],
              fmt("median estimated r %.2f < %.2f < %.2f", medians[0], medians[1], medians[2]));
  }
  // Selector on estimated descriptors.
  auto& run = desk(work_dir);
  if (!run.error.empty()) {
    v.require(false, "desk pipeline: " + run.error);
    return v;
  }
  DescriptorOptions options = run.config.descriptor;
  options.mode = DescriptorMode::kEstimated;
  const auto estimated = redescribe(run.meta, run.specs, options);
  const auto split = split_for_config(estimated, run.config);
  const std::array<SelectorSpec, 1> one{run.config.selector("mlp")};
  const auto rep = evaluate_specs(split.train, split.eval, one, run.config.selector_seeds, run.config.selection_rule);
  const double oracle_acc = run.report.find("mlp").accuracy_summary.mean;
  const double est_acc = rep.selectors[0].accuracy_summary.mean;
  v.require(oracle_acc - est_acc <= 0.10,
            fmt("mlp accuracy oracle descriptors %.1f%%, estimated %.1f%%", 100 * oracle_acc, 100 * est_acc));
  return v;
}

Verdict criterion8(const fs::path& work_dir) {
  Verdict v;
  auto& run = desk(work_dir);
  if (!run.error.empty()) {
    v.require(false, "desk pipeline: " + run.error);
    return v;
  }
  std::ostringstream log;
  Pipeline pipeline(run.config, {work_dir / "desk", 0, false, &log});
  double lowest = 1.0;
  bool rules_match = true;
  std::mt19937_64 rng(88);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto seed : run.config.selector_seeds) {
    const auto mlp = Selector::load(pipeline.artifact_path("mlp", seed));
    const auto tree = Selector::load(pipeline.artifact_path("mimic_mlp", seed));
    v.require(tree.tree().depth() <= 3, fmt("mimic tree depth %.0f", tree.tree().depth()));
    std::size_t same = 0;
    for (const auto& r : run.split.train.records) {
      same += argmax(mlp.predict_scores(r.descriptor)) == argmax(tree.predict_scores(r.descriptor)) ? 1 : 0;
    }
    lowest = std::min(lowest, static_cast<double>(same) / static_cast<double>(run.split.train.size()));

    const auto ex = export_tree_files(pipeline.artifact_path("mimic_mlp", seed), work_dir / "trees");
    rules_match = rules_match && slurp(work_dir / "trees" / ("mimic_mlp_s" + std::to_string(seed) + ".dot")) == ex.dot;
    const rules_eval::Program program(ex.rules);
    const auto names = tree.transform.input_names();
    for (int i = 0; i < 100; ++i) {
      const DatasetDescriptor d{{u(rng), u(rng), u(rng)}, std::pow(10.0, 2 * u(rng)), 200 + 800 * u(rng),
                                std::floor(2 + 48 * u(rng))};
      const auto inputs = tree.transform.apply(d.values());
      std::map<std::string, double> env;
      for (std::size_t k = 0; k < names.size(); ++k) env[names[k]] = inputs[k];
      rules_match = rules_match && program.evaluate(env) == tree.predict_scores(d);
    }
  }
  v.require(lowest >= 0.7, fmt("mimic/MLP agreement on meta-train >= %.1f%% for every seed", 100 * lowest));
  v.require(rules_match, "exported rules reproduce predict_scores on 100 random inputs per seed");
  return v;
}

Verdict criterion9(const fs::path& work_dir) {
  Verdict v;
  auto config = ExperimentConfig::load(fs::path(SHIFTSEL_SOURCE_DIR) / "configs" / "small.json");
  std::ostringstream log;
  std::vector<std::string> meta, report;
  for (int rep = 0; rep < 2; ++rep) {
    Pipeline p(config, {work_dir / ("determinism_" + std::to_string(rep)), rep == 0 ? 1 : 0, false, &log});
    fs::remove_all(p.dir());
    p.gen_tasks();
    p.build_meta();
    p.train_selectors();
    p.evaluate();
    meta.push_back(slurp(p.meta_path()));
    report.push_back(slurp(p.report_path()));
  }
  v.require(!meta[0].empty() && meta[0] == meta[1], "meta-dataset file byte-identical across reruns");
  v.require(!report[0].empty() && report[0] == report[1], "evaluation report byte-identical across reruns");

  Pipeline crashed(config, {work_dir / "resume", 0, false, &log});
  fs::remove_all(crashed.dir());
  crashed.gen_tasks();
  const auto partial = crashed.build_meta(7);
  const auto resumed = crashed.build_meta();
  v.require(partial.interrupted && resumed.resumed == 7, "build-meta interrupted after 7 tasks and resumed");
  v.require(slurp(crashed.meta_path()) == meta[0], "resumed meta-dataset matches the uninterrupted run");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string work_dir = "acceptance_work";
  std::vector<int> only;
  app.add_option("--work-dir", work_dir, "Scratch directory for pipeline runs");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Verdict(const fs::path&)>> criteria{
      criterion1, criterion2, criterion3, criterion4, criterion5, criterion6, criterion7, criterion8, criterion9};
  const fs::path dir = fs::absolute(work_dir);
  fs::create_directories(dir);

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), number) == only.end()) continue;
    const auto start = Clock::now();
    Verdict verdict;
    try {
      verdict = criteria[i](dir);
    } catch (const std::exception& e) {
      verdict.require(false, std::string("exception: ") + e.what());
    }
    all = all && verdict.pass;
    std::cout << "criterion " << number << ": " << (verdict.pass ? "PASS" : "FAIL") << "  ("
              << fmt("%.1f s", seconds_since(start)) << ") " << verdict.detail.str() << std::endl;
  }
  return all ? 0 : 1;
}
