#include "shiftsel/meta.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "shiftsel/error.hpp"

namespace shiftsel {

using nlohmann::json;

std::string_view to_string(PerfMetric metric) {
  return metric == PerfMetric::kWorstGroup ? "worst_group" : "average_group";
}

PerfMetric parse_perf_metric(std::string_view text) {
  if (text == "worst_group") return PerfMetric::kWorstGroup;
  if (text == "average_group") return PerfMetric::kAverageGroup;
  throw Error(ErrorKind::kParse, "unknown metric '" + std::string(text) + "'");
}

std::vector<std::uint8_t> suitability_labels(std::span<const double> perf, double epsilon) {
  if (perf.empty()) throw Error(ErrorKind::kInvalidArgument, "suitability_labels: empty performance vector");
  const double best = *std::min_element(perf.begin(), perf.end());
  std::vector<std::uint8_t> out(perf.size());
  for (std::size_t m = 0; m < perf.size(); ++m) out[m] = (perf[m] - best <= epsilon + 1e-12) ? 1 : 0;
  return out;
}

void MetaDataset::validate() const {
  const std::size_t m = algorithms.size();
  if (m == 0) throw Error(ErrorKind::kSchema, "meta-dataset has no algorithms");
  for (const auto& r : records) {
    if (r.perf.size() != m || r.perf_avg.size() != m || r.labels.size() != m) {
      throw Error(ErrorKind::kSchema, "record " + r.task_id + ": expected " + std::to_string(m) + " algorithm columns");
    }
    if (r.labels != suitability_labels(r.errors(metric), epsilon)) {
      throw Error(ErrorKind::kSchema, "record " + r.task_id + ": labels disagree with performance at epsilon");
    }
  }
}

MetaDataset relabel(const MetaDataset& meta, double epsilon, PerfMetric metric) {
  if (epsilon < 0.0) throw Error(ErrorKind::kInvalidArgument, "relabel: epsilon must be >= 0");
  MetaDataset out = meta;
  out.epsilon = epsilon;
  out.metric = metric;
  for (auto& r : out.records) r.labels = suitability_labels(r.errors(metric), epsilon);
  return out;
}

MetaDataset restrict_algorithms(const MetaDataset& meta, std::span<const std::size_t> columns) {
  if (columns.size() < 2) throw Error(ErrorKind::kInvalidArgument, "restrict_algorithms: need at least two algorithms");
  std::set<std::size_t> seen;
  for (auto c : columns) {
    if (c >= meta.num_algorithms()) throw Error(ErrorKind::kInvalidArgument, "restrict_algorithms: column out of range");
    if (!seen.insert(c).second) {
      throw Error(ErrorKind::kInvalidArgument, "restrict_algorithms: invalid pair, algorithm '" +
                                                   meta.algorithms[c] + "' repeated");
    }
  }
  MetaDataset out = meta;
  out.algorithms.clear();
  for (auto c : columns) out.algorithms.push_back(meta.algorithms[c]);
  for (auto& r : out.records) {
    std::vector<double> p, pa;
    for (auto c : columns) {
      p.push_back(r.perf[c]);
      pa.push_back(r.perf_avg[c]);
    }
    r.perf = std::move(p);
    r.perf_avg = std::move(pa);
    r.labels = suitability_labels(r.errors(out.metric), out.epsilon);
  }
  return out;
}

void to_json(json& j, const MetaRecord& r) {
  const auto v = r.descriptor.values();
  json desc = json::object();
  for (std::size_t i = 0; i < kDescriptorSize; ++i) desc[std::string(kDescriptorNames[i])] = v[i];
  j = json{{"task_id", r.task_id}, {"descriptor", desc}, {"perf", r.perf}, {"perf_avg", r.perf_avg},
           {"labels", r.labels}};
}

void from_json(const json& j, MetaRecord& r) {
  r.task_id = j.at("task_id").get<std::string>();
  DescriptorVector v{};
  const auto& desc = j.at("descriptor");
  for (std::size_t i = 0; i < kDescriptorSize; ++i) v[i] = desc.at(std::string(kDescriptorNames[i])).get<double>();
  r.descriptor = DatasetDescriptor::from_values(v);
  r.perf = j.at("perf").get<std::vector<double>>();
  r.perf_avg = j.at("perf_avg").get<std::vector<double>>();
  r.labels = j.at("labels").get<std::vector<std::uint8_t>>();
}

namespace {

json header_json(const MetaDataset& meta) {
  return json{{"schema_version", kMetaSchemaVersion},
              {"epsilon", meta.epsilon},
              {"metric", to_string(meta.metric)},
              {"descriptor_mode", to_string(meta.descriptor_mode)},
              {"algorithms", meta.algorithms},
              {"records", meta.records.size()}};
}

}  // namespace

void save_meta(const std::filesystem::path& path, const MetaDataset& meta) {
  meta.validate();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
    out << header_json(meta).dump() << '\n';
    for (const auto& r : meta.records) out << json(r).dump() << '\n';
    if (!out) throw Error(ErrorKind::kIo, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

MetaDataset load_meta(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  std::string line;
  std::size_t line_no = 0;
  auto parse = [&](const std::string& text) {
    try {
      return json::parse(text);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kParse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  };
  if (!std::getline(in, line)) throw Error(ErrorKind::kParse, path.string() + ":1: missing header");
  line_no = 1;
  const json header = parse(line);
  MetaDataset meta;
  std::size_t expected = 0;
  try {
    const int version = header.at("schema_version").get<int>();
    if (version != kMetaSchemaVersion) {
      throw Error(ErrorKind::kSchema, path.string() + ": schema version " + std::to_string(version) +
                                          " (this build reads version " + std::to_string(kMetaSchemaVersion) + ")");
    }
    meta.epsilon = header.at("epsilon").get<double>();
    meta.metric = parse_perf_metric(header.at("metric").get<std::string>());
    meta.descriptor_mode = parse_descriptor_mode(header.at("descriptor_mode").get<std::string>());
    meta.algorithms = header.at("algorithms").get<std::vector<std::string>>();
    expected = header.at("records").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ":1: bad header: " + e.what());
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = parse(line);
    try {
      meta.records.push_back(j.get<MetaRecord>());
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kParse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (meta.records.size() != expected) {
    throw Error(ErrorKind::kParse, path.string() + ":" + std::to_string(line_no + 1) + ": truncated file, header announces " +
                                       std::to_string(expected) + " records, found " +
                                       std::to_string(meta.records.size()));
  }
  meta.validate();
  return meta;
}

std::string file_fingerprint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_bytes(ss.str())));
  return buf;
}

void to_json(json& j, const RunRecord& r) {
  j = json{{"task_id", r.task_id},
           {"algorithm", r.algorithm},
           {"wg_error", r.wg_error},
           {"avg_error", r.avg_error},
           {"per_group_errors", r.per_group_errors},
           {"train_loss_final", r.train_loss_final},
           {"seed", r.seed}};
}

void from_json(const json& j, RunRecord& r) {
  r.task_id = j.at("task_id").get<std::string>();
  r.algorithm = j.at("algorithm").get<std::string>();
  r.wg_error = j.at("wg_error").get<double>();
  r.avg_error = j.at("avg_error").get<double>();
  r.per_group_errors = j.at("per_group_errors").get<GroupVector>();
  r.train_loss_final = j.at("train_loss_final").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
}

void to_json(json& j, const TaskFailure& f) {
  j = json{{"task_id", f.task_id}, {"kind", f.kind}, {"message", f.message}};
}

void from_json(const json& j, TaskFailure& f) {
  f.task_id = j.at("task_id").get<std::string>();
  f.kind = j.at("kind").get<std::string>();
  f.message = j.at("message").get<std::string>();
}

std::uint64_t algorithm_seed(std::uint64_t task_seed, AlgorithmId id) {
  return derive_seed(task_seed, 100 + static_cast<std::uint64_t>(id));
}

std::uint64_t descriptor_seed(std::uint64_t task_seed) { return derive_seed(task_seed, 1000); }

MetaRecord build_record(const TaskSpec& spec, const AssemblyOptions& options, std::vector<RunRecord>* runs) {
  const TaskDataset task = materialize(spec, options.pool);
  MetaRecord record;
  record.task_id = spec.task_id;
  record.descriptor = compute_descriptor(task, options.descriptor, descriptor_seed(spec.seed)).descriptor;
  for (auto id : kAllAlgorithms) {
    const std::uint64_t seed = algorithm_seed(spec.seed, id);
    const TrainResult fit = train_model(id, task.train, options.train, seed);
    const GroupErrors err = group_errors(fit.model, task.test);
    record.perf.push_back(err.worst());
    record.perf_avg.push_back(err.average());
    if (runs != nullptr) {
      runs->push_back(RunRecord{spec.task_id, std::string(algorithm_name(id)), err.worst(), err.average(),
                                err.per_group, fit.final_loss, seed});
    }
  }
  record.labels = suitability_labels(record.perf, options.epsilon);
  return record;
}

namespace {

struct Outcome {
  std::optional<MetaRecord> record;
  std::vector<RunRecord> runs;
  std::optional<TaskFailure> failure;
};

Outcome run_task(const TaskSpec& spec, const AssemblyOptions& options) {
  Outcome out;
  try {
    out.record = build_record(spec, options, &out.runs);
  } catch (const Error& e) {
    out.runs.clear();
    out.failure = TaskFailure{spec.task_id, std::string(to_string(e.kind())), e.what()};
  } catch (const std::exception& e) {
    out.runs.clear();
    out.failure = TaskFailure{spec.task_id, "internal", e.what()};
  }
  return out;
}

json journal_line(const Outcome& o) {
  if (o.failure) return json{{"type", "failure"}, {"failure", *o.failure}};
  return json{{"type", "record"}, {"record", *o.record}, {"runs", o.runs}};
}

Outcome parse_journal_line(const json& j) {
  Outcome o;
  if (j.at("type").get<std::string>() == "failure") {
    o.failure = j.at("failure").get<TaskFailure>();
  } else {
    o.record = j.at("record").get<MetaRecord>();
    o.runs = j.at("runs").get<std::vector<RunRecord>>();
  }
  return o;
}

std::string outcome_id(const Outcome& o) { return o.failure ? o.failure->task_id : o.record->task_id; }

void check_unique_ids(std::span<const TaskSpec> specs) {
  std::set<std::string> ids;
  for (const auto& s : specs) {
    if (!ids.insert(s.task_id).second) {
      throw Error(ErrorKind::kInvalidArgument, "duplicate task_id '" + s.task_id + "' in task specs");
    }
  }
}

int resolve_workers(int workers) { return workers > 0 ? workers : omp_get_max_threads(); }

// Run `pending` concurrently; `sink` is called under a lock as each finishes.
template <class Sink>
bool sweep(std::span<const TaskSpec> specs, const std::vector<std::size_t>& pending, const AssemblyOptions& options,
           Sink&& sink) {
  std::atomic<std::size_t> done{0};
  std::atomic<bool> stop{false};
  const auto n = static_cast<std::int64_t>(pending.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(resolve_workers(options.workers))
  for (std::int64_t k = 0; k < n; ++k) {
    if (stop.load()) continue;
    Outcome o = run_task(specs[pending[static_cast<std::size_t>(k)]], options);
#pragma omp critical(shiftsel_meta_sink)
    {
      if (!stop.load()) {
        sink(std::move(o));
        const std::size_t count = ++done;
        if (options.stop_after && count >= *options.stop_after) stop.store(true);
      }
    }
  }
  return stop.load() && done.load() < pending.size();
}

AssemblyResult collect(std::map<std::string, Outcome>&& outcomes, const AssemblyOptions& options) {
  AssemblyResult result;
  result.meta.epsilon = options.epsilon;
  result.meta.descriptor_mode = options.descriptor.mode;
  for (auto& [id, o] : outcomes) {  // std::map: sorted by task_id
    if (o.failure) {
      result.failures.push_back(std::move(*o.failure));
    } else {
      result.meta.records.push_back(std::move(*o.record));
      for (auto& r : o.runs) result.runs.push_back(std::move(r));
    }
  }
  return result;
}

}  // namespace

AssemblyResult assemble_meta_dataset(std::span<const TaskSpec> specs, const AssemblyOptions& options) {
  options.train.validate();
  check_unique_ids(specs);
  std::vector<std::size_t> pending(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) pending[i] = i;
  std::map<std::string, Outcome> outcomes;
  const bool interrupted = sweep(specs, pending, options, [&](Outcome&& o) { outcomes.emplace(outcome_id(o), std::move(o)); });
  AssemblyResult result = collect(std::move(outcomes), options);
  result.interrupted = interrupted;
  return result;
}

std::filesystem::path journal_path(const std::filesystem::path& meta_path) {
  return std::filesystem::path(meta_path.string() + ".journal");
}

AssemblyResult assemble_meta_dataset(std::span<const TaskSpec> specs, const AssemblyOptions& options,
                                     const std::filesystem::path& meta_path) {
  options.train.validate();
  check_unique_ids(specs);
  const auto dir = meta_path.has_parent_path() ? meta_path.parent_path() : std::filesystem::path(".");
  std::filesystem::create_directories(dir);
  const auto jpath = journal_path(meta_path);

  std::set<std::string> wanted;
  for (const auto& s : specs) wanted.insert(s.task_id);

  // Replay the journal; a torn final line (crash mid-write) is dropped.
  std::map<std::string, Outcome> outcomes;
  std::vector<std::string> kept_lines;
  if (std::filesystem::exists(jpath)) {
    std::ifstream in(jpath);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        Outcome o = parse_journal_line(json::parse(line));
        const std::string id = outcome_id(o);
        if (!wanted.count(id) || outcomes.count(id)) continue;
        outcomes.emplace(id, std::move(o));
        kept_lines.push_back(line);
      } catch (const json::exception&) {
        if (in.peek() != std::char_traits<char>::eof()) {
          throw Error(ErrorKind::kParse, jpath.string() + ": corrupt journal entry before the last line");
        }
      }
    }
  }
  {
    std::ofstream rewrite(jpath, std::ios::trunc);
    if (!rewrite) throw Error(ErrorKind::kIo, "cannot write " + jpath.string());
    for (const auto& l : kept_lines) rewrite << l << '\n';
  }
  const std::size_t resumed = outcomes.size();

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (!outcomes.count(specs[i].task_id)) pending.push_back(i);
  }
  std::ofstream journal(jpath, std::ios::app);
  if (!journal) throw Error(ErrorKind::kIo, "cannot append to " + jpath.string());
  const bool interrupted = sweep(specs, pending, options, [&](Outcome&& o) {
    journal << journal_line(o).dump() << '\n';
    journal.flush();
    outcomes.emplace(outcome_id(o), std::move(o));
  });
  journal.close();

  AssemblyResult result = collect(std::move(outcomes), options);
  result.resumed = resumed;
  result.interrupted = interrupted;
  if (interrupted) return result;

  save_meta(meta_path, result.meta);
  auto write_lines = [&](const std::filesystem::path& p, const auto& items) {
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + p.string());
    for (const auto& item : items) out << json(item).dump() << '\n';
  };
  write_lines(dir / "runs.jsonl", result.runs);
  write_lines(dir / "failures.jsonl", result.failures);
  std::filesystem::remove(jpath);
  return result;
}

MetaDataset redescribe(const MetaDataset& meta, std::span<const TaskSpec> specs, const DescriptorOptions& options,
                       const GroupedPool* pool, int workers) {
  std::map<std::string, const TaskSpec*> by_id;
  for (const auto& s : specs) by_id[s.task_id] = &s;
  MetaDataset out = meta;
  out.descriptor_mode = options.mode;
  const auto n = static_cast<std::int64_t>(out.records.size());
  std::vector<std::string> errors(out.records.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(resolve_workers(workers))
  for (std::int64_t k = 0; k < n; ++k) {
    auto& rec = out.records[static_cast<std::size_t>(k)];
    const auto it = by_id.find(rec.task_id);
    if (it == by_id.end()) {
      errors[static_cast<std::size_t>(k)] = "no task spec for record " + rec.task_id;
      continue;
    }
    try {
      const TaskDataset task = materialize(*it->second, pool);
      rec.descriptor = compute_descriptor(task, options, descriptor_seed(it->second->seed)).descriptor;
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(k)] = rec.task_id + ": " + e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw Error(ErrorKind::kDegenerateInput, "redescribe: " + e);
  }
  return out;
}

}  // namespace shiftsel
