#include "shiftsel/task.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "shiftsel/error.hpp"

namespace shiftsel {

void Split::reserve(std::size_t rows) {
  x.reserve(rows * dim);
  y.reserve(rows);
  a.reserve(rows);
}

void Split::push_back(std::span<const double> features, int label, int attribute) {
  if (features.size() != dim) throw Error(ErrorKind::kInvalidArgument, "Split::push_back: feature length mismatch");
  x.insert(x.end(), features.begin(), features.end());
  y.push_back(static_cast<std::int8_t>(label > 0 ? 1 : -1));
  a.push_back(static_cast<std::int8_t>(attribute > 0 ? 1 : -1));
}

void Split::append_row(const Split& other, std::size_t i) {
  push_back(other.row(i), other.y[i], other.a[i]);
}

GroupCounts group_histogram(const Split& split) {
  GroupCounts counts;
  for (std::size_t i = 0; i < split.size(); ++i) counts[split.group(i)] += 1;
  return counts;
}

std::array<std::vector<std::size_t>, kNumGroups> group_indices(const Split& split) {
  std::array<std::vector<std::size_t>, kNumGroups> out;
  for (std::size_t i = 0; i < split.size(); ++i) out[static_cast<std::size_t>(split.group(i))].push_back(i);
  return out;
}

GroupedPool GroupedPool::from_split(Split samples) {
  GroupedPool pool;
  pool.by_group = group_indices(samples);
  pool.samples = std::move(samples);
  return pool;
}

namespace {

void validate_test_size(std::int64_t n_test) {
  if (n_test < 4 || n_test % 4 != 0) {
    throw Error(ErrorKind::kInvalidArgument, "test size must be a positive multiple of 4");
  }
}

void shuffle_split(Split& split, Rng& rng) {
  std::vector<std::size_t> perm(split.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  Split out;
  out.dim = split.dim;
  out.reserve(split.size());
  for (auto i : perm) out.append_row(split, i);
  split = std::move(out);
}

void append_gaussian_group(Split& split, int g, std::int64_t count, int d, double core_sd, double attr_sd,
                           Rng& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  const double y = group_label(g);
  const double a = group_attribute(g);
  std::vector<double> row(static_cast<std::size_t>(2 * d));
  for (std::int64_t k = 0; k < count; ++k) {
    for (int j = 0; j < d; ++j) row[static_cast<std::size_t>(j)] = y + core_sd * unit(rng);
    for (int j = 0; j < d; ++j) row[static_cast<std::size_t>(d + j)] = a + attr_sd * unit(rng);
    split.push_back(row, static_cast<int>(y), static_cast<int>(a));
  }
}

}  // namespace

TaskDataset generate_synthetic_task(std::int64_t n, int d, double r, const ShiftDegrees& s,
                                    std::int64_t n_test, Rng& rng, double core_variance) {
  if (n < 4) throw Error(ErrorKind::kInvalidArgument, "generate_synthetic_task: n must be >= 4");
  if (d < 1) throw Error(ErrorKind::kInvalidArgument, "generate_synthetic_task: d must be >= 1");
  if (!(r > 0.0) || !std::isfinite(r)) throw Error(ErrorKind::kInvalidArgument, "generate_synthetic_task: r must be > 0");
  if (!(core_variance > 0.0) || !std::isfinite(core_variance)) {
    throw Error(ErrorKind::kInvalidArgument, "generate_synthetic_task: core variance must be > 0");
  }
  validate_test_size(n_test);
  const GroupCounts counts = solve_group_counts(n, s);
  const double core_sd = std::sqrt(core_variance);
  const double attr_sd = std::sqrt(core_variance / r);

  TaskDataset task;
  task.train.dim = task.test.dim = static_cast<std::size_t>(2 * d);
  task.train.reserve(static_cast<std::size_t>(n));
  task.test.reserve(static_cast<std::size_t>(n_test));
  for (int g = 0; g < kNumGroups; ++g) append_gaussian_group(task.train, g, counts[g], d, core_sd, attr_sd, rng);
  for (int g = 0; g < kNumGroups; ++g) append_gaussian_group(task.test, g, n_test / 4, d, core_sd, attr_sd, rng);
  shuffle_split(task.train, rng);

  task.meta.source = TaskSource::kSynthetic;
  task.meta.n = n;
  task.meta.n_test = n_test;
  task.meta.block_dim = d;
  task.meta.degrees = s;
  task.meta.availability = r;
  return task;
}

TaskDataset build_task_from_pool(const GroupedPool& pool, const GroupCounts& counts,
                                 std::int64_t n_test, Rng& rng, bool replace) {
  validate_test_size(n_test);
  const std::int64_t per_group_test = n_test / 4;
  for (int g = 0; g < kNumGroups; ++g) {
    if (counts[g] < 0) throw Error(ErrorKind::kInvalidArgument, "build_task_from_pool: negative count");
    const auto available = static_cast<std::int64_t>(pool.by_group[static_cast<std::size_t>(g)].size());
    const std::int64_t demand = replace ? 1 : counts[g] + per_group_test;
    if (available < demand) {
      throw Error(ErrorKind::kCapacity, "build_task_from_pool: group G" + std::to_string(g + 1) + " has " +
                                            std::to_string(available) + " samples, needs " +
                                            std::to_string(demand));
    }
  }

  TaskDataset task;
  task.train.dim = task.test.dim = pool.samples.dim;
  for (int g = 0; g < kNumGroups; ++g) {
    const auto& members = pool.by_group[static_cast<std::size_t>(g)];
    if (replace) {
      std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
      for (std::int64_t k = 0; k < counts[g]; ++k) task.train.append_row(pool.samples, members[pick(rng)]);
      for (std::int64_t k = 0; k < per_group_test; ++k) task.test.append_row(pool.samples, members[pick(rng)]);
    } else {
      std::vector<std::size_t> order = members;
      std::shuffle(order.begin(), order.end(), rng);
      std::size_t k = 0;
      for (std::int64_t c = 0; c < counts[g]; ++c) task.train.append_row(pool.samples, order[k++]);
      for (std::int64_t c = 0; c < per_group_test; ++c) task.test.append_row(pool.samples, order[k++]);
    }
  }
  shuffle_split(task.train, rng);

  task.meta.source = TaskSource::kPool;
  task.meta.n = counts.total();
  task.meta.n_test = n_test;
  task.meta.block_dim = static_cast<int>(pool.samples.dim);
  if (task.meta.n > 0) task.meta.degrees = quantify_shifts(counts);
  return task;
}

std::int64_t default_test_size(TaskSource source, std::int64_t n) {
  if (source == TaskSource::kSynthetic) return n;
  return std::max<std::int64_t>(4, (n / 2) / 4 * 4);
}

TaskDataset materialize(const TaskSpec& spec, const GroupedPool* pool) {
  Rng rng(spec.seed);
  TaskDataset task;
  if (spec.source == TaskSource::kSynthetic) {
    task = generate_synthetic_task(spec.n, spec.d, spec.r, spec.degrees, spec.n_test, rng, spec.core_variance);
  } else {
    if (pool == nullptr) throw Error(ErrorKind::kInvalidArgument, "materialize: pool task without a pool");
    task = build_task_from_pool(*pool, solve_group_counts(spec.n, spec.degrees), spec.n_test, rng, false);
    task.meta.degrees = spec.degrees;
  }
  task.meta.task_id = spec.task_id;
  task.meta.seed = spec.seed;
  return task;
}

std::string_view to_string(TaskSource source) {
  return source == TaskSource::kSynthetic ? "synthetic" : "pool";
}

TaskSource parse_task_source(std::string_view text) {
  if (text == "synthetic") return TaskSource::kSynthetic;
  if (text == "pool") return TaskSource::kPool;
  throw Error(ErrorKind::kParse, "unknown task source '" + std::string(text) + "'");
}

void to_json(nlohmann::json& j, const TaskSpec& spec) {
  j = nlohmann::json{{"task_id", spec.task_id},
                     {"source", std::string(to_string(spec.source))},
                     {"n", spec.n},
                     {"d", spec.d},
                     {"r", spec.r},
                     {"d_sc", spec.degrees.spurious},
                     {"d_ls", spec.degrees.label},
                     {"d_cs", spec.degrees.covariate},
                     {"n_te", spec.n_test},
                     {"seed", spec.seed}};
  // Only written when it differs from the default, so older files stay valid.
  if (spec.core_variance != 1.0) j["core_variance"] = spec.core_variance;
}

void from_json(const nlohmann::json& j, TaskSpec& spec) {
  spec.task_id = j.at("task_id").get<std::string>();
  spec.source = parse_task_source(j.at("source").get<std::string>());
  spec.n = j.at("n").get<std::int64_t>();
  spec.d = j.at("d").get<int>();
  spec.r = j.at("r").get<double>();
  spec.degrees = {j.at("d_sc").get<double>(), j.at("d_ls").get<double>(), j.at("d_cs").get<double>()};
  spec.n_test = j.at("n_te").get<std::int64_t>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.core_variance = j.value("core_variance", 1.0);
}

void write_task_specs(const std::filesystem::path& path, std::span<const TaskSpec> specs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  for (const auto& spec : specs) out << nlohmann::json(spec).dump() << '\n';
}

std::vector<TaskSpec> read_task_specs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  std::vector<TaskSpec> specs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      specs.push_back(nlohmann::json::parse(line).get<TaskSpec>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return specs;
}

GroupedPool read_pool_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kParse, path.string() + ": empty pool file");
  const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',') + 1);
  if (columns < 3) throw Error(ErrorKind::kParse, path.string() + ": pool needs y, a and at least one feature");
  Split split;
  split.dim = columns - 2;
  std::vector<double> row(split.dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorKind::kParse, path.string() + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    if (values.size() != columns) {
      throw Error(ErrorKind::kParse, path.string() + ":" + std::to_string(line_no) + ": wrong column count");
    }
    std::copy(values.begin() + 2, values.end(), row.begin());
    split.push_back(row, values[0] > 0 ? 1 : -1, values[1] > 0 ? 1 : -1);
  }
  return GroupedPool::from_split(std::move(split));
}

namespace {

void write_split_csv(const Split& split, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << "y,a";
  for (std::size_t j = 0; j < split.dim; ++j) out << ",f" << j;
  out << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < split.size(); ++i) {
    out << int(split.y[i]) << ',' << int(split.a[i]);
    for (double v : split.row(i)) out << ',' << v;
    out << '\n';
  }
}

}  // namespace

void write_task_csv(const TaskDataset& task, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_split_csv(task.train, dir / "train.csv");
  write_split_csv(task.test, dir / "test.csv");
  const auto hist = group_histogram(task.train);
  nlohmann::json manifest{{"task_id", task.meta.task_id},
                          {"source", std::string(to_string(task.meta.source))},
                          {"n", task.meta.n},
                          {"n_te", task.meta.n_test},
                          {"d", task.meta.block_dim},
                          {"feature_dim", task.train.dim},
                          {"seed", task.meta.seed},
                          {"train_groups", hist.counts},
                          {"files", {"train.csv", "test.csv"}}};
  if (task.meta.availability) manifest["r"] = *task.meta.availability;
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  out << manifest.dump(2) << '\n';
}

}  // namespace shiftsel
