#include "shiftsel/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "shiftsel/error.hpp"
#include "shiftsel/rng.hpp"

namespace shiftsel {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& why) {
  throw Error(ErrorKind::kInvalidArgument, "config: " + field + " " + why);
}

[[noreturn]] void unknown_key(const std::string& where, const std::string& key) {
  throw Error(ErrorKind::kParse, "config: unknown key '" + key + "' in " + where);
}

json pairs_to_json(const std::vector<std::pair<std::string, std::string>>& pairs) {
  json out = json::array();
  for (const auto& [a, b] : pairs) out.push_back(json::array({a, b}));
  return out;
}

std::vector<std::pair<std::string, std::string>> pairs_from_json(const json& j, const std::string& field) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2) {
      throw Error(ErrorKind::kParse, "config: " + field + " entries must be [algorithm, algorithm] pairs");
    }
    out.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
  }
  return out;
}

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> optional_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

void check_pair(const std::pair<std::string, std::string>& p, const std::string& field) {
  const auto a = parse_algorithm(p.first);
  const auto b = parse_algorithm(p.second);
  if (a == b) invalid(field, "pairs must name two different algorithms");
}

}  // namespace

std::vector<SelectorSpec> default_selector_lineup() {
  std::vector<SelectorSpec> out;
  out.push_back(default_selector_spec(SelectorKind::kOracle, "oracle"));
  out.push_back(default_selector_spec(SelectorKind::kRandom, "random"));
  out.push_back(default_selector_spec(SelectorKind::kGlobalBest, "global_best"));
  auto naive = default_selector_spec(SelectorKind::kMlp, "naive");
  naive.features = naive_feature_names();
  out.push_back(naive);
  out.push_back(default_selector_spec(SelectorKind::kRegression, "regression"));
  out.push_back(default_selector_spec(SelectorKind::kMlp, "mlp"));
  out.push_back(default_selector_spec(SelectorKind::kLinear, "linear"));
  out.push_back(default_selector_spec(SelectorKind::kKnn, "knn"));
  out.push_back(default_selector_spec(SelectorKind::kTree, "tree"));
  return out;
}

void ExperimentConfig::validate() const {
  if (grid.sizes.empty() || grid.dims.empty() || grid.availabilities.empty()) {
    invalid("grid", "needs at least one size, dim and availability");
  }
  for (auto n : grid.sizes) {
    if (n < 8) invalid("grid.sizes", "entries must be >= 8 (got " + std::to_string(n) + ")");
  }
  for (auto d : grid.dims) {
    if (d < 1) invalid("grid.dims", "entries must be >= 1");
  }
  for (auto r : grid.availabilities) {
    if (!(r > 0.0) || !std::isfinite(r)) invalid("grid.availabilities", "entries must be positive");
  }
  if (grid.triple_samples < 0) invalid("grid.triple_samples", "must be non-negative");
  for (auto v : grid.single_shift_grid) {
    if (!(v >= 0.0 && v <= 1.0)) invalid("grid.single_shift_grid", "values must lie in [0, 1]");
  }
  if (grid.triple_samples == 0 && grid.single_shift_grid.empty()) invalid("grid", "yields no degree entries");
  if (!(grid.core_variance > 0.0) || !std::isfinite(grid.core_variance)) {
    invalid("grid.core_variance", "must be positive");
  }
  if (grid.n_test && (*grid.n_test < 4 || *grid.n_test % 4 != 0)) {
    invalid("grid.n_test", "must be a positive multiple of 4");
  }
  train.validate();
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) invalid("epsilon", "must lie in [0, 1]");
  if (!(split.eval_fraction > 0.0 && split.eval_fraction < 1.0)) invalid("split.eval_fraction", "must lie in (0, 1)");
  if (descriptor.kmeans.k != 2) invalid("descriptor.kmeans.k", "must be 2 (binary attributes)");
  if (descriptor.kmeans.restarts < 1 || descriptor.kmeans.max_iterations < 1) {
    invalid("descriptor.kmeans", "restarts and max_iterations must be positive");
  }
  std::set<std::string> names;
  for (const auto& s : selectors) {
    s.validate();
    if (!names.insert(s.name).second) invalid("selectors", "repeat the name '" + s.name + "'");
  }
  if (selector_seeds.empty()) invalid("selector_seeds", "must not be empty");
  for (const auto& p : analysis.gap_pairs) check_pair(p, "analysis.gap_pairs");
  for (const auto& p : analysis.pairwise) check_pair(p, "analysis.pairwise");
  for (auto e : analysis.epsilon_grid) {
    if (!(e >= 0.0 && e <= 1.0)) invalid("analysis.epsilon_grid", "values must lie in [0, 1]");
  }
  for (auto s : analysis.scaling_sizes) {
    if (s == 0) invalid("analysis.scaling_sizes", "entries must be positive");
  }
  const bool needs_subject =
      !analysis.scaling_sizes.empty() || analysis.leave_one_out || !analysis.pairwise.empty() || analysis.mimic_tree;
  if (needs_subject && !selectors.empty() && names.count(analysis.subject) == 0) {
    invalid("analysis.subject", "'" + analysis.subject + "' is not one of the configured selectors");
  }
}

json ExperimentConfig::to_json() const {
  json sel = json::array();
  for (const auto& s : selectors) sel.push_back(s.to_json());
  return json{
      {"seed", seed},
      {"grid",
       {{"sizes", grid.sizes},
        {"dims", grid.dims},
        {"availabilities", grid.availabilities},
        {"triple_samples", grid.triple_samples},
        {"single_shift_grid", grid.single_shift_grid},
        {"n_test", optional_json(grid.n_test)},
        {"core_variance", grid.core_variance}}},
      {"train",
       {{"epochs", train.epochs},
        {"lr", train.lr},
        {"weight_decay", train.weight_decay},
        {"dro_eta", train.dro_eta},
        {"tau", train.tau}}},
      {"epsilon", epsilon},
      {"metric", to_string(metric)},
      {"descriptor",
       {{"mode", to_string(descriptor.mode)},
        {"availability_estimator", to_string(descriptor.estimator)},
        {"kmeans_restarts", descriptor.kmeans.restarts},
        {"kmeans_max_iterations", descriptor.kmeans.max_iterations}}},
      {"split",
       {{"eval_fraction", split.eval_fraction},
        {"meta_train_max_n", optional_json(split.meta_train_max_n)},
        {"eval_min_n", optional_json(split.eval_min_n)}}},
      {"selectors", sel},
      {"selector_seeds", selector_seeds},
      {"selection_rule", to_string(selection_rule)},
      {"analysis",
       {{"gap_pairs", pairs_to_json(analysis.gap_pairs)},
        {"scaling_sizes", analysis.scaling_sizes},
        {"leave_one_out", analysis.leave_one_out},
        {"loo_mode", to_string(analysis.loo_mode)},
        {"pairwise", pairs_to_json(analysis.pairwise)},
        {"epsilon_grid", analysis.epsilon_grid},
        {"mimic_tree", analysis.mimic_tree},
        {"subject", analysis.subject}}},
      {"workers", workers},
  };
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::kParse, "config: top level must be an object");
  ExperimentConfig c;
  bool have_selectors = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "seed") {
      c.seed = value.get<std::uint64_t>();
    } else if (key == "grid") {
      for (const auto& [k, v] : value.items()) {
        if (k == "sizes") c.grid.sizes = v.get<std::vector<std::int64_t>>();
        else if (k == "dims") c.grid.dims = v.get<std::vector<int>>();
        else if (k == "availabilities") c.grid.availabilities = v.get<std::vector<double>>();
        else if (k == "triple_samples") c.grid.triple_samples = v.get<int>();
        else if (k == "single_shift_grid") c.grid.single_shift_grid = v.get<std::vector<double>>();
        else if (k == "n_test") c.grid.n_test = optional_from<std::int64_t>(v);
        else if (k == "core_variance") c.grid.core_variance = v.get<double>();
        else unknown_key("grid", k);
      }
    } else if (key == "train") {
      for (const auto& [k, v] : value.items()) {
        if (k == "epochs") c.train.epochs = v.get<int>();
        else if (k == "lr") c.train.lr = v.get<double>();
        else if (k == "weight_decay") c.train.weight_decay = v.get<double>();
        else if (k == "dro_eta") c.train.dro_eta = v.get<double>();
        else if (k == "tau") c.train.tau = v.get<double>();
        else unknown_key("train", k);
      }
    } else if (key == "epsilon") {
      c.epsilon = value.get<double>();
    } else if (key == "metric") {
      c.metric = parse_perf_metric(value.get<std::string>());
    } else if (key == "descriptor") {
      for (const auto& [k, v] : value.items()) {
        if (k == "mode") c.descriptor.mode = parse_descriptor_mode(v.get<std::string>());
        else if (k == "availability_estimator") c.descriptor.estimator = parse_availability_estimator(v.get<std::string>());
        else if (k == "kmeans_restarts") c.descriptor.kmeans.restarts = v.get<int>();
        else if (k == "kmeans_max_iterations") c.descriptor.kmeans.max_iterations = v.get<int>();
        else unknown_key("descriptor", k);
      }
    } else if (key == "split") {
      for (const auto& [k, v] : value.items()) {
        if (k == "eval_fraction") c.split.eval_fraction = v.get<double>();
        else if (k == "meta_train_max_n") c.split.meta_train_max_n = optional_from<std::int64_t>(v);
        else if (k == "eval_min_n") c.split.eval_min_n = optional_from<std::int64_t>(v);
        else unknown_key("split", k);
      }
    } else if (key == "selectors") {
      have_selectors = true;
      for (const auto& s : value) c.selectors.push_back(SelectorSpec::from_json(s));
    } else if (key == "selector_seeds") {
      c.selector_seeds = value.get<std::vector<std::uint64_t>>();
    } else if (key == "selection_rule") {
      c.selection_rule = parse_selection_rule(value.get<std::string>());
    } else if (key == "analysis") {
      for (const auto& [k, v] : value.items()) {
        if (k == "gap_pairs") c.analysis.gap_pairs = pairs_from_json(v, "analysis.gap_pairs");
        else if (k == "scaling_sizes") c.analysis.scaling_sizes = v.get<std::vector<std::size_t>>();
        else if (k == "leave_one_out") c.analysis.leave_one_out = v.get<bool>();
        else if (k == "loo_mode") c.analysis.loo_mode = parse_ablation_mode(v.get<std::string>());
        else if (k == "pairwise") c.analysis.pairwise = pairs_from_json(v, "analysis.pairwise");
        else if (k == "epsilon_grid") c.analysis.epsilon_grid = v.get<std::vector<double>>();
        else if (k == "mimic_tree") c.analysis.mimic_tree = v.get<bool>();
        else if (k == "subject") c.analysis.subject = v.get<std::string>();
        else unknown_key("analysis", k);
      }
    } else if (key == "workers") {
      c.workers = value.get<int>();
    } else {
      unknown_key("config", key);
    }
  }
  if (!have_selectors) c.selectors = default_selector_lineup();
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse, "config " + path.string() + ": " + e.what());
  }
  try {
    return from_json(j);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, "config " + path.string() + ": " + e.what());
  }
}

std::string ExperimentConfig::hash() const {
  // Worker count does not change any output, so it does not name the directory.
  json j = to_json();
  j.erase("workers");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_bytes(j.dump())));
  return buf;
}

const SelectorSpec& ExperimentConfig::selector(std::string_view name) const {
  for (const auto& s : selectors) {
    if (s.name == name) return s;
  }
  throw Error(ErrorKind::kInvalidArgument, "config: no selector named '" + std::string(name) + "'");
}

}  // namespace shiftsel
