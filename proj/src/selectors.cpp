#include "shiftsel/selectors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "shiftsel/error.hpp"

namespace shiftsel {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 9> kKindNames{"mlp_multilabel", "regression", "linear",   "knn",   "tree",
                                                     "mimic_tree",     "global_best", "random", "oracle"};
constexpr int kArtifactVersion = 1;

bool is_degree(std::size_t feature) { return feature <= kFeatCovariate; }
bool is_log_feature(std::size_t feature) { return feature == kFeatAvailability || feature == kFeatSize; }

}  // namespace

std::string_view to_string(SelectorKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

SelectorKind parse_selector_kind(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == text) return static_cast<SelectorKind>(i);
  }
  throw Error(ErrorKind::kParse, "unknown selector kind '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// FeatureTransform

std::vector<double> FeatureTransform::project(const DescriptorVector& v) const {
  std::vector<double> out(active.size());
  for (std::size_t k = 0; k < active.size(); ++k) {
    const std::size_t f = active[k];
    double value = v[f];
    if (log_scale && is_log_feature(f)) {
      if (!(value > 0.0)) {
        throw Error(ErrorKind::kInvalidArgument, "descriptor " + std::string(kDescriptorNames[f]) + " must be > 0");
      }
      value = std::log10(value);
    }
    if (fold_degrees && is_degree(f)) value = std::abs(value - 0.5);
    out[k] = value;
  }
  return out;
}

void FeatureTransform::fit(std::span<const DescriptorVector> rows) {
  if (rows.empty()) throw Error(ErrorKind::kDegenerateInput, "feature transform: no rows");
  const std::size_t p = active.size();
  mean.assign(p, 0.0);
  scale.assign(p, 1.0);
  dropped.assign(p, 0);
  std::vector<std::vector<double>> projected;
  projected.reserve(rows.size());
  for (const auto& r : rows) projected.push_back(project(r));
  for (const auto& r : projected) {
    for (std::size_t k = 0; k < p; ++k) mean[k] += r[k];
  }
  for (auto& m : mean) m /= static_cast<double>(rows.size());
  if (!standardize) return;
  std::vector<double> var(p, 0.0);
  for (const auto& r : projected) {
    for (std::size_t k = 0; k < p; ++k) var[k] += (r[k] - mean[k]) * (r[k] - mean[k]);
  }
  for (std::size_t k = 0; k < p; ++k) {
    const double sd = std::sqrt(var[k] / static_cast<double>(rows.size()));
    if (sd > 1e-12) {
      scale[k] = sd;
    } else {
      dropped[k] = 1;
    }
  }
}

std::vector<double> FeatureTransform::standardize_values(std::span<const double> projected) const {
  std::vector<double> out(projected.begin(), projected.end());
  if (!standardize) return out;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = (out[k] - mean[k]) / scale[k];
  return out;
}

std::vector<double> FeatureTransform::destandardize_values(std::span<const double> standardized) const {
  std::vector<double> out(standardized.begin(), standardized.end());
  if (!standardize) return out;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = out[k] * scale[k] + mean[k];
  return out;
}

std::vector<double> FeatureTransform::apply(const DescriptorVector& v) const {
  std::vector<double> out = standardize_values(project(v));
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (standardize && dropped[k]) out[k] = 0.0;
  }
  for (auto k : masked) out[k] = standardize ? 0.0 : mean[k];
  return out;
}

std::vector<std::string> FeatureTransform::input_names() const {
  std::vector<std::string> names;
  for (auto f : active) {
    std::string n(kDescriptorNames[f]);
    if (log_scale && is_log_feature(f)) n = "log10(" + n + ")";
    if (fold_degrees && is_degree(f)) n = "|" + n + "-0.5|";
    names.push_back(n);
  }
  return names;
}

json FeatureTransform::to_json() const {
  return json{{"active", active}, {"log_scale", log_scale}, {"fold_degrees", fold_degrees},
              {"standardize", standardize}, {"masked", masked}, {"mean", mean}, {"scale", scale},
              {"dropped", dropped}};
}

FeatureTransform FeatureTransform::from_json(const json& j) {
  FeatureTransform t;
  t.active = j.at("active").get<std::vector<std::size_t>>();
  t.log_scale = j.at("log_scale").get<bool>();
  t.fold_degrees = j.at("fold_degrees").get<bool>();
  t.standardize = j.at("standardize").get<bool>();
  t.masked = j.at("masked").get<std::vector<std::size_t>>();
  t.mean = j.at("mean").get<std::vector<double>>();
  t.scale = j.at("scale").get<std::vector<double>>();
  t.dropped = j.at("dropped").get<std::vector<std::uint8_t>>();
  const std::size_t p = t.active.size();
  if (t.mean.size() != p || t.scale.size() != p || t.dropped.size() != p) {
    throw Error(ErrorKind::kSchema, "feature transform: statistics length mismatch");
  }
  for (auto f : t.active) {
    if (f >= kDescriptorSize) throw Error(ErrorKind::kSchema, "feature transform: feature index out of range");
  }
  for (auto k : t.masked) {
    if (k >= p) throw Error(ErrorKind::kSchema, "feature transform: masked index out of range");
  }
  return t;
}

// ---------------------------------------------------------------------------
// SelectorSpec

void SelectorSpec::validate() const {
  if (name.empty()) throw Error(ErrorKind::kInvalidArgument, "selector spec: empty name");
  if (features.empty()) throw Error(ErrorKind::kInvalidArgument, "selector '" + name + "': no input features");
  std::set<std::string> seen;
  for (const auto& f : features) {
    descriptor_index(f);
    if (!seen.insert(f).second) throw Error(ErrorKind::kInvalidArgument, "selector '" + name + "': repeated feature " + f);
  }
  for (const auto& f : masked) {
    if (!seen.count(f)) {
      throw Error(ErrorKind::kInvalidArgument, "selector '" + name + "': masked feature " + f + " is not an input");
    }
  }
  mlp.validate();
  train.validate();
  tree.validate();
  if (knn_k < 1) throw Error(ErrorKind::kInvalidArgument, "selector '" + name + "': knn_k must be >= 1");
  if (kind == SelectorKind::kMimicTree) {
    throw Error(ErrorKind::kInvalidArgument, "selector '" + name + "': mimic trees are derived from an MLP selector");
  }
}

json SelectorSpec::to_json() const {
  return json{{"name", name},
              {"kind", to_string(kind)},
              {"features", features},
              {"masked", masked},
              {"hidden_layers", mlp.hidden_layers},
              {"width", mlp.width},
              {"epochs", train.epochs},
              {"lr", train.lr},
              {"weight_decay", train.weight_decay},
              {"max_depth", tree.max_depth},
              {"min_samples_leaf", tree.min_samples_leaf},
              {"knn_k", knn_k}};
}

SelectorSpec SelectorSpec::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::kParse, "selector spec must be an object");
  SelectorSpec s = default_selector_spec(parse_selector_kind(j.at("kind").get<std::string>()));
  for (const auto& [key, value] : j.items()) {
    if (key == "kind") continue;
    if (key == "name") s.name = value.get<std::string>();
    else if (key == "features") s.features = value.get<std::vector<std::string>>();
    else if (key == "masked") s.masked = value.get<std::vector<std::string>>();
    else if (key == "hidden_layers") s.mlp.hidden_layers = value.get<int>();
    else if (key == "width") s.mlp.width = value.get<int>();
    else if (key == "epochs") s.train.epochs = value.get<int>();
    else if (key == "lr") s.train.lr = value.get<double>();
    else if (key == "weight_decay") s.train.weight_decay = value.get<double>();
    else if (key == "max_depth") s.tree.max_depth = value.get<int>();
    else if (key == "min_samples_leaf") s.tree.min_samples_leaf = value.get<int>();
    else if (key == "knn_k") s.knn_k = value.get<int>();
    else throw Error(ErrorKind::kParse, "selector spec: unknown key '" + key + "'");
  }
  if (s.name.empty()) s.name = std::string(to_string(s.kind));
  return s;
}

SelectorSpec default_selector_spec(SelectorKind kind, std::string name) {
  SelectorSpec s;
  s.kind = kind;
  s.name = name.empty() ? std::string(to_string(kind)) : std::move(name);
  if (kind == SelectorKind::kLinear) s.mlp.hidden_layers = 0;
  return s;
}

std::vector<std::string> naive_feature_names() { return {"n", "d"}; }

std::array<double, 2> naive_descriptor_view(const DatasetDescriptor& descriptor) {
  return {descriptor.n, descriptor.d};
}

// ---------------------------------------------------------------------------
// Selector inference

namespace {

std::vector<double> one_hot(std::size_t index, std::size_t size) {
  std::vector<double> v(size, 0.0);
  v[index] = 1.0;
  return v;
}

std::vector<double> regression_input(const std::vector<double>& base, std::size_t algorithm, std::size_t m) {
  std::vector<double> row = base;
  for (std::size_t k = 0; k < m; ++k) row.push_back(k == algorithm ? 1.0 : 0.0);
  return row;
}

}  // namespace

std::vector<double> Selector::predict_scores(const DatasetDescriptor& descriptor) const {
  const std::size_t m = algorithms.size();
  const DescriptorVector raw = descriptor.values();
  switch (spec.kind) {
    case SelectorKind::kMlp:
    case SelectorKind::kLinear:
      return net_.forward(transform.apply(raw));
    case SelectorKind::kRegression: {
      const auto base = transform.apply(raw);
      std::vector<double> scores(m);
      for (std::size_t k = 0; k < m; ++k) scores[k] = -net_.forward(regression_input(base, k, m))[0];
      return scores;
    }
    case SelectorKind::kKnn: {
      const auto q = transform.apply(raw);
      const std::size_t p = q.size();
      const std::size_t rows = knn_y_.size() / m;
      std::vector<std::pair<double, std::size_t>> dist(rows);
      for (std::size_t i = 0; i < rows; ++i) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
          const double t = knn_x_[i * p + j] - q[j];
          d2 += t * t;
        }
        dist[i] = {d2, i};
      }
      const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(spec.knn_k), rows);
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
      std::vector<double> scores(m, 0.0);
      for (std::size_t n = 0; n < k; ++n) {
        for (std::size_t a = 0; a < m; ++a) scores[a] += knn_y_[dist[n].second * m + a];
      }
      for (auto& s : scores) s /= static_cast<double>(k);
      return scores;
    }
    case SelectorKind::kTree:
    case SelectorKind::kMimicTree:
      return tree_.predict(transform.apply(raw));
    case SelectorKind::kGlobalBest:
      return constant_;
    case SelectorKind::kRandom: {
      std::string bytes(sizeof(double) * kDescriptorSize, '\0');
      std::memcpy(bytes.data(), raw.data(), bytes.size());
      Rng rng(mix64(hash_bytes(bytes) ^ mix64(seed)));
      std::vector<double> scores(m);
      for (auto& s : scores) s = uniform01(rng);
      return scores;
    }
    case SelectorKind::kOracle:
      throw Error(ErrorKind::kUnsupported, "oracle selector needs the task's performance row");
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown selector kind");
}

std::vector<double> Selector::predict_scores(const MetaRecord& record, PerfMetric metric) const {
  if (spec.kind != SelectorKind::kOracle) return predict_scores(record.descriptor);
  const auto& perf = record.errors(metric);
  if (perf.size() != algorithms.size()) throw Error(ErrorKind::kInvalidArgument, "oracle: algorithm count mismatch");
  std::vector<double> scores(perf.size());
  for (std::size_t k = 0; k < perf.size(); ++k) scores[k] = -perf[k];
  return scores;
}

std::vector<double> Selector::probabilities(std::span<const double> scores) const {
  std::vector<double> out(scores.begin(), scores.end());
  switch (spec.kind) {
    case SelectorKind::kMlp:
    case SelectorKind::kLinear:
      for (auto& v : out) v = sigmoid(v);
      break;
    case SelectorKind::kRegression:
    case SelectorKind::kOracle: {
      const std::size_t best = argmax(scores);
      for (std::size_t k = 0; k < out.size(); ++k) out[k] = k == best ? 1.0 : 0.0;
      break;
    }
    default:
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

json Selector::to_json() const {
  json params = json::object();
  switch (spec.kind) {
    case SelectorKind::kMlp:
    case SelectorKind::kLinear:
    case SelectorKind::kRegression:
      params["network"] = net_.to_json();
      break;
    case SelectorKind::kKnn:
      params["x"] = knn_x_;
      params["y"] = knn_y_;
      break;
    case SelectorKind::kTree:
    case SelectorKind::kMimicTree:
      params["tree"] = tree_.to_json();
      break;
    case SelectorKind::kGlobalBest:
      params["constant"] = constant_;
      break;
    default:
      break;
  }
  json spec_json = spec.to_json();
  spec_json["kind"] = to_string(spec.kind);
  return json{{"format", "shiftsel-selector"},
              {"version", kArtifactVersion},
              {"spec", spec_json},
              {"transform", transform.to_json()},
              {"algorithms", algorithms},
              {"seed", seed},
              {"meta_fingerprint", meta_fingerprint},
              {"warnings", warnings},
              {"final_loss", train_trace.empty() ? json(nullptr) : json(train_trace.back())},
              {"parameters", params}};
}

Selector Selector::from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "shiftsel-selector") {
      throw Error(ErrorKind::kSchema, "not a selector artifact");
    }
    if (j.at("version").get<int>() != kArtifactVersion) {
      throw Error(ErrorKind::kSchema, "selector artifact version " + std::to_string(j.at("version").get<int>()) +
                                          " (this build reads version " + std::to_string(kArtifactVersion) + ")");
    }
    Selector s;
    json spec_json = j.at("spec");
    const auto kind = parse_selector_kind(spec_json.at("kind").get<std::string>());
    if (kind == SelectorKind::kMimicTree) {
      spec_json["kind"] = "tree";  // parsed as a tree spec, kind restored below
      s.spec = SelectorSpec::from_json(spec_json);
      s.spec.kind = SelectorKind::kMimicTree;
    } else {
      s.spec = SelectorSpec::from_json(spec_json);
    }
    s.transform = FeatureTransform::from_json(j.at("transform"));
    s.algorithms = j.at("algorithms").get<std::vector<std::string>>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.meta_fingerprint = j.at("meta_fingerprint").get<std::string>();
    s.warnings = j.at("warnings").get<std::vector<std::string>>();
    const auto& params = j.at("parameters");
    switch (s.spec.kind) {
      case SelectorKind::kMlp:
      case SelectorKind::kLinear:
      case SelectorKind::kRegression:
        s.net_ = Mlp::from_json(params.at("network"));
        break;
      case SelectorKind::kKnn:
        s.knn_x_ = params.at("x").get<std::vector<double>>();
        s.knn_y_ = params.at("y").get<std::vector<double>>();
        break;
      case SelectorKind::kTree:
      case SelectorKind::kMimicTree:
        s.tree_ = DecisionTree::from_json(params.at("tree"));
        break;
      case SelectorKind::kGlobalBest:
        s.constant_ = params.at("constant").get<std::vector<double>>();
        break;
      default:
        break;
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("selector artifact: ") + e.what());
  }
}

void Selector::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << to_json().dump(1) << '\n';
}

Selector Selector::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  return from_json(j);
}

// ---------------------------------------------------------------------------
// Training

namespace {

FeatureTransform make_transform(const SelectorSpec& spec, bool log_scale, bool fold, bool standardize) {
  FeatureTransform t;
  for (const auto& f : spec.features) t.active.push_back(descriptor_index(f));
  for (const auto& f : spec.masked) {
    const auto idx = descriptor_index(f);
    t.masked.push_back(static_cast<std::size_t>(std::find(t.active.begin(), t.active.end(), idx) - t.active.begin()));
  }
  t.log_scale = log_scale;
  t.fold_degrees = fold;
  t.standardize = standardize;
  return t;
}

std::vector<DescriptorVector> descriptor_rows(const MetaDataset& meta) {
  std::vector<DescriptorVector> rows;
  rows.reserve(meta.size());
  for (const auto& r : meta.records) rows.push_back(r.descriptor.values());
  return rows;
}

std::vector<double> input_matrix(const FeatureTransform& t, const std::vector<DescriptorVector>& rows) {
  std::vector<double> x;
  x.reserve(rows.size() * t.size());
  for (const auto& r : rows) {
    const auto v = t.apply(r);
    x.insert(x.end(), v.begin(), v.end());
  }
  return x;
}

std::vector<double> label_matrix(const MetaDataset& meta) {
  std::vector<double> y;
  y.reserve(meta.size() * meta.num_algorithms());
  for (const auto& r : meta.records) {
    for (auto l : r.labels) y.push_back(static_cast<double>(l));
  }
  return y;
}

void note_dropped(Selector& s) {
  const auto kind = s.spec.kind;
  if (kind == SelectorKind::kOracle || kind == SelectorKind::kRandom || kind == SelectorKind::kGlobalBest) return;
  for (std::size_t k = 0; k < s.transform.size(); ++k) {
    if (s.transform.standardize && s.transform.dropped[k]) {
      s.warnings.push_back("feature " + std::string(kDescriptorNames[s.transform.active[k]]) +
                           " has zero spread on the training records and is ignored");
    }
  }
}

}  // namespace

Selector train_selector(const MetaDataset& meta, const SelectorSpec& spec, std::uint64_t seed) {
  spec.validate();
  meta.validate();
  if (meta.records.empty()) throw Error(ErrorKind::kDegenerateInput, "selector '" + spec.name + "': no training records");
  const std::size_t m = meta.num_algorithms();
  Selector s;
  s.spec = spec;
  s.algorithms = meta.algorithms;
  s.seed = seed;

  const bool tree_like = spec.kind == SelectorKind::kTree;
  s.transform = make_transform(spec, !tree_like, false, !tree_like);
  const auto rows = descriptor_rows(meta);
  s.transform.fit(rows);
  note_dropped(s);
  const std::size_t n = rows.size();

  switch (spec.kind) {
    case SelectorKind::kMlp:
    case SelectorKind::kLinear: {
      if (n < 2) throw Error(ErrorKind::kDegenerateInput, "selector '" + spec.name + "': need at least 2 records");
      const auto x = input_matrix(s.transform, rows);
      const auto y = label_matrix(meta);
      s.net_ = Mlp(s.transform.size(), m, spec.mlp, seed);
      s.train_trace = train_mlp(s.net_, x, n, y, MlpLoss::kBinaryCrossEntropy, spec.train);
      break;
    }
    case SelectorKind::kRegression: {
      if (n < 2) throw Error(ErrorKind::kDegenerateInput, "selector '" + spec.name + "': need at least 2 records");
      std::vector<double> x, y;
      x.reserve(n * m * (s.transform.size() + m));
      for (std::size_t i = 0; i < n; ++i) {
        const auto base = s.transform.apply(rows[i]);
        const auto& perf = meta.records[i].errors(meta.metric);
        for (std::size_t k = 0; k < m; ++k) {
          const auto row = regression_input(base, k, m);
          x.insert(x.end(), row.begin(), row.end());
          y.push_back(perf[k]);
        }
      }
      s.net_ = Mlp(s.transform.size() + m, 1, spec.mlp, seed);
      s.train_trace = train_mlp(s.net_, x, n * m, y, MlpLoss::kSquaredError, spec.train);
      break;
    }
    case SelectorKind::kKnn:
      if (static_cast<std::size_t>(spec.knn_k) > n) {
        s.warnings.push_back("knn_k=" + std::to_string(spec.knn_k) + " exceeds the " + std::to_string(n) +
                             " training records; using k=" + std::to_string(n));
      }
      s.knn_x_ = input_matrix(s.transform, rows);
      s.knn_y_ = label_matrix(meta);
      break;
    case SelectorKind::kTree:
      s.tree_ = DecisionTree::fit(input_matrix(s.transform, rows), n, s.transform.size(), label_matrix(meta), m,
                                  spec.tree);
      break;
    case SelectorKind::kGlobalBest: {
      std::vector<double> mean(m, 0.0);
      for (const auto& r : meta.records) {
        const auto& perf = r.errors(meta.metric);
        for (std::size_t k = 0; k < m; ++k) mean[k] += perf[k];
      }
      const auto best = static_cast<std::size_t>(std::min_element(mean.begin(), mean.end()) - mean.begin());
      s.constant_ = one_hot(best, m);
      break;
    }
    case SelectorKind::kRandom:
    case SelectorKind::kOracle:
      break;
    case SelectorKind::kMimicTree:
      throw Error(ErrorKind::kInvalidArgument, "use train_mimic_tree for mimic trees");
  }
  return s;
}

Selector train_mimic_tree(const MetaDataset& meta, const Selector& mlp, const TreeSpec& spec) {
  if (mlp.kind() != SelectorKind::kMlp) {
    throw Error(ErrorKind::kUnsupported, "mimic tree needs an mlp_multilabel selector, got " +
                                             std::string(to_string(mlp.kind())));
  }
  if (meta.records.empty()) throw Error(ErrorKind::kDegenerateInput, "mimic tree: no records");
  const std::size_t m = mlp.num_algorithms();
  Selector s;
  s.spec = default_selector_spec(SelectorKind::kTree, "mimic_" + mlp.spec.name);
  s.spec.kind = SelectorKind::kMimicTree;
  s.spec.features = mlp.spec.features;
  s.spec.tree = spec;
  s.algorithms = mlp.algorithms;
  s.seed = mlp.seed;
  s.transform = make_transform(s.spec, false, true, false);
  const auto rows = descriptor_rows(meta);
  s.transform.fit(rows);
  std::vector<double> targets;
  targets.reserve(rows.size() * m);
  for (const auto& r : meta.records) {
    const auto t = one_hot(argmax(mlp.predict_scores(r.descriptor)), m);
    targets.insert(targets.end(), t.begin(), t.end());
  }
  s.tree_ = DecisionTree::fit(input_matrix(s.transform, rows), rows.size(), s.transform.size(), targets, m, spec);
  return s;
}

// ---------------------------------------------------------------------------
// Selection

std::string_view to_string(SelectionRule rule) {
  return rule == SelectionRule::kTopLogit ? "top_logit" : "binary_random";
}

SelectionRule parse_selection_rule(std::string_view text) {
  if (text == "top_logit") return SelectionRule::kTopLogit;
  if (text == "binary_random") return SelectionRule::kBinaryRandom;
  throw Error(ErrorKind::kParse, "unknown selection rule '" + std::string(text) + "'");
}

std::size_t argmax(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorKind::kInvalidArgument, "argmax of an empty score vector");
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  return best;
}

std::size_t select_algorithm(std::span<const double> scores, std::span<const double> probabilities, SelectionRule rule,
                             Rng& rng) {
  if (rule == SelectionRule::kTopLogit) return argmax(scores);
  if (probabilities.size() != scores.size()) {
    throw Error(ErrorKind::kInvalidArgument, "select_algorithm: probability/score length mismatch");
  }
  std::vector<std::size_t> positive;
  for (std::size_t k = 0; k < probabilities.size(); ++k) {
    if (probabilities[k] >= 0.5) positive.push_back(k);
  }
  if (positive.empty()) return argmax(scores);
  if (positive.size() == 1) return positive.front();
  const auto pick = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(positive.size()));
  return positive[std::min(pick, positive.size() - 1)];
}

std::size_t select_for(const Selector& selector, const MetaRecord& record, SelectionRule rule, Rng& rng,
                       PerfMetric metric) {
  const auto scores = selector.predict_scores(record, metric);
  return select_algorithm(scores, selector.probabilities(scores), rule, rng);
}

MetaSplit split_meta(const MetaDataset& meta, double eval_fraction, std::uint64_t seed) {
  if (!(eval_fraction >= 0.0 && eval_fraction <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "split: eval fraction must lie in [0, 1]");
  }
  MetaSplit out{meta, meta};
  out.train.records.clear();
  out.eval.records.clear();
  for (const auto& r : meta.records) {
    const std::uint64_t h = mix64(hash_bytes(r.task_id) ^ mix64(seed));
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    (u < eval_fraction ? out.eval : out.train).records.push_back(r);
  }
  return out;
}

}  // namespace shiftsel
