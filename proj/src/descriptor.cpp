#include "shiftsel/descriptor.hpp"

#include <cmath>

#include "shiftsel/error.hpp"

namespace shiftsel {

DescriptorVector DatasetDescriptor::values() const noexcept {
  return {degrees.spurious, degrees.label, degrees.covariate, availability, n, d};
}

DatasetDescriptor DatasetDescriptor::from_values(const DescriptorVector& v) {
  return DatasetDescriptor{ShiftDegrees{v[kFeatSpurious], v[kFeatLabel], v[kFeatCovariate]}, v[kFeatAvailability],
                           v[kFeatSize], v[kFeatDim]};
}

std::size_t descriptor_index(std::string_view name) {
  for (std::size_t i = 0; i < kDescriptorSize; ++i) {
    if (kDescriptorNames[i] == name) return i;
  }
  throw Error(ErrorKind::kParse, "unknown descriptor feature '" + std::string(name) + "'");
}

std::string_view to_string(DescriptorMode mode) {
  switch (mode) {
    case DescriptorMode::kOracle: return "oracle";
    case DescriptorMode::kOracleProxy: return "oracle_proxy";
    case DescriptorMode::kEstimated: return "estimated";
  }
  return "?";
}

DescriptorMode parse_descriptor_mode(std::string_view text) {
  if (text == "oracle") return DescriptorMode::kOracle;
  if (text == "oracle_proxy") return DescriptorMode::kOracleProxy;
  if (text == "estimated") return DescriptorMode::kEstimated;
  throw Error(ErrorKind::kParse, "unknown descriptor mode '" + std::string(text) + "'");
}

std::string_view to_string(AvailabilityEstimator estimator) {
  return estimator == AvailabilityEstimator::kCentroidDistance ? "centroid_distance" : "within_group";
}

AvailabilityEstimator parse_availability_estimator(std::string_view text) {
  if (text == "centroid_distance") return AvailabilityEstimator::kCentroidDistance;
  if (text == "within_group") return AvailabilityEstimator::kWithinGroup;
  throw Error(ErrorKind::kParse, "unknown availability estimator '" + std::string(text) + "'");
}

namespace {

void check_attributes(const Split& data, std::span<const std::int8_t> attributes) {
  if (attributes.size() != data.size()) {
    throw Error(ErrorKind::kInvalidArgument, "attribute vector length differs from sample count");
  }
}

GroupCounts histogram_with(const Split& data, std::span<const std::int8_t> attributes) {
  GroupCounts c;
  for (std::size_t i = 0; i < data.size(); ++i) c[group_index(data.y[i], attributes[i])] += 1;
  return c;
}

// Mean distance of the selected rows to their centroid.
double mean_distance_to_centroid(const Split& data, const std::vector<std::size_t>& rows) {
  const std::size_t p = data.dim;
  std::vector<double> mu(p, 0.0);
  for (auto i : rows) {
    const auto x = data.row(i);
    for (std::size_t j = 0; j < p; ++j) mu[j] += x[j];
  }
  for (auto& v : mu) v /= static_cast<double>(rows.size());
  double total = 0.0;
  for (auto i : rows) {
    const auto x = data.row(i);
    double d2 = 0.0;
    for (std::size_t j = 0; j < p; ++j) d2 += (x[j] - mu[j]) * (x[j] - mu[j]);
    total += std::sqrt(d2);
  }
  return total / static_cast<double>(rows.size());
}

}  // namespace

double estimate_availability(const Split& data, std::span<const std::int8_t> attributes) {
  check_attributes(data, attributes);
  std::array<std::vector<std::size_t>, 2> by_class, by_attr;
  for (std::size_t i = 0; i < data.size(); ++i) {
    by_class[data.y[i] > 0 ? 0 : 1].push_back(i);
    by_attr[attributes[i] > 0 ? 0 : 1].push_back(i);
  }
  for (int v = 0; v < 2; ++v) {
    if (by_class[v].empty() || by_attr[v].empty()) {
      throw Error(ErrorKind::kDegenerateInput, "availability: both classes and both attribute values must be present");
    }
  }
  const double num = mean_distance_to_centroid(data, by_class[0]) + mean_distance_to_centroid(data, by_class[1]);
  const double den = mean_distance_to_centroid(data, by_attr[0]) + mean_distance_to_centroid(data, by_attr[1]);
  if (!(den > 0.0)) throw Error(ErrorKind::kDegenerateInput, "availability: attribute clusters have zero spread");
  return num / den;
}

double estimate_availability_within_group(const Split& data, std::span<const std::int8_t> attributes) {
  check_attributes(data, attributes);
  const std::size_t p = data.dim;
  const GroupCounts counts = histogram_with(data, attributes);
  std::vector<double> means(kNumGroups * p, 0.0);
  std::vector<int> group_of(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int g = group_index(data.y[i], attributes[i]);
    group_of[i] = g;
    const auto x = data.row(i);
    for (std::size_t j = 0; j < p; ++j) means[static_cast<std::size_t>(g) * p + j] += x[j];
  }
  for (int g = 0; g < kNumGroups; ++g) {
    if (counts[g] == 0) continue;
    for (std::size_t j = 0; j < p; ++j) means[static_cast<std::size_t>(g) * p + j] /= static_cast<double>(counts[g]);
  }
  auto mean = [&](int y, int a) { return std::span<const double>(means).subspan(static_cast<std::size_t>(group_index(y, a)) * p, p); };
  auto present = [&](int y, int a) { return counts[group_index(y, a)] > 0; };

  std::vector<double> core(p, 0.0), spur(p, 0.0);
  bool have_core = false, have_spur = false;
  for (int a : {1, -1}) {
    if (!present(1, a) || !present(-1, a)) continue;
    have_core = true;
    for (std::size_t j = 0; j < p; ++j) core[j] += mean(1, a)[j] - mean(-1, a)[j];
  }
  for (int y : {1, -1}) {
    if (!present(y, 1) || !present(y, -1)) continue;
    have_spur = true;
    for (std::size_t j = 0; j < p; ++j) spur[j] += mean(y, 1)[j] - mean(y, -1)[j];
  }
  if (!have_core || !have_spur) {
    throw Error(ErrorKind::kDegenerateInput,
                "availability: need both classes at some attribute value and both attribute values in some class");
  }
  double core_norm2 = 0.0, spur_norm2 = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    core_norm2 += core[j] * core[j];
    spur_norm2 += spur[j] * spur[j];
  }
  if (!(core_norm2 > 0.0) || !(spur_norm2 > 0.0)) {
    throw Error(ErrorKind::kDegenerateInput, "availability: coincident group means");
  }
  double var_core = 0.0, var_spur = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.row(i);
    const auto mu = std::span<const double>(means).subspan(static_cast<std::size_t>(group_of[i]) * p, p);
    double pc = 0.0, ps = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double r = x[j] - mu[j];
      pc += r * core[j];
      ps += r * spur[j];
    }
    var_core += pc * pc;
    var_spur += ps * ps;
  }
  var_core /= core_norm2;
  var_spur /= spur_norm2;
  if (!(var_spur > 0.0)) throw Error(ErrorKind::kDegenerateInput, "availability: zero spread along attribute direction");
  return var_core / var_spur;
}

double estimate_availability(const Split& data, std::span<const std::int8_t> attributes,
                             AvailabilityEstimator estimator) {
  return estimator == AvailabilityEstimator::kCentroidDistance ? estimate_availability(data, attributes)
                                                                : estimate_availability_within_group(data, attributes);
}

std::vector<std::int8_t> canonicalize_attributes(std::span<const std::int8_t> attributes) {
  std::size_t positive = 0;
  for (auto a : attributes) positive += a > 0 ? 1 : 0;
  std::vector<std::int8_t> out(attributes.begin(), attributes.end());
  if (2 * positive < attributes.size()) {
    for (auto& a : out) a = static_cast<std::int8_t>(-a);
  }
  return out;
}

AttributeEstimate estimate_attributes(const Split& train, std::uint64_t seed, const KMeansConfig& config) {
  const std::size_t p = train.dim;
  std::array<std::vector<std::size_t>, 2> members;  // class +1, class -1
  for (std::size_t i = 0; i < train.size(); ++i) members[train.y[i] > 0 ? 0 : 1].push_back(i);
  if (members[0].size() < 2 || members[1].size() < 2) {
    throw Error(ErrorKind::kDegenerateInput, "estimate_attributes: need at least two samples per class");
  }
  KMeansConfig cfg = config;
  cfg.k = 2;

  AttributeEstimate out;
  out.attributes.assign(train.size(), 1);
  std::array<KMeansResult, 2> fits;
  for (std::size_t c = 0; c < 2; ++c) {
    std::vector<double> xs;
    xs.reserve(members[c].size() * p);
    for (auto i : members[c]) {
      const auto r = train.row(i);
      xs.insert(xs.end(), r.begin(), r.end());
    }
    fits[c] = kmeans(xs, members[c].size(), p, cfg, derive_seed(seed, c));
    out.converged = out.converged && fits[c].converged;
  }

  auto dist = [&](std::size_t c0, std::size_t c1) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double t = fits[0].centers[c0 * p + j] - fits[1].centers[c1 * p + j];
      d2 += t * t;
    }
    return std::sqrt(d2);
  };
  // Cluster 0 of class +1 is attribute +1; its partner in class -1 is the
  // cluster of the cheaper pairing.
  const bool straight = dist(0, 0) + dist(1, 1) <= dist(0, 1) + dist(1, 0);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t k = 0; k < members[c].size(); ++k) {
      int cluster = fits[c].assignment[k];
      if (c == 1 && !straight) cluster = 1 - cluster;
      out.attributes[members[c][k]] = cluster == 0 ? 1 : -1;
    }
  }
  out.attributes = canonicalize_attributes(out.attributes);
  return out;
}

DescriptorResult compute_descriptor_oracle(const TaskDataset& task, AvailabilityEstimator estimator) {
  DescriptorResult out;
  out.descriptor.degrees = quantify_shifts(group_histogram(task.train));
  out.descriptor.n = static_cast<double>(task.train.size());
  out.descriptor.d = static_cast<double>(task.meta.block_dim);
  if (task.meta.availability) {
    out.descriptor.availability = *task.meta.availability;
  } else {
    out.descriptor.availability = estimate_availability(task.train, task.train.a, estimator);
    out.fallback = true;
  }
  return out;
}

DescriptorResult compute_descriptor(const TaskDataset& task, const DescriptorOptions& options, std::uint64_t seed) {
  if (options.mode == DescriptorMode::kOracle) return compute_descriptor_oracle(task, options.estimator);

  DescriptorResult out;
  std::vector<std::int8_t> attributes;
  if (options.mode == DescriptorMode::kOracleProxy) {
    attributes = canonicalize_attributes(task.train.a);
  } else {
    auto est = estimate_attributes(task.train, seed, options.kmeans);
    attributes = std::move(est.attributes);
    out.kmeans_converged = est.converged;
  }
  out.descriptor.degrees = quantify_shifts(histogram_with(task.train, attributes));
  out.descriptor.availability = estimate_availability(task.train, attributes, options.estimator);
  out.descriptor.n = static_cast<double>(task.train.size());
  out.descriptor.d = static_cast<double>(task.meta.block_dim);
  return out;
}

}  // namespace shiftsel
