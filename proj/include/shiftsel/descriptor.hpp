#pragma once
// Dataset descriptors f(D_tr) = (d_sc, d_ls, d_cs, r, n, d).

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "shiftsel/kmeans.hpp"
#include "shiftsel/task.hpp"

namespace shiftsel {

inline constexpr std::size_t kDescriptorSize = 6;
inline constexpr std::array<std::string_view, kDescriptorSize> kDescriptorNames{"d_sc", "d_ls", "d_cs",
                                                                                "r",    "n",    "d"};
/// Indices into the descriptor vector.
enum DescriptorFeature : std::size_t { kFeatSpurious, kFeatLabel, kFeatCovariate, kFeatAvailability, kFeatSize, kFeatDim };

using DescriptorVector = std::array<double, kDescriptorSize>;

struct DatasetDescriptor {
  ShiftDegrees degrees;
  double availability = 1.0;
  double n = 0.0;
  double d = 0.0;

  DescriptorVector values() const noexcept;
  static DatasetDescriptor from_values(const DescriptorVector& v);
  bool operator==(const DatasetDescriptor&) const = default;
};

/// Position of a feature name in kDescriptorNames; throws kParse if unknown.
std::size_t descriptor_index(std::string_view name);

enum class DescriptorMode { kOracle, kOracleProxy, kEstimated };
enum class AvailabilityEstimator { kCentroidDistance, kWithinGroup };

std::string_view to_string(DescriptorMode mode);
DescriptorMode parse_descriptor_mode(std::string_view text);
std::string_view to_string(AvailabilityEstimator estimator);
AvailabilityEstimator parse_availability_estimator(std::string_view text);

struct DescriptorOptions {
  DescriptorMode mode = DescriptorMode::kOracle;
  AvailabilityEstimator estimator = AvailabilityEstimator::kWithinGroup;
  KMeansConfig kmeans;
};

struct DescriptorResult {
  DatasetDescriptor descriptor;
  bool fallback = false;          // oracle requested but r had to be estimated
  bool kmeans_converged = true;   // estimated mode only
};

/// Ground-truth degrees from the train histogram; generative r when the task
/// carries one, otherwise the configured estimator (flagged as fallback).
DescriptorResult compute_descriptor_oracle(const TaskDataset& task,
                                           AvailabilityEstimator estimator = AvailabilityEstimator::kWithinGroup);

struct AttributeEstimate {
  std::vector<std::int8_t> attributes;
  bool converged = true;
};

/// Pseudo-attributes: 2-means within each class, clusters matched across
/// classes by minimum total centroid distance, then canonicalized.
AttributeEstimate estimate_attributes(const Split& train, std::uint64_t seed, const KMeansConfig& config = {});

/// Global flip so that attribute +1 is the larger population (ties keep the
/// input labelling).
std::vector<std::int8_t> canonicalize_attributes(std::span<const std::int8_t> attributes);

/// Centroid-distance proxy: sum over classes of the mean distance to the class
/// centroid, divided by the same sum over attribute values.
double estimate_availability(const Split& data, std::span<const std::int8_t> attributes);

/// Ratio of pooled within-group variances along the core direction
/// (class-mean difference at fixed attribute) and the attribute direction
/// (attribute-mean difference at fixed class).
double estimate_availability_within_group(const Split& data, std::span<const std::int8_t> attributes);

double estimate_availability(const Split& data, std::span<const std::int8_t> attributes,
                             AvailabilityEstimator estimator);

DescriptorResult compute_descriptor(const TaskDataset& task, const DescriptorOptions& options, std::uint64_t seed);

}  // namespace shiftsel
