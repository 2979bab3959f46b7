#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shiftsel/error.hpp"
#include "shiftsel/rng.hpp"
#include "shiftsel/shift.hpp"
#include "shiftsel/task.hpp"

namespace shiftsel {

/// Candidate training algorithms. The enumerator order is the column order of
/// every performance and label vector in the project.
enum class AlgorithmId { kERM = 0, kGroupDRO, kOversample, kUndersample, kLogitAdjust };

inline constexpr int kNumAlgorithms = 5;
inline constexpr std::array<AlgorithmId, kNumAlgorithms> kAllAlgorithms{
    AlgorithmId::kERM, AlgorithmId::kGroupDRO, AlgorithmId::kOversample, AlgorithmId::kUndersample,
    AlgorithmId::kLogitAdjust};

std::string_view algorithm_name(AlgorithmId id);
AlgorithmId parse_algorithm(std::string_view name);
std::vector<std::string> algorithm_names();

/// score(x) = w.x + b, label = +1 when score >= 0.
struct LinearModel {
  std::vector<double> w;
  double b = 0.0;

  double score(std::span<const double> x) const;
  int predict(std::span<const double> x) const { return score(x) >= 0.0 ? 1 : -1; }
  bool operator==(const LinearModel&) const = default;
};

struct TrainConfig {
  int epochs = 1000;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  double dro_eta = 0.01;
  double tau = 1.0;

  void validate() const;
};

enum class ResampleMode { kOver, kUnder };

/// Balance the group histogram: kOver tops every non-empty group up to the
/// largest with draws (with replacement) added to the originals; kUnder draws
/// the smallest group's count from each group without replacement.
Split resample_groups(const Split& train, ResampleMode mode, Rng& rng);

using GroupVector = std::array<double, kNumGroups>;

/// Exponentiated-gradient step q_g <- q_g exp(eta L_g) / Z.
GroupVector dro_weight_update(const GroupVector& q, const GroupVector& group_losses, double eta);

/// log(1 + exp(z)) without overflow.
double softplus(double z) noexcept;
double sigmoid(double z) noexcept;

/// Exponent offset for logit adjustment: a group with prior pi must clear an
/// extra margin tau * log(1/pi).
double logit_offset(double group_prior, double tau);

/// log(1 + exp(-margin + tau*log(1/prior))) with margin = y * score.
double adjusted_logistic_loss(double margin, double group_prior, double tau);

/// Training-group priors n_g / n, floored at 1/(2n) for empty groups.
GroupVector group_priors(const Split& train);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad_w;
  double grad_b = 0.0;
};

/// sum_i weight_i * softplus(-y_i s_i + offset_i) + (weight_decay/2) ||theta||^2
/// and its gradient. `offsets` may be empty (all zero).
LossGrad logistic_objective(const Split& data, const LinearModel& model, std::span<const double> weights,
                            std::span<const double> offsets, double weight_decay);

struct TrainResult {
  LinearModel model;
  double final_loss = 0.0;
  std::vector<double> loss_trace;  // one entry per epoch, before the update
  GroupVector dro_weights{};       // final q for GroupDRO, zeros otherwise
};

/// Full-batch training of a linear classifier from zero initialization.
/// Deterministic in (train, config, seed); the seed only drives resampling.
TrainResult train_model(AlgorithmId algorithm, const Split& train, const TrainConfig& config,
                        std::uint64_t seed);

struct GroupErrors {
  GroupVector per_group{};

  double worst() const;
  double average() const;
};

/// Per-group 0-1 error of any scorer exposing `int predict(span<const double>)`.
template <class Model>
GroupErrors group_errors(const Model& model, const Split& test) {
  std::array<std::int64_t, kNumGroups> wrong{};
  std::array<std::int64_t, kNumGroups> total{};
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto g = static_cast<std::size_t>(test.group(i));
    total[g] += 1;
    if (model.predict(test.row(i)) != test.y[i]) wrong[g] += 1;
  }
  GroupErrors out;
  for (std::size_t g = 0; g < kNumGroups; ++g) {
    if (total[g] == 0) {
      throw Error(ErrorKind::kInvalidArgument,
                  "invalid test split: group G" + std::to_string(g + 1) + " has no samples");
    }
    out.per_group[g] = static_cast<double>(wrong[g]) / static_cast<double>(total[g]);
  }
  return out;
}

template <class Model>
double worst_group_error(const Model& model, const Split& test) {
  return group_errors(model, test).worst();
}

template <class Model>
double average_group_error(const Model& model, const Split& test) {
  return group_errors(model, test).average();
}

/// Mean of member scores.
class UniformEnsemble {
 public:
  explicit UniformEnsemble(std::vector<LinearModel> members);

  double score(std::span<const double> x) const;
  int predict(std::span<const double> x) const { return score(x) >= 0.0 ? 1 : -1; }
  std::size_t size() const noexcept { return members_.size(); }

 private:
  std::vector<LinearModel> members_;
};

}  // namespace shiftsel
