#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"

namespace shiftsel {

struct MlpSpec {
  int hidden_layers = 4;
  int width = 128;

  void validate() const;
  bool operator==(const MlpSpec&) const = default;
};

struct MlpTrainConfig {
  int epochs = 2000;
  double lr = 1e-3;
  double weight_decay = 0.0;

  void validate() const;
  bool operator==(const MlpTrainConfig&) const = default;
};

enum class MlpLoss { kBinaryCrossEntropy, kSquaredError };

/// Fully connected ReLU network with a linear output layer. Parameters are
/// one flat vector: for each layer, W (out x in, row-major) then b (out).
class Mlp {
 public:
  Mlp() = default;
  /// Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Mlp(std::size_t inputs, std::size_t outputs, const MlpSpec& spec, std::uint64_t seed);

  std::size_t inputs() const noexcept { return sizes_.empty() ? 0 : sizes_.front(); }
  std::size_t outputs() const noexcept { return sizes_.empty() ? 0 : sizes_.back(); }
  const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
  std::vector<double>& parameters() noexcept { return params_; }
  const std::vector<double>& parameters() const noexcept { return params_; }

  /// out = f(x) for `rows` inputs (rows x outputs).
  void forward(std::span<const double> x, std::size_t rows, std::vector<double>& out) const;
  std::vector<double> forward(std::span<const double> x) const;

  /// Mean loss over rows x outputs; fills `grad` (same layout as the
  /// parameters) when non-null.
  double loss(std::span<const double> x, std::size_t rows, std::span<const double> targets, MlpLoss kind,
              std::vector<double>* grad) const;

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);
  bool operator==(const Mlp&) const = default;

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const { return offsets_[layer] + sizes_[layer + 1] * sizes_[layer]; }
  void build_offsets();

  std::vector<std::size_t> sizes_;    // inputs, hidden..., outputs
  std::vector<std::size_t> offsets_;  // start of each layer's block in params_
  std::vector<double> params_;
};

/// Full-batch Adam; returns the loss recorded before each update. Throws
/// kDivergence on a non-finite loss.
std::vector<double> train_mlp(Mlp& net, std::span<const double> x, std::size_t rows, std::span<const double> targets,
                              MlpLoss kind, const MlpTrainConfig& config);

}  // namespace shiftsel
