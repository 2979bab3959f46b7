#include "shiftsel/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shiftsel/algorithms.hpp"
#include "shiftsel/error.hpp"
#include "shiftsel/kernels.hpp"
#include "shiftsel/optim.hpp"
#include "shiftsel/rng.hpp"

namespace shiftsel {

void MlpSpec::validate() const {
  if (hidden_layers < 0) throw Error(ErrorKind::kInvalidArgument, "mlp: hidden_layers must be >= 0");
  if (width < 1) throw Error(ErrorKind::kInvalidArgument, "mlp: width must be >= 1");
}

void MlpTrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorKind::kInvalidArgument, "mlp: epochs must be >= 1");
  if (!(lr > 0.0)) throw Error(ErrorKind::kInvalidArgument, "mlp: lr must be > 0");
  if (weight_decay < 0.0) throw Error(ErrorKind::kInvalidArgument, "mlp: weight_decay must be >= 0");
}

Mlp::Mlp(std::size_t inputs, std::size_t outputs, const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (inputs == 0 || outputs == 0) throw Error(ErrorKind::kInvalidArgument, "mlp: empty input or output layer");
  sizes_.push_back(inputs);
  for (int l = 0; l < spec.hidden_layers; ++l) sizes_.push_back(static_cast<std::size_t>(spec.width));
  sizes_.push_back(outputs);
  build_offsets();
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    const std::size_t end = bias_offset(l) + sizes_[l + 1];
    for (std::size_t i = weight_offset(l); i < end; ++i) params_[i] = (2.0 * uniform01(rng) - 1.0) * bound;
  }
}

void Mlp::build_offsets() {
  offsets_.clear();
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(total);
    total += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
  }
  params_.assign(total, 0.0);
}

namespace {

void add_bias_relu(std::vector<double>& z, std::size_t rows, std::span<const double> bias, bool relu) {
  const std::size_t cols = bias.size();
  for (std::size_t i = 0; i < rows; ++i) {
    double* row = z.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) {
      const double v = row[j] + bias[j];
      row[j] = (relu && v < 0.0) ? 0.0 : v;
    }
  }
}

}  // namespace

void Mlp::forward(std::span<const double> x, std::size_t rows, std::vector<double>& out) const {
  if (x.size() != rows * inputs()) throw Error(ErrorKind::kInvalidArgument, "mlp forward: input size mismatch");
  std::vector<double> h(x.begin(), x.end());
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    std::vector<double> z(rows * sizes_[l + 1]);
    kernels::gemm_nt(h, std::span<const double>(params_).subspan(weight_offset(l), sizes_[l + 1] * sizes_[l]), z, rows,
                     sizes_[l], sizes_[l + 1]);
    add_bias_relu(z, rows, std::span<const double>(params_).subspan(bias_offset(l), sizes_[l + 1]), l + 1 < layers);
    h.swap(z);
  }
  out.swap(h);
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  std::vector<double> out;
  forward(x, 1, out);
  return out;
}

double Mlp::loss(std::span<const double> x, std::size_t rows, std::span<const double> targets, MlpLoss kind,
                 std::vector<double>* grad) const {
  if (x.size() != rows * inputs()) throw Error(ErrorKind::kInvalidArgument, "mlp loss: input size mismatch");
  if (targets.size() != rows * outputs()) throw Error(ErrorKind::kInvalidArgument, "mlp loss: target size mismatch");
  const std::size_t layers = sizes_.size() - 1;
  // Activations per layer (post-ReLU); acts[0] is the input.
  std::vector<std::vector<double>> acts(layers + 1);
  acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers; ++l) {
    acts[l + 1].resize(rows * sizes_[l + 1]);
    kernels::gemm_nt(acts[l], std::span<const double>(params_).subspan(weight_offset(l), sizes_[l + 1] * sizes_[l]),
                     acts[l + 1], rows, sizes_[l], sizes_[l + 1]);
    add_bias_relu(acts[l + 1], rows, std::span<const double>(params_).subspan(bias_offset(l), sizes_[l + 1]),
                  l + 1 < layers);
  }

  const auto& z = acts[layers];
  const double scale = 1.0 / static_cast<double>(z.size());
  double total = 0.0;
  std::vector<double> delta(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (kind == MlpLoss::kBinaryCrossEntropy) {
      total += softplus(z[i]) - targets[i] * z[i];
      delta[i] = (sigmoid(z[i]) - targets[i]) * scale;
    } else {
      const double e = z[i] - targets[i];
      total += e * e;
      delta[i] = 2.0 * e * scale;
    }
  }
  total *= scale;
  if (grad == nullptr) return total;

  grad->assign(params_.size(), 0.0);
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t out = sizes_[l + 1], in = sizes_[l];
    auto gw = std::span<double>(*grad).subspan(weight_offset(l), out * in);
    kernels::gemm_tn(delta, acts[l], gw, out, rows, in);
    auto gb = std::span<double>(*grad).subspan(bias_offset(l), out);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < out; ++j) gb[j] += delta[i * out + j];
    }
    if (l == 0) break;
    std::vector<double> prev(rows * in);
    kernels::gemm_nn(delta, std::span<const double>(params_).subspan(weight_offset(l), out * in), prev, rows, out, in);
    const auto& a = acts[l];
    for (std::size_t i = 0; i < prev.size(); ++i) {
      if (a[i] <= 0.0) prev[i] = 0.0;
    }
    delta.swap(prev);
  }
  return total;
}

nlohmann::json Mlp::to_json() const { return nlohmann::json{{"layer_sizes", sizes_}, {"parameters", params_}}; }

Mlp Mlp::from_json(const nlohmann::json& j) {
  Mlp net;
  net.sizes_ = j.at("layer_sizes").get<std::vector<std::size_t>>();
  if (net.sizes_.size() < 2) throw Error(ErrorKind::kSchema, "mlp: need at least input and output layers");
  net.build_offsets();
  auto params = j.at("parameters").get<std::vector<double>>();
  if (params.size() != net.params_.size()) throw Error(ErrorKind::kSchema, "mlp: parameter count mismatch");
  net.params_ = std::move(params);
  return net;
}

std::vector<double> train_mlp(Mlp& net, std::span<const double> x, std::size_t rows, std::span<const double> targets,
                              MlpLoss kind, const MlpTrainConfig& config) {
  config.validate();
  if (rows == 0) throw Error(ErrorKind::kDegenerateInput, "train_mlp: no training rows");
  Adam adam(net.parameters().size(), AdamConfig{config.lr, 0.9, 0.999, 1e-8, config.weight_decay});
  std::vector<double> grad;
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(config.epochs));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double value = net.loss(x, rows, targets, kind, &grad);
    if (!std::isfinite(value)) {
      throw Error(ErrorKind::kDivergence,
                  "selector training: non-finite loss at epoch " + std::to_string(epoch) + "; try a lower learning rate");
    }
    trace.push_back(value);
    adam.step(net.parameters(), grad);
  }
  return trace;
}

}  // namespace shiftsel
