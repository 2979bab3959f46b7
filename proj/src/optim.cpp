#include "shiftsel/optim.hpp"

#include <cmath>

#include "shiftsel/error.hpp"

namespace shiftsel {

Adam::Adam(std::size_t size, AdamConfig config) : config_(config), m_(size, 0.0), v_(size, 0.0) {
  if (!(config.lr > 0.0)) throw Error(ErrorKind::kInvalidArgument, "Adam: lr must be positive");
  if (config.weight_decay < 0.0) throw Error(ErrorKind::kInvalidArgument, "Adam: weight decay must be >= 0");
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw Error(ErrorKind::kInvalidArgument, "Adam::step: size mismatch");
  }
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double step = config_.lr / bias1;
  const double wd = config_.weight_decay;
  const double sqrt_bias2 = std::sqrt(bias2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i] + wd * params[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    params[i] -= step * m_[i] / (std::sqrt(v_[i]) / sqrt_bias2 + config_.eps);
  }
}

}  // namespace shiftsel
