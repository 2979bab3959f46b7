#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace shiftsel {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // coupled L2: grad += weight_decay * param
};

/// Full-batch adaptive-moment descent over a flat parameter vector.
class Adam {
 public:
  Adam(std::size_t size, AdamConfig config);

  /// One update; `grad` must not already include weight decay.
  void step(std::span<double> params, std::span<const double> grad);

  long steps() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return config_; }

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
};

}  // namespace shiftsel
