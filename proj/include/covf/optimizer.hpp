#pragma once

#include <cstdint>
#include <vector>

#include "covf/network.hpp"

namespace covf {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

// Adam with bias correction. Moment accumulators mirror the parameter blocks.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Applies one update in place. Parameter and gradient views must be aligned
  // block for block. Throws on any non-finite gradient, naming the parameter.
  void step(std::vector<ParamView>& params, const std::vector<ParamView>& grads);

  long steps_taken() const { return step_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  long step_ = 0;
};

}  // namespace covf
