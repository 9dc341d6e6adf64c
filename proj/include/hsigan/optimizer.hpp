#pragma once

#include <vector>

#include "hsigan/param_set.hpp"
#include "hsigan/tensor.hpp"

namespace hsigan {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are allocated lazily to match
// the parameter set on the first step.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // grads[i] may be null (parameter untouched this step: treated as zero
  // gradient). A NaN/Inf gradient poisons training and raises NumericError.
  void step(ParamSet& params, const std::vector<const Tensor*>& grads);

  long step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  long t_ = 0;
};

}  // namespace hsigan
