#pragma once

#include <cstddef>
#include <vector>

#include "zsnlu/graph.hpp"

namespace zsnlu {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double warmup_ratio = 0.1;
  double weight_decay = 0.0;
  std::size_t total_steps = 1;
};

// Learning rate for update number `step` (0-based): linear ramp from 0 to the
// base rate over the first warmup_ratio * total_steps updates, flat after.
double warmup_learning_rate(const AdamConfig& config, std::size_t step);

// Adam with bias correction and linear warmup. Moments are kept per parameter
// in ParamStore order; frozen groups are skipped entirely.
class AdamOptimizer {
 public:
  AdamOptimizer(AdamConfig config, const ParamStore& params);

  // Applies one update from the gradients accumulated in `params`.
  void step(ParamStore& params);

  std::size_t steps_taken() const { return step_; }
  double current_learning_rate() const { return warmup_learning_rate(config_, step_); }
  const AdamConfig& config() const { return config_; }

  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }
  void restore(std::size_t step, std::vector<Tensor> m, std::vector<Tensor> v);

 private:
  AdamConfig config_;
  std::size_t step_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace zsnlu
