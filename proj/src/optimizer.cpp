#include "zsnlu/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace zsnlu {

double warmup_learning_rate(const AdamConfig& config, std::size_t step) {
  const double warmup = config.warmup_ratio * static_cast<double>(config.total_steps);
  if (warmup <= 0.0) return config.learning_rate;
  return config.learning_rate * std::min(1.0, static_cast<double>(step) / warmup);
}

AdamOptimizer::AdamOptimizer(AdamConfig config, const ParamStore& params) : config_(config) {
  if (config_.learning_rate <= 0.0) throw std::invalid_argument("learning rate must be positive");
  if (config_.total_steps == 0) throw std::invalid_argument("total_steps must be positive");
  for (const auto& p : params.all()) {
    m_.emplace_back(p.value.rows(), p.value.cols());
    v_.emplace_back(p.value.rows(), p.value.cols());
  }
}

void AdamOptimizer::restore(std::size_t step, std::vector<Tensor> m, std::vector<Tensor> v) {
  if (m.size() != m_.size() || v.size() != v_.size()) {
    throw ShapeError("optimizer state has the wrong number of moments");
  }
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i].same_shape(m_[i]) || !v[i].same_shape(v_[i])) {
      throw ShapeError("optimizer moment shape mismatch at index " + std::to_string(i));
    }
  }
  step_ = step;
  m_ = std::move(m);
  v_ = std::move(v);
}

void AdamOptimizer::step(ParamStore& params) {
  if (step_ >= config_.total_steps) {
    throw std::logic_error("optimizer stepped past total_steps");
  }
  if (params.size() != m_.size()) throw ShapeError("parameter count changed under the optimizer");

  const double lr = warmup_learning_rate(config_, step_);
  const double t = static_cast<double>(step_ + 1);
  const double correction1 = 1.0 - std::pow(config_.beta1, t);
  const double correction2 = 1.0 - std::pow(config_.beta2, t);

  std::size_t index = 0;
  for (auto& p : params.all()) {
    Tensor& m = m_[index];
    Tensor& v = v_[index];
    ++index;
    if (!p.grad.same_shape(p.value) || !m.same_shape(p.value)) {
      throw ShapeError("gradient shape mismatch for " + p.name);
    }
    if (!params.trainable(p)) continue;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double grad = p.grad[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * grad;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * grad * grad;
      const double update = (m[i] / correction1) / (std::sqrt(v[i] / correction2) + config_.epsilon);
      p.value[i] -= lr * (update + config_.weight_decay * p.value[i]);
    }
  }
  ++step_;
}

}  // namespace zsnlu
