#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zsnlu/tensor.hpp"

namespace zsnlu {

// Freezable parameter partitions. Stage A trains translation+rest, stage B
// trains adapter+rest.
enum class ParamGroup : std::uint8_t { kTranslation = 0, kAdapter = 1, kRest = 2 };

inline constexpr std::array<ParamGroup, 3> kAllGroups = {
    ParamGroup::kTranslation, ParamGroup::kAdapter, ParamGroup::kRest};

std::string_view group_name(ParamGroup g);
ParamGroup parse_group(std::string_view name);

struct Parameter {
  std::string name;
  ParamGroup group = ParamGroup::kRest;
  Tensor value;
  Tensor grad;
};

// Named trainable tensors in insertion order. Element addresses are stable,
// so graphs may hold raw pointers for their lifetime.
class ParamStore {
 public:
  Parameter& add(std::string name, ParamGroup group, Tensor init);
  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::deque<Parameter>& all() { return params_; }
  const std::deque<Parameter>& all() const { return params_; }
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();
  void set_frozen(ParamGroup group, bool frozen) {
    frozen_[static_cast<std::size_t>(group)] = frozen;
  }
  bool frozen(ParamGroup group) const { return frozen_[static_cast<std::size_t>(group)]; }
  bool trainable(const Parameter& p) const { return !frozen(p.group); }

 private:
  std::deque<Parameter> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::array<bool, 3> frozen_{};
};

struct Var {
  std::uint32_t id = 0;
};

// Reverse-mode tape. Nodes are appended in evaluation order, which is a
// topological order, so backward() is a single reverse sweep.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  // Leaf bound to a parameter. Gradients reach p.grad only when its group is
  // trainable in `store`.
  Var parameter(const ParamStore& store, Parameter& p);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  // Gradient of the last backward() w.r.t. v (empty if v was unreachable).
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
  std::size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b);
  // Elementwise sum; `b` may also be a 1 x n row broadcast over a's rows.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var relu(Var a);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var exp(Var a);
  Var softmax_rows(Var a);
  Var concat_cols(std::span<const Var> parts);
  Var concat_rows(std::span<const Var> parts);
  Var slice_cols(Var a, std::size_t start, std::size_t count);
  Var slice_rows(Var a, std::size_t start, std::size_t count);
  Var repeat_rows(Var row, std::size_t times);
  // Column-wise max over rows; the first maximal row receives the gradient.
  Var max_rows(Var a);
  Var mean_rows(Var a);
  Var transpose(Var a);
  Var sum(Var a);
  // Mean over rows of -log(clamp(p[r, target[r]])).
  Var cross_entropy_rows(Var probs, std::span<const int> targets, double clamp = 1e-12);
  // -[t log z + (1-t) log(1-z)] for a 1x1 probability.
  Var binary_cross_entropy(Var prob, double target, double clamp = 1e-12);

  // Populates gradients of a 1x1 loss and accumulates them into trainable
  // parameters.
  void backward(Var loss);

 private:
  using Backprop = std::function<void(Graph&, std::uint32_t)>;

  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<Var> inputs;
    Backprop backprop;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };

  Var push(Tensor value, std::vector<Var> inputs, Backprop backprop);
  Tensor& grad_buffer(Var v);
  bool needs(Var v) const { return nodes_[v.id].needs_grad; }

  std::vector<Node> nodes_;
};

}  // namespace zsnlu
