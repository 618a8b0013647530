#include "zsnlu/graph.hpp"

#include <algorithm>
#include <cmath>

namespace zsnlu {

std::string_view group_name(ParamGroup g) {
  switch (g) {
    case ParamGroup::kTranslation: return "translation";
    case ParamGroup::kAdapter: return "adapter";
    case ParamGroup::kRest: return "rest";
  }
  return "rest";
}

ParamGroup parse_group(std::string_view name) {
  for (ParamGroup g : kAllGroups) {
    if (group_name(g) == name) return g;
  }
  throw std::invalid_argument("unknown parameter group '" + std::string(name) + "'");
}

Parameter& ParamStore::add(std::string name, ParamGroup group, Tensor init) {
  if (index_.contains(name)) throw std::invalid_argument("duplicate parameter " + name);
  index_.emplace(name, params_.size());
  Tensor grad(init.rows(), init.cols());
  params_.push_back(Parameter{std::move(name), group, std::move(init), std::move(grad)});
  return params_.back();
}

Parameter& ParamStore::at(std::string_view name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named " + std::string(name));
  return params_[it->second];
}

const Parameter& ParamStore::at(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named " + std::string(name));
  return params_[it->second];
}

bool ParamStore::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

// ---------------------------------------------------------------------------

Var Graph::push(Tensor value, std::vector<Var> inputs, Backprop backprop) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = std::any_of(inputs.begin(), inputs.end(), [&](Var v) { return needs(v); });
  node.inputs = std::move(inputs);
  if (node.needs_grad) node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tensor& Graph::grad_buffer(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.size() != n.value.size()) n.grad = Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Graph::constant(Tensor value) { return push(std::move(value), {}, nullptr); }

Var Graph::parameter(const ParamStore& store, Parameter& p) {
  Node node;
  node.value = p.value;
  node.param = &p;
  node.needs_grad = store.trainable(p);
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::matmul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.cols() != B.rows()) {
    throw ShapeError("matmul " + A.shape_string() + " x " + B.shape_string());
  }
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  Tensor out(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A(i, p);
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out(i, j) += aip * B(p, j);
    }
  }
  return push(std::move(out), {a, b}, [](Graph& g, std::uint32_t self) {
    const Node& node = g.nodes_[self];
    const Var a = node.inputs[0], b = node.inputs[1];
    const Tensor& G = node.grad;
    const std::size_t m = g.value(a).rows(), k = g.value(a).cols(), n = g.value(b).cols();
    if (g.needs(a)) {
      const Tensor& B = g.value(b);
      Tensor& dA = g.grad_buffer(a);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += G(i, j) * B(p, j);
          dA(i, p) += acc;
        }
    }
    if (g.needs(b)) {
      const Tensor& A = g.value(a);
      Tensor& dB = g.grad_buffer(b);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A(i, p);
          if (aip == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) dB(p, j) += aip * G(i, j);
        }
    }
  });
}

namespace {

bool broadcastable_row(const Tensor& a, const Tensor& b) {
  return b.rows() == 1 && b.cols() == a.cols();
}

}  // namespace

Var Graph::add(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (!A.same_shape(B) && !broadcastable_row(A, B)) {
    throw ShapeError("add " + A.shape_string() + " + " + B.shape_string());
  }
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i % B.size()];
  return push(std::move(out), {a, b}, [](Graph& g, std::uint32_t self) {
    const Node& node = g.nodes_[self];
    const Tensor& G = node.grad;
    const Var a = node.inputs[0], b = node.inputs[1];
    if (g.needs(a)) {
      Tensor& dA = g.grad_buffer(a);
      for (std::size_t i = 0; i < G.size(); ++i) dA[i] += G[i];
    }
    if (g.needs(b)) {
      Tensor& dB = g.grad_buffer(b);
      for (std::size_t i = 0; i < G.size(); ++i) dB[i % dB.size()] += G[i];
    }
  });
}

Var Graph::sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var Graph::mul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (!A.same_shape(B)) throw ShapeError("mul " + A.shape_string() + " * " + B.shape_string());
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
  return push(std::move(out), {a, b}, [](Graph& g, std::uint32_t self) {
    const Node& node = g.nodes_[self];
    const Tensor& G = node.grad;
    const Var a = node.inputs[0], b = node.inputs[1];
    if (g.needs(a)) {
      Tensor& dA = g.grad_buffer(a);
      const Tensor& B = g.value(b);
      for (std::size_t i = 0; i < G.size(); ++i) dA[i] += G[i] * B[i];
    }
    if (g.needs(b)) {
      Tensor& dB = g.grad_buffer(b);
      const Tensor& A = g.value(a);
      for (std::size_t i = 0; i < G.size(); ++i) dB[i] += G[i] * A[i];
    }
  });
}

Var Graph::scale(Var a, double c) {
  Tensor out = value(a);
  for (double& v : out.values()) v *= c;
  return push(std::move(out), {a}, [c](Graph& g, std::uint32_t self) {
    const Node& node = g.nodes_[self];
    Tensor& dA = g.grad_buffer(node.inputs[0]);
    for (std::size_t i = 0; i < node.grad.size(); ++i) dA[i] += c * node.grad[i];
  });
}

namespace {

// Elementwise op whose derivative is expressible from its output value.
template <typename Fwd>
Tensor map_values(const Tensor& in, Fwd f) {
  Tensor out = in;
  for (double& v : out.values()) v = f(v);
  return out;
}

}  // namespace

Var Graph::relu(Var a) {
  return push(map_values(value(a), [](double v) { return v > 0.0 ? v : 0.0; }), {a},
              [](Graph& g, std::uint32_t self) {
                const Node& node = g.nodes_[self];
                Tensor& dA = g.grad_buffer(node.inputs[0]);
                for (std::size_t i = 0; i < node.grad.size(); ++i)
                  if (node.value[i] > 0.0) dA[i] += node.grad[i];
              });
}

Var Graph::tanh(Var a) {
  return push(map_values(value(a), [](double v) { return std::tanh(v); }), {a},
              [](Graph& g, std::uint32_t self) {
                const Node& node = g.nodes_[self];
                Tensor& dA = g.grad_buffer(node.inputs[0]);
                for (std::size_t i = 0; i < node.grad.size(); ++i) {
                  const double y = node.value[i];
                  dA[i] += node.grad[i] * (1.0 - y * y);
                }
              });
}

Var Graph::sigmoid(Var a) {
  auto sig = [](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  };
  return push(map_values(value(a), sig), {a}, [](Graph& g, std::uint32_t self) {
    const Node& node = g.nodes_[self];
    Tensor& dA = g.grad_buffer(node.inputs[0]);
    for (std::size_t i = 0; i < node.grad.size(); ++i) {
      const double y = node.value[i];
      dA[i] += node.grad[i] * y * (1.0 - y);
    }
  });
}

Var Graph::exp(Var a) {
  return push(map_values(value(a), [](double v) { return std::exp(v); }), {a},
              [](Graph& g, std::uint32_t self) {
                const Node& node = g.nodes_[self];
                Tensor& dA = g.grad_buffer(node.inputs[0]);
                for (std::size_t i = 0; i < node.grad.size(); ++i)
                  dA[i] += node.grad[i] * node.value[i];
              });
}

Var Graph::softmax_rows(Var a) {
  const Tensor& A = value(a);
  if (A.cols() == 0) throw ShapeError("softmax over zero columns");
  Tensor out(A.rows(), A.cols());
  for (std::size_t r = 0; r < A.rows(); ++r) {
    const auto row = softmax(A.row_view(r));
    std::copy(row.begin(), row.end(), out.values().begin() + static_cast<long>(r * A.cols()));
  }
  return push(std::move(out), {a}, [](Graph& g, std::uint32_t self) {
    const Node& node = g.nodes_[self];
    const Tensor& Y = node.value;
    const Tensor& G = node.grad;
    Tensor& dA = g.grad_buffer(node.inputs[0]);
    for (std::size_t r = 0; r < Y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < Y.cols(); ++c) dot += G(r, c) * Y(r, c);
      for (std::size_t c = 0; c < Y.cols(); ++c) dA(r, c) += Y(r, c) * (G(r, c) - dot);
    }
  });
}

Var Graph::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols of nothing");
  const std::size_t rows = value(parts[0]).rows();
  std::size_t cols = 0;
  for (Var p : parts) {
    if (value(p).rows() != rows) throw ShapeError("concat_cols row mismatch");
    cols += value(p).cols();
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& P = value(p);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < P.cols(); ++c) out(r, offset + c) = P(r, c);
    offset += P.cols();
  }
  return push(std::move(out), std::vector<Var>(parts.begin(), parts.end()),
              [](Graph& g, std::uint32_t self) {
                const Node& node = g.nodes_[self];
                std::size_t offset = 0;
                for (Var p : node.inputs) {
                  const std::size_t pc = g.value(p).cols();
                  if (g.needs(p)) {
                    Tensor& dP = g.grad_buffer(p);
                    for (std::size_t r = 0; r < node.grad.rows(); ++r)
                      for (std::size_t c = 0; c < pc; ++c) dP(r, c) += node.grad(r, offset + c);
                  }
                  offset += pc;
                }
              });
}

Var Graph::concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows of nothing");
  const std::size_t cols = value(parts[0]).cols();
  std::vector<double> data;
  std::size_t rows = 0;
  for (Var p : parts) {
    const Tensor& P = value(p);
    if (P.cols() != cols) throw ShapeError("concat_rows column mismatch");
    data.insert(data.end(), P.values().begin(), P.values().end());
    rows += P.rows();
  }
  return push(Tensor(rows, cols, std::move(data)), std::vector<Var>(parts.begin(), parts.end()),
              [](Graph& g, std::uint32_t self) {
                const Node& node = g.nodes_[self];
                std::size_t offset = 0;
                for (Var p : node.inputs) {
                  const std::size_t n = g.value(p).size();
                  if (g.needs(p)) {
                    Tensor& dP = g.grad_buffer(p);
                    for (std::size_t i = 0; i < n; ++i) dP[i] += node.grad[offset + i];
                  }
                  offset += n;
                }
              });
}

Var Graph::slice_cols(Var a, std::size_t start, std::size_t count) {
  const Tensor& A = value(a);
  if (start + count > A.cols()) throw ShapeError("slice_cols out of range on " + A.shape_string());
  Tensor out(A.rows(), count);
  for (std::size_t r = 0; r < A.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = A(r, start + c);
  return push(std::move(out), {a}, [start](Graph& g, std::uint32_t self) {
    const Node& node = g.nodes_[self];
    Tensor& dA = g.grad_buffer(node.inputs[0]);
    for (std::size_t r = 0; r < node.grad.rows(); ++r)
      for (std::size_t c = 0; c < node.grad.cols(); ++c) dA(r, start + c) += node.grad(r, c);
  });
}

Var Graph::slice_rows(Var a, std::size_t start, std::size_t count) {
  const Tensor& A = value(a);
  if (start + count > A.rows()) throw ShapeError("slice_rows out of range on " + A.shape_string());
  const auto first = A.values().begin() + static_cast<long>(start * A.cols());
  Tensor out(count, A.cols(), std::vector<double>(first, first + static_cast<long>(count * A.cols())));
  return push(std::move(out), {a}, [start](Graph& g, std::uint32_t self) {
    const Node& node = g.nodes_[self];
    Tensor& dA = g.grad_buffer(node.inputs[0]);
    const std::size_t base = start * dA.cols();
    for (std::size_t i = 0; i < node.grad.size(); ++i) dA[base + i] += node.grad[i];
  });
}

Var Graph::repeat_rows(Var row, std::size_t times) {
  const Tensor& R = value(row);
  if (R.rows() != 1) throw ShapeError("repeat_rows expects a single row, got " + R.shape_string());
  Tensor out(times, R.cols());
  for (std::size_t r = 0; r < times; ++r)
    for (std::size_t c = 0; c < R.cols(); ++c) out(r, c) = R[c];
  return push(std::move(out), {row}, [](Graph& g, std::uint32_t self) {
    const Node& node = g.nodes_[self];
    Tensor& dR = g.grad_buffer(node.inputs[0]);
    for (std::size_t i = 0; i < node.grad.size(); ++i) dR[i % dR.size()] += node.grad[i];
  });
}

Var Graph::max_rows(Var a) {
  const Tensor& A = value(a);
  if (A.rows() == 0) throw ShapeError("max_rows over zero rows");
  Tensor out(1, A.cols());
  std::vector<std::size_t> argmax(A.cols(), 0);
  for (std::size_t c = 0; c < A.cols(); ++c) {
    out[c] = A(0, c);
    for (std::size_t r = 1; r < A.rows(); ++r)
      if (A(r, c) > out[c]) {
        out[c] = A(r, c);
        argmax[c] = r;
      }
  }
  return push(std::move(out), {a}, [argmax = std::move(argmax)](Graph& g, std::uint32_t self) {
    const Node& node = g.nodes_[self];
    Tensor& dA = g.grad_buffer(node.inputs[0]);
    for (std::size_t c = 0; c < argmax.size(); ++c) dA(argmax[c], c) += node.grad[c];
  });
}

Var Graph::mean_rows(Var a) {
  const Tensor& A = value(a);
  if (A.rows() == 0) throw ShapeError("mean_rows over zero rows");
  Tensor out(1, A.cols());
  for (std::size_t r = 0; r < A.rows(); ++r)
    for (std::size_t c = 0; c < A.cols(); ++c) out[c] += A(r, c);
  const double inv = 1.0 / static_cast<double>(A.rows());
  for (double& v : out.values()) v *= inv;
  return push(std::move(out), {a}, [inv](Graph& g, std::uint32_t self) {
    const Node& node = g.nodes_[self];
    Tensor& dA = g.grad_buffer(node.inputs[0]);
    for (std::size_t i = 0; i < dA.size(); ++i) dA[i] += inv * node.grad[i % node.grad.size()];
  });
}

Var Graph::transpose(Var a) {
  const Tensor& A = value(a);
  Tensor out(A.cols(), A.rows());
  for (std::size_t r = 0; r < A.rows(); ++r)
    for (std::size_t c = 0; c < A.cols(); ++c) out(c, r) = A(r, c);
  return push(std::move(out), {a}, [](Graph& g, std::uint32_t self) {
    const Node& node = g.nodes_[self];
    Tensor& dA = g.grad_buffer(node.inputs[0]);
    for (std::size_t r = 0; r < dA.rows(); ++r)
      for (std::size_t c = 0; c < dA.cols(); ++c) dA(r, c) += node.grad(c, r);
  });
}

Var Graph::sum(Var a) {
  double total = 0.0;
  for (double v : value(a).values()) total += v;
  return push(Tensor::scalar(total), {a}, [](Graph& g, std::uint32_t self) {
    const double G = g.nodes_[self].grad[0];
    Tensor& dA = g.grad_buffer(g.nodes_[self].inputs[0]);
    for (double& v : dA.values()) v += G;
  });
}

Var Graph::cross_entropy_rows(Var probs, std::span<const int> targets, double clamp) {
  const Tensor& P = value(probs);
  if (targets.size() != P.rows()) throw ShapeError("cross_entropy target count mismatch");
  std::vector<int> t(targets.begin(), targets.end());
  double total = 0.0;
  for (std::size_t r = 0; r < P.rows(); ++r) {
    if (t[r] < 0 || static_cast<std::size_t>(t[r]) >= P.cols()) {
      throw ShapeError("cross_entropy target out of range");
    }
    const double p = std::clamp(P(r, static_cast<std::size_t>(t[r])), clamp, 1.0 - clamp);
    total -= std::log(p);
  }
  const double inv = 1.0 / static_cast<double>(P.rows());
  return push(Tensor::scalar(total * inv), {probs},
              [t = std::move(t), inv, clamp](Graph& g, std::uint32_t self) {
                const Node& node = g.nodes_[self];
                const Tensor& P = g.value(node.inputs[0]);
                Tensor& dP = g.grad_buffer(node.inputs[0]);
                for (std::size_t r = 0; r < P.rows(); ++r) {
                  const auto c = static_cast<std::size_t>(t[r]);
                  const double p = P(r, c);
                  if (p > clamp && p < 1.0 - clamp) dP(r, c) -= node.grad[0] * inv / p;
                }
              });
}

Var Graph::binary_cross_entropy(Var prob, double target, double clamp) {
  const Tensor& Z = value(prob);
  if (Z.size() != 1) throw ShapeError("binary_cross_entropy expects a scalar");
  const double z = std::clamp(Z[0], clamp, 1.0 - clamp);
  const double loss = -(target * std::log(z) + (1.0 - target) * std::log(1.0 - z));
  return push(Tensor::scalar(loss), {prob}, [target, clamp](Graph& g, std::uint32_t self) {
    const Node& node = g.nodes_[self];
    const double z = g.value(node.inputs[0])[0];
    if (z <= clamp || z >= 1.0 - clamp) return;
    Tensor& dZ = g.grad_buffer(node.inputs[0]);
    dZ[0] += node.grad[0] * (-(target / z) + (1.0 - target) / (1.0 - z));
  });
}

void Graph::backward(Var loss) {
  if (value(loss).size() != 1) {
    throw ShapeError("backward requires a scalar loss, got " + value(loss).shape_string());
  }
  for (Node& n : nodes_) n.grad = Tensor();
  grad_buffer(loss)[0] = 1.0;
  for (std::uint32_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.backprop) n.backprop(*this, id);
  }
  for (Node& n : nodes_) {
    if (n.param == nullptr || !n.needs_grad || n.grad.empty()) continue;
    Tensor& target = n.param->grad;
    for (std::size_t i = 0; i < target.size(); ++i) target[i] += n.grad[i];
  }
}

}  // namespace zsnlu
