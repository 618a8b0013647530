#include "zsnlu/layers.hpp"

#include <vector>

namespace zsnlu {

Var lstm_forward(Graph& g, Var seq, const LstmWeights& w, bool reverse) {
  const std::size_t steps = g.value(seq).rows();
  if (steps == 0) throw ShapeError("lstm over an empty sequence");
  const std::size_t hidden = g.value(w.recurrent).rows();
  if (g.value(w.input).cols() != 4 * hidden || g.value(w.recurrent).cols() != 4 * hidden) {
    throw ShapeError("lstm gate width must be 4 x hidden");
  }

  const Var projected = affine(g, seq, w.input, w.bias);
  Var h = g.constant(Tensor(1, hidden));
  Var c = g.constant(Tensor(1, hidden));
  std::vector<Var> states(steps);
  for (std::size_t n = 0; n < steps; ++n) {
    const std::size_t t = reverse ? steps - 1 - n : n;
    const Var gates = g.add(g.slice_rows(projected, t, 1), g.matmul(h, w.recurrent));
    const Var in = g.sigmoid(g.slice_cols(gates, 0, hidden));
    const Var forget = g.sigmoid(g.slice_cols(gates, hidden, hidden));
    const Var cell = g.tanh(g.slice_cols(gates, 2 * hidden, hidden));
    const Var out = g.sigmoid(g.slice_cols(gates, 3 * hidden, hidden));
    c = g.add(g.mul(forget, c), g.mul(in, cell));
    h = g.mul(out, g.tanh(c));
    states[t] = h;
  }
  return g.concat_rows(states);
}

Var bilstm_forward(Graph& g, Var seq, const LstmWeights& fwd, const LstmWeights& bwd) {
  const Var forward = lstm_forward(g, seq, fwd, false);
  const Var backward = lstm_forward(g, seq, bwd, true);
  const Var halves[] = {forward, backward};
  return g.concat_cols(halves);
}

}  // namespace zsnlu
