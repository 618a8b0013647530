#pragma once

#include "zsnlu/graph.hpp"

namespace zsnlu {

// One LSTM direction. Gate blocks are laid out [input | forget | cell | output]
// along the 4h columns.
struct LstmWeights {
  Var input;      // d_in x 4h
  Var recurrent;  // h x 4h
  Var bias;       // 1 x 4h
};

// Runs one direction over the rows of `seq` (T x d_in) and returns T x h
// hidden states aligned with the input positions. With `reverse`, position i
// summarises tokens i..T-1.
Var lstm_forward(Graph& g, Var seq, const LstmWeights& w, bool reverse);

// T x 2h: forward state then backward state per position. Throws on T = 0.
Var bilstm_forward(Graph& g, Var seq, const LstmWeights& fwd, const LstmWeights& bwd);

// x W + b with a row-broadcast bias.
inline Var affine(Graph& g, Var x, Var w, Var b) { return g.add(g.matmul(x, w), b); }

}  // namespace zsnlu
