#pragma once

#include <cstddef>
#include <string>

#include "mrfl/random.hpp"
#include "mrfl/tape.hpp"
#include "mrfl/tensor.hpp"

namespace mrfl {

// Uniform Glorot initialisation for a [rows x cols] matrix.
Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);
Tensor uniform_tensor(Shape shape, double bound, Rng& rng);

// Single-layer LSTM cell. Gate rows are stacked [input, forget, candidate,
// output]; the weight matrix acts on [x ; h_prev].
struct LstmWeights {
  LstmWeights() = default;
  LstmWeights(const std::string& name, std::size_t input_dim, std::size_t hidden_dim, Rng& rng);

  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  Parameter weight;  // [4H x (input_dim + H)]
  Parameter bias;    // [4H]
};

struct LstmState {
  Var h;
  Var c;
};

// i, f, o = sigmoid(.), g = tanh(.), c = f*c_prev + i*g, h = o*tanh(c).
LstmState lstm_step(Tape& tape, const LstmWeights& lstm, Var x, Var h_prev, Var c_prev);

LstmState lstm_zero_state(Tape& tape, const LstmWeights& lstm);

// Inverted dropout mask: 0 with probability `rate`, else 1/(1-rate).
Tensor dropout_mask(const Shape& shape, double rate, Rng& rng);

// x * mask when training (rng != nullptr and rate > 0), otherwise x itself.
Var apply_dropout(Tape& tape, Var x, double rate, Rng* rng);

}  // namespace mrfl
