#include "mrfl/layers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mrfl/errors.hpp"

namespace mrfl {

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  return uniform_tensor({rows, cols}, std::sqrt(6.0 / static_cast<double>(rows + cols)), rng);
}

LstmWeights::LstmWeights(const std::string& name, std::size_t in, std::size_t hidden, Rng& rng)
    : input_dim(in),
      hidden_dim(hidden),
      weight(name + ".weight", glorot_uniform(4 * hidden, in + hidden, rng)),
      bias(name + ".bias", Tensor({4 * hidden})) {
  // Forget-gate bias starts at 1.
  for (std::size_t i = hidden; i < 2 * hidden; ++i) bias.value[i] = 1.0;
}

LstmState lstm_step(Tape& tape, const LstmWeights& lstm, Var x, Var h_prev, Var c_prev) {
  const std::size_t H = lstm.hidden_dim;
  if (tape.shape(x) != Shape{lstm.input_dim} || tape.shape(h_prev) != Shape{H} ||
      tape.shape(c_prev) != Shape{H}) {
    throw DimensionError("lstm_step: expected x " + shape_string({lstm.input_dim}) + ", state " +
                         shape_string({H}) + "; got x " + shape_string(tape.shape(x)) + ", h " +
                         shape_string(tape.shape(h_prev)) + ", c " + shape_string(tape.shape(c_prev)));
  }
  const Var inputs[] = {x, h_prev};
  Var z = tape.add(tape.matmul(tape.parameter(lstm.weight), tape.concat(inputs)),
                   tape.parameter(lstm.bias));
  Var i = tape.sigmoid(tape.slice(z, 0, H));
  Var f = tape.sigmoid(tape.slice(z, H, H));
  Var g = tape.tanh(tape.slice(z, 2 * H, H));
  Var o = tape.sigmoid(tape.slice(z, 3 * H, H));
  Var c = tape.add(tape.mul(f, c_prev), tape.mul(i, g));
  Var h = tape.mul(o, tape.tanh(c));
  return {h, c};
}

LstmState lstm_zero_state(Tape& tape, const LstmWeights& lstm) {
  return {tape.constant(Tensor({lstm.hidden_dim})), tape.constant(Tensor({lstm.hidden_dim}))};
}

Tensor dropout_mask(const Shape& shape, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
  Tensor mask(shape);
  const double keep = 1.0 / (1.0 - rate);
  for (double& v : mask.data()) v = rng.bernoulli(rate) ? 0.0 : keep;
  return mask;
}

Var apply_dropout(Tape& tape, Var x, double rate, Rng* rng) {
  if (rng == nullptr || rate <= 0.0) return x;
  return tape.mul(x, tape.constant(dropout_mask(tape.shape(x), rate, *rng)));
}

}  // namespace mrfl
