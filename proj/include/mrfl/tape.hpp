#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mrfl/tensor.hpp"

namespace mrfl {

// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
  bool valid() const noexcept { return id >= 0; }
};

// Records operations in execution order so that backward() can walk them in
// reverse, which visits every node after all of its consumers.
//
// Only vectors and matrices are needed by the model. Shape rules are strict:
// binary elementwise ops need equal shapes, with the single exception of
// add(matrix[m x n], vector[n]) which adds the vector to every row.
class Tape {
 public:
  Tape() = default;

  Var constant(Tensor value);
  // Leaf bound to a parameter; backward() accumulates into param.grad.
  Var parameter(const Parameter& param);
  // Row `index` of a [V x d] table; backward() accumulates into that row only.
  Var embedding(const Parameter& table, std::size_t index);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var scale(Var a, double factor);
  Var concat(std::span<const Var> parts);
  Var slice(Var a, std::size_t offset, std::size_t length);
  Var sum(Var a);
  Var dot(Var a, Var b);
  Var softmax(Var a);
  // -log softmax(logits)[target], shape {1}.
  Var cross_entropy(Var logits, std::size_t target);
  // sum_i weights[i] * vectors[i]
  Var weighted_sum(Var weights, std::span<const Var> vectors);

  // Reverse-mode sweep from a scalar. Parameter gradients accumulate across
  // calls; intermediate gradients are recomputed each time.
  void backward(Var loss);

  const Tensor& value(Var v) const;
  const Shape& shape(Var v) const { return value(v).shape(); }
  double scalar(Var v) const;
  // Gradient of the last backward() w.r.t. v; empty if v was unreachable.
  std::span<const double> gradient(Var v) const;

  std::size_t size() const noexcept { return nodes_.size(); }
  void clear();

 private:
  enum class Op : std::uint8_t {
    kConstant,
    kParameter,
    kEmbedding,
    kMatMul,
    kAdd,
    kMul,
    kTanh,
    kSigmoid,
    kScale,
    kConcat,
    kSlice,
    kSum,
    kDot,
    kSoftmax,
    kCrossEntropy,
    kWeightedSum,
  };

  struct Node {
    Op op = Op::kConstant;
    std::array<int, 2> in{-1, -1};
    std::vector<int> extra;
    Tensor value;
    const Parameter* param = nullptr;
    std::size_t index = 0;
    double factor = 0.0;
    std::vector<double> aux;
    bool needs_grad = false;
  };

  Var push(Node node);
  const Node& node(Var v) const;
  std::span<double> grad_buffer(int id);

  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
};

}  // namespace mrfl
