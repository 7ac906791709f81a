#include "mrfl/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mrfl/errors.hpp"

namespace mrfl {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

[[noreturn]] void shape_mismatch(const char* op, const Shape& a, const Shape& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " +
                       shape_string(b));
}

void require_vector(const char* op, const Shape& s) {
  if (s.size() != 1) throw DimensionError(std::string(op) + ": expected a vector, got " + shape_string(s));
}

}  // namespace

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw std::out_of_range("Var does not belong to this tape");
  }
  return nodes_[v.id];
}

const Tensor& Tape::value(Var v) const {
  const Node& n = node(v);
  return n.op == Op::kParameter ? n.param->value : n.value;
}

double Tape::scalar(Var v) const {
  const Tensor& t = value(v);
  if (t.size() != 1) throw DimensionError("scalar(): tensor has shape " + shape_string(t.shape()));
  return t[0];
}

void Tape::clear() {
  nodes_.clear();
  grads_.clear();
}

Var Tape::constant(Tensor value) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::parameter(const Parameter& param) {
  Node n;
  n.op = Op::kParameter;
  n.param = &param;
  n.needs_grad = true;
  return push(std::move(n));
}

Var Tape::embedding(const Parameter& table, std::size_t index) {
  const Shape& s = table.value.shape();
  if (s.size() != 2) throw DimensionError("embedding: table must be a matrix, got " + shape_string(s));
  if (index >= s[0]) {
    throw std::out_of_range("embedding: index " + std::to_string(index) + " outside table of " +
                            std::to_string(s[0]) + " rows (" + table.name + ")");
  }
  const std::size_t d = s[1];
  Node n;
  n.op = Op::kEmbedding;
  n.param = &table;
  n.index = index;
  n.needs_grad = true;
  auto row = table.value.data().subspan(index * d, d);
  n.value = Tensor({d}, std::vector<double>(row.begin(), row.end()));
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.rank() != 2 || B.rank() > 2 || A.shape()[1] != B.shape()[0]) {
    shape_mismatch("matmul", A.shape(), B.shape());
  }
  const std::size_t m = A.shape()[0], k = A.shape()[1];
  const std::size_t cols = B.rank() == 2 ? B.shape()[1] : 1;
  Tensor out(B.rank() == 2 ? Shape{m, cols} : Shape{m});
  const double* pa = A.data().data();
  const double* pb = B.data().data();
  double* po = out.data().data();
  if (cols == 1) {
    for (std::size_t i = 0; i < m; ++i) {
      const double* row = pa + i * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += row[p] * pb[p];
      po[i] = acc;
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        const double av = pa[i * k + p];
        const double* brow = pb + p * cols;
        double* orow = po + i * cols;
        for (std::size_t j = 0; j < cols; ++j) orow[j] += av * brow[j];
      }
    }
  }
  Node n;
  n.op = Op::kMatMul;
  n.in = {a.id, b.id};
  n.value = std::move(out);
  n.needs_grad = node(a).needs_grad || node(b).needs_grad;
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  const bool same = A.shape() == B.shape();
  const bool row_bias = A.rank() == 2 && B.rank() == 1 && A.shape()[1] == B.shape()[0];
  if (!same && !row_bias) shape_mismatch("add", A.shape(), B.shape());
  Tensor out(A.shape());
  const std::size_t nb = B.size();
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] + B[i % nb];
  Node n;
  n.op = Op::kAdd;
  n.in = {a.id, b.id};
  n.value = std::move(out);
  n.needs_grad = node(a).needs_grad || node(b).needs_grad;
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.shape() != B.shape()) shape_mismatch("mul", A.shape(), B.shape());
  Tensor out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] * B[i];
  Node n;
  n.op = Op::kMul;
  n.in = {a.id, b.id};
  n.value = std::move(out);
  n.needs_grad = node(a).needs_grad || node(b).needs_grad;
  return push(std::move(n));
}

Var Tape::tanh(Var a) {
  const Tensor& A = value(a);
  Tensor out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = std::tanh(A[i]);
  Node n;
  n.op = Op::kTanh;
  n.in = {a.id, -1};
  n.value = std::move(out);
  n.needs_grad = node(a).needs_grad;
  return push(std::move(n));
}

Var Tape::sigmoid(Var a) {
  const Tensor& A = value(a);
  Tensor out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = stable_sigmoid(A[i]);
  Node n;
  n.op = Op::kSigmoid;
  n.in = {a.id, -1};
  n.value = std::move(out);
  n.needs_grad = node(a).needs_grad;
  return push(std::move(n));
}

Var Tape::scale(Var a, double factor) {
  const Tensor& A = value(a);
  Tensor out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] * factor;
  Node n;
  n.op = Op::kScale;
  n.in = {a.id, -1};
  n.factor = factor;
  n.value = std::move(out);
  n.needs_grad = node(a).needs_grad;
  return push(std::move(n));
}

Var Tape::concat(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat: no operands");
  std::size_t total = 0;
  bool needs = false;
  for (Var p : parts) {
    require_vector("concat", shape(p));
    total += value(p).size();
    needs = needs || node(p).needs_grad;
  }
  std::vector<double> data;
  data.reserve(total);
  Node n;
  n.op = Op::kConcat;
  for (Var p : parts) {
    auto d = value(p).data();
    data.insert(data.end(), d.begin(), d.end());
    n.extra.push_back(p.id);
  }
  n.value = Tensor({total}, std::move(data));
  n.needs_grad = needs;
  return push(std::move(n));
}

Var Tape::slice(Var a, std::size_t offset, std::size_t length) {
  const Tensor& A = value(a);
  require_vector("slice", A.shape());
  if (length == 0 || offset + length > A.size()) {
    throw DimensionError("slice: range [" + std::to_string(offset) + ", " +
                         std::to_string(offset + length) + ") outside " + shape_string(A.shape()));
  }
  auto d = A.data().subspan(offset, length);
  Node n;
  n.op = Op::kSlice;
  n.in = {a.id, -1};
  n.index = offset;
  n.value = Tensor({length}, std::vector<double>(d.begin(), d.end()));
  n.needs_grad = node(a).needs_grad;
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  const Tensor& A = value(a);
  double s = 0.0;
  for (double x : A.data()) s += x;
  Node n;
  n.op = Op::kSum;
  n.in = {a.id, -1};
  n.value = Tensor::scalar(s);
  n.needs_grad = node(a).needs_grad;
  return push(std::move(n));
}

Var Tape::dot(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.shape() != B.shape()) shape_mismatch("dot", A.shape(), B.shape());
  double s = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) s += A[i] * B[i];
  Node n;
  n.op = Op::kDot;
  n.in = {a.id, b.id};
  n.value = Tensor::scalar(s);
  n.needs_grad = node(a).needs_grad || node(b).needs_grad;
  return push(std::move(n));
}

namespace {
void softmax_into(std::span<const double> x, std::span<double> out) {
  const double mx = *std::max_element(x.begin(), x.end());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - mx);
    z += out[i];
  }
  for (double& v : out) v /= z;
}
}  // namespace

Var Tape::softmax(Var a) {
  const Tensor& A = value(a);
  require_vector("softmax", A.shape());
  Tensor out(A.shape());
  softmax_into(A.data(), out.data());
  Node n;
  n.op = Op::kSoftmax;
  n.in = {a.id, -1};
  n.value = std::move(out);
  n.needs_grad = node(a).needs_grad;
  return push(std::move(n));
}

Var Tape::cross_entropy(Var logits, std::size_t target) {
  const Tensor& L = value(logits);
  require_vector("cross_entropy", L.shape());
  if (target >= L.size()) {
    throw std::out_of_range("cross_entropy: target " + std::to_string(target) +
                            " outside " + std::to_string(L.size()) + " classes");
  }
  auto x = L.data();
  const double mx = *std::max_element(x.begin(), x.end());
  double z = 0.0;
  for (double v : x) z += std::exp(v - mx);
  const double log_z = mx + std::log(z);
  Node n;
  n.op = Op::kCrossEntropy;
  n.in = {logits.id, -1};
  n.index = target;
  n.aux.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) n.aux[i] = std::exp(x[i] - log_z);
  n.value = Tensor::scalar(log_z - x[target]);
  n.needs_grad = node(logits).needs_grad;
  return push(std::move(n));
}

Var Tape::weighted_sum(Var weights, std::span<const Var> vectors) {
  const Tensor& W = value(weights);
  require_vector("weighted_sum", W.shape());
  if (vectors.size() != W.size() || vectors.empty()) {
    throw DimensionError("weighted_sum: " + std::to_string(W.size()) + " weights for " +
                         std::to_string(vectors.size()) + " vectors");
  }
  const Shape& vs = shape(vectors[0]);
  require_vector("weighted_sum", vs);
  Tensor out(vs);
  Node n;
  n.op = Op::kWeightedSum;
  n.in = {weights.id, -1};
  bool needs = node(weights).needs_grad;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const Tensor& v = value(vectors[i]);
    if (v.shape() != vs) shape_mismatch("weighted_sum", vs, v.shape());
    for (std::size_t j = 0; j < v.size(); ++j) out[j] += W[i] * v[j];
    n.extra.push_back(vectors[i].id);
    needs = needs || node(vectors[i]).needs_grad;
  }
  n.value = std::move(out);
  n.needs_grad = needs;
  return push(std::move(n));
}

std::span<double> Tape::grad_buffer(int id) {
  // Parameter leaves accumulate straight into the parameter's gradient.
  if (nodes_[id].op == Op::kParameter) return nodes_[id].param->grad.data();
  auto& g = grads_[id];
  if (g.empty()) g.assign(value(Var{id}).size(), 0.0);
  return g;
}

std::span<const double> Tape::gradient(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= grads_.size()) return {};
  return grads_[v.id];
}

void Tape::backward(Var loss) {
  const Tensor& L = value(loss);
  if (L.size() != 1) throw DimensionError("backward: loss must be scalar, got " + shape_string(L.shape()));
  grads_.assign(nodes_.size(), {});
  if (nodes_[loss.id].op == Op::kParameter) {
    grad_buffer(loss.id)[0] += 1.0;
    return;
  }
  grad_buffer(loss.id)[0] = 1.0;

  for (int id = loss.id; id >= 0; --id) {
    const Node& n = nodes_[id];
    if (!n.needs_grad || grads_[id].empty()) continue;
    const std::vector<double>& g = grads_[id];
    auto wants = [&](int input) { return input >= 0 && nodes_[input].needs_grad; };

    switch (n.op) {
      case Op::kConstant:
        break;
      case Op::kParameter:
        break;
      case Op::kEmbedding: {
        const std::size_t d = g.size();
        auto row = n.param->grad.data().subspan(n.index * d, d);
        for (std::size_t i = 0; i < d; ++i) row[i] += g[i];
        break;
      }
      case Op::kMatMul: {
        const Tensor& A = value(Var{n.in[0]});
        const Tensor& B = value(Var{n.in[1]});
        const std::size_t m = A.shape()[0], k = A.shape()[1];
        const std::size_t cols = B.rank() == 2 ? B.shape()[1] : 1;
        const double* pa = A.data().data();
        const double* pb = B.data().data();
        if (cols == 1) {
          // Matrix-vector product, the hot path of every LSTM step.
          if (wants(n.in[0])) {
            double* da = grad_buffer(n.in[0]).data();
            for (std::size_t i = 0; i < m; ++i) {
              const double gi = g[i];
              if (gi == 0.0) continue;
              double* darow = da + i * k;
              for (std::size_t p = 0; p < k; ++p) darow[p] += gi * pb[p];
            }
          }
          if (wants(n.in[1])) {
            double* db = grad_buffer(n.in[1]).data();
            for (std::size_t i = 0; i < m; ++i) {
              const double gi = g[i];
              if (gi == 0.0) continue;
              const double* arow = pa + i * k;
              for (std::size_t p = 0; p < k; ++p) db[p] += arow[p] * gi;
            }
          }
          break;
        }
        if (wants(n.in[0])) {
          double* da = grad_buffer(n.in[0]).data();
          for (std::size_t i = 0; i < m; ++i) {
            double* darow = da + i * k;
            for (std::size_t j = 0; j < cols; ++j) {
              const double gij = g[i * cols + j];
              if (gij == 0.0) continue;
              for (std::size_t p = 0; p < k; ++p) darow[p] += gij * pb[p * cols + j];
            }
          }
        }
        if (wants(n.in[1])) {
          double* db = grad_buffer(n.in[1]).data();
          for (std::size_t i = 0; i < m; ++i) {
            const double* arow = pa + i * k;
            for (std::size_t j = 0; j < cols; ++j) {
              const double gij = g[i * cols + j];
              if (gij == 0.0) continue;
              for (std::size_t p = 0; p < k; ++p) db[p * cols + j] += arow[p] * gij;
            }
          }
        }
        break;
      }
      case Op::kAdd: {
        if (wants(n.in[0])) {
          auto da = grad_buffer(n.in[0]);
          for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
        }
        if (wants(n.in[1])) {
          auto db = grad_buffer(n.in[1]);
          const std::size_t nb = db.size();
          for (std::size_t i = 0; i < g.size(); ++i) db[i % nb] += g[i];
        }
        break;
      }
      case Op::kMul: {
        const Tensor& A = value(Var{n.in[0]});
        const Tensor& B = value(Var{n.in[1]});
        if (wants(n.in[0])) {
          auto da = grad_buffer(n.in[0]);
          for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * B[i];
        }
        if (wants(n.in[1])) {
          auto db = grad_buffer(n.in[1]);
          for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * A[i];
        }
        break;
      }
      case Op::kTanh: {
        auto da = grad_buffer(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
        break;
      }
      case Op::kSigmoid: {
        auto da = grad_buffer(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
        break;
      }
      case Op::kScale: {
        auto da = grad_buffer(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * n.factor;
        break;
      }
      case Op::kConcat: {
        std::size_t offset = 0;
        for (int part : n.extra) {
          const std::size_t len = value(Var{part}).size();
          if (wants(part)) {
            auto dp = grad_buffer(part);
            for (std::size_t i = 0; i < len; ++i) dp[i] += g[offset + i];
          }
          offset += len;
        }
        break;
      }
      case Op::kSlice: {
        auto da = grad_buffer(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) da[n.index + i] += g[i];
        break;
      }
      case Op::kSum: {
        auto da = grad_buffer(n.in[0]);
        for (double& v : da) v += g[0];
        break;
      }
      case Op::kDot: {
        const Tensor& A = value(Var{n.in[0]});
        const Tensor& B = value(Var{n.in[1]});
        if (wants(n.in[0])) {
          auto da = grad_buffer(n.in[0]);
          for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[0] * B[i];
        }
        if (wants(n.in[1])) {
          auto db = grad_buffer(n.in[1]);
          for (std::size_t i = 0; i < db.size(); ++i) db[i] += g[0] * A[i];
        }
        break;
      }
      case Op::kSoftmax: {
        double inner = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) inner += g[i] * n.value[i];
        auto da = grad_buffer(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += n.value[i] * (g[i] - inner);
        break;
      }
      case Op::kCrossEntropy: {
        auto da = grad_buffer(n.in[0]);
        for (std::size_t i = 0; i < da.size(); ++i) {
          da[i] += g[0] * (n.aux[i] - (i == n.index ? 1.0 : 0.0));
        }
        break;
      }
      case Op::kWeightedSum: {
        const Tensor& W = value(Var{n.in[0]});
        const bool want_w = wants(n.in[0]);
        std::span<double> dw = want_w ? grad_buffer(n.in[0]) : std::span<double>{};
        for (std::size_t i = 0; i < n.extra.size(); ++i) {
          const int vid = n.extra[i];
          const Tensor& v = value(Var{vid});
          if (want_w) {
            double s = 0.0;
            for (std::size_t j = 0; j < g.size(); ++j) s += g[j] * v[j];
            dw[i] += s;
          }
          if (wants(vid)) {
            auto dv = grad_buffer(vid);
            for (std::size_t j = 0; j < g.size(); ++j) dv[j] += W[i] * g[j];
          }
        }
        break;
      }
    }
  }
}

}  // namespace mrfl
