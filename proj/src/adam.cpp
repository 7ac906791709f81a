#include "mrfl/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "mrfl/errors.hpp"

namespace mrfl {

void adam_step(std::span<Parameter* const> params, AdamState& state, double lr) {
  for (const Parameter* p : params) {
    for (double g : p->grad.data()) {
      if (!std::isfinite(g)) throw std::domain_error("non-finite gradient in parameter " + p->name);
    }
  }
  if (state.first_moment.empty()) {
    for (const Parameter* p : params) {
      state.first_moment.emplace_back(p->value.shape());
      state.second_moment.emplace_back(p->value.shape());
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw DimensionError("adam_step: state tracks " + std::to_string(state.first_moment.size()) +
                         " parameters, got " + std::to_string(params.size()));
  }
  ++state.step;
  const double b1 = state.beta1, b2 = state.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    auto m = state.first_moment[k].data();
    auto v = state.second_moment[k].data();
    if (m.size() != p.value.size()) {
      throw DimensionError("adam_step: moment shape mismatch for " + p.name);
    }
    auto theta = p.value.data();
    auto g = p.grad.data();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      theta[i] -= lr * (m[i] / correction1) / (std::sqrt(v[i] / correction2) + state.epsilon);
    }
  }
}

double clip_gradients(std::span<Parameter* const> params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params) {
    for (double g : p->grad.data()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (const Parameter* p : params) {
      for (double& g : p->grad.data()) g *= factor;
    }
  }
  return norm;
}

}  // namespace mrfl
