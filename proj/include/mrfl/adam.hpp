#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mrfl/tensor.hpp"

namespace mrfl {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

// One bias-corrected Adam update from each parameter's accumulated grad.
// Moments are created on first use. Throws std::domain_error naming the
// parameter if any gradient entry is not finite; nothing is updated then.
void adam_step(std::span<Parameter* const> params, AdamState& state, double lr);

// Scales all gradients so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_gradients(std::span<Parameter* const> params, double max_norm);

}  // namespace mrfl
