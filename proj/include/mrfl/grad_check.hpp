#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "mrfl/tape.hpp"
#include "mrfl/tensor.hpp"

namespace mrfl {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates_checked = 0;
};

// Builds a scalar loss on the given tape from the current parameter values.
// Must be deterministic (dropout disabled).
using LossBuilder = std::function<Var(Tape&)>;

// Relative error |a - n| / max(|a|, |n|, floor). The floor keeps coordinates
// whose true gradient is ~0 from reporting finite-difference round-off as a
// large relative error.
inline constexpr double kGradCheckFloor = 1e-4;

double relative_error(double analytic, double numeric, double floor = kGradCheckFloor);

enum class Stencil {
  kThreePoint,  // (f(x+e) - f(x-e)) / 2e, error O(e^2)
  kFivePoint,   // (8(f(x+e) - f(x-e)) - (f(x+2e) - f(x-2e))) / 12e, error O(e^4)
};

// Compares backward() against central differences for every coordinate of
// every parameter. Parameter values are restored and gradients are left
// zeroed.
//
// Round-off in the three-point rule is about 1e-16 * |loss| / eps, which for
// a whole-model loss near 30 is ~1e-8 at eps = 1e-6: too coarse to resolve
// 1e-5 relative error on gradients near the floor. Use kFivePoint with
// eps ~1e-4 there.
GradCheckResult grad_check(const LossBuilder& loss, const std::vector<Parameter*>& params,
                           double eps = 1e-6, Stencil stencil = Stencil::kThreePoint);

}  // namespace mrfl
