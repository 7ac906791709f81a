#include "mrfl/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace mrfl {

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

GradCheckResult grad_check(const LossBuilder& loss, const std::vector<Parameter*>& params,
                           double eps, Stencil stencil) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  auto evaluate = [&] {
    Tape tape;
    return tape.scalar(loss(tape));
  };

  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      auto at = [&](double offset) {
        p.value[i] = saved + offset;
        return evaluate();
      };
      double numeric = 0.0;
      if (stencil == Stencil::kThreePoint) {
        numeric = (at(eps) - at(-eps)) / (2.0 * eps);
      } else {
        numeric = (8.0 * (at(eps) - at(-eps)) - (at(2.0 * eps) - at(-2.0 * eps))) / (12.0 * eps);
      }
      p.value[i] = saved;
      const double err = relative_error(analytic[k][i], numeric);
      ++result.coordinates_checked;
      if (err > result.max_relative_error || result.coordinates_checked == 1) {
        result.max_relative_error = err;
        result.worst_parameter = p.name;
        result.worst_index = i;
        result.analytic = analytic[k][i];
        result.numeric = numeric;
      }
    }
  }
  for (Parameter* p : params) p->zero_grad();
  return result;
}

}  // namespace mrfl
