#pragma once

#include <cstdint>
#include <vector>

#include "msgu/tensor.hpp"

namespace msgu {

/// Adam moments and schedule. Moments are allocated on the first step to
/// match the parameter shapes they track.
struct OptimizerState {
  Real learning_rate = Real(2e-4);
  Real beta1 = Real(0.5);
  Real beta2 = Real(0.999);
  Real epsilon = Real(1e-8);
  std::int64_t step = 0;
  std::vector<std::vector<Real>> first_moment;
  std::vector<std::vector<Real>> second_moment;
};

/// One bias-corrected Adam update over `params`, in order. Parameters
/// without a gradient buffer are left untouched. Throws if a gradient holds
/// NaN, naming the parameter.
void adam_step(const TensorList& params, OptimizerState& state);

void zero_grad(const TensorList& params);

}  // namespace msgu
