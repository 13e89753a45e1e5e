#include "msgu/optim.hpp"

#include <cmath>

#include <fmt/format.h>

namespace msgu {

void adam_step(const TensorList& params, OptimizerState& state) {
  if (!(state.learning_rate > 0)) {
    throw std::invalid_argument(fmt::format("adam: learning rate {} must be > 0", state.learning_rate));
  }
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(static_cast<std::size_t>(p.tensor.numel()), Real(0));
      state.second_moment.emplace_back(static_cast<std::size_t>(p.tensor.numel()), Real(0));
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw std::invalid_argument(fmt::format("adam: state tracks {} parameters, got {}",
                                            state.first_moment.size(), params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (state.first_moment[i].size() != static_cast<std::size_t>(p.tensor.numel())) {
      throw std::invalid_argument("adam: moment shape does not match parameter " + p.name);
    }
    if (!p.tensor.has_grad()) continue;
    for (Real g : p.tensor.grad()) {
      if (std::isnan(g)) throw std::runtime_error("adam: NaN gradient in parameter " + p.name);
    }
  }

  ++state.step;
  const auto t = static_cast<Real>(state.step);
  const Real c1 = 1 - std::pow(state.beta1, t);
  const Real c2 = 1 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor p = params[i].tensor;
    if (!p.has_grad()) continue;
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    const auto g = p.grad();
    auto w = p.data();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1 - state.beta2) * g[k] * g[k];
      const Real m_hat = m[k] / c1;
      const Real v_hat = v[k] / c2;
      w[k] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

void zero_grad(const TensorList& params) {
  for (const auto& p : params) {
    Tensor t = p.tensor;
    if (t.has_grad()) t.zero_grad();
  }
}

}  // namespace msgu
