#pragma once

// Central finite-difference oracle. It only ever calls forward code, so it
// stays independent of every backward rule it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "msgu/ops.hpp"
#include "msgu/tensor.hpp"

namespace msgu::testing {

inline Tensor random_tensor(Shape shape, std::uint64_t seed, Real scale = 1,
                            bool requires_grad = true) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<Real> v(static_cast<std::size_t>(shape.numel()));
  for (auto& e : v) e = static_cast<Real>(dist(rng)) * scale;
  return Tensor(shape, std::move(v), requires_grad);
}

/// <x, weights> as a scalar node; used to project a tensor output onto a
/// fixed random direction so every output element matters.
inline Tensor project(const Tensor& x, const std::vector<Real>& weights) {
  Real acc = 0;
  const auto d = x.data();
  for (std::size_t i = 0; i < d.size(); ++i) acc += d[i] * weights[i];
  return make_result(Shape{}, {acc}, "project", {x},
                     [x, weights](std::span<const Real> g, std::span<const Real>) mutable {
                       auto gx = x.ensure_grad();
                       for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0] * weights[i];
                     });
}

inline std::vector<Real> random_weights(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<Real> w(n);
  for (auto& e : w) e = static_cast<Real>(dist(rng));
  return w;
}

struct GradCheckResult {
  std::string worst_name;
  double worst_relative_error = 0;
  std::size_t checked = 0;
};

/// Relative error ||analytic - numeric|| / max(||analytic||, ||numeric||),
/// evaluated per tensor; the worst tensor is reported.
inline GradCheckResult gradcheck(const std::function<Tensor()>& loss_fn,
                                 const std::vector<NamedTensor>& leaves, double step = 1e-5) {
  for (const auto& l : leaves) {
    Tensor t = l.tensor;
    if (t.has_grad()) t.zero_grad();
  }
  loss_fn().backward();

  GradCheckResult result;
  for (const auto& l : leaves) {
    Tensor t = l.tensor;
    std::vector<double> analytic(static_cast<std::size_t>(t.numel()), 0.0);
    if (t.has_grad()) {
      const auto g = t.grad();
      std::copy(g.begin(), g.end(), analytic.begin());
    }
    double diff2 = 0;
    double a2 = 0;
    double n2 = 0;
    auto data = t.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const Real saved = data[i];
      double plus = 0;
      double minus = 0;
      {
        NoGradGuard guard;
        data[i] = saved + static_cast<Real>(step);
        plus = loss_fn().item();
        data[i] = saved - static_cast<Real>(step);
        minus = loss_fn().item();
      }
      data[i] = saved;
      const double numeric = (plus - minus) / (2 * step);
      diff2 += (analytic[i] - numeric) * (analytic[i] - numeric);
      a2 += analytic[i] * analytic[i];
      n2 += numeric * numeric;
      ++result.checked;
    }
    const double denom = std::max(std::sqrt(a2), std::sqrt(n2));
    const double rel = denom == 0 ? 0 : std::sqrt(diff2) / denom;
    if (rel >= result.worst_relative_error) {
      result.worst_relative_error = rel;
      result.worst_name = l.name;
    }
  }
  return result;
}

}  // namespace msgu::testing
