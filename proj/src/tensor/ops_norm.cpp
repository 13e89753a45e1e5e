#include <cmath>

#include <fmt/format.h>

#include "msgu/ops.hpp"

namespace msgu {

Tensor batch_norm2d(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                    Tensor& running_mean, Tensor& running_var, Mode mode, Real epsilon,
                    Real momentum) {
  const Shape s = input.shape();
  for (const Tensor* t : std::initializer_list<const Tensor*>{&gamma, &beta, &running_mean, &running_var}) {
    if (!t->defined() || t->numel() != s.c) {
      throw std::invalid_argument(fmt::format(
          "batch_norm2d: per-channel tensors must hold {} values for input {}", s.c, s.str()));
    }
  }
  const std::int64_t plane = s.h * s.w;
  const std::int64_t count = s.n * plane;
  if (mode == Mode::train && count < 2) {
    throw std::invalid_argument(fmt::format(
        "batch_norm2d: train mode needs N*H*W >= 2 per channel, input is {}", s.str()));
  }

  std::vector<Real> out(static_cast<std::size_t>(s.numel()));
  std::vector<Real> xhat(out.size());
  std::vector<Real> inv_std(static_cast<std::size_t>(s.c));
  const auto x = input.data();
  const auto gm = gamma.data();
  const auto bt = beta.data();
  auto rm = running_mean.data();
  auto rv = running_var.data();

  for (std::int64_t c = 0; c < s.c; ++c) {
    Real mu = 0;
    Real var = 0;
    if (mode == Mode::train) {
      for (std::int64_t n = 0; n < s.n; ++n) {
        const Real* p = x.data() + (n * s.c + c) * plane;
        for (std::int64_t i = 0; i < plane; ++i) mu += p[i];
      }
      mu /= static_cast<Real>(count);
      for (std::int64_t n = 0; n < s.n; ++n) {
        const Real* p = x.data() + (n * s.c + c) * plane;
        for (std::int64_t i = 0; i < plane; ++i) var += (p[i] - mu) * (p[i] - mu);
      }
      var /= static_cast<Real>(count);
      const auto ci = static_cast<std::size_t>(c);
      rm[ci] = (1 - momentum) * rm[ci] + momentum * mu;
      rv[ci] = (1 - momentum) * rv[ci] +
               momentum * var * static_cast<Real>(count) / static_cast<Real>(count - 1);
    } else {
      mu = rm[static_cast<std::size_t>(c)];
      var = rv[static_cast<std::size_t>(c)];
    }
    const Real is = Real(1) / std::sqrt(var + epsilon);
    inv_std[static_cast<std::size_t>(c)] = is;
    const Real g = gm[static_cast<std::size_t>(c)];
    const Real b = bt[static_cast<std::size_t>(c)];
    for (std::int64_t n = 0; n < s.n; ++n) {
      const std::int64_t off = (n * s.c + c) * plane;
      for (std::int64_t i = 0; i < plane; ++i) {
        const Real h = (x[static_cast<std::size_t>(off + i)] - mu) * is;
        xhat[static_cast<std::size_t>(off + i)] = h;
        out[static_cast<std::size_t>(off + i)] = g * h + b;
      }
    }
  }

  return make_result(
      s, std::move(out), "batch_norm2d", {input, gamma, beta},
      [input, gamma, beta, mode, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          std::span<const Real> gout, std::span<const Real>) mutable {
        const Shape s = input.shape();
        const std::int64_t plane = s.h * s.w;
        const auto m = static_cast<Real>(s.n * plane);
        const auto gm = gamma.data();
        for (std::int64_t c = 0; c < s.c; ++c) {
          const auto ci = static_cast<std::size_t>(c);
          Real sum_g = 0;
          Real sum_gx = 0;
          for (std::int64_t n = 0; n < s.n; ++n) {
            const std::int64_t off = (n * s.c + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i) {
              const auto k = static_cast<std::size_t>(off + i);
              sum_g += gout[k];
              sum_gx += gout[k] * xhat[k];
            }
          }
          if (gamma.requires_grad()) gamma.ensure_grad()[ci] += sum_gx;
          if (beta.requires_grad()) beta.ensure_grad()[ci] += sum_g;
          if (!input.requires_grad()) continue;
          auto gx = input.ensure_grad();
          const Real scale = gm[ci] * inv_std[ci];
          for (std::int64_t n = 0; n < s.n; ++n) {
            const std::int64_t off = (n * s.c + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i) {
              const auto k = static_cast<std::size_t>(off + i);
              if (mode == Mode::train) {
                gx[k] += scale * (gout[k] - sum_g / m - xhat[k] * sum_gx / m);
              } else {
                gx[k] += scale * gout[k];
              }
            }
          }
        }
      });
}

}  // namespace msgu
