#include <cmath>

#include <fmt/format.h>

#include "msgu/ops.hpp"

namespace msgu {
namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(
        fmt::format("{}: shape mismatch {} vs {}", op, a.shape().str(), b.shape().str()));
  }
}

}  // namespace

Tensor activation(const Tensor& input, Activation act) {
  if (act.kind == ActivationKind::leaky_relu && !(act.slope > 0 && act.slope < 1)) {
    throw std::invalid_argument(fmt::format("leaky_relu: slope {} outside (0, 1)", act.slope));
  }
  const auto x = input.data();
  std::vector<Real> out(x.size());
  switch (act.kind) {
    case ActivationKind::leaky_relu:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0 ? x[i] : act.slope * x[i];
      break;
    case ActivationKind::tanh:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::tanh(x[i]);
      break;
    case ActivationKind::sigmoid:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = Real(1) / (Real(1) + std::exp(-x[i]));
      break;
  }
  return make_result(input.shape(), std::move(out), "activation", {input},
                     [input, act](std::span<const Real> g, std::span<const Real> y) mutable {
                       auto gx = input.ensure_grad();
                       const auto x = input.data();
                       switch (act.kind) {
                         case ActivationKind::leaky_relu:
                           for (std::size_t i = 0; i < g.size(); ++i)
                             gx[i] += x[i] > 0 ? g[i] : act.slope * g[i];
                           break;
                         case ActivationKind::tanh:
                           for (std::size_t i = 0; i < g.size(); ++i)
                             gx[i] += g[i] * (Real(1) - y[i] * y[i]);
                           break;
                         case ActivationKind::sigmoid:
                           for (std::size_t i = 0; i < g.size(); ++i)
                             gx[i] += g[i] * y[i] * (Real(1) - y[i]);
                           break;
                       }
                     });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  const Shape sa = a.shape();
  const Shape sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
    throw std::invalid_argument(fmt::format("concat_channels: batch/spatial mismatch {} vs {}",
                                            sa.str(), sb.str()));
  }
  const Shape os{sa.n, sa.c + sb.c, sa.h, sa.w};
  const std::int64_t pa = sa.c * sa.h * sa.w;
  const std::int64_t pb = sb.c * sb.h * sb.w;
  std::vector<Real> out(static_cast<std::size_t>(os.numel()));
  for (std::int64_t n = 0; n < sa.n; ++n) {
    std::copy_n(a.data().data() + n * pa, pa, out.data() + n * (pa + pb));
    std::copy_n(b.data().data() + n * pb, pb, out.data() + n * (pa + pb) + pa);
  }
  return make_result(os, std::move(out), "concat_channels", {a, b},
                     [a, b, pa, pb](std::span<const Real> g, std::span<const Real>) mutable {
                       const std::int64_t batch = a.shape().n;
                       for (std::int64_t n = 0; n < batch; ++n) {
                         const Real* src = g.data() + n * (pa + pb);
                         if (a.requires_grad()) {
                           Real* dst = a.ensure_grad().data() + n * pa;
                           for (std::int64_t i = 0; i < pa; ++i) dst[i] += src[i];
                         }
                         if (b.requires_grad()) {
                           Real* dst = b.ensure_grad().data() + n * pb;
                           for (std::int64_t i = 0; i < pb; ++i) dst[i] += src[pa + i];
                         }
                       }
                     });
}

Tensor slice_channels(const Tensor& input, std::int64_t begin, std::int64_t count) {
  const Shape s = input.shape();
  if (begin < 0 || count < 1 || begin + count > s.c) {
    throw std::invalid_argument(fmt::format("slice_channels: [{}, {}) outside {} channels",
                                            begin, begin + count, s.c));
  }
  const Shape os{s.n, count, s.h, s.w};
  const std::int64_t plane = s.h * s.w;
  std::vector<Real> out(static_cast<std::size_t>(os.numel()));
  for (std::int64_t n = 0; n < s.n; ++n) {
    std::copy_n(input.data().data() + (n * s.c + begin) * plane, count * plane,
                out.data() + n * count * plane);
  }
  return make_result(os, std::move(out), "slice_channels", {input},
                     [input, begin, count](std::span<const Real> g, std::span<const Real>) mutable {
                       const Shape s = input.shape();
                       const std::int64_t plane = s.h * s.w;
                       auto gx = input.ensure_grad();
                       for (std::int64_t n = 0; n < s.n; ++n) {
                         Real* dst = gx.data() + (n * s.c + begin) * plane;
                         const Real* src = g.data() + n * count * plane;
                         for (std::int64_t i = 0; i < count * plane; ++i) dst[i] += src[i];
                       }
                     });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  const auto x = a.data();
  const auto y = b.data();
  std::vector<Real> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  return make_result(a.shape(), std::move(out), "add", {a, b},
                     [a, b](std::span<const Real> g, std::span<const Real>) mutable {
                       for (const Tensor* t : {&a, &b}) {
                         if (!t->requires_grad()) continue;
                         auto gt = t->ensure_grad();
                         for (std::size_t i = 0; i < g.size(); ++i) gt[i] += g[i];
                       }
                     });
}

Tensor scale(const Tensor& a, Real factor) {
  const auto x = a.data();
  std::vector<Real> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = factor * x[i];
  return make_result(a.shape(), std::move(out), "scale", {a},
                     [a, factor](std::span<const Real> g, std::span<const Real>) mutable {
                       auto gx = a.ensure_grad();
                       for (std::size_t i = 0; i < g.size(); ++i) gx[i] += factor * g[i];
                     });
}

Tensor reduce(const Tensor& input, ReduceKind kind) {
  const auto x = input.data();
  Real acc = 0;
  for (Real v : x) acc += v;
  const Real weight = kind == ReduceKind::mean ? Real(1) / static_cast<Real>(x.size()) : Real(1);
  return make_result(Shape{}, {acc * weight}, "reduce", {input},
                     [input, weight](std::span<const Real> g, std::span<const Real>) mutable {
                       auto gx = input.ensure_grad();
                       const Real v = g[0] * weight;
                       for (Real& e : gx) e += v;
                     });
}

Tensor l1_distance(const Tensor& a, const Tensor& b) {
  require_same_shape("l1_distance", a, b);
  const auto x = a.data();
  const auto y = b.data();
  Real acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::abs(x[i] - y[i]);
  const Real inv = Real(1) / static_cast<Real>(x.size());
  return make_result(Shape{}, {acc * inv}, "l1_distance", {a, b},
                     [a, b, inv](std::span<const Real> g, std::span<const Real>) mutable {
                       const auto x = a.data();
                       const auto y = b.data();
                       const Real v = g[0] * inv;
                       const bool ga = a.requires_grad();
                       const bool gb = b.requires_grad();
                       std::span<Real> da = ga ? a.ensure_grad() : std::span<Real>{};
                       std::span<Real> db = gb ? b.ensure_grad() : std::span<Real>{};
                       for (std::size_t i = 0; i < x.size(); ++i) {
                         const Real d = x[i] - y[i];
                         const Real sg = d > 0 ? v : (d < 0 ? -v : Real(0));
                         if (ga) da[i] += sg;
                         if (gb) db[i] -= sg;
                       }
                     });
}

Tensor mean_squared_error(const Tensor& x, Real label) {
  const auto v = x.data();
  Real acc = 0;
  for (Real e : v) acc += (e - label) * (e - label);
  const Real inv = Real(1) / static_cast<Real>(v.size());
  return make_result(Shape{}, {acc * inv}, "mean_squared_error", {x},
                     [x, label, inv](std::span<const Real> g, std::span<const Real>) mutable {
                       const auto v = x.data();
                       auto gx = x.ensure_grad();
                       const Real k = 2 * g[0] * inv;
                       for (std::size_t i = 0; i < v.size(); ++i) gx[i] += k * (v[i] - label);
                     });
}

}  // namespace msgu
