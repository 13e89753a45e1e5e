#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "msgu/ops.hpp"

namespace msgu {
namespace {

struct Tap {
  std::int64_t lo;
  std::int64_t hi;
  Real frac;  // weight of `hi`
};

std::vector<Tap> bilinear_taps(std::int64_t in, std::int64_t out) {
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::int64_t i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * ratio - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<std::int64_t>(std::floor(src));
    const std::int64_t hi = std::min(lo + 1, in - 1);
    taps[static_cast<std::size_t>(i)] = {lo, hi, static_cast<Real>(src - static_cast<double>(lo))};
  }
  return taps;
}

std::vector<std::int64_t> nearest_taps(std::int64_t in, std::int64_t out) {
  std::vector<std::int64_t> taps(static_cast<std::size_t>(out));
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::int64_t i = 0; i < out; ++i) {
    const auto src = static_cast<std::int64_t>(std::floor((static_cast<double>(i) + 0.5) * ratio));
    taps[static_cast<std::size_t>(i)] = std::min(src, in - 1);
  }
  return taps;
}

}  // namespace

Tensor resize(const Tensor& input, std::int64_t target_h, std::int64_t target_w,
              ResizeMethod method) {
  if (target_h < 1 || target_w < 1) {
    throw std::invalid_argument(
        fmt::format("resize: target {}x{} must be at least 1x1", target_h, target_w));
  }
  const Shape s = input.shape();
  const Shape os{s.n, s.c, target_h, target_w};
  const std::int64_t planes = s.n * s.c;
  std::vector<Real> out(static_cast<std::size_t>(os.numel()));
  const auto x = input.data();

  if (method == ResizeMethod::nearest) {
    if (input.requires_grad() && grad_enabled()) {
      throw std::invalid_argument("resize: nearest is not differentiable; input requires grad");
    }
    const auto ty = nearest_taps(s.h, target_h);
    const auto tx = nearest_taps(s.w, target_w);
    for (std::int64_t p = 0; p < planes; ++p) {
      const Real* src = x.data() + p * s.h * s.w;
      Real* dst = out.data() + p * target_h * target_w;
      for (std::int64_t oy = 0; oy < target_h; ++oy)
        for (std::int64_t ox = 0; ox < target_w; ++ox)
          dst[oy * target_w + ox] = src[ty[static_cast<std::size_t>(oy)] * s.w +
                                        tx[static_cast<std::size_t>(ox)]];
    }
    return Tensor(os, std::move(out));
  }

  auto ty = bilinear_taps(s.h, target_h);
  auto tx = bilinear_taps(s.w, target_w);
  for (std::int64_t p = 0; p < planes; ++p) {
    const Real* src = x.data() + p * s.h * s.w;
    Real* dst = out.data() + p * target_h * target_w;
    for (std::int64_t oy = 0; oy < target_h; ++oy) {
      const Tap& a = ty[static_cast<std::size_t>(oy)];
      const Real* r0 = src + a.lo * s.w;
      const Real* r1 = src + a.hi * s.w;
      for (std::int64_t ox = 0; ox < target_w; ++ox) {
        const Tap& b = tx[static_cast<std::size_t>(ox)];
        const Real top = (1 - b.frac) * r0[b.lo] + b.frac * r0[b.hi];
        const Real bot = (1 - b.frac) * r1[b.lo] + b.frac * r1[b.hi];
        dst[oy * target_w + ox] = (1 - a.frac) * top + a.frac * bot;
      }
    }
  }
  return make_result(
      os, std::move(out), "resize", {input},
      [input, ty = std::move(ty), tx = std::move(tx)](std::span<const Real> g,
                                                      std::span<const Real>) mutable {
        const Shape s = input.shape();
        const auto oh = static_cast<std::int64_t>(ty.size());
        const auto ow = static_cast<std::int64_t>(tx.size());
        auto gx = input.ensure_grad();
        for (std::int64_t p = 0; p < s.n * s.c; ++p) {
          Real* dst = gx.data() + p * s.h * s.w;
          const Real* src = g.data() + p * oh * ow;
          for (std::int64_t oy = 0; oy < oh; ++oy) {
            const Tap& a = ty[static_cast<std::size_t>(oy)];
            for (std::int64_t ox = 0; ox < ow; ++ox) {
              const Tap& b = tx[static_cast<std::size_t>(ox)];
              const Real v = src[oy * ow + ox];
              dst[a.lo * s.w + b.lo] += (1 - a.frac) * (1 - b.frac) * v;
              dst[a.lo * s.w + b.hi] += (1 - a.frac) * b.frac * v;
              dst[a.hi * s.w + b.lo] += a.frac * (1 - b.frac) * v;
              dst[a.hi * s.w + b.hi] += a.frac * b.frac * v;
            }
          }
        }
      });
}

}  // namespace msgu
