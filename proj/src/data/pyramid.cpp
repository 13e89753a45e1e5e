#include <stdexcept>

#include <fmt/format.h>

#include "msgu/data.hpp"
#include "msgu/ops.hpp"

namespace msgu {

Tensor stack_batch(const std::vector<Tensor>& images) {
  if (images.empty()) throw std::invalid_argument("stack_batch: no images");
  const Shape one = images.front().shape();
  Shape s = one;
  s.n = 0;
  std::vector<Real> values;
  for (const Tensor& t : images) {
    const Shape& ts = t.shape();
    if (ts.c != one.c || ts.h != one.h || ts.w != one.w) {
      throw std::invalid_argument(
          fmt::format("stack_batch: {} does not match {}", ts.str(), one.str()));
    }
    s.n += ts.n;
    values.insert(values.end(), t.data().begin(), t.data().end());
  }
  return Tensor(s, std::move(values));
}

Tensor flip_horizontal(const Tensor& image) {
  const Shape& s = image.shape();
  Tensor out(s);
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c = 0; c < s.c; ++c) {
      for (std::int64_t y = 0; y < s.h; ++y) {
        for (std::int64_t x = 0; x < s.w; ++x) out.at(n, c, y, s.w - 1 - x) = image.at(n, c, y, x);
      }
    }
  }
  return out;
}

ScalePyramid make_pyramid(const Tensor& image, const std::vector<Extent>& chain) {
  if (chain.empty()) throw std::invalid_argument("make_pyramid: empty scale chain");
  const Shape& s = image.shape();
  const Extent f = chain.back();
  if (s.h * f.w != s.w * f.h) {
    throw std::invalid_argument(fmt::format("make_pyramid: image {}x{} does not share the aspect of {}",
                                            s.h, s.w, f.str()));
  }
  if (s.h < f.h) {
    throw std::invalid_argument(
        fmt::format("make_pyramid: image {}x{} is smaller than the finest scale {}", s.h, s.w, f.str()));
  }
  ScalePyramid p;
  p.images.resize(chain.size());
  p.images.back() = (s.h == f.h && s.w == f.w) ? image : resize(image, f.h, f.w);
  for (std::size_t k = chain.size() - 1; k-- > 0;) {
    p.images[k] = resize(p.images[k + 1], chain[k].h, chain[k].w);
  }
  return p;
}

ScalePyramid ablation_degrade(const Tensor& image, Extent degrade_to,
                              const std::vector<Extent>& chain) {
  std::size_t d = chain.size();
  for (std::size_t k = 0; k < chain.size(); ++k) {
    if (chain[k] == degrade_to) d = k;
  }
  if (d == chain.size()) {
    throw std::invalid_argument(
        fmt::format("ablation_degrade: {} is not in the scale chain", degrade_to.str()));
  }
  ScalePyramid p = make_pyramid(image, chain);
  for (std::size_t k = d + 1; k < chain.size(); ++k) {
    p.images[k] = resize(p.images[d], chain[k].h, chain[k].w);
  }
  return p;
}

}  // namespace msgu
