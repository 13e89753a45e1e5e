#pragma once

#include <cstddef>
#include <vector>

#include "msgu/tensor.hpp"

namespace msgu {

/// Images of one scene at successive resolutions, coarsest first.
struct ScalePyramid {
  std::vector<Tensor> images;

  std::size_t size() const { return images.size(); }
  bool empty() const { return images.empty(); }
  const Tensor& operator[](std::size_t k) const { return images[k]; }
  Tensor& operator[](std::size_t k) { return images[k]; }
  const Tensor& finest() const { return images.back(); }
  const Tensor& coarsest() const { return images.front(); }
};

}  // namespace msgu
