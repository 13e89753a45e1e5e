#pragma once

#include <cstdint>
#include <vector>

#include "msgu/nets/config.hpp"
#include "msgu/pyramid.hpp"
#include "support/gradcheck.hpp"

namespace msgu::testing {

inline ScalePyramid random_pyramid(const std::vector<Extent>& chain, std::int64_t batch,
                                   std::uint64_t seed, bool requires_grad = false) {
  ScalePyramid p;
  for (std::size_t k = 0; k < chain.size(); ++k) {
    p.images.push_back(
        random_tensor({batch, 3, chain[k].h, chain[k].w}, seed * 31 + k, 1, requires_grad));
  }
  return p;
}

inline bool any_nonzero(std::span<const Real> v) {
  for (Real x : v) {
    if (x != 0) return true;
  }
  return false;
}

/// A 3-scale net small enough for element-wise finite differences.
inline ArchitectureConfig micro_config() {
  ArchitectureConfig c;
  c.scale_chain = {{8, 8}, {16, 16}, {32, 32}};
  c.bottleneck = {4, 4};
  c.channel_widths = {2, 3, 3, 4};
  c.discriminator_width = 2;
  c.extractor_widths = {3, 4};
  return c;
}

}  // namespace msgu::testing
