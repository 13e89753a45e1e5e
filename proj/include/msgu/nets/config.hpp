#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "msgu/tensor.hpp"

namespace msgu {

/// Spatial extent, written "HxW".
struct Extent {
  std::int64_t h = 0;
  std::int64_t w = 0;

  bool operator==(const Extent&) const = default;
  std::string str() const;
  static Extent parse(std::string_view text);
};

/// Everything that fixes the network topology. Resolution levels are
/// numbered from the finest scale (level 0) down to the bottleneck.
struct ArchitectureConfig {
  std::vector<Extent> scale_chain;  // coarsest first
  Extent bottleneck;
  std::vector<int> channel_widths;  // finest level first; empty selects the default ladder
  int kernel = 4;
  Real leaky_slope = Real(0.2);
  bool intermediate_heads = true;
  int discriminator_width = 64;
  std::vector<int> extractor_widths{16, 32, 64, 64, 64};
  Real bn_epsilon = Real(1e-5);
  Real bn_momentum = Real(0.1);

  bool operator==(const ArchitectureConfig&) const = default;

  /// Throws std::invalid_argument naming the first violated rule.
  void validate() const;

  int scale_count() const { return static_cast<int>(scale_chain.size()); }
  /// Levels from the finest scale down to the bottleneck, inclusive.
  int level_count() const;
  Extent level_extent(int level) const;
  Extent finest() const { return scale_chain.back(); }
  /// Channel widths with defaults filled in: base 16, doubling per level, capped at 256.
  std::vector<int> widths() const;

  /// 32x16 / 64x32 / 128x64 with an 8x4 bottleneck and small widths.
  static ArchitectureConfig toy();
  /// 128x64 ... 2048x1024 with an 8x4 bottleneck.
  static ArchitectureConfig cityscapes();
  /// Square 64 ... 512 chain with a 4x4 bottleneck.
  static ArchitectureConfig square512();
};

std::vector<int> default_channel_widths(int levels);

}  // namespace msgu
