#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msgu/nets/topology.hpp"

namespace msgu {

/// Reference figure the generator total is printed against.
inline constexpr double kReferenceFlops = 1.28e12;

/// 2 * Kh * Kw * Cin * Cout * Hout * Wout.
std::uint64_t conv_flops(int kernel_h, int kernel_w, int in_channels, int out_channels,
                         std::int64_t out_h, std::int64_t out_w);
/// Every input pixel scatters a K x K x Cout patch: 2 * K^2 * Cin * Cout * Hin * Win.
std::uint64_t conv_transpose_flops(int kernel, int in_channels, int out_channels, std::int64_t in_h,
                                   std::int64_t in_w);

struct FlopsEntry {
  std::string network;
  std::string layer;
  std::uint64_t conv = 0;
  std::uint64_t norm = 0;        // 2 per element
  std::uint64_t activation = 0;  // 2 per element
  std::uint64_t add = 0;         // skip additions, 1 per element

  std::uint64_t total() const { return conv + norm + activation + add; }
};

struct FlopsReport {
  std::vector<FlopsEntry> entries;

  std::uint64_t network_total(const std::string& network) const;
  std::uint64_t grand_total() const;
  /// network,layer,conv,norm,activation,add,total rows followed by totals.
  std::string csv() const;
  /// Human-readable totals, including the comparison with kReferenceFlops.
  std::string summary() const;
};

FlopsEntry block_flops(const std::string& network, const ConvBlockSpec& block);

/// Batch-1 forward cost of the generator and the whole discriminator bank,
/// computed from the dry shape walk only.
FlopsReport count_flops(const ArchitectureConfig& config);

}  // namespace msgu
