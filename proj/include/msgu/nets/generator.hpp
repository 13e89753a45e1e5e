#pragma once

#include <cstdint>
#include <vector>

#include "msgu/nets/layers.hpp"
#include "msgu/pyramid.hpp"

namespace msgu {

/// U-Net generator with the source pyramid injected into the encoder and an
/// RGB head branching off each decoder level that matches a chain entry.
class MsgUNetGenerator {
 public:
  MsgUNetGenerator(const ArchitectureConfig& config, std::uint64_t seed);

  /// Returns one image per head, coarsest first. The pyramid must match the
  /// scale chain entry for entry.
  ScalePyramid forward(const ScalePyramid& input, Mode mode);

  const ArchitectureConfig& config() const { return config_; }
  const GeneratorTopology& topology() const { return topology_; }
  /// Scale-chain index of each head, in forward's output order.
  const std::vector<int>& head_scales() const { return head_scales_; }

  TensorList parameters() const;
  TensorList buffers() const;

 private:
  struct EncoderLevel {
    std::optional<ConvBlock> down;
    std::optional<ConvBlock> fuse;
    std::optional<int> injection_scale;
    std::vector<ConvBlock> main;
  };
  struct DecoderLevel {
    int level = 0;
    ConvBlock up;
    ConvBlock merge;
    std::optional<ConvBlock> head;
  };

  ArchitectureConfig config_;
  GeneratorTopology topology_;
  std::vector<EncoderLevel> encoder_;
  std::vector<DecoderLevel> decoder_;
  std::vector<int> head_scales_;
};

/// Throws unless the pyramid holds one 3-channel image per chain entry at
/// the chain's extents, all with the same batch size.
void check_pyramid(const ScalePyramid& pyramid, const std::vector<Extent>& chain,
                   const char* what);

}  // namespace msgu
