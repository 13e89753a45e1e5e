#pragma once

#include <optional>
#include <string>
#include <vector>

#include "msgu/nets/config.hpp"
#include "msgu/ops.hpp"

namespace msgu {

/// Convolution (or transposed convolution), optionally followed by batch
/// norm and an activation. This is the unit every network here is built from.
struct ConvBlockSpec {
  std::string name;
  bool transposed = false;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 0;
  int stride = 1;
  Padding2d padding;
  bool bias = false;
  bool batch_norm = false;
  std::optional<Activation> activation;
  Extent in;
  Extent out;

  std::int64_t parameter_count() const;
};

struct EncoderLevelSpec {
  int level = 0;
  Extent extent;
  std::optional<int> injection_scale;  // index into scale_chain
  std::optional<ConvBlockSpec> down;
  std::optional<ConvBlockSpec> fuse;
  std::vector<ConvBlockSpec> main;
};

struct DecoderLevelSpec {
  int level = 0;
  Extent extent;
  ConvBlockSpec up;
  ConvBlockSpec merge;
  std::optional<ConvBlockSpec> head;
  std::optional<int> head_scale;
};

/// Dry shape walk of the generator: layer shapes only, no tensors.
struct GeneratorTopology {
  std::vector<EncoderLevelSpec> encoder;  // finest first
  std::vector<DecoderLevelSpec> decoder;  // deepest first

  int injections() const;
  int heads() const;
  std::int64_t parameter_count() const;
  std::vector<const ConvBlockSpec*> blocks() const;
};

GeneratorTopology describe_generator(const ArchitectureConfig& config);

/// Patch discriminator for 6-channel (source | candidate) input of the given
/// extent: four blocks then a 1-channel logit conv.
std::vector<ConvBlockSpec> describe_discriminator(Extent input, int base_width, Real leaky_slope,
                                                  const std::string& prefix = "disc");

/// Feature extractor stages; stage i > 0 halves the extent before its conv.
std::vector<ConvBlockSpec> describe_extractor(Extent input, const std::vector<int>& widths,
                                              Real leaky_slope,
                                              const std::string& prefix = "extractor");

}  // namespace msgu
