#include "msgu/nets/topology.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

namespace msgu {
namespace {

std::int64_t conv_axis(std::int64_t in, int lo, int hi, int k, int stride, const std::string& where,
                       const char* axis) {
  const std::int64_t span = in + lo + hi - k;
  if (span < 0 || span % stride != 0) {
    throw std::invalid_argument(fmt::format(
        "{}: output {} = ({} + {} + {} - {}) / {} + 1 is not a positive integer", where, axis, in,
        lo, hi, k, stride));
  }
  return span / stride + 1;
}

Extent block_out(const ConvBlockSpec& s) {
  if (s.transposed) {
    const Extent e{(s.in.h - 1) * s.stride - 2 * s.padding.top + s.kernel,
                   (s.in.w - 1) * s.stride - 2 * s.padding.left + s.kernel};
    if (e.h < 1 || e.w < 1) {
      throw std::invalid_argument(fmt::format("{}: transposed output from {} is empty", s.name, s.in.str()));
    }
    return e;
  }
  return {conv_axis(s.in.h, s.padding.top, s.padding.bottom, s.kernel, s.stride, s.name, "height"),
          conv_axis(s.in.w, s.padding.left, s.padding.right, s.kernel, s.stride, s.name, "width")};
}

ConvBlockSpec make_block(std::string name, int cin, int cout, int kernel, int stride,
                         Padding2d padding, Extent in, bool batch_norm, bool bias,
                         std::optional<Activation> act, bool transposed = false) {
  ConvBlockSpec s;
  s.name = std::move(name);
  s.transposed = transposed;
  s.in_channels = cin;
  s.out_channels = cout;
  s.kernel = kernel;
  s.stride = stride;
  s.padding = padding;
  s.bias = bias;
  s.batch_norm = batch_norm;
  s.activation = act;
  s.in = in;
  s.out = block_out(s);
  return s;
}

}  // namespace

std::int64_t ConvBlockSpec::parameter_count() const {
  std::int64_t count = static_cast<std::int64_t>(in_channels) * out_channels * kernel * kernel;
  if (bias) count += out_channels;
  if (batch_norm) count += 2 * out_channels;
  return count;
}

int GeneratorTopology::injections() const {
  return static_cast<int>(std::count_if(encoder.begin(), encoder.end(), [](const auto& l) {
    return l.injection_scale.has_value();
  }));
}

int GeneratorTopology::heads() const {
  return static_cast<int>(std::count_if(decoder.begin(), decoder.end(),
                                        [](const auto& l) { return l.head.has_value(); }));
}

std::vector<const ConvBlockSpec*> GeneratorTopology::blocks() const {
  std::vector<const ConvBlockSpec*> out;
  for (const auto& l : encoder) {
    if (l.down) out.push_back(&*l.down);
    if (l.fuse) out.push_back(&*l.fuse);
    for (const auto& m : l.main) out.push_back(&m);
  }
  for (const auto& l : decoder) {
    out.push_back(&l.up);
    out.push_back(&l.merge);
    if (l.head) out.push_back(&*l.head);
  }
  return out;
}

std::int64_t GeneratorTopology::parameter_count() const {
  std::int64_t total = 0;
  for (const ConvBlockSpec* b : blocks()) total += b->parameter_count();
  return total;
}

GeneratorTopology describe_generator(const ArchitectureConfig& config) {
  config.validate();
  const std::vector<int> widths = config.widths();
  const int levels = config.level_count();
  const int scales = config.scale_count();
  const int k = config.kernel;
  const Activation act = Activation::leaky(config.leaky_slope);
  const std::string g = "generator";

  GeneratorTopology topo;
  for (int level = 0; level < levels; ++level) {
    EncoderLevelSpec spec;
    spec.level = level;
    spec.extent = config.level_extent(level);
    const int w = widths[static_cast<std::size_t>(level)];
    const std::string base = fmt::format("{}.enc{}", g, level);
    if (level < scales) spec.injection_scale = scales - 1 - level;
    if (level == 0) {
      spec.main.push_back(make_block(base + ".main0", 3, w, k, 1, Padding2d::same(k), spec.extent,
                                     true, false, act));
      spec.main.push_back(make_block(base + ".main1", w, w, k, 1, Padding2d::same(k), spec.extent,
                                     true, false, act));
    } else {
      const int prev = widths[static_cast<std::size_t>(level - 1)];
      spec.down = make_block(base + ".down", prev, w, 4, 2, Padding2d::symmetric(1),
                             config.level_extent(level - 1), true, false, act);
      if (spec.down->out != spec.extent) {
        throw std::invalid_argument(fmt::format("{}: downsampler yields {}, level needs {}", base,
                                                spec.down->out.str(), spec.extent.str()));
      }
      if (spec.injection_scale) {
        spec.fuse = make_block(base + ".fuse", w + 3, w, 1, 1, Padding2d{}, spec.extent, true,
                               false, act);
      }
      spec.main.push_back(make_block(base + ".main0", w, w, k, 1, Padding2d::same(k), spec.extent,
                                     true, false, act));
    }
    topo.encoder.push_back(std::move(spec));
  }

  for (int level = levels - 2; level >= 0; --level) {
    DecoderLevelSpec spec;
    spec.level = level;
    spec.extent = config.level_extent(level);
    const int w = widths[static_cast<std::size_t>(level)];
    const int below = widths[static_cast<std::size_t>(level + 1)];
    const std::string base = fmt::format("{}.dec{}", g, level);
    spec.up = make_block(base + ".up", below, w, 4, 2, Padding2d::symmetric(1),
                         config.level_extent(level + 1), true, false, act, true);
    const auto& skip = topo.encoder[static_cast<std::size_t>(level)];
    const int skip_channels = skip.main.back().out_channels;
    if (spec.up.out != skip.extent || spec.up.out_channels != skip_channels) {
      throw std::invalid_argument(fmt::format(
          "{}: upsampler yields {} channels at {} but the skip from enc{} has {} at {}", base,
          spec.up.out_channels, spec.up.out.str(), level, skip_channels, skip.extent.str()));
    }
    spec.merge = make_block(base + ".merge", w, w, k, 1, Padding2d::same(k), spec.extent, true,
                            false, act);
    if (level < scales && (config.intermediate_heads || level == 0)) {
      spec.head = make_block(base + ".head", w, 3, 3, 1, Padding2d::symmetric(1), spec.extent,
                             false, true, Activation::tanh());
      spec.head_scale = scales - 1 - level;
    }
    topo.decoder.push_back(std::move(spec));
  }
  return topo;
}

std::vector<ConvBlockSpec> describe_discriminator(Extent input, int base_width, Real leaky_slope,
                                                  const std::string& prefix) {
  const Activation act = Activation::leaky(leaky_slope);
  const int b = base_width;
  std::vector<ConvBlockSpec> blocks;
  const auto pad1 = Padding2d::symmetric(1);
  blocks.push_back(make_block(prefix + ".block0", 6, b, 4, 2, pad1, input, false, true, act));
  blocks.push_back(make_block(prefix + ".block1", b, 2 * b, 4, 2, pad1, blocks.back().out, true,
                              false, act));
  blocks.push_back(make_block(prefix + ".block2", 2 * b, 4 * b, 4, 2, pad1, blocks.back().out,
                              true, false, act));
  blocks.push_back(make_block(prefix + ".block3", 4 * b, 8 * b, 4, 1, Padding2d::same(4),
                              blocks.back().out, true, false, act));
  blocks.push_back(make_block(prefix + ".logits", 8 * b, 1, 4, 1, Padding2d::same(4),
                              blocks.back().out, false, true, std::nullopt));
  return blocks;
}

std::vector<ConvBlockSpec> describe_extractor(Extent input, const std::vector<int>& widths,
                                              Real leaky_slope, const std::string& prefix) {
  std::vector<ConvBlockSpec> stages;
  Extent e = input;
  int cin = 3;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i > 0) e = {std::max<std::int64_t>(1, e.h / 2), std::max<std::int64_t>(1, e.w / 2)};
    stages.push_back(make_block(fmt::format("{}.stage{}", prefix, i), cin, widths[i], 3, 1,
                                Padding2d::symmetric(1), e, false, true,
                                Activation::leaky(leaky_slope)));
    cin = widths[i];
  }
  return stages;
}

}  // namespace msgu
