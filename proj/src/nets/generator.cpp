#include "msgu/nets/generator.hpp"

#include <stdexcept>

#include <fmt/format.h>

namespace msgu {

void check_pyramid(const ScalePyramid& pyramid, const std::vector<Extent>& chain,
                   const char* what) {
  if (pyramid.size() != chain.size()) {
    throw std::invalid_argument(fmt::format("{}: pyramid has {} entries, scale chain has {}", what,
                                            pyramid.size(), chain.size()));
  }
  for (std::size_t k = 0; k < chain.size(); ++k) {
    const Shape& s = pyramid[k].shape();
    if (s.c != 3 || s.h != chain[k].h || s.w != chain[k].w || s.n != pyramid[0].shape().n) {
      throw std::invalid_argument(fmt::format("{}: pyramid entry {} is {}, expected [{},3,{},{}]",
                                              what, k, s.str(), pyramid[0].shape().n, chain[k].h,
                                              chain[k].w));
    }
  }
}

MsgUNetGenerator::MsgUNetGenerator(const ArchitectureConfig& config, std::uint64_t seed)
    : config_(config), topology_(describe_generator(config)) {
  auto rng = make_rng(seed, 1);
  const Real eps = config.bn_epsilon;
  const Real mom = config.bn_momentum;
  for (const auto& spec : topology_.encoder) {
    EncoderLevel level;
    level.injection_scale = spec.injection_scale;
    if (spec.down) level.down.emplace(*spec.down, rng, eps, mom);
    if (spec.fuse) level.fuse.emplace(*spec.fuse, rng, eps, mom);
    for (const auto& m : spec.main) level.main.emplace_back(m, rng, eps, mom);
    encoder_.push_back(std::move(level));
  }
  for (const auto& spec : topology_.decoder) {
    DecoderLevel level;
    level.level = spec.level;
    level.up = ConvBlock(spec.up, rng, eps, mom);
    level.merge = ConvBlock(spec.merge, rng, eps, mom);
    if (spec.head) {
      level.head.emplace(*spec.head, rng, eps, mom);
      head_scales_.push_back(*spec.head_scale);
    }
    decoder_.push_back(std::move(level));
  }
}

ScalePyramid MsgUNetGenerator::forward(const ScalePyramid& input, Mode mode) {
  check_pyramid(input, config_.scale_chain, "generator");
  std::vector<Tensor> skips;
  Tensor h = input.finest();
  for (auto& level : encoder_) {
    if (level.down) {
      h = level.down->forward(h, mode);
      if (level.fuse) {
        h = level.fuse->forward(concat_channels(h, input[static_cast<std::size_t>(*level.injection_scale)]), mode);
      }
    }
    for (auto& block : level.main) h = block.forward(h, mode);
    skips.push_back(h);
  }
  ScalePyramid out;
  Tensor d = skips.back();
  for (auto& level : decoder_) {
    Tensor u = add(level.up.forward(d, mode), skips[static_cast<std::size_t>(level.level)]);
    d = level.merge.forward(u, mode);
    if (level.head) out.images.push_back(level.head->forward(d, mode));
  }
  return out;
}

TensorList MsgUNetGenerator::parameters() const {
  TensorList out;
  for (const auto& level : encoder_) {
    if (level.down) level.down->append_parameters(out);
    if (level.fuse) level.fuse->append_parameters(out);
    for (const auto& b : level.main) b.append_parameters(out);
  }
  for (const auto& level : decoder_) {
    level.up.append_parameters(out);
    level.merge.append_parameters(out);
    if (level.head) level.head->append_parameters(out);
  }
  return out;
}

TensorList MsgUNetGenerator::buffers() const {
  TensorList out;
  for (const auto& level : encoder_) {
    if (level.down) level.down->append_buffers(out);
    if (level.fuse) level.fuse->append_buffers(out);
    for (const auto& b : level.main) b.append_buffers(out);
  }
  for (const auto& level : decoder_) {
    level.up.append_buffers(out);
    level.merge.append_buffers(out);
    if (level.head) level.head->append_buffers(out);
  }
  return out;
}

}  // namespace msgu
