#include "msgu/nets/config.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

#include <fmt/format.h>

#include "msgu/nets/topology.hpp"

namespace msgu {

std::string Extent::str() const { return fmt::format("{}x{}", h, w); }

Extent Extent::parse(std::string_view text) {
  const auto x = text.find('x');
  Extent e;
  auto parse_int = [&](std::string_view part, std::int64_t& out) {
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
    return ec == std::errc{} && ptr == part.data() + part.size() && out > 0;
  };
  if (x == std::string_view::npos || !parse_int(text.substr(0, x), e.h) ||
      !parse_int(text.substr(x + 1), e.w)) {
    throw std::invalid_argument(fmt::format("'{}' is not an extent of the form HxW", text));
  }
  return e;
}

std::vector<int> default_channel_widths(int levels) {
  std::vector<int> widths;
  int w = 16;
  for (int i = 0; i < levels; ++i) {
    widths.push_back(w);
    w = std::min(w * 2, 256);
  }
  return widths;
}

int ArchitectureConfig::level_count() const {
  if (scale_chain.empty() || bottleneck.h < 1) return 0;
  int extra = 0;
  for (std::int64_t h = scale_chain.front().h; h > bottleneck.h; h /= 2) ++extra;
  return scale_count() + extra;
}

Extent ArchitectureConfig::level_extent(int level) const {
  const Extent f = finest();
  return {f.h >> level, f.w >> level};
}

std::vector<int> ArchitectureConfig::widths() const {
  return channel_widths.empty() ? default_channel_widths(level_count()) : channel_widths;
}

void ArchitectureConfig::validate() const {
  if (scale_chain.empty()) throw std::invalid_argument("scale_chain is empty");
  for (std::size_t k = 0; k < scale_chain.size(); ++k) {
    const Extent e = scale_chain[k];
    if (e.h < 1 || e.w < 1) {
      throw std::invalid_argument(fmt::format("scale_chain[{}] = {} is not positive", k, e.str()));
    }
    if (k > 0) {
      const Extent p = scale_chain[k - 1];
      if (e.h != 2 * p.h || e.w != 2 * p.w) {
        throw std::invalid_argument(fmt::format(
            "scale_chain must double per entry: {} -> {} is not x2", p.str(), e.str()));
      }
    }
  }
  const Extent c = scale_chain.front();
  if (!(c.h == c.w || c.h == 2 * c.w || c.w == 2 * c.h)) {
    throw std::invalid_argument(
        fmt::format("scale_chain aspect {} must be 1:1 or 2:1", c.str()));
  }
  if (bottleneck.h < 1 || bottleneck.w < 1 || c.h % bottleneck.h != 0 ||
      c.w % bottleneck.w != 0 || c.h / bottleneck.h != c.w / bottleneck.w) {
    throw std::invalid_argument(fmt::format("bottleneck {} does not evenly scale the coarsest entry {}",
                                            bottleneck.str(), c.str()));
  }
  const std::int64_t factor = c.h / bottleneck.h;
  if (factor < 2 || (factor & (factor - 1)) != 0) {
    throw std::invalid_argument(fmt::format(
        "bottleneck {} must sit a power of two (at least x2) below the coarsest entry {}",
        bottleneck.str(), c.str()));
  }
  if (!channel_widths.empty()) {
    if (static_cast<int>(channel_widths.size()) != level_count()) {
      throw std::invalid_argument(fmt::format(
          "channel_widths has {} entries but the chain {}..{} plus bottleneck {} spans {} levels",
          channel_widths.size(), c.str(), finest().str(), bottleneck.str(), level_count()));
    }
    for (std::size_t i = 0; i < channel_widths.size(); ++i) {
      if (channel_widths[i] < 1) {
        throw std::invalid_argument(fmt::format("channel_widths[{}] must be positive", i));
      }
    }
  }
  if (kernel < 1) throw std::invalid_argument("kernel must be >= 1");
  if (!(leaky_slope > 0 && leaky_slope < 1)) {
    throw std::invalid_argument(fmt::format("leaky_slope {} outside (0, 1)", leaky_slope));
  }
  if (discriminator_width < 1) throw std::invalid_argument("discriminator_width must be >= 1");
  if (extractor_widths.empty()) throw std::invalid_argument("extractor_widths is empty");
  for (int w : extractor_widths) {
    if (w < 1) throw std::invalid_argument("extractor_widths must be positive");
  }
  if (!(bn_epsilon > 0)) throw std::invalid_argument("bn_epsilon must be > 0");
  if (!(bn_momentum >= 0 && bn_momentum <= 1)) {
    throw std::invalid_argument("bn_momentum must lie in [0, 1]");
  }
  for (const Extent& e : scale_chain) describe_discriminator(e, discriminator_width, leaky_slope);
}

ArchitectureConfig ArchitectureConfig::toy() {
  ArchitectureConfig c;
  c.scale_chain = {{32, 16}, {64, 32}, {128, 64}};
  c.bottleneck = {8, 4};
  c.channel_widths = {8, 16, 32, 32, 32};
  c.discriminator_width = 16;
  c.extractor_widths = {8, 16, 32, 32, 32};
  return c;
}

ArchitectureConfig ArchitectureConfig::cityscapes() {
  ArchitectureConfig c;
  c.scale_chain = {{128, 64}, {256, 128}, {512, 256}, {1024, 512}, {2048, 1024}};
  c.bottleneck = {8, 4};
  return c;
}

ArchitectureConfig ArchitectureConfig::square512() {
  ArchitectureConfig c;
  c.scale_chain = {{64, 64}, {128, 128}, {256, 256}, {512, 512}};
  c.bottleneck = {4, 4};
  return c;
}

}  // namespace msgu
