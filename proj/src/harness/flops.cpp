#include "msgu/harness/flops.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace msgu {

std::uint64_t conv_flops(int kernel_h, int kernel_w, int in_channels, int out_channels,
                         std::int64_t out_h, std::int64_t out_w) {
  return 2ull * static_cast<std::uint64_t>(kernel_h) * static_cast<std::uint64_t>(kernel_w) *
         static_cast<std::uint64_t>(in_channels) * static_cast<std::uint64_t>(out_channels) *
         static_cast<std::uint64_t>(out_h) * static_cast<std::uint64_t>(out_w);
}

std::uint64_t conv_transpose_flops(int kernel, int in_channels, int out_channels, std::int64_t in_h,
                                   std::int64_t in_w) {
  return conv_flops(kernel, kernel, in_channels, out_channels, in_h, in_w);
}

FlopsEntry block_flops(const std::string& network, const ConvBlockSpec& b) {
  FlopsEntry e;
  e.network = network;
  e.layer = b.name;
  e.conv = b.transposed ? conv_transpose_flops(b.kernel, b.in_channels, b.out_channels, b.in.h, b.in.w)
                        : conv_flops(b.kernel, b.kernel, b.in_channels, b.out_channels, b.out.h, b.out.w);
  const auto elements = static_cast<std::uint64_t>(b.out_channels) * static_cast<std::uint64_t>(b.out.h) *
                        static_cast<std::uint64_t>(b.out.w);
  if (b.batch_norm) e.norm = 2 * elements;
  if (b.activation) e.activation = 2 * elements;
  return e;
}

std::uint64_t FlopsReport::network_total(const std::string& network) const {
  std::uint64_t total = 0;
  for (const auto& e : entries) {
    if (e.network == network) total += e.total();
  }
  return total;
}

std::uint64_t FlopsReport::grand_total() const {
  std::uint64_t total = 0;
  for (const auto& e : entries) total += e.total();
  return total;
}

std::string FlopsReport::csv() const {
  std::string out = "network,layer,conv,norm,activation,add,total\n";
  std::vector<std::string> networks;
  for (const auto& e : entries) {
    out += fmt::format("{},{},{},{},{},{},{}\n", e.network, e.layer, e.conv, e.norm, e.activation, e.add,
                       e.total());
    if (std::find(networks.begin(), networks.end(), e.network) == networks.end()) networks.push_back(e.network);
  }
  for (const auto& n : networks) out += fmt::format("{},total,,,,,{}\n", n, network_total(n));
  out += fmt::format("all,total,,,,,{}\n", grand_total());
  return out;
}

std::string FlopsReport::summary() const {
  const double g = static_cast<double>(network_total("generator"));
  const double d = static_cast<double>(network_total("discriminators"));
  std::string out;
  out += fmt::format("generator       {:>20} FLOPs ({:.4g} T)\n", network_total("generator"), g / 1e12);
  out += fmt::format("discriminators  {:>20} FLOPs ({:.4g} T)\n", network_total("discriminators"), d / 1e12);
  out += fmt::format("grand total     {:>20} FLOPs ({:.4g} T)\n", grand_total(),
                     static_cast<double>(grand_total()) / 1e12);
  out += fmt::format("reference       {:>20.0f} FLOPs; generator/reference = {:.3f}\n", kReferenceFlops,
                     g / kReferenceFlops);
  return out;
}

FlopsReport count_flops(const ArchitectureConfig& config) {
  config.validate();
  FlopsReport report;
  const auto topo = describe_generator(config);
  for (const auto& level : topo.encoder) {
    if (level.down) report.entries.push_back(block_flops("generator", *level.down));
    if (level.fuse) report.entries.push_back(block_flops("generator", *level.fuse));
    for (const auto& b : level.main) report.entries.push_back(block_flops("generator", b));
  }
  for (const auto& level : topo.decoder) {
    FlopsEntry up = block_flops("generator", level.up);
    up.add = static_cast<std::uint64_t>(level.up.out_channels) * static_cast<std::uint64_t>(level.up.out.h) *
             static_cast<std::uint64_t>(level.up.out.w);
    report.entries.push_back(up);
    report.entries.push_back(block_flops("generator", level.merge));
    if (level.head) report.entries.push_back(block_flops("generator", *level.head));
  }
  for (std::size_t k = 0; k < config.scale_chain.size(); ++k) {
    for (const auto& b : describe_discriminator(config.scale_chain[k], config.discriminator_width,
                                                config.leaky_slope, fmt::format("disc{}", k))) {
      report.entries.push_back(block_flops("discriminators", b));
    }
  }
  return report;
}

}  // namespace msgu
