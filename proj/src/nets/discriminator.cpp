#include "msgu/nets/discriminator.hpp"

#include <stdexcept>

#include <fmt/format.h>

namespace msgu {

PatchDiscriminator::PatchDiscriminator(Extent input, int base_width, Real leaky_slope,
                                       Real bn_epsilon, Real bn_momentum,
                                       const std::string& prefix, std::mt19937_64& rng)
    : input_(input) {
  for (auto& spec : describe_discriminator(input, base_width, leaky_slope, prefix)) {
    blocks_.emplace_back(std::move(spec), rng, bn_epsilon, bn_momentum);
  }
}

DiscriminatorOutput PatchDiscriminator::forward(const Tensor& source, const Tensor& candidate,
                                                Mode mode) {
  const Shape& s = source.shape();
  const Shape& c = candidate.shape();
  if (s != c || s.c != 3 || s.h != input_.h || s.w != input_.w) {
    throw std::invalid_argument(fmt::format(
        "discriminator for {} got source {} and candidate {}", input_.str(), s.str(), c.str()));
  }
  DiscriminatorOutput out;
  Tensor h = concat_channels(source, candidate);
  for (auto& block : blocks_) {
    h = block.forward(h, mode);
    out.features.push_back(h);
  }
  out.logits = h;
  return out;
}

TensorList PatchDiscriminator::parameters() const {
  TensorList out;
  for (const auto& b : blocks_) b.append_parameters(out);
  return out;
}

TensorList PatchDiscriminator::buffers() const {
  TensorList out;
  for (const auto& b : blocks_) b.append_buffers(out);
  return out;
}

DiscriminatorBank::DiscriminatorBank(const ArchitectureConfig& config, std::uint64_t seed) {
  config.validate();
  for (std::size_t k = 0; k < config.scale_chain.size(); ++k) {
    auto rng = make_rng(seed, 2, k);
    discs_.emplace_back(config.scale_chain[k], config.discriminator_width, config.leaky_slope,
                        config.bn_epsilon, config.bn_momentum, fmt::format("disc{}", k), rng);
  }
}

DiscriminatorOutput DiscriminatorBank::forward(std::size_t k, const Tensor& source,
                                               const Tensor& candidate, Mode mode) {
  if (k >= discs_.size()) {
    throw std::out_of_range(fmt::format("discriminator {} of a bank of {}", k, discs_.size()));
  }
  return discs_[k].forward(source, candidate, mode);
}

TensorList DiscriminatorBank::parameters() const {
  TensorList out;
  for (const auto& d : discs_) {
    auto p = d.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

TensorList DiscriminatorBank::buffers() const {
  TensorList out;
  for (const auto& d : discs_) {
    auto p = d.buffers();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

}  // namespace msgu
