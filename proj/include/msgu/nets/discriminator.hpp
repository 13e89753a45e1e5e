#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msgu/nets/layers.hpp"

namespace msgu {

struct DiscriminatorOutput {
  Tensor logits;                 // [N,1,h,w] patch map
  std::vector<Tensor> features;  // one per block, logits last
};

/// Patch discriminator judging a (source, candidate) pair at one extent.
class PatchDiscriminator {
 public:
  PatchDiscriminator(Extent input, int base_width, Real leaky_slope, Real bn_epsilon,
                     Real bn_momentum, const std::string& prefix, std::mt19937_64& rng);

  DiscriminatorOutput forward(const Tensor& source, const Tensor& candidate, Mode mode);

  Extent input_extent() const { return input_; }
  Extent patch_extent() const { return blocks_.back().spec().out; }
  int feature_count() const { return static_cast<int>(blocks_.size()); }
  const std::vector<ConvBlock>& blocks() const { return blocks_; }

  TensorList parameters() const;
  TensorList buffers() const;

 private:
  Extent input_;
  std::vector<ConvBlock> blocks_;
};

/// One independent discriminator per scale-chain entry, named disc0 (coarsest) upward.
class DiscriminatorBank {
 public:
  DiscriminatorBank(const ArchitectureConfig& config, std::uint64_t seed);

  std::size_t size() const { return discs_.size(); }
  PatchDiscriminator& operator[](std::size_t k) { return discs_[k]; }
  const PatchDiscriminator& operator[](std::size_t k) const { return discs_[k]; }

  /// Runs discriminator k; throws if the pair is not at scale k.
  DiscriminatorOutput forward(std::size_t k, const Tensor& source, const Tensor& candidate,
                              Mode mode);

  TensorList parameters() const;
  TensorList buffers() const;

 private:
  std::vector<PatchDiscriminator> discs_;
};

}  // namespace msgu
