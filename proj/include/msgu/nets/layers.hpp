#pragma once

#include <cstdint>
#include <random>

#include "msgu/nets/topology.hpp"
#include "msgu/ops.hpp"

namespace msgu {

/// Seeded generator for one network. The tag keeps the streams of different
/// networks built from the same run seed apart.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0);

/// Fills t with normal(0, stddev) draws.
void fill_normal(Tensor& t, std::mt19937_64& rng, double stddev);

/// Runtime counterpart of ConvBlockSpec: conv weights drawn from
/// normal(0, 0.02), bias 0, gamma 1, beta 0.
class ConvBlock {
 public:
  ConvBlock() = default;
  ConvBlock(ConvBlockSpec spec, std::mt19937_64& rng, Real bn_epsilon, Real bn_momentum);

  Tensor forward(const Tensor& x, Mode mode);

  const ConvBlockSpec& spec() const { return spec_; }
  void append_parameters(TensorList& out) const;
  void append_buffers(TensorList& out) const;

 private:
  ConvBlockSpec spec_;
  Tensor weight_;
  Tensor bias_;
  Tensor gamma_;
  Tensor beta_;
  Tensor running_mean_;
  Tensor running_var_;
  Real epsilon_ = Real(1e-5);
  Real momentum_ = Real(0.1);
};

}  // namespace msgu
