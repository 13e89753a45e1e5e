#include "msgu/nets/layers.hpp"

namespace msgu {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

void fill_normal(Tensor& t, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (Real& v : t.data()) v = static_cast<Real>(dist(rng));
}

ConvBlock::ConvBlock(ConvBlockSpec spec, std::mt19937_64& rng, Real bn_epsilon, Real bn_momentum)
    : spec_(std::move(spec)), epsilon_(bn_epsilon), momentum_(bn_momentum) {
  const Shape ws = spec_.transposed
                       ? Shape{spec_.in_channels, spec_.out_channels, spec_.kernel, spec_.kernel}
                       : Shape{spec_.out_channels, spec_.in_channels, spec_.kernel, spec_.kernel};
  weight_ = Tensor(ws, true);
  fill_normal(weight_, rng, 0.02);
  weight_.set_name(spec_.name + ".weight");
  const Shape cs{1, spec_.out_channels, 1, 1};
  if (spec_.bias) {
    bias_ = Tensor(cs, true);
    bias_.set_name(spec_.name + ".bias");
  }
  if (spec_.batch_norm) {
    gamma_ = Tensor::full(cs, 1, true);
    gamma_.set_name(spec_.name + ".gamma");
    beta_ = Tensor(cs, true);
    beta_.set_name(spec_.name + ".beta");
    running_mean_ = Tensor(cs);
    running_mean_.set_name(spec_.name + ".running_mean");
    running_var_ = Tensor::full(cs, 1);
    running_var_.set_name(spec_.name + ".running_var");
  }
}

Tensor ConvBlock::forward(const Tensor& x, Mode mode) {
  Tensor y = spec_.transposed
                 ? conv_transpose2d(x, weight_, bias_, spec_.stride, spec_.padding.top)
                 : conv2d(x, weight_, bias_, spec_.stride, spec_.padding);
  if (spec_.batch_norm) {
    y = batch_norm2d(y, gamma_, beta_, running_mean_, running_var_, mode, epsilon_, momentum_);
  }
  if (spec_.activation) y = activation(y, *spec_.activation);
  return y;
}

void ConvBlock::append_parameters(TensorList& out) const {
  out.push_back({weight_.name(), weight_});
  if (bias_.defined()) out.push_back({bias_.name(), bias_});
  if (gamma_.defined()) {
    out.push_back({gamma_.name(), gamma_});
    out.push_back({beta_.name(), beta_});
  }
}

void ConvBlock::append_buffers(TensorList& out) const {
  if (running_mean_.defined()) {
    out.push_back({running_mean_.name(), running_mean_});
    out.push_back({running_var_.name(), running_var_});
  }
}

}  // namespace msgu
