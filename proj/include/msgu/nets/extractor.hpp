#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "msgu/ops.hpp"

namespace msgu {

/// Frozen convolutional feature stack for the perceptual distance. Stage
/// i > 0 halves the incoming extent before its convolution. Weights never
/// require grad; gradients still reach the image argument.
class FeatureExtractor {
 public:
  struct Stage {
    Tensor weight;  // [Cout, Cin, K, K]
    Tensor bias;    // [1, Cout, 1, 1]
    bool halve = false;
    std::optional<Activation> activation;
  };

  FeatureExtractor() = default;
  explicit FeatureExtractor(std::vector<Stage> stages);

  /// 3x3 stages with seeded orthogonal weights and leaky activations.
  static FeatureExtractor seeded(const std::vector<int>& widths, Real leaky_slope,
                                 std::uint64_t seed);
  /// One 1x1 identity stage without activation: the tap is the image itself.
  static FeatureExtractor identity();
  /// Rebuilds from tensors named extractor.stage<i>.weight / .bias, as
  /// written by parameters().
  static FeatureExtractor from_parameters(const TensorList& tensors, Real leaky_slope);

  std::vector<Tensor> forward(const Tensor& image) const;

  int taps() const { return static_cast<int>(stages_.size()); }
  const std::vector<Stage>& stages() const { return stages_; }
  TensorList parameters() const;

 private:
  std::vector<Stage> stages_;
};

}  // namespace msgu
