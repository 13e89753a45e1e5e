#pragma once

#include "msgu/tensor.hpp"

namespace msgu {

/// Zero padding on each spatial border.
struct Padding2d {
  int top = 0;
  int bottom = 0;
  int left = 0;
  int right = 0;

  static Padding2d symmetric(int p) { return {p, p, p, p}; }
  /// Padding that keeps the spatial size for a stride-1 kernel of size k.
  /// Even kernels put the extra row/column at the bottom/right.
  static Padding2d same(int k) {
    const int lo = (k - 1) / 2;
    const int hi = (k - 1) - lo;
    return {lo, hi, lo, hi};
  }
  bool operator==(const Padding2d&) const = default;
};

/// Cross-correlation. weight is [Cout, Cin, Kh, Kw]; bias, when defined, has
/// Cout elements.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
              Padding2d padding);
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
              int padding);

/// Adjoint of conv2d w.r.t. its input. weight is [Cin, Cout, Kh, Kw].
/// Output extent is (H - 1) * stride - 2 * padding + K.
Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
                        int stride, int padding);

enum class Mode { train, eval };

/// Per-channel normalization. running_mean / running_var hold C values and
/// are updated in place in train mode (unbiased variance, EMA with momentum).
Tensor batch_norm2d(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                    Tensor& running_mean, Tensor& running_var, Mode mode, Real epsilon,
                    Real momentum);

enum class ActivationKind { leaky_relu, tanh, sigmoid };

struct Activation {
  ActivationKind kind = ActivationKind::leaky_relu;
  Real slope = Real(0.2);

  static Activation leaky(Real slope) { return {ActivationKind::leaky_relu, slope}; }
  static Activation tanh() { return {ActivationKind::tanh, 0}; }
  static Activation sigmoid() { return {ActivationKind::sigmoid, 0}; }
};

Tensor activation(const Tensor& input, Activation act);
inline Tensor leaky_relu(const Tensor& x, Real slope) { return activation(x, Activation::leaky(slope)); }
inline Tensor tanh(const Tensor& x) { return activation(x, Activation::tanh()); }
inline Tensor sigmoid(const Tensor& x) { return activation(x, Activation::sigmoid()); }

Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor slice_channels(const Tensor& input, std::int64_t begin, std::int64_t count);

Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, Real factor);

enum class ResizeMethod { bilinear, nearest };

/// Half-pixel-center resampling: output pixel i samples the source at
/// (i + 0.5) * in / out - 0.5, clamped to [0, in - 1]. Nearest is not
/// differentiable and refuses inputs that require grad.
Tensor resize(const Tensor& input, std::int64_t target_h, std::int64_t target_w,
              ResizeMethod method = ResizeMethod::bilinear);

enum class ReduceKind { mean, sum };

Tensor reduce(const Tensor& input, ReduceKind kind);
inline Tensor mean(const Tensor& x) { return reduce(x, ReduceKind::mean); }
inline Tensor sum(const Tensor& x) { return reduce(x, ReduceKind::sum); }

/// Element-mean of |a - b|. The derivative at a tie is taken as 0.
Tensor l1_distance(const Tensor& a, const Tensor& b);

/// Element-mean of (x - label)^2.
Tensor mean_squared_error(const Tensor& x, Real label);

}  // namespace msgu
