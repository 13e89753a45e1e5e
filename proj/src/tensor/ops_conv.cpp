#include <algorithm>

#include <Eigen/Core>
#include <fmt/format.h>

#include "msgu/ops.hpp"

namespace msgu {
namespace {

using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

struct Geometry {
  std::int64_t channels;  // channels of the "image" side
  std::int64_t h, w;      // image extent
  std::int64_t kh, kw;
  std::int64_t oh, ow;    // patch-grid extent
  int stride;
  Padding2d pad;

  std::int64_t rows() const { return channels * kh * kw; }
  std::int64_t cols() const { return oh * ow; }
  bool pointwise() const {
    return kh == 1 && kw == 1 && stride == 1 && pad == Padding2d{};
  }
};

void im2col(const Real* img, const Geometry& g, Real* cols) {
  const std::int64_t ncols = g.cols();
  for (std::int64_t c = 0; c < g.channels; ++c) {
    for (std::int64_t ky = 0; ky < g.kh; ++ky) {
      for (std::int64_t kx = 0; kx < g.kw; ++kx) {
        Real* row = cols + ((c * g.kh + ky) * g.kw + kx) * ncols;
        for (std::int64_t oy = 0; oy < g.oh; ++oy) {
          const std::int64_t iy = oy * g.stride - g.pad.top + ky;
          Real* dst = row + oy * g.ow;
          if (iy < 0 || iy >= g.h) {
            std::fill(dst, dst + g.ow, Real(0));
            continue;
          }
          const Real* src = img + (c * g.h + iy) * g.w;
          for (std::int64_t ox = 0; ox < g.ow; ++ox) {
            const std::int64_t ix = ox * g.stride - g.pad.left + kx;
            dst[ox] = (ix >= 0 && ix < g.w) ? src[ix] : Real(0);
          }
        }
      }
    }
  }
}

// Scatter-add of im2col's layout back onto the image.
void col2im(const Real* cols, const Geometry& g, Real* img) {
  const std::int64_t ncols = g.cols();
  for (std::int64_t c = 0; c < g.channels; ++c) {
    for (std::int64_t ky = 0; ky < g.kh; ++ky) {
      for (std::int64_t kx = 0; kx < g.kw; ++kx) {
        const Real* row = cols + ((c * g.kh + ky) * g.kw + kx) * ncols;
        for (std::int64_t oy = 0; oy < g.oh; ++oy) {
          const std::int64_t iy = oy * g.stride - g.pad.top + ky;
          if (iy < 0 || iy >= g.h) continue;
          const Real* src = row + oy * g.ow;
          Real* dst = img + (c * g.h + iy) * g.w;
          for (std::int64_t ox = 0; ox < g.ow; ++ox) {
            const std::int64_t ix = ox * g.stride - g.pad.left + kx;
            if (ix >= 0 && ix < g.w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

std::int64_t conv_extent(const char* op, const char* axis, std::int64_t in, int pad_lo,
                         int pad_hi, std::int64_t k, int stride) {
  const std::int64_t span = in + pad_lo + pad_hi - k;
  if (span < 0 || span % stride != 0) {
    throw std::invalid_argument(fmt::format(
        "{}: output {} = ({} + {} + {} - {}) / {} + 1 is not a positive integer", op, axis, in,
        pad_lo, pad_hi, k, stride));
  }
  return span / stride + 1;
}

void check_common(const char* op, const Tensor& input, const Tensor& weight, int stride,
                  Padding2d pad) {
  if (!input.defined() || !weight.defined()) {
    throw std::invalid_argument(fmt::format("{}: undefined input or weight", op));
  }
  if (stride < 1) throw std::invalid_argument(fmt::format("{}: stride must be >= 1", op));
  if (pad.top < 0 || pad.bottom < 0 || pad.left < 0 || pad.right < 0) {
    throw std::invalid_argument(fmt::format("{}: padding must be non-negative", op));
  }
}

void check_bias(const char* op, const Tensor& bias, std::int64_t channels) {
  if (bias.defined() && bias.numel() != channels) {
    throw std::invalid_argument(fmt::format("{}: bias {} does not hold {} channels", op,
                                            bias.shape().str(), channels));
  }
}

void add_bias(Real* out, const Tensor& bias, std::int64_t channels, std::int64_t plane) {
  if (!bias.defined()) return;
  const auto b = bias.data();
  for (std::int64_t c = 0; c < channels; ++c) {
    Real* p = out + c * plane;
    const Real v = b[static_cast<std::size_t>(c)];
    for (std::int64_t i = 0; i < plane; ++i) p[i] += v;
  }
}

void accumulate_bias_grad(const Tensor& bias, std::span<const Real> grad_out, std::int64_t batch,
                          std::int64_t channels, std::int64_t plane) {
  auto gb = bias.ensure_grad();
  for (std::int64_t n = 0; n < batch; ++n) {
    for (std::int64_t c = 0; c < channels; ++c) {
      const Real* p = grad_out.data() + (n * channels + c) * plane;
      Real acc = 0;
      for (std::int64_t i = 0; i < plane; ++i) acc += p[i];
      gb[static_cast<std::size_t>(c)] += acc;
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
              int padding) {
  return conv2d(input, weight, bias, stride, Padding2d::symmetric(padding));
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
              Padding2d pad) {
  check_common("conv2d", input, weight, stride, pad);
  const Shape is = input.shape();
  const Shape ws = weight.shape();
  if (ws.c != is.c) {
    throw std::invalid_argument(fmt::format("conv2d: input {} has {} channels but weight {} expects {}",
                                            is.str(), is.c, ws.str(), ws.c));
  }
  check_bias("conv2d", bias, ws.n);
  const std::int64_t oh = conv_extent("conv2d", "height", is.h, pad.top, pad.bottom, ws.h, stride);
  const std::int64_t ow = conv_extent("conv2d", "width", is.w, pad.left, pad.right, ws.w, stride);

  const Geometry g{is.c, is.h, is.w, ws.h, ws.w, oh, ow, stride, pad};
  const std::int64_t cout = ws.n;
  const Shape os{is.n, cout, oh, ow};
  std::vector<Real> out(static_cast<std::size_t>(os.numel()));
  std::vector<Real> cols(g.pointwise() ? 0 : static_cast<std::size_t>(g.rows() * g.cols()));

  const ConstMatMap wmat(weight.data().data(), cout, g.rows());
  const std::int64_t in_plane = is.c * is.h * is.w;
  const std::int64_t out_plane = cout * oh * ow;
  for (std::int64_t n = 0; n < is.n; ++n) {
    const Real* img = input.data().data() + n * in_plane;
    const Real* colp = img;
    if (!g.pointwise()) {
      im2col(img, g, cols.data());
      colp = cols.data();
    }
    MatMap(out.data() + n * out_plane, cout, g.cols()).noalias() =
        wmat * ConstMatMap(colp, g.rows(), g.cols());
    add_bias(out.data() + n * out_plane, bias, cout, oh * ow);
  }

  std::vector<Tensor> inputs{input, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result(
      os, std::move(out), "conv2d", std::move(inputs),
      [input, weight, bias, g, cout, in_plane, out_plane](std::span<const Real> gout,
                                                          std::span<const Real>) mutable {
        const std::int64_t batch = input.shape().n;
        std::vector<Real> cols(static_cast<std::size_t>(g.rows() * g.cols()));
        const bool need_w = weight.requires_grad();
        const bool need_x = input.requires_grad();
        for (std::int64_t n = 0; n < batch; ++n) {
          const ConstMatMap gmat(gout.data() + n * out_plane, cout, g.cols());
          if (need_w) {
            const Real* img = input.data().data() + n * in_plane;
            const Real* colp = img;
            if (!g.pointwise()) {
              im2col(img, g, cols.data());
              colp = cols.data();
            }
            MatMap(weight.ensure_grad().data(), cout, g.rows()).noalias() +=
                gmat * ConstMatMap(colp, g.rows(), g.cols()).transpose();
          }
          if (need_x) {
            const ConstMatMap wmat(weight.data().data(), cout, g.rows());
            Real* gx = input.ensure_grad().data() + n * in_plane;
            if (g.pointwise()) {
              MatMap(gx, g.rows(), g.cols()).noalias() += wmat.transpose() * gmat;
            } else {
              MatMap(cols.data(), g.rows(), g.cols()).noalias() = wmat.transpose() * gmat;
              col2im(cols.data(), g, gx);
            }
          }
        }
        if (bias.defined() && bias.requires_grad()) {
          accumulate_bias_grad(bias, gout, batch, cout, g.cols());
        }
      });
}

Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
                        int stride, int padding) {
  const Padding2d pad = Padding2d::symmetric(padding);
  check_common("conv_transpose2d", input, weight, stride, pad);
  const Shape is = input.shape();
  const Shape ws = weight.shape();
  if (ws.n != is.c) {
    throw std::invalid_argument(
        fmt::format("conv_transpose2d: input {} has {} channels but weight {} expects {}",
                    is.str(), is.c, ws.str(), ws.n));
  }
  const std::int64_t cout = ws.c;
  check_bias("conv_transpose2d", bias, cout);
  const std::int64_t oh = (is.h - 1) * stride - 2 * padding + ws.h;
  const std::int64_t ow = (is.w - 1) * stride - 2 * padding + ws.w;
  if (oh < 1 || ow < 1) {
    throw std::invalid_argument(fmt::format(
        "conv_transpose2d: output ({} - 1) * {} - 2 * {} + {} = {} x {} is not positive", is.h,
        stride, padding, ws.h, oh, ow));
  }
  // The equivalent forward convolution maps the output image back onto the
  // input grid; its patch grid must coincide with the input extent.
  const Geometry g{cout, oh, ow, ws.h, ws.w, is.h, is.w, stride, pad};

  const Shape os{is.n, cout, oh, ow};
  std::vector<Real> out(static_cast<std::size_t>(os.numel()), Real(0));
  std::vector<Real> cols(static_cast<std::size_t>(g.rows() * g.cols()));
  const ConstMatMap wmat(weight.data().data(), is.c, g.rows());
  const std::int64_t in_plane = is.c * is.h * is.w;
  const std::int64_t out_plane = cout * oh * ow;
  for (std::int64_t n = 0; n < is.n; ++n) {
    const ConstMatMap x(input.data().data() + n * in_plane, is.c, g.cols());
    MatMap(cols.data(), g.rows(), g.cols()).noalias() = wmat.transpose() * x;
    col2im(cols.data(), g, out.data() + n * out_plane);
    add_bias(out.data() + n * out_plane, bias, cout, oh * ow);
  }

  std::vector<Tensor> inputs{input, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result(
      os, std::move(out), "conv_transpose2d", std::move(inputs),
      [input, weight, bias, g, in_plane, out_plane](std::span<const Real> gout,
                                                    std::span<const Real>) mutable {
        const Shape is = input.shape();
        std::vector<Real> cols(static_cast<std::size_t>(g.rows() * g.cols()));
        const bool need_w = weight.requires_grad();
        const bool need_x = input.requires_grad();
        for (std::int64_t n = 0; n < is.n; ++n) {
          im2col(gout.data() + n * out_plane, g, cols.data());
          const ConstMatMap cmat(cols.data(), g.rows(), g.cols());
          if (need_x) {
            const ConstMatMap wmat(weight.data().data(), is.c, g.rows());
            MatMap(input.ensure_grad().data() + n * in_plane, is.c, g.cols()).noalias() +=
                wmat * cmat;
          }
          if (need_w) {
            const ConstMatMap x(input.data().data() + n * in_plane, is.c, g.cols());
            MatMap(weight.ensure_grad().data(), is.c, g.rows()).noalias() += x * cmat.transpose();
          }
        }
        if (bias.defined() && bias.requires_grad()) {
          accumulate_bias_grad(bias, gout, is.n, g.channels, g.h * g.w);
        }
      });
}

}  // namespace msgu
