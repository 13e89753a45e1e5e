#include "msgu/nets/extractor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "msgu/nets/layers.hpp"

namespace msgu {
namespace {

// Rows (or columns, when there are more rows than columns) of the result are
// orthonormal, then scaled by gain.
std::vector<Real> orthogonal(std::int64_t rows, std::int64_t cols, double gain,
                             std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  const bool tall = rows > cols;
  const std::int64_t r = tall ? rows : cols;
  const std::int64_t c = tall ? cols : rows;
  Eigen::MatrixXd m(r, c);
  for (std::int64_t j = 0; j < c; ++j) {
    for (std::int64_t i = 0; i < r; ++i) m(i, j) = dist(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(r, c);
  // Fix the sign ambiguity of QR so the draw is a pure function of the rng.
  const Eigen::MatrixXd rr = qr.matrixQR().topRows(c);
  for (std::int64_t j = 0; j < c; ++j) {
    if (rr(j, j) < 0) q.col(j) *= -1;
  }
  std::vector<Real> out(static_cast<std::size_t>(rows * cols));
  for (std::int64_t i = 0; i < rows; ++i) {
    for (std::int64_t j = 0; j < cols; ++j) {
      const double v = tall ? q(i, j) : q(j, i);
      out[static_cast<std::size_t>(i * cols + j)] = static_cast<Real>(gain * v);
    }
  }
  return out;
}

}  // namespace

FeatureExtractor::FeatureExtractor(std::vector<Stage> stages) : stages_(std::move(stages)) {
  std::int64_t cin = 3;
  for (std::size_t i = 0; i < stages_.size(); ++i) {
    Stage& s = stages_[i];
    const Shape& ws = s.weight.shape();
    if (ws.c != cin || ws.h != ws.w || ws.h % 2 == 0) {
      throw std::invalid_argument(fmt::format(
          "extractor stage {}: weight {} does not take {} channels with an odd square kernel", i,
          ws.str(), cin));
    }
    if (s.bias.defined() && s.bias.numel() != ws.n) {
      throw std::invalid_argument(fmt::format("extractor stage {}: bias {} for {} channels", i,
                                              s.bias.shape().str(), ws.n));
    }
    s.weight.set_requires_grad(false);
    s.weight.set_name(fmt::format("extractor.stage{}.weight", i));
    if (s.bias.defined()) {
      s.bias.set_requires_grad(false);
      s.bias.set_name(fmt::format("extractor.stage{}.bias", i));
    }
    cin = ws.n;
  }
}

FeatureExtractor FeatureExtractor::seeded(const std::vector<int>& widths, Real leaky_slope,
                                          std::uint64_t seed) {
  auto rng = make_rng(seed, 3);
  const double gain = std::sqrt(2.0 / (1.0 + double(leaky_slope) * double(leaky_slope)));
  std::vector<Stage> stages;
  int cin = 3;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const int cout = widths[i];
    Stage s;
    s.weight = Tensor(Shape{cout, cin, 3, 3}, orthogonal(cout, cin * 9, gain, rng));
    s.bias = Tensor(Shape{1, cout, 1, 1});
    s.halve = i > 0;
    s.activation = Activation::leaky(leaky_slope);
    stages.push_back(std::move(s));
    cin = cout;
  }
  return FeatureExtractor(std::move(stages));
}

FeatureExtractor FeatureExtractor::identity() {
  Stage s;
  s.weight = Tensor(Shape{3, 3, 1, 1});
  for (int c = 0; c < 3; ++c) s.weight.at(c, c, 0, 0) = 1;
  return FeatureExtractor({std::move(s)});
}

FeatureExtractor FeatureExtractor::from_parameters(const TensorList& tensors, Real leaky_slope) {
  std::map<std::string, Tensor> by_name;
  for (const auto& t : tensors) by_name[t.name] = t.tensor;
  std::vector<Stage> stages;
  for (std::size_t i = 0;; ++i) {
    const auto w = by_name.find(fmt::format("extractor.stage{}.weight", i));
    if (w == by_name.end()) break;
    Stage s;
    s.weight = w->second.detach();
    const auto b = by_name.find(fmt::format("extractor.stage{}.bias", i));
    if (b != by_name.end()) s.bias = b->second.detach();
    s.halve = i > 0;
    s.activation = Activation::leaky(leaky_slope);
    stages.push_back(std::move(s));
  }
  if (stages.empty()) throw std::invalid_argument("no extractor.stage0.weight among the tensors");
  return FeatureExtractor(std::move(stages));
}

std::vector<Tensor> FeatureExtractor::forward(const Tensor& image) const {
  if (image.shape().c != 3) {
    throw std::invalid_argument(
        fmt::format("extractor expects 3 channels, got {}", image.shape().str()));
  }
  std::vector<Tensor> taps;
  Tensor h = image;
  for (const Stage& s : stages_) {
    if (s.halve) {
      h = resize(h, std::max<std::int64_t>(1, h.shape().h / 2),
                 std::max<std::int64_t>(1, h.shape().w / 2));
    }
    h = conv2d(h, s.weight, s.bias, 1, static_cast<int>(s.weight.shape().h / 2));
    if (s.activation) h = activation(h, *s.activation);
    taps.push_back(h);
  }
  return taps;
}

TensorList FeatureExtractor::parameters() const {
  TensorList out;
  for (const Stage& s : stages_) {
    out.push_back({s.weight.name(), s.weight});
    if (s.bias.defined()) out.push_back({s.bias.name(), s.bias});
  }
  return out;
}

}  // namespace msgu
