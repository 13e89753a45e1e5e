#include "msgu/losses.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace msgu {
namespace {

void check_same_shape(const char* what, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(
        fmt::format("{}: shapes {} and {} differ", what, a.shape().str(), b.shape().str()));
  }
}

Tensor sum_all(const std::vector<Tensor>& terms) {
  Tensor acc;
  for (const Tensor& t : terms) acc = acc.defined() ? add(acc, t) : t;
  return acc.defined() ? acc : Tensor::scalar(0);
}

bool close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

void LossWeights::validate() const {
  if (!(alpha >= 0) || !(beta >= 0)) {
    throw std::invalid_argument(
        fmt::format("loss weights must be non-negative (alpha {}, beta {})", alpha, beta));
  }
}

Tensor adversarial_d_loss(const Tensor& real_logits, const Tensor& fake_logits) {
  check_same_shape("adversarial_d_loss", real_logits, fake_logits);
  return scale(add(mean_squared_error(real_logits, 1), mean_squared_error(fake_logits, 0)),
               Real(0.5));
}

Tensor adversarial_g_loss(const Tensor& fake_logits) { return mean_squared_error(fake_logits, 1); }

Tensor feature_matching_loss(const std::vector<std::vector<Tensor>>& real_features,
                             const std::vector<std::vector<Tensor>>& fake_features) {
  if (real_features.size() != fake_features.size()) {
    throw std::invalid_argument(fmt::format("feature_matching_loss: {} real scales, {} fake",
                                            real_features.size(), fake_features.size()));
  }
  std::vector<Tensor> terms;
  for (std::size_t k = 0; k < real_features.size(); ++k) {
    const auto& r = real_features[k];
    const auto& f = fake_features[k];
    if (r.size() != f.size()) {
      throw std::invalid_argument(fmt::format(
          "feature_matching_loss: scale {} has {} real taps and {} fake taps", k, r.size(),
          f.size()));
    }
    for (std::size_t i = 0; i < r.size(); ++i) {
      check_same_shape("feature_matching_loss", r[i], f[i]);
      terms.push_back(l1_distance(f[i], r[i].detach()));
    }
  }
  return sum_all(terms);
}

Tensor perceptual_loss(const FeatureExtractor& extractor, const ScalePyramid& targets,
                       const ScalePyramid& outputs) {
  if (targets.size() != outputs.size()) {
    throw std::invalid_argument(fmt::format("perceptual_loss: {} targets for {} outputs",
                                            targets.size(), outputs.size()));
  }
  std::vector<Tensor> terms;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    check_same_shape("perceptual_loss", targets[k], outputs[k]);
    std::vector<Tensor> want;
    {
      NoGradGuard guard;
      want = extractor.forward(targets[k]);
    }
    const auto got = extractor.forward(outputs[k]);
    for (std::size_t i = 0; i < got.size(); ++i) terms.push_back(l1_distance(got[i], want[i]));
  }
  return sum_all(terms);
}

bool LossReport::consistent(const LossWeights& w, double tolerance) const {
  double g = 0;
  for (double v : adv_g) g += v;
  g += double(w.alpha) * fm + double(w.beta) * perc;
  double d = 0;
  for (double v : adv_d) d += v;
  return close(g, total_g, tolerance) && close(d, total_d, tolerance);
}

std::string LossReport::csv_header(std::size_t scales) {
  std::string h = "step";
  for (std::size_t k = 1; k <= scales; ++k) h += fmt::format(",adv_g_{}", k);
  for (std::size_t k = 1; k <= scales; ++k) h += fmt::format(",adv_d_{}", k);
  return h + ",fm,perc,total_g,total_d";
}

std::string LossReport::csv_row() const {
  std::string row = fmt::format("{}", step);
  for (double v : adv_g) row += fmt::format(",{}", v);
  for (double v : adv_d) row += fmt::format(",{}", v);
  return row + fmt::format(",{},{},{},{}", fm, perc, total_g, total_d);
}

GeneratorObjective total_g_loss(const std::vector<Tensor>& adv_terms, const Tensor& fm,
                                const Tensor& perc, const LossWeights& w) {
  w.validate();
  GeneratorObjective out;
  std::vector<Tensor> terms = adv_terms;
  for (const Tensor& t : adv_terms) out.report.adv_g.push_back(t.item());
  if (fm.defined()) {
    out.report.fm = fm.item();
    if (w.alpha != 0) terms.push_back(scale(fm, w.alpha));
  }
  if (perc.defined()) {
    out.report.perc = perc.item();
    if (w.beta != 0) terms.push_back(scale(perc, w.beta));
  }
  out.total = sum_all(terms);
  out.report.total_g = out.total.item();
  return out;
}

Tensor total_d_loss(const std::vector<Tensor>& d_terms, LossReport& report) {
  report.adv_d.clear();
  for (const Tensor& t : d_terms) report.adv_d.push_back(t.item());
  Tensor total = sum_all(d_terms);
  report.total_d = total.item();
  return total;
}

}  // namespace msgu
