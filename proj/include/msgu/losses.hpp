#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msgu/nets/extractor.hpp"
#include "msgu/pyramid.hpp"

namespace msgu {

/// Multipliers of the feature-matching (alpha) and perceptual (beta) terms.
struct LossWeights {
  Real alpha = 10;
  Real beta = Real(0.25);

  void validate() const;
};

/// Least-squares discriminator loss: 0.5 * (mean (real - 1)^2 + mean fake^2).
Tensor adversarial_d_loss(const Tensor& real_logits, const Tensor& fake_logits);

/// Least-squares generator loss: mean (fake - 1)^2.
Tensor adversarial_g_loss(const Tensor& fake_logits);

/// Per scale, per tap element-mean L1 between discriminator features,
/// summed. The real features are detached here, so only the fake branch
/// carries gradient.
Tensor feature_matching_loss(const std::vector<std::vector<Tensor>>& real_features,
                             const std::vector<std::vector<Tensor>>& fake_features);

/// Sum over scales and extractor taps of element-mean L1 between the
/// features of target and output. Targets never carry gradient.
Tensor perceptual_loss(const FeatureExtractor& extractor, const ScalePyramid& targets,
                       const ScalePyramid& outputs);

/// Per-term values of one optimization step.
struct LossReport {
  std::int64_t step = 0;
  std::vector<double> adv_g;  // one per scale with a head
  std::vector<double> adv_d;
  double fm = 0;
  double perc = 0;
  double total_g = 0;
  double total_d = 0;

  /// total_g and total_d match their parts to the given relative tolerance.
  bool consistent(const LossWeights& w, double tolerance = 1e-6) const;

  static std::string csv_header(std::size_t scales);
  std::string csv_row() const;
};

struct GeneratorObjective {
  Tensor total;
  LossReport report;
};

/// sum_k adv_k + alpha * fm + beta * perc. fm or perc may be undefined,
/// which stands for a term that was not evaluated (reported as 0).
GeneratorObjective total_g_loss(const std::vector<Tensor>& adv_terms, const Tensor& fm,
                                const Tensor& perc, const LossWeights& w);

/// Unweighted sum of the per-scale discriminator losses. Fills the adv_d and
/// total_d fields of `report`.
Tensor total_d_loss(const std::vector<Tensor>& d_terms, LossReport& report);

}  // namespace msgu
