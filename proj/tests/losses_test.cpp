#include <fmt/format.h>
#include <gtest/gtest.h>

#include "msgu/losses.hpp"
#include "msgu/nets/discriminator.hpp"
#include "msgu/nets/generator.hpp"
#include "support/fixtures.hpp"

namespace msgu {
namespace {

using testing::gradcheck;
using testing::random_pyramid;
using testing::random_tensor;

TEST(AdversarialLoss, PerfectDiscriminatorScoresZero) {
  const auto real = Tensor::full({1, 1, 4, 2}, 1);
  const auto fake = Tensor::full({1, 1, 4, 2}, 0);
  EXPECT_DOUBLE_EQ(adversarial_d_loss(real, fake).item(), 0.0);
}

TEST(AdversarialLoss, HalfLogits) {
  const auto half = Tensor::full({2, 1, 3, 3}, Real(0.5));
  EXPECT_DOUBLE_EQ(adversarial_d_loss(half, half).item(), 0.25);
}

TEST(AdversarialLoss, GradientSigns) {
  const auto real = Tensor::full({1, 1, 1, 1}, Real(0.5), true);
  const auto fake = Tensor::full({1, 1, 1, 1}, Real(0.5), true);
  backward(adversarial_d_loss(real, fake));
  // Descent moves real up toward 1 and fake down toward 0.
  EXPECT_LT(real.grad()[0], 0);
  EXPECT_GT(fake.grad()[0], 0);
}

TEST(AdversarialLoss, ShapeMismatch) {
  EXPECT_THROW(adversarial_d_loss(Tensor({1, 1, 2, 2}), Tensor({1, 1, 2, 1})),
               std::invalid_argument);
}

TEST(AdversarialLoss, GeneratorTerm) {
  EXPECT_DOUBLE_EQ(adversarial_g_loss(Tensor::full({1, 1, 2, 2}, 1)).item(), 0.0);
  EXPECT_DOUBLE_EQ(adversarial_g_loss(Tensor::full({1, 1, 2, 2}, 0)).item(), 1.0);
}

std::vector<std::vector<Tensor>> random_features(std::size_t scales, std::size_t taps,
                                                 std::uint64_t seed, bool requires_grad) {
  std::vector<std::vector<Tensor>> out(scales);
  for (std::size_t k = 0; k < scales; ++k) {
    for (std::size_t i = 0; i < taps; ++i) {
      out[k].push_back(random_tensor({1, static_cast<std::int64_t>(2 + i), 3, 2},
                                     seed * 100 + k * 10 + i, 1, requires_grad));
    }
  }
  return out;
}

TEST(FeatureMatching, IdenticalListsGiveZero) {
  const auto f = random_features(3, 5, 1, false);
  EXPECT_DOUBLE_EQ(feature_matching_loss(f, f).item(), 0.0);
}

TEST(FeatureMatching, UnitOffsetGivesScalesTimesTaps) {
  const auto real = random_features(3, 5, 1, false);
  auto fake = real;
  for (auto& scale_feats : fake) {
    for (auto& t : scale_feats) {
      t = t.clone();
      for (Real& v : t.data()) v += 1;
    }
  }
  EXPECT_NEAR(feature_matching_loss(real, fake).item(), 15.0, 1e-12);
}

TEST(FeatureMatching, FiniteDifferences) {
  const auto real = random_features(2, 2, 3, true);
  const auto fake = random_features(2, 2, 4, true);
  TensorList leaves;
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t i = 0; i < 2; ++i) leaves.push_back({fmt::format("fake{}{}", k, i), fake[k][i]});
  }
  const auto r = gradcheck([&] { return feature_matching_loss(real, fake); }, leaves);
  EXPECT_LT(r.worst_relative_error, 1e-3) << r.worst_name;
  for (const auto& scale_feats : real) {
    for (const auto& t : scale_feats) EXPECT_FALSE(t.has_grad());
  }
}

TEST(FeatureMatching, TapCountMismatch) {
  const auto a = random_features(2, 5, 1, false);
  const auto b = random_features(2, 4, 1, false);
  EXPECT_THROW(feature_matching_loss(a, b), std::invalid_argument);
  EXPECT_THROW(feature_matching_loss(a, random_features(1, 5, 1, false)), std::invalid_argument);
}

TEST(Perceptual, EqualPyramidsGiveZero) {
  const auto f = FeatureExtractor::seeded({4, 6, 8}, Real(0.2), 0);
  const auto y = random_pyramid({{8, 4}, {16, 8}}, 1, 2);
  EXPECT_DOUBLE_EQ(perceptual_loss(f, y, y).item(), 0.0);
}

TEST(Perceptual, IdentityExtractorIsPlainL1) {
  const auto y = random_pyramid({{8, 4}}, 1, 2);
  const auto z = random_pyramid({{8, 4}}, 1, 3);
  double l1 = 0;
  for (std::size_t i = 0; i < y[0].data().size(); ++i) {
    l1 += std::abs(y[0].data()[i] - z[0].data()[i]);
  }
  l1 /= static_cast<double>(y[0].numel());
  EXPECT_NEAR(perceptual_loss(FeatureExtractor::identity(), y, z).item(), l1, 1e-14);
}

TEST(Perceptual, FiniteDifferencesInOutputs) {
  const auto f = FeatureExtractor::seeded({3, 4}, Real(0.2), 5);
  const auto y = random_pyramid({{4, 4}, {8, 8}}, 1, 2);
  const auto z = random_pyramid({{4, 4}, {8, 8}}, 1, 3, true);
  const auto r = gradcheck([&] { return perceptual_loss(f, y, z); },
                           {{"z0", z[0]}, {"z1", z[1]}});
  EXPECT_LT(r.worst_relative_error, 1e-3) << r.worst_name;
  EXPECT_FALSE(y[0].has_grad());
}

TEST(Perceptual, MisalignedPyramids) {
  const auto f = FeatureExtractor::identity();
  EXPECT_THROW(perceptual_loss(f, random_pyramid({{8, 4}, {16, 8}}, 1, 2),
                               random_pyramid({{8, 4}}, 1, 2)),
               std::invalid_argument);
  EXPECT_THROW(perceptual_loss(f, random_pyramid({{8, 4}}, 1, 2), random_pyramid({{4, 8}}, 1, 2)),
               std::invalid_argument);
}

TEST(TotalLoss, ArithmeticCase) {
  const std::vector<Tensor> adv(3, Tensor::scalar(1));
  const auto out = total_g_loss(adv, Tensor::scalar(2), Tensor::scalar(4), LossWeights{10, Real(0.25)});
  EXPECT_DOUBLE_EQ(out.total.item(), 24.0);
  EXPECT_EQ(out.report.adv_g.size(), 3u);
  EXPECT_DOUBLE_EQ(out.report.fm, 2.0);
  EXPECT_DOUBLE_EQ(out.report.perc, 4.0);
  EXPECT_TRUE(out.report.consistent(LossWeights{10, Real(0.25)}));
}

TEST(TotalLoss, ZeroWeightsLeaveAdversarialSum) {
  const std::vector<Tensor> adv{Tensor::scalar(Real(0.5)), Tensor::scalar(Real(0.75))};
  const auto out = total_g_loss(adv, Tensor::scalar(2), Tensor::scalar(4), LossWeights{0, 0});
  EXPECT_DOUBLE_EQ(out.total.item(), 1.25);
}

TEST(TotalLoss, DefaultsAndValidation) {
  const LossWeights w;
  EXPECT_DOUBLE_EQ(w.alpha, 10.0);
  EXPECT_DOUBLE_EQ(w.beta, 0.25);
  EXPECT_THROW((LossWeights{-1, 0}.validate()), std::invalid_argument);
  EXPECT_THROW(total_g_loss({}, Tensor{}, Tensor{}, LossWeights{0, -1}), std::invalid_argument);
}

TEST(TotalLoss, ReportCsv) {
  LossReport r;
  r.step = 7;
  r.adv_g = {1, 2};
  r.adv_d = {0.5, 0.25};
  r.fm = 3;
  r.perc = 4;
  r.total_g = 33;
  r.total_d = 0.75;
  EXPECT_EQ(LossReport::csv_header(2), "step,adv_g_1,adv_g_2,adv_d_1,adv_d_2,fm,perc,total_g,total_d");
  EXPECT_EQ(r.csv_row(), "7,1,2,0.5,0.25,3,4,33,0.75");
  EXPECT_TRUE(r.consistent(LossWeights{10, 0}));
  r.total_g = 34;
  EXPECT_FALSE(r.consistent(LossWeights{10, 0}));
}

// Everything the generator update sees: G forward, per-scale D on fake
// pairs, feature matching against real pairs, and the perceptual term.
struct Objective {
  MsgUNetGenerator g;
  DiscriminatorBank bank;
  FeatureExtractor f;
  ScalePyramid x;
  ScalePyramid y;
  LossWeights w;

  Objective(const ArchitectureConfig& c, std::uint64_t seed)
      : g(c, seed),
        bank(c, seed),
        f(FeatureExtractor::seeded(c.extractor_widths, c.leaky_slope, seed)),
        x(random_pyramid(c.scale_chain, 2, seed + 10)),
        y(random_pyramid(c.scale_chain, 2, seed + 20)) {}

  GeneratorObjective operator()() {
    const auto z = g.forward(x, Mode::train);
    std::vector<Tensor> adv;
    std::vector<std::vector<Tensor>> real_feats, fake_feats;
    for (std::size_t k = 0; k < z.size(); ++k) {
      const auto fake = bank.forward(k, x[k], z[k], Mode::train);
      const auto real = bank.forward(k, x[k], y[k], Mode::train);
      adv.push_back(adversarial_g_loss(fake.logits));
      fake_feats.push_back(fake.features);
      real_feats.push_back(real.features);
    }
    return total_g_loss(adv, feature_matching_loss(real_feats, fake_feats),
                        perceptual_loss(f, y, z), w);
  }
};

// Across the whole net a 1e-5 step regularly straddles leaky-ReLU and L1
// kinks; the error shrinks with the step, so the full graph uses 1e-6.
constexpr double kEndToEndStep = 1e-6;

TEST(EndToEnd, GeneratorObjectiveFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Objective obj(testing::micro_config(), seed);
    const auto r = gradcheck([&] { return obj().total; }, obj.g.parameters(), kEndToEndStep);
    EXPECT_LT(r.worst_relative_error, 1e-2) << "seed " << seed << " worst " << r.worst_name;
  }
}

TEST(EndToEnd, ZeroDistanceCollapse) {
  Objective obj(testing::micro_config(), 1);
  // Feed the generator's own output back as the target pyramid.
  ScalePyramid z;
  {
    NoGradGuard guard;
    z = obj.g.forward(obj.x, Mode::eval);
  }
  std::vector<std::vector<Tensor>> feats;
  for (std::size_t k = 0; k < z.size(); ++k) {
    feats.push_back(obj.bank.forward(k, obj.x[k], z[k], Mode::eval).features);
  }
  EXPECT_EQ(feature_matching_loss(feats, feats).item(), 0.0);
  EXPECT_EQ(perceptual_loss(obj.f, z, z).item(), 0.0);
}

TEST(EndToEnd, ScaleDecompositionAndReport) {
  Objective obj(testing::micro_config(), 2);
  const auto out = obj();
  EXPECT_TRUE(out.report.consistent(obj.w));
  const auto z = obj.g.forward(obj.x, Mode::train);
  double separate = 0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    separate += adversarial_g_loss(obj.bank.forward(k, obj.x[k], z[k], Mode::train).logits).item();
  }
  double reported = 0;
  for (double v : out.report.adv_g) reported += v;
  EXPECT_NEAR(reported, separate, 1e-6 * std::max(1.0, separate));
}

}  // namespace
}  // namespace msgu
