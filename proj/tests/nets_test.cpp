#include <random>
#include <set>

#include <gtest/gtest.h>

#include "msgu/nets/discriminator.hpp"
#include "msgu/nets/extractor.hpp"
#include "msgu/nets/generator.hpp"
#include "msgu/optim.hpp"
#include "support/fixtures.hpp"

namespace msgu {
namespace {

using testing::any_nonzero;
using testing::random_pyramid;
using testing::random_tensor;

std::int64_t numel_sum(const TensorList& list) {
  std::int64_t n = 0;
  for (const auto& t : list) n += t.tensor.numel();
  return n;
}

// Parameter walk written out per level, without the topology code.
std::int64_t hand_parameter_count(const std::vector<int>& w, int scales, int kernel, bool heads) {
  auto block = [](std::int64_t cin, std::int64_t cout, std::int64_t k, bool bn, bool bias) {
    return cin * cout * k * k + (bn ? 2 * cout : 0) + (bias ? cout : 0);
  };
  const int levels = static_cast<int>(w.size());
  std::int64_t total = block(3, w[0], kernel, true, false) + block(w[0], w[0], kernel, true, false);
  for (int l = 1; l < levels; ++l) {
    total += block(w[l - 1], w[l], 4, true, false);
    if (l < scales) total += block(w[l] + 3, w[l], 1, true, false);
    total += block(w[l], w[l], kernel, true, false);
  }
  for (int l = levels - 2; l >= 0; --l) {
    total += block(w[l + 1], w[l], 4, true, false) + block(w[l], w[l], kernel, true, false);
    if (l < scales && (heads || l == 0)) total += block(w[l], 3, 3, false, true);
  }
  return total;
}

TEST(ArchitectureConfig, ToyValidates) {
  const auto c = ArchitectureConfig::toy();
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.level_count(), 5);
  EXPECT_EQ(c.level_extent(4), (Extent{8, 4}));
}

TEST(ArchitectureConfig, RejectsNonDoublingChain) {
  auto c = ArchitectureConfig::toy();
  c.scale_chain = {{32, 16}, {48, 24}, {128, 64}};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(MsgUNetGenerator(c, 0), std::invalid_argument);
}

TEST(ArchitectureConfig, RejectsBadAspectAndWidths) {
  auto c = ArchitectureConfig::toy();
  c.scale_chain = {{24, 8}, {48, 16}, {96, 32}};
  c.bottleneck = {6, 2};
  EXPECT_THROW(c.validate(), std::invalid_argument);

  c = ArchitectureConfig::toy();
  c.channel_widths = {8, 16, 32};
  EXPECT_THROW(c.validate(), std::invalid_argument);

  c = ArchitectureConfig::toy();
  c.bottleneck = {32, 16};
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(ArchitectureConfig, ExtentParsing) {
  EXPECT_EQ(Extent::parse("128x64"), (Extent{128, 64}));
  EXPECT_EQ((Extent{32, 16}).str(), "32x16");
  EXPECT_THROW(Extent::parse("128*64"), std::invalid_argument);
  EXPECT_THROW(Extent::parse("0x4"), std::invalid_argument);
}

TEST(ArchitectureConfig, DefaultWidthsDoubleAndCap) {
  EXPECT_EQ(default_channel_widths(7), (std::vector<int>{16, 32, 64, 128, 256, 256, 256}));
}

TEST(Generator, ToyParameterCountMatchesHandWalk) {
  const auto c = ArchitectureConfig::toy();
  const std::int64_t oracle = hand_parameter_count(c.channel_widths, 3, 4, true);
  EXPECT_EQ(oracle, 182433);
  EXPECT_EQ(describe_generator(c).parameter_count(), oracle);
  const MsgUNetGenerator g(c, 0);
  EXPECT_EQ(numel_sum(g.parameters()), oracle);
}

TEST(Generator, HeadsOffParameterCount) {
  auto c = ArchitectureConfig::toy();
  c.intermediate_heads = false;
  const MsgUNetGenerator g(c, 0);
  EXPECT_EQ(numel_sum(g.parameters()), hand_parameter_count(c.channel_widths, 3, 4, false));
}

TEST(Generator, CityscapesDryWalkAllocatesNothing) {
  const auto c = ArchitectureConfig::cityscapes();
  const auto before = tensor_allocations();
  const auto topo = describe_generator(c);
  EXPECT_EQ(tensor_allocations(), before);
  EXPECT_EQ(topo.injections(), 5);
  EXPECT_EQ(topo.heads(), 5);
  EXPECT_EQ(topo.encoder.size(), 9u);
  EXPECT_EQ(topo.encoder.back().extent, (Extent{8, 4}));
  std::set<std::string> head_extents;
  for (const auto& d : topo.decoder) {
    if (d.head) head_extents.insert(d.head->out.str());
  }
  EXPECT_EQ(head_extents, (std::set<std::string>{"128x64", "256x128", "512x256", "1024x512",
                                                 "2048x1024"}));
}

TEST(Generator, SquareVariantWalk) {
  const auto topo = describe_generator(ArchitectureConfig::square512());
  EXPECT_EQ(topo.injections(), 4);
  EXPECT_EQ(topo.heads(), 4);
  EXPECT_EQ(topo.encoder.back().extent, (Extent{4, 4}));
}

TEST(Generator, ToyForwardShapesAndRange) {
  const auto c = ArchitectureConfig::toy();
  MsgUNetGenerator g(c, 1);
  const auto out = g.forward(random_pyramid(c.scale_chain, 1, 3), Mode::train);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].shape(), (Shape{1, 3, 32, 16}));
  EXPECT_EQ(out[1].shape(), (Shape{1, 3, 64, 32}));
  EXPECT_EQ(out[2].shape(), (Shape{1, 3, 128, 64}));
  EXPECT_EQ(g.head_scales(), (std::vector<int>{0, 1, 2}));
  for (const auto& img : out.images) {
    for (Real v : img.data()) {
      EXPECT_GT(v, -1);
      EXPECT_LT(v, 1);
    }
  }
}

TEST(Generator, HeadsOffEmitsFinestOnly) {
  auto c = ArchitectureConfig::toy();
  c.intermediate_heads = false;
  MsgUNetGenerator g(c, 1);
  const auto out = g.forward(random_pyramid(c.scale_chain, 1, 3), Mode::train);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].shape(), (Shape{1, 3, 128, 64}));
  EXPECT_EQ(g.head_scales(), (std::vector<int>{2}));
}

TEST(Generator, RejectsMismatchedPyramid) {
  const auto c = ArchitectureConfig::toy();
  MsgUNetGenerator g(c, 1);
  auto p = random_pyramid(c.scale_chain, 1, 3);
  p.images.pop_back();
  EXPECT_THROW(g.forward(p, Mode::train), std::invalid_argument);
  auto q = random_pyramid({{32, 16}, {64, 32}, {128, 32}}, 1, 3);
  EXPECT_THROW(g.forward(q, Mode::train), std::invalid_argument);
}

TEST(Generator, SeedDeterminesParameters) {
  const auto c = ArchitectureConfig::toy();
  const MsgUNetGenerator a(c, 42);
  const MsgUNetGenerator b(c, 42);
  const MsgUNetGenerator other(c, 43);
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  const auto po = other.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  bool differs = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].name, pb[i].name);
    const auto x = pa[i].tensor.data();
    const auto y = pb[i].tensor.data();
    EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin())) << pa[i].name;
    const auto z = po[i].tensor.data();
    differs = differs || !std::equal(x.begin(), x.end(), z.begin());
  }
  EXPECT_TRUE(differs);
}

TEST(Generator, CoarsestHeadReachesWholeEncoder) {
  const auto c = ArchitectureConfig::toy();
  MsgUNetGenerator g(c, 5);
  const auto out = g.forward(random_pyramid(c.scale_chain, 2, 9), Mode::train);
  backward(testing::project(out[0], testing::random_weights(out[0].numel(), 4)));

  for (const auto& p : g.parameters()) {
    // Decoder levels 0 and 1 sit above the coarsest branch (level 2).
    const bool above_branch = p.name.rfind("generator.dec0", 0) == 0 ||
                              p.name.rfind("generator.dec1", 0) == 0;
    if (above_branch) {
      EXPECT_FALSE(p.tensor.has_grad() && any_nonzero(p.tensor.grad())) << p.name;
    } else {
      ASSERT_TRUE(p.tensor.has_grad()) << p.name;
      EXPECT_TRUE(any_nonzero(p.tensor.grad())) << p.name;
    }
  }
}

TEST(Generator, HeadGradientsAdd) {
  const auto c = ArchitectureConfig::toy();
  MsgUNetGenerator g(c, 6);
  const auto input = random_pyramid(c.scale_chain, 2, 10);
  const auto params = g.parameters();

  auto head_loss = [&](const ScalePyramid& out, std::size_t k) {
    return testing::project(out[k], testing::random_weights(out[k].numel(), 20 + k));
  };

  std::vector<std::vector<double>> summed(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) summed[i].assign(params[i].tensor.numel(), 0.0);
  for (std::size_t k = 0; k < 3; ++k) {
    zero_grad(params);
    const auto out = g.forward(input, Mode::train);
    backward(head_loss(out, k));
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!params[i].tensor.has_grad()) continue;
      const auto gr = params[i].tensor.grad();
      for (std::size_t j = 0; j < gr.size(); ++j) summed[i][j] += gr[j];
    }
  }

  zero_grad(params);
  const auto out = g.forward(input, Mode::train);
  backward(add(add(head_loss(out, 0), head_loss(out, 1)), head_loss(out, 2)));
  double worst = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto gr = params[i].tensor.grad();
    for (std::size_t j = 0; j < gr.size(); ++j) {
      worst = std::max(worst, std::abs(gr[j] - summed[i][j]));
    }
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(Generator, ShapeClosureOverRandomConfigs) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 12; ++trial) {
    ArchitectureConfig c;
    const std::int64_t base = std::int64_t{8} << (rng() % 2);
    const int aspect = static_cast<int>(rng() % 3);
    const Extent coarse = aspect == 0   ? Extent{base, base}
                          : aspect == 1 ? Extent{2 * base, base}
                                        : Extent{base, 2 * base};
    const int scales = 1 + static_cast<int>(rng() % 3);
    for (int k = 0; k < scales; ++k) c.scale_chain.push_back({coarse.h << k, coarse.w << k});
    const int shift = 1 + static_cast<int>(rng() % 2);
    c.bottleneck = {coarse.h >> shift, coarse.w >> shift};
    c.intermediate_heads = rng() % 2 == 0;
    c.discriminator_width = 2;
    c.kernel = 3 + static_cast<int>(rng() % 2);
    for (int l = 0; l < c.level_count(); ++l) c.channel_widths.push_back(2 + static_cast<int>(rng() % 4));

    MsgUNetGenerator g(c, trial);
    const auto out = g.forward(random_pyramid(c.scale_chain, 1, trial), Mode::eval);
    const std::size_t expected = c.intermediate_heads ? c.scale_chain.size() : 1;
    ASSERT_EQ(out.size(), expected) << "trial " << trial;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const Extent e = c.scale_chain[static_cast<std::size_t>(g.head_scales()[i])];
      EXPECT_EQ(out[i].shape(), (Shape{1, 3, e.h, e.w})) << "trial " << trial;
    }
    EXPECT_EQ(out.finest().shape().h, c.finest().h);
  }
}

TEST(Discriminator, PatchMapFollowsShapeWalk) {
  auto rng = make_rng(0, 9);
  PatchDiscriminator d({64, 32}, 8, Real(0.2), Real(1e-5), Real(0.1), "d", rng);
  const auto src = random_tensor({1, 3, 64, 32}, 1, 1, false);
  const auto out = d.forward(src, random_tensor({1, 3, 64, 32}, 2, 1, false), Mode::train);
  // Three stride-2 k4 p1 halvings: 64 -> 32 -> 16 -> 8, 32 -> 4; two
  // stride-1 same-padded layers keep 8x4.
  EXPECT_EQ(out.logits.shape(), (Shape{1, 1, 8, 4}));
  ASSERT_EQ(out.features.size(), 5u);
  EXPECT_EQ(d.feature_count(), 5);
  EXPECT_EQ(out.features[0].shape(), (Shape{1, 8, 32, 16}));
  EXPECT_EQ(out.features[3].shape(), (Shape{1, 64, 8, 4}));
  EXPECT_TRUE(out.features.back().same_node(out.logits));
}

TEST(Discriminator, IdenticalCopyGivesIdenticalOutput) {
  auto rng = make_rng(0, 9);
  PatchDiscriminator d({32, 32}, 4, Real(0.2), Real(1e-5), Real(0.1), "d", rng);
  const auto src = random_tensor({1, 3, 32, 32}, 1, 1, false);
  const auto cand = random_tensor({1, 3, 32, 32}, 2, 1, false);
  const auto a = d.forward(src, cand, Mode::eval);
  const auto b = d.forward(src, cand.clone(), Mode::eval);
  const auto x = a.logits.data();
  const auto y = b.logits.data();
  EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin()));
}

TEST(Discriminator, ConstantInputGivesConstantInterior) {
  auto rng = make_rng(3, 9);
  PatchDiscriminator d({128, 128}, 4, Real(0.2), Real(1e-5), Real(0.1), "d", rng);
  const auto img = Tensor::full({1, 3, 128, 128}, Real(0.3));
  const auto out = d.forward(img, img, Mode::eval);
  ASSERT_EQ(out.logits.shape(), (Shape{1, 1, 16, 16}));
  // Padding reaches rows/cols 0..2 and 11..15 through the two stride-1 layers.
  const Real ref = out.logits.at(0, 0, 3, 3);
  for (int i = 3; i <= 10; ++i) {
    for (int j = 3; j <= 10; ++j) EXPECT_NEAR(out.logits.at(0, 0, i, j), ref, 1e-12);
  }
}

TEST(Discriminator, BankMatchesChainAndRejectsWrongScale) {
  const auto c = ArchitectureConfig::toy();
  DiscriminatorBank bank(c, 0);
  ASSERT_EQ(bank.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(bank[k].input_extent(), c.scale_chain[k]);
  const auto x = random_tensor({1, 3, 64, 32}, 1, 1, false);
  EXPECT_NO_THROW(bank.forward(1, x, x, Mode::train));
  EXPECT_THROW(bank.forward(0, x, x, Mode::train), std::invalid_argument);
  EXPECT_THROW(bank.forward(1, x, random_tensor({1, 3, 32, 16}, 1, 1, false), Mode::train),
               std::invalid_argument);

  // Independent parameters per scale.
  std::set<const TensorImpl*> seen;
  for (const auto& p : bank.parameters()) EXPECT_TRUE(seen.insert(p.tensor.raw()).second);
}

TEST(Extractor, DefaultHasFiveTaps) {
  const ArchitectureConfig c;
  const auto f = FeatureExtractor::seeded(c.extractor_widths, c.leaky_slope, 0);
  EXPECT_EQ(f.taps(), 5);
  const auto taps = f.forward(random_tensor({1, 3, 64, 32}, 3, 1, false));
  ASSERT_EQ(taps.size(), 5u);
  EXPECT_EQ(taps[0].shape(), (Shape{1, 16, 64, 32}));
  EXPECT_EQ(taps[4].shape(), (Shape{1, 64, 4, 2}));
}

TEST(Extractor, DeterministicAndOrthogonal) {
  const auto f = FeatureExtractor::seeded({4, 8}, Real(0.2), 7);
  const auto g = FeatureExtractor::seeded({4, 8}, Real(0.2), 7);
  const auto x = random_tensor({1, 3, 16, 16}, 3, 1, false);
  const auto a = f.forward(x);
  const auto b = g.forward(x.clone());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(std::equal(a[i].data().begin(), a[i].data().end(), b[i].data().begin()));
  }
  // Rows of the first stage weight are orthogonal with a common norm.
  const auto w = f.stages()[0].weight;
  const std::int64_t fan = 27;
  const double gain2 = 2.0 / (1.0 + 0.04);
  for (std::int64_t r = 0; r < 4; ++r) {
    for (std::int64_t s = 0; s < 4; ++s) {
      double d = 0;
      for (std::int64_t j = 0; j < fan; ++j) d += w.data()[r * fan + j] * w.data()[s * fan + j];
      EXPECT_NEAR(d, r == s ? gain2 : 0.0, 1e-10);
    }
  }
}

TEST(Extractor, FrozenWeightsButImageGetsGradient) {
  const auto f = FeatureExtractor::seeded({4, 6, 8}, Real(0.2), 1);
  const auto x = random_tensor({1, 3, 16, 8}, 5, 1, true);
  const auto taps = f.forward(x);
  Tensor loss = mean(taps[0]);
  for (std::size_t i = 1; i < taps.size(); ++i) loss = add(loss, mean(taps[i]));
  backward(loss);
  for (const auto& p : f.parameters()) EXPECT_FALSE(p.tensor.has_grad()) << p.name;
  ASSERT_TRUE(x.has_grad());
  EXPECT_TRUE(any_nonzero(x.grad()));
}

TEST(Extractor, IdentityTapIsTheImage) {
  const auto f = FeatureExtractor::identity();
  const auto x = random_tensor({1, 3, 5, 4}, 5, 1, false);
  const auto taps = f.forward(x);
  ASSERT_EQ(taps.size(), 1u);
  for (std::size_t i = 0; i < x.data().size(); ++i) EXPECT_EQ(taps[0].data()[i], x.data()[i]);
}

TEST(Extractor, RebuildsFromParameters) {
  const auto f = FeatureExtractor::seeded({4, 6}, Real(0.2), 3);
  const auto g = FeatureExtractor::from_parameters(f.parameters(), Real(0.2));
  const auto x = random_tensor({1, 3, 8, 8}, 5, 1, false);
  const auto a = f.forward(x);
  const auto b = g.forward(x);
  ASSERT_EQ(a.size(), b.size());
  EXPECT_TRUE(std::equal(a[1].data().begin(), a[1].data().end(), b[1].data().begin()));
  EXPECT_THROW(FeatureExtractor::from_parameters({}, Real(0.2)), std::invalid_argument);
}

}  // namespace
}  // namespace msgu
