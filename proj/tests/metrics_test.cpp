#include <cmath>
#include <random>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "msgu/metrics.hpp"
#include "support/tempdir.hpp"

namespace msgu {
namespace {

using testing::TempDir;

Image8 constant_image(std::int64_t h, std::int64_t w, std::uint8_t v) {
  return Image8{h, w, std::vector<std::uint8_t>(static_cast<std::size_t>(h * w * 3), v)};
}

std::uint8_t clamp8(double v) { return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0)); }

// Smooth structure plus fine texture, different per channel.
Image8 scene(std::int64_t h, std::int64_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0, 12);
  Image8 img{h, w, std::vector<std::uint8_t>(static_cast<std::size_t>(h * w * 3))};
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = 128 + 60 * std::sin(x / (4.0 + c)) * std::cos(y / (6.0 - c)) +
                         25 * ((x / 8 + y / 8) % 2) + noise(rng);
        img.at(y, x, c) = clamp8(v);
      }
    }
  }
  return img;
}

Image8 add_noise(const Image8& img, double amplitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  Image8 out = img;
  for (auto& v : out.rgb) v = clamp8(v + amplitude * u(rng));
  return out;
}

// Separable Gaussian blur with edge clamping, no rounding to 8 bits.
Plane blur(const Plane& p, double sigma) {
  const int r = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  double total = 0;
  for (int i = -r; i <= r; ++i) total += k[static_cast<std::size_t>(i + r)] = std::exp(-i * i / (2 * sigma * sigma));
  for (double& v : k) v /= total;
  auto pass = [&](const Plane& in, bool horizontal) {
    Plane out = in;
    for (std::int64_t y = 0; y < in.h; ++y) {
      for (std::int64_t x = 0; x < in.w; ++x) {
        double acc = 0;
        for (int i = -r; i <= r; ++i) {
          const auto yy = horizontal ? y : std::clamp<std::int64_t>(y + i, 0, in.h - 1);
          const auto xx = horizontal ? std::clamp<std::int64_t>(x + i, 0, in.w - 1) : x;
          acc += k[static_cast<std::size_t>(i + r)] * in.at(yy, xx);
        }
        out.at(y, x) = acc;
      }
    }
    return out;
  };
  return pass(pass(p, true), false);
}

Image8 permute_channels(const Image8& img) {
  Image8 out = img;
  for (std::int64_t y = 0; y < img.h; ++y) {
    for (std::int64_t x = 0; x < img.w; ++x) {
      out.at(y, x, 0) = img.at(y, x, 2);
      out.at(y, x, 1) = img.at(y, x, 0);
      out.at(y, x, 2) = img.at(y, x, 1);
    }
  }
  return out;
}

TEST(Psnr, IdenticalImagesHitTheCap) {
  const auto a = scene(16, 16, 1);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
  EXPECT_EQ(capped_psnr(psnr(a, a)), 100.0);
}

TEST(Psnr, UnitOffset) {
  const double oracle = 10 * std::log10(255.0 * 255.0 / 1.0);
  EXPECT_NEAR(oracle, 48.1308, 1e-3);
  EXPECT_NEAR(psnr(constant_image(8, 8, 100), constant_image(8, 8, 101)), oracle, 1e-12);
}

TEST(Psnr, LargerNoiseLowersScore) {
  const auto a = scene(32, 32, 2);
  double previous = std::numeric_limits<double>::infinity();
  for (double amp : {2.0, 8.0, 20.0, 50.0}) {
    const double p = psnr(a, add_noise(a, amp, 3));
    EXPECT_LT(p, previous) << amp;
    previous = p;
  }
  EXPECT_THROW(psnr(a, scene(16, 32, 2)), std::invalid_argument);
}

TEST(Ssim, IdenticalIsOne) {
  const auto a = scene(40, 24, 4);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-9);
  EXPECT_NEAR(ssim(a, a, ColorMode::per_channel), 1.0, 1e-9);
}

TEST(Ssim, ConstantPair) {
  const double c1 = 6.5025;
  const double oracle = (2 * 100.0 * 150.0 + c1) / (100.0 * 100.0 + 150.0 * 150.0 + c1);
  EXPECT_NEAR(oracle, 0.92307, 1e-4);
  EXPECT_NEAR(ssim(constant_image(16, 16, 100), constant_image(16, 16, 150)), oracle, 1e-12);
}

TEST(Ssim, SymmetricAndBelowOne) {
  const auto a = scene(32, 32, 5);
  const auto b = add_noise(a, 30, 6);
  EXPECT_DOUBLE_EQ(ssim(a, b), ssim(b, a));
  EXPECT_LT(ssim(a, b), 1.0);
}

TEST(Ssim, RejectsTinyImages) {
  EXPECT_THROW(ssim(constant_image(10, 32, 0), constant_image(10, 32, 0)), std::invalid_argument);
}

TEST(Vif, IdenticalIsOne) {
  const auto a = scene(64, 64, 7);
  const auto r = vif_p(a, a);
  EXPECT_NEAR(r.value, 1.0, 1e-6);
  EXPECT_EQ(r.levels, 4);
}

TEST(Vif, PureNoiseScoresLow) {
  const auto a = scene(64, 64, 8);
  std::mt19937_64 rng(9);
  Image8 noise = a;
  for (auto& v : noise.rgb) v = static_cast<std::uint8_t>(rng() & 0xff);
  EXPECT_LT(vif_p(a, noise).value, 0.1);
}

TEST(Vif, BlurNeverHelps) {
  const Plane ref = luma(scene(64, 64, 10));
  double previous = vif_p(ref, ref).value;
  for (double sigma : {0.5, 1.0, 1.5, 2.5, 4.0}) {
    const double v = vif_p(ref, blur(ref, sigma)).value;
    EXPECT_LE(v, previous) << sigma;
    previous = v;
  }
}

TEST(Vif, SmallImagesUseFewerLevels) {
  const auto a = scene(20, 20, 11);
  const auto r = vif_p(a, add_noise(a, 10, 1));
  EXPECT_EQ(r.levels, 1);
  EXPECT_THROW(vif_p(scene(12, 12, 1), scene(12, 12, 1)), std::invalid_argument);
}

TEST(Vif, FlatReference) {
  const auto flat = constant_image(32, 32, 90);
  EXPECT_EQ(vif_p(flat, flat).value, 1.0);
  EXPECT_EQ(vif_p(flat, constant_image(32, 32, 91)).value, 0.0);
}

TEST(Metrics, ChannelPermutationSymmetry) {
  const auto a = scene(48, 48, 12);
  const auto b = add_noise(a, 25, 13);
  const auto pa = permute_channels(a);
  const auto pb = permute_channels(b);
  EXPECT_DOUBLE_EQ(psnr(a, b), psnr(pa, pb));
  EXPECT_NEAR(ssim(a, b, ColorMode::per_channel), ssim(pa, pb, ColorMode::per_channel), 1e-12);
  EXPECT_NEAR(vif_p(a, b, ColorMode::per_channel).value, vif_p(pa, pb, ColorMode::per_channel).value,
              1e-12);
}

TEST(Evaluate, IdenticalDirectories) {
  TempDir out, ref;
  for (int i = 0; i < 3; ++i) {
    const auto img = scene(32, 32, 20 + i);
    write_ppm(out / fmt::format("img{}.ppm", i), img);
    write_ppm(ref / fmt::format("img{}.ppm", i), img);
  }
  const auto report = evaluate_dataset(out.path(), ref.path());
  ASSERT_EQ(report.rows.size(), 3u);
  EXPECT_EQ(report.rows[0].id, "img0");
  EXPECT_DOUBLE_EQ(report.mean.psnr_db, 100.0);
  EXPECT_NEAR(report.mean.ssim, 1.0, 1e-9);
  EXPECT_NEAR(report.mean.vif, 1.0, 1e-6);
  const std::string csv = report.csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "id,psnr_db,ssim,vif");
  EXPECT_NE(csv.find("\nmean,100.000000,1.000000,1.000000\n"), std::string::npos) << csv;
}

TEST(Evaluate, MeanIsArithmetic) {
  TempDir out, ref;
  for (int i = 0; i < 2; ++i) {
    const auto img = scene(32, 32, 30 + i);
    write_ppm(ref / fmt::format("p{}.ppm", i), img);
    write_ppm(out / fmt::format("p{}.ppm", i), add_noise(img, 10 + 20 * i, 5));
  }
  const auto report = evaluate_dataset(out.path(), ref.path());
  EXPECT_NEAR(report.mean.ssim, (report.rows[0].ssim + report.rows[1].ssim) / 2, 1e-15);
  EXPECT_NEAR(report.mean.psnr_db, (report.rows[0].psnr_db + report.rows[1].psnr_db) / 2, 1e-12);
}

TEST(Evaluate, MissingCounterparts) {
  TempDir out, ref;
  write_ppm(out / "a.ppm", scene(16, 16, 1));
  write_ppm(ref / "a.ppm", scene(16, 16, 1));
  write_ppm(ref / "b.ppm", scene(16, 16, 2));
  EXPECT_THROW(evaluate_dataset(out.path(), ref.path()), std::runtime_error);

  TempDir empty_out, empty_ref;
  EXPECT_THROW(evaluate_dataset(empty_out.path(), empty_ref.path()), std::runtime_error);
}

}  // namespace
}  // namespace msgu
