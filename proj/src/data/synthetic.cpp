#include <array>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "msgu/data.hpp"

namespace msgu {
namespace fs = std::filesystem;

namespace {

constexpr int kClasses = 5;
constexpr std::array<std::array<int, 3>, kClasses> kLabelColors{{
    {128, 64, 128}, {70, 70, 70}, {107, 142, 35}, {70, 130, 180}, {220, 20, 60}}};

struct Shape2 {
  int cls;
  bool ellipse;
  double cy, cx, ry, rx;
};

std::uint8_t to8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

// Each class renders as a shaded base colour with its own mild texture.
std::array<double, 3> render(int cls, double y, double x, double h) {
  const double shade = 0.85 + 0.3 * (1 - y / h);
  switch (cls) {
    case 0: return {90 * shade, 85 * shade, 95 * shade};
    case 1: {
      const double bricks = 12 * ((static_cast<int>(y / 6) + static_cast<int>(x / 10)) % 2);
      return {(120 + bricks) * shade, (110 + bricks) * shade, 100 * shade};
    }
    case 2: {
      const double leaf = 14 * std::sin(x * 0.9) * std::cos(y * 0.7);
      return {(60 + leaf) * shade, (130 + leaf) * shade, 50 * shade};
    }
    case 3: return {150 + 60 * (1 - y / h), 190 + 40 * (1 - y / h), 235};
    default: return {200 * shade, 40 * shade, 50 * shade};
  }
}

}  // namespace

void write_synthetic_dataset(const fs::path& root, const std::string& split, std::size_t count,
                             Extent extent, std::uint64_t seed) {
  const fs::path src_dir = root / split / "source";
  const fs::path tgt_dir = root / split / "target";
  fs::create_directories(src_dir);
  fs::create_directories(tgt_dir);
  const double h = static_cast<double>(extent.h);
  const double w = static_cast<double>(extent.w);
  for (std::size_t i = 0; i < count; ++i) {
    std::mt19937_64 rng(seed * 1000003 + i);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<Shape2> shapes;
    // Sky band on top, road band at the bottom, objects in between.
    const double horizon = h * (0.25 + 0.15 * u(rng));
    const double road = h * (0.7 + 0.1 * u(rng));
    const int objects = 3 + static_cast<int>(rng() % 3);
    for (int k = 0; k < objects; ++k) {
      shapes.push_back({1 + static_cast<int>(rng() % 4), u(rng) < 0.5, h * (0.2 + 0.6 * u(rng)),
                        w * u(rng), h * (0.06 + 0.14 * u(rng)), w * (0.1 + 0.25 * u(rng))});
    }
    Image8 label{extent.h, extent.w, std::vector<std::uint8_t>(static_cast<std::size_t>(extent.h * extent.w * 3))};
    Image8 photo = label;
    for (std::int64_t y = 0; y < extent.h; ++y) {
      for (std::int64_t x = 0; x < extent.w; ++x) {
        const double yc = static_cast<double>(y) + 0.5;
        const double xc = static_cast<double>(x) + 0.5;
        int cls = yc < horizon ? 3 : (yc > road ? 0 : 1);
        for (const auto& s : shapes) {
          const double dy = (yc - s.cy) / s.ry;
          const double dx = (xc - s.cx) / s.rx;
          const bool inside = s.ellipse ? dy * dy + dx * dx <= 1 : std::abs(dy) <= 1 && std::abs(dx) <= 1;
          if (inside) cls = s.cls;
        }
        const auto colour = render(cls, yc, xc, h);
        for (int c = 0; c < 3; ++c) {
          label.at(y, x, c) = static_cast<std::uint8_t>(kLabelColors[static_cast<std::size_t>(cls)][static_cast<std::size_t>(c)]);
          photo.at(y, x, c) = to8(colour[static_cast<std::size_t>(c)]);
        }
      }
    }
    const std::string name = fmt::format("{:04d}.ppm", i);
    write_ppm(src_dir / name, label);
    write_ppm(tgt_dir / name, photo);
  }
}

}  // namespace msgu
