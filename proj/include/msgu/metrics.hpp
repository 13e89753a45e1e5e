#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "msgu/data.hpp"

namespace msgu {

/// Single-channel image of doubles in the 8-bit value range.
struct Plane {
  std::int64_t h = 0;
  std::int64_t w = 0;
  std::vector<double> v;

  double& at(std::int64_t y, std::int64_t x) { return v[static_cast<std::size_t>(y * w + x)]; }
  double at(std::int64_t y, std::int64_t x) const { return v[static_cast<std::size_t>(y * w + x)]; }
};

/// 0.299 R + 0.587 G + 0.114 B, unrounded.
Plane luma(const Image8& image);
Plane channel(const Image8& image, int c);

/// Color handling of SSIM and VIF: luma (default) or the mean over the
/// three channels taken separately.
enum class ColorMode { luma, per_channel };

/// 10 log10(peak^2 / MSE) over all channels; +inf for identical images.
double psnr(const Image8& reference, const Image8& candidate, double peak = 255);

/// Value written to CSVs and averaged in reports: infinity becomes 100 dB.
inline constexpr double kPsnrCap = 100;
double capped_psnr(double db);

/// Mean SSIM with an 11x11 Gaussian window (sigma 1.5) over the valid
/// region, C1 = (0.01 * 255)^2, C2 = (0.03 * 255)^2.
double ssim(const Plane& reference, const Plane& candidate);
double ssim(const Image8& reference, const Image8& candidate, ColorMode mode = ColorMode::luma);

struct VifResult {
  double value = 0;
  int levels = 0;  // scales that fit the image, at most 4
};

/// Multi-scale pixel-domain VIF (noise variance 2, variance floor 1e-10).
VifResult vif_p(const Plane& reference, const Plane& candidate);
VifResult vif_p(const Image8& reference, const Image8& candidate,
                ColorMode mode = ColorMode::luma);

struct MetricRow {
  std::string id;
  double psnr_db = 0;  // capped
  double ssim = 0;
  double vif = 0;
};

struct MetricReport {
  std::vector<MetricRow> rows;
  MetricRow mean;

  std::string csv() const;
};

/// Scores every image in outputs_dir against the target with the same stem.
MetricReport evaluate_dataset(const std::filesystem::path& outputs_dir,
                              const std::filesystem::path& targets_dir);

}  // namespace msgu
