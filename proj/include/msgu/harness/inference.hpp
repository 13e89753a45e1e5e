#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "msgu/data.hpp"
#include "msgu/harness/trainer.hpp"

namespace msgu {

/// Source pyramid for one image: the plain pyramid, or the degraded one when
/// degrade_to is set. Throws if the aspect ratio differs from the chain's or
/// degrade_to is not a chain entry.
ScalePyramid inference_pyramid(const Image8& image, const std::vector<Extent>& chain,
                               std::optional<Extent> degrade_to);

/// Generator outputs for one image, coarsest first, in eval mode.
std::vector<Image8> translate(MsgUNetGenerator& g, const Image8& image, std::optional<Extent> degrade_to);

/// Translates one image file or every image in a directory and writes
/// <stem>_<H>x<W>.ppm per head into out_dir. Returns the written paths.
std::vector<std::filesystem::path> infer(MsgUNetGenerator& g, const std::filesystem::path& input,
                                         std::optional<Extent> degrade_to,
                                         const std::filesystem::path& out_dir);

/// Mean SSIM of each head against the target, for every input resolution.
struct AblationGrid {
  std::vector<Extent> inputs;   // rows: degrade levels, coarsest first
  std::vector<Extent> outputs;  // columns: head scales, coarsest first
  std::vector<std::vector<double>> ssim;

  /// input,<HxW>... header; one row per input resolution.
  std::string csv() const;
};

/// Empty degrade_levels selects every chain entry.
AblationGrid ablate(MsgUNetGenerator& g, const DatasetManifest& data, std::vector<Extent> degrade_levels = {});

}  // namespace msgu
