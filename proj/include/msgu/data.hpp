#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "msgu/nets/config.hpp"
#include "msgu/pyramid.hpp"

namespace msgu {

/// 8-bit RGB raster, interleaved, row-major.
struct Image8 {
  std::int64_t h = 0;
  std::int64_t w = 0;
  std::vector<std::uint8_t> rgb;

  std::uint8_t& at(std::int64_t y, std::int64_t x, int c) { return rgb[static_cast<std::size_t>((y * w + x) * 3 + c)]; }
  std::uint8_t at(std::int64_t y, std::int64_t x, int c) const { return rgb[static_cast<std::size_t>((y * w + x) * 3 + c)]; }
};

/// Binary PPM (P6, maxval 255) or PNG, chosen by extension.
Image8 read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image8& image);
Image8 read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Image8& image);
Image8 read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image8& image);

Real normalize_value(std::uint8_t v);
/// Inverse of normalize_value with clamping to [0, 255] and round-half-up.
std::uint8_t denormalize_value(Real v);

/// [1, 3, H, W] tensor with values x / 127.5 - 1.
Tensor normalize(const Image8& image);
/// Batch entry n of a 3-channel tensor back to 8-bit.
Image8 denormalize(const Tensor& image, std::int64_t n = 0);

struct PairedSample {
  std::string id;
  Tensor source;
  Tensor target;
};

/// root/<split>/{source,target}/<id>.{ppm,png}, ids sorted lexicographically.
struct DatasetManifest {
  std::filesystem::path root;
  std::string split;
  std::vector<std::string> ids;
  std::vector<std::filesystem::path> source_files;
  std::vector<std::filesystem::path> target_files;

  std::size_t size() const { return ids.size(); }
  PairedSample load(std::size_t index) const;
};

/// Pairs source/ and target/ files by stem. Every file is decoded once to
/// check that it is readable and that the pair shares a resolution.
DatasetManifest load_dataset(const std::filesystem::path& root, const std::string& split);

/// Permutation of [0, n) for one epoch; a pure function of (n, seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch);

/// Concatenates [1,C,H,W] tensors along the batch axis.
Tensor stack_batch(const std::vector<Tensor>& images);

Tensor flip_horizontal(const Tensor& image);

/// Finest entry: the image resized to the finest scale (untouched when it
/// already has that size). Coarser entries: successive bilinear halvings.
ScalePyramid make_pyramid(const Tensor& image, const std::vector<Extent>& chain);

/// Downsamples to degrade_to, then resamples the degraded copy to every
/// chain entry: coarser entries by halving, finer ones by bilinear upsampling.
ScalePyramid ablation_degrade(const Tensor& image, Extent degrade_to,
                              const std::vector<Extent>& chain);

/// Writes `count` label-map/rendering pairs of the given extent to
/// root/<split>/{source,target}/NNNN.ppm. A pure function of its arguments.
void write_synthetic_dataset(const std::filesystem::path& root, const std::string& split,
                             std::size_t count, Extent extent, std::uint64_t seed);

}  // namespace msgu
