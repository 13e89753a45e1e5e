#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>
#include <png.h>

#include "msgu/data.hpp"

namespace msgu {
namespace fs = std::filesystem;

namespace {

std::string lower_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

// Reads the next whitespace-delimited header token, skipping # comments.
std::string ppm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

Image8 read_ppm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
  auto fail = [&](const std::string& why) {
    return std::runtime_error(fmt::format("{}: {}", path.string(), why));
  };
  if (ppm_token(in) != "P6") throw fail("not a binary PPM (P6)");
  Image8 img;
  std::int64_t maxval = 0;
  try {
    img.w = std::stoll(ppm_token(in));
    img.h = std::stoll(ppm_token(in));
    maxval = std::stoll(ppm_token(in));
  } catch (const std::exception&) {
    throw fail("malformed PPM header");
  }
  if (img.w < 1 || img.h < 1) throw fail("empty image");
  if (maxval != 255) throw fail(fmt::format("maxval {} (only 255 is supported)", maxval));
  img.rgb.resize(static_cast<std::size_t>(img.w * img.h * 3));
  in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.rgb.size())) throw fail("truncated pixel data");
  return img;
}

void write_ppm(const fs::path& path, const Image8& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << "P6\n" << image.w << ' ' << image.h << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.rgb.data()),
            static_cast<std::streamsize>(image.rgb.size()));
  if (!out) throw std::runtime_error(fmt::format("write failed for {}", path.string()));
}

Image8 read_png(const fs::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw std::runtime_error(fmt::format("{}: {}", path.string(), png.message));
  }
  png.format = PNG_FORMAT_RGB;
  Image8 img;
  img.w = png.width;
  img.h = png.height;
  img.rgb.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, img.rgb.data(), 0, nullptr)) {
    png_image_free(&png);
    throw std::runtime_error(fmt::format("{}: {}", path.string(), png.message));
  }
  return img;
}

void write_png(const fs::path& path, const Image8& image) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.w);
  png.height = static_cast<png_uint_32>(image.h);
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.rgb.data(), 0, nullptr)) {
    throw std::runtime_error(fmt::format("{}: {}", path.string(), png.message));
  }
}

Image8 read_image(const fs::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".ppm") return read_ppm(path);
  if (ext == ".png") return read_png(path);
  throw std::runtime_error(fmt::format("{}: unsupported image format", path.string()));
}

void write_image(const fs::path& path, const Image8& image) {
  const std::string ext = lower_extension(path);
  if (ext == ".ppm") return write_ppm(path, image);
  if (ext == ".png") return write_png(path, image);
  throw std::runtime_error(fmt::format("{}: unsupported image format", path.string()));
}

Real normalize_value(std::uint8_t v) { return static_cast<Real>(v / 127.5 - 1.0); }

std::uint8_t denormalize_value(Real v) {
  const double x = (static_cast<double>(v) + 1.0) * 127.5;
  const double r = std::floor(std::clamp(x, 0.0, 255.0) + 0.5);
  return static_cast<std::uint8_t>(std::min(r, 255.0));
}

Tensor normalize(const Image8& image) {
  Tensor t(Shape{1, 3, image.h, image.w});
  for (int c = 0; c < 3; ++c) {
    for (std::int64_t y = 0; y < image.h; ++y) {
      for (std::int64_t x = 0; x < image.w; ++x) t.at(0, c, y, x) = normalize_value(image.at(y, x, c));
    }
  }
  return t;
}

Image8 denormalize(const Tensor& image, std::int64_t n) {
  const Shape& s = image.shape();
  if (s.c != 3 || n < 0 || n >= s.n) {
    throw std::invalid_argument(fmt::format("denormalize: cannot take RGB entry {} of {}", n, s.str()));
  }
  Image8 img;
  img.h = s.h;
  img.w = s.w;
  img.rgb.resize(static_cast<std::size_t>(s.h * s.w * 3));
  for (int c = 0; c < 3; ++c) {
    for (std::int64_t y = 0; y < s.h; ++y) {
      for (std::int64_t x = 0; x < s.w; ++x) img.at(y, x, c) = denormalize_value(image.at(n, c, y, x));
    }
  }
  return img;
}

}  // namespace msgu
