#include "msgu/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include <fmt/format.h>

namespace msgu {
namespace fs = std::filesystem;

namespace {

void check_same_size(const char* what, std::int64_t ah, std::int64_t aw, std::int64_t bh,
                     std::int64_t bw) {
  if (ah != bh || aw != bw) {
    throw std::invalid_argument(fmt::format("{}: {}x{} vs {}x{}", what, ah, aw, bh, bw));
  }
}

std::vector<double> gaussian_1d(int n, double sigma) {
  std::vector<double> g(static_cast<std::size_t>(n));
  const double c = (n - 1) / 2.0;
  double total = 0;
  for (int i = 0; i < n; ++i) {
    g[static_cast<std::size_t>(i)] = std::exp(-(i - c) * (i - c) / (2 * sigma * sigma));
    total += g[static_cast<std::size_t>(i)];
  }
  for (double& v : g) v /= total;
  return g;
}

// 'valid' correlation with the separable window g x g.
Plane filter_valid(const Plane& p, const std::vector<double>& g) {
  const auto n = static_cast<std::int64_t>(g.size());
  Plane rows{p.h, p.w - n + 1, {}};
  rows.v.resize(static_cast<std::size_t>(rows.h * rows.w));
  for (std::int64_t y = 0; y < rows.h; ++y) {
    for (std::int64_t x = 0; x < rows.w; ++x) {
      double acc = 0;
      for (std::int64_t k = 0; k < n; ++k) acc += g[static_cast<std::size_t>(k)] * p.at(y, x + k);
      rows.at(y, x) = acc;
    }
  }
  Plane out{p.h - n + 1, rows.w, {}};
  out.v.resize(static_cast<std::size_t>(out.h * out.w));
  for (std::int64_t y = 0; y < out.h; ++y) {
    for (std::int64_t x = 0; x < out.w; ++x) {
      double acc = 0;
      for (std::int64_t k = 0; k < n; ++k) acc += g[static_cast<std::size_t>(k)] * rows.at(y + k, x);
      out.at(y, x) = acc;
    }
  }
  return out;
}

Plane product(const Plane& a, const Plane& b) {
  Plane out{a.h, a.w, std::vector<double>(a.v.size())};
  for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

Plane subsample2(const Plane& p) {
  Plane out{(p.h + 1) / 2, (p.w + 1) / 2, {}};
  out.v.resize(static_cast<std::size_t>(out.h * out.w));
  for (std::int64_t y = 0; y < out.h; ++y) {
    for (std::int64_t x = 0; x < out.w; ++x) out.at(y, x) = p.at(2 * y, 2 * x);
  }
  return out;
}

template <typename Fn>
double over_color(const Image8& a, const Image8& b, ColorMode mode, Fn fn) {
  if (mode == ColorMode::luma) return fn(luma(a), luma(b));
  double total = 0;
  for (int c = 0; c < 3; ++c) total += fn(channel(a, c), channel(b, c));
  return total / 3;
}

}  // namespace

Plane luma(const Image8& image) {
  Plane p{image.h, image.w, std::vector<double>(static_cast<std::size_t>(image.h * image.w))};
  for (std::int64_t y = 0; y < image.h; ++y) {
    for (std::int64_t x = 0; x < image.w; ++x) {
      p.at(y, x) = 0.299 * image.at(y, x, 0) + 0.587 * image.at(y, x, 1) + 0.114 * image.at(y, x, 2);
    }
  }
  return p;
}

Plane channel(const Image8& image, int c) {
  Plane p{image.h, image.w, std::vector<double>(static_cast<std::size_t>(image.h * image.w))};
  for (std::int64_t y = 0; y < image.h; ++y) {
    for (std::int64_t x = 0; x < image.w; ++x) p.at(y, x) = image.at(y, x, c);
  }
  return p;
}

double psnr(const Image8& reference, const Image8& candidate, double peak) {
  check_same_size("psnr", reference.h, reference.w, candidate.h, candidate.w);
  double se = 0;
  for (std::size_t i = 0; i < reference.rgb.size(); ++i) {
    const double d = double(reference.rgb[i]) - double(candidate.rgb[i]);
    se += d * d;
  }
  if (se == 0) return std::numeric_limits<double>::infinity();
  const double mse = se / static_cast<double>(reference.rgb.size());
  return 10 * std::log10(peak * peak / mse);
}

double capped_psnr(double db) { return std::min(db, kPsnrCap); }

double ssim(const Plane& reference, const Plane& candidate) {
  check_same_size("ssim", reference.h, reference.w, candidate.h, candidate.w);
  constexpr int kWindow = 11;
  if (reference.h < kWindow || reference.w < kWindow) {
    throw std::invalid_argument(fmt::format("ssim: {}x{} image is smaller than the {}x{} window",
                                            reference.h, reference.w, kWindow, kWindow));
  }
  const double c1 = (0.01 * 255) * (0.01 * 255);
  const double c2 = (0.03 * 255) * (0.03 * 255);
  const auto g = gaussian_1d(kWindow, 1.5);
  const Plane mu1 = filter_valid(reference, g);
  const Plane mu2 = filter_valid(candidate, g);
  const Plane e11 = filter_valid(product(reference, reference), g);
  const Plane e22 = filter_valid(product(candidate, candidate), g);
  const Plane e12 = filter_valid(product(reference, candidate), g);
  double total = 0;
  for (std::size_t i = 0; i < mu1.v.size(); ++i) {
    const double m1 = mu1.v[i];
    const double m2 = mu2.v[i];
    const double s11 = e11.v[i] - m1 * m1;
    const double s22 = e22.v[i] - m2 * m2;
    const double s12 = e12.v[i] - m1 * m2;
    total += ((2 * m1 * m2 + c1) * (2 * s12 + c2)) / ((m1 * m1 + m2 * m2 + c1) * (s11 + s22 + c2));
  }
  return total / static_cast<double>(mu1.v.size());
}

double ssim(const Image8& reference, const Image8& candidate, ColorMode mode) {
  check_same_size("ssim", reference.h, reference.w, candidate.h, candidate.w);
  return over_color(reference, candidate, mode,
                    [](const Plane& a, const Plane& b) { return ssim(a, b); });
}

namespace {

struct VifSums {
  double num = 0;
  double den = 0;
  int levels = 0;
};

VifSums vif_sums(Plane ref, Plane dist) {
  constexpr double kNoise = 2.0;
  constexpr double kFloor = 1e-10;
  VifSums s;
  for (int scale = 1; scale <= 4; ++scale) {
    const int n = (1 << (5 - scale)) + 1;
    const auto g = gaussian_1d(n, n / 5.0);
    if (scale > 1) {
      if (ref.h < n || ref.w < n) break;
      ref = subsample2(filter_valid(ref, g));
      dist = subsample2(filter_valid(dist, g));
    }
    if (ref.h < n || ref.w < n) break;
    const Plane mu1 = filter_valid(ref, g);
    const Plane mu2 = filter_valid(dist, g);
    const Plane e11 = filter_valid(product(ref, ref), g);
    const Plane e22 = filter_valid(product(dist, dist), g);
    const Plane e12 = filter_valid(product(ref, dist), g);
    for (std::size_t i = 0; i < mu1.v.size(); ++i) {
      double s1 = std::max(0.0, e11.v[i] - mu1.v[i] * mu1.v[i]);
      const double s2 = std::max(0.0, e22.v[i] - mu2.v[i] * mu2.v[i]);
      const double s12 = e12.v[i] - mu1.v[i] * mu2.v[i];
      double gain = s12 / (s1 + kFloor);
      double sv = s2 - gain * s12;
      if (s1 < kFloor) {
        gain = 0;
        sv = s2;
        s1 = 0;
      }
      if (s2 < kFloor) {
        gain = 0;
        sv = 0;
      }
      if (gain < 0) {
        sv = s2;
        gain = 0;
      }
      sv = std::max(sv, kFloor);
      s.num += std::log10(1 + gain * gain * s1 / (sv + kNoise));
      s.den += std::log10(1 + s1 / kNoise);
    }
    ++s.levels;
  }
  return s;
}

double vif_ratio(const VifSums& s, bool identical) {
  // A flat reference carries no information; score only exact copies as faithful.
  if (s.den == 0) return identical ? 1.0 : 0.0;
  return s.num / s.den;
}

}  // namespace

VifResult vif_p(const Plane& reference, const Plane& candidate) {
  check_same_size("vif_p", reference.h, reference.w, candidate.h, candidate.w);
  const VifSums s = vif_sums(reference, candidate);
  if (s.levels == 0) {
    throw std::invalid_argument(
        fmt::format("vif_p: {}x{} image is smaller than the 17x17 window", reference.h, reference.w));
  }
  return {vif_ratio(s, reference.v == candidate.v), s.levels};
}

VifResult vif_p(const Image8& reference, const Image8& candidate, ColorMode mode) {
  check_same_size("vif_p", reference.h, reference.w, candidate.h, candidate.w);
  if (mode == ColorMode::luma) return vif_p(luma(reference), luma(candidate));
  // Information pooled over channels: sums of numerators over sums of denominators.
  VifSums total;
  for (int c = 0; c < 3; ++c) {
    const VifSums s = vif_sums(channel(reference, c), channel(candidate, c));
    total.num += s.num;
    total.den += s.den;
    total.levels = s.levels;
  }
  if (total.levels == 0) throw std::invalid_argument("vif_p: image is smaller than the 17x17 window");
  return {vif_ratio(total, reference.rgb == candidate.rgb), total.levels};
}

std::string MetricReport::csv() const {
  std::string out = "id,psnr_db,ssim,vif\n";
  for (const auto& r : rows) out += fmt::format("{},{:.6f},{:.6f},{:.6f}\n", r.id, r.psnr_db, r.ssim, r.vif);
  out += fmt::format("mean,{:.6f},{:.6f},{:.6f}\n", mean.psnr_db, mean.ssim, mean.vif);
  return out;
}

namespace {

std::map<std::string, fs::path> images_by_stem(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error(fmt::format("missing directory {}", dir.string()));
  std::map<std::string, fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string ext = e.path().extension().string();
    if (ext == ".ppm" || ext == ".png") files[e.path().stem().string()] = e.path();
  }
  return files;
}

}  // namespace

MetricReport evaluate_dataset(const fs::path& outputs_dir, const fs::path& targets_dir) {
  const auto outputs = images_by_stem(outputs_dir);
  const auto targets = images_by_stem(targets_dir);
  for (const auto& [id, path] : outputs) {
    if (!targets.count(id)) {
      throw std::runtime_error(fmt::format("{} has no target in {}", path.string(), targets_dir.string()));
    }
  }
  for (const auto& [id, path] : targets) {
    if (!outputs.count(id)) {
      throw std::runtime_error(fmt::format("{} has no output in {}", path.string(), outputs_dir.string()));
    }
  }
  if (outputs.empty()) {
    throw std::runtime_error(fmt::format("no images to compare between {} and {}",
                                         outputs_dir.string(), targets_dir.string()));
  }
  MetricReport report;
  report.mean.id = "mean";
  for (const auto& [id, path] : outputs) {
    const Image8 out = read_image(path);
    const Image8 ref = read_image(targets.at(id));
    MetricRow row;
    row.id = id;
    row.psnr_db = capped_psnr(psnr(ref, out));
    row.ssim = ssim(ref, out);
    row.vif = vif_p(ref, out).value;
    report.mean.psnr_db += row.psnr_db;
    report.mean.ssim += row.ssim;
    report.mean.vif += row.vif;
    report.rows.push_back(row);
  }
  const double n = static_cast<double>(report.rows.size());
  report.mean.psnr_db /= n;
  report.mean.ssim /= n;
  report.mean.vif /= n;
  return report;
}

}  // namespace msgu
