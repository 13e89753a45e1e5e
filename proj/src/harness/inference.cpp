#include "msgu/harness/inference.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

#include "msgu/metrics.hpp"

namespace msgu {
namespace fs = std::filesystem;

ScalePyramid inference_pyramid(const Image8& image, const std::vector<Extent>& chain,
                               std::optional<Extent> degrade_to) {
  const Extent finest = chain.back();
  if (image.h * finest.w != image.w * finest.h) {
    throw std::invalid_argument(fmt::format("input is {}x{} but the model expects the aspect of {}", image.h,
                                            image.w, finest.str()));
  }
  const Tensor t = normalize(image);
  if (!degrade_to) return make_pyramid(t, chain);
  if (std::find(chain.begin(), chain.end(), *degrade_to) == chain.end()) {
    throw std::invalid_argument(fmt::format("degrade level {} is not in the scale chain", degrade_to->str()));
  }
  return ablation_degrade(t, *degrade_to, chain);
}

std::vector<Image8> translate(MsgUNetGenerator& g, const Image8& image, std::optional<Extent> degrade_to) {
  NoGradGuard guard;
  const auto x = inference_pyramid(image, g.config().scale_chain, degrade_to);
  const auto z = g.forward(x, Mode::eval);
  std::vector<Image8> out;
  for (const auto& t : z.images) out.push_back(denormalize(t));
  return out;
}

namespace {

bool is_image(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext == ".ppm" || ext == ".png";
}

}  // namespace

std::vector<fs::path> infer(MsgUNetGenerator& g, const fs::path& input, std::optional<Extent> degrade_to,
                            const fs::path& out_dir) {
  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    for (const auto& e : fs::directory_iterator(input)) {
      if (e.is_regular_file() && is_image(e.path())) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error(fmt::format("{} holds no .ppm or .png images", input.string()));
  } else {
    files.push_back(input);
  }
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  for (const auto& f : files) {
    const auto outputs = translate(g, read_image(f), degrade_to);
    for (const auto& img : outputs) {
      const fs::path p = out_dir / fmt::format("{}_{}x{}.ppm", f.stem().string(), img.h, img.w);
      write_ppm(p, img);
      written.push_back(p);
    }
  }
  return written;
}

std::string AblationGrid::csv() const {
  std::string out = "input";
  for (const auto& e : outputs) out += "," + e.str();
  out += "\n";
  for (std::size_t r = 0; r < inputs.size(); ++r) {
    out += inputs[r].str();
    for (double v : ssim[r]) out += fmt::format(",{:.6f}", v);
    out += "\n";
  }
  return out;
}

AblationGrid ablate(MsgUNetGenerator& g, const DatasetManifest& data, std::vector<Extent> degrade_levels) {
  const auto& chain = g.config().scale_chain;
  if (degrade_levels.empty()) degrade_levels = chain;
  if (data.size() == 0) throw std::runtime_error("ablation dataset is empty");
  AblationGrid grid;
  grid.inputs = degrade_levels;
  for (int s : g.head_scales()) grid.outputs.push_back(chain[static_cast<std::size_t>(s)]);
  grid.ssim.assign(degrade_levels.size(), std::vector<double>(grid.outputs.size(), 0.0));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto sample = data.load(i);
    const Image8 source = denormalize(sample.source);
    std::vector<Image8> targets;
    {
      NoGradGuard guard;
      const auto y = make_pyramid(sample.target, chain);
      for (int s : g.head_scales()) targets.push_back(denormalize(y[static_cast<std::size_t>(s)]));
    }
    for (std::size_t r = 0; r < degrade_levels.size(); ++r) {
      const auto outputs = translate(g, source, degrade_levels[r]);
      for (std::size_t c = 0; c < outputs.size(); ++c) grid.ssim[r][c] += ssim(targets[c], outputs[c]);
    }
  }
  for (auto& row : grid.ssim) {
    for (double& v : row) v /= static_cast<double>(data.size());
  }
  return grid;
}

}  // namespace msgu
