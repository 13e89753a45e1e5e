#include <algorithm>
#include <map>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "msgu/data.hpp"
#include "msgu/nets/layers.hpp"

namespace msgu {
namespace fs = std::filesystem;

namespace {

std::map<std::string, fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw std::runtime_error(fmt::format("missing directory {}", dir.string()));
  }
  std::map<std::string, fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto& p = entry.path();
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext != ".ppm" && ext != ".png") continue;
    const std::string id = p.stem().string();
    if (!files.emplace(id, p).second) {
      throw std::runtime_error(fmt::format("{}: two images share the id '{}'", dir.string(), id));
    }
  }
  return files;
}

}  // namespace

PairedSample DatasetManifest::load(std::size_t index) const {
  PairedSample s;
  s.id = ids.at(index);
  s.source = normalize(read_image(source_files[index]));
  s.target = normalize(read_image(target_files[index]));
  return s;
}

DatasetManifest load_dataset(const fs::path& root, const std::string& split) {
  const fs::path base = root / split;
  const auto sources = list_images(base / "source");
  const auto targets = list_images(base / "target");
  for (const auto& [id, path] : sources) {
    if (!targets.count(id)) {
      throw std::runtime_error(fmt::format("{} has no counterpart in {}", path.string(),
                                           (base / "target").string()));
    }
  }
  for (const auto& [id, path] : targets) {
    if (!sources.count(id)) {
      throw std::runtime_error(fmt::format("{} has no counterpart in {}", path.string(),
                                           (base / "source").string()));
    }
  }
  if (sources.empty()) throw std::runtime_error(fmt::format("no images under {}", base.string()));

  DatasetManifest m;
  m.root = root;
  m.split = split;
  for (const auto& [id, path] : sources) {
    const Image8 a = read_image(path);
    const Image8 b = read_image(targets.at(id));
    if (a.h != b.h || a.w != b.w) {
      throw std::runtime_error(fmt::format("pair '{}': source is {}x{}, target is {}x{}", id, a.h,
                                           a.w, b.h, b.w));
    }
    m.ids.push_back(id);
    m.source_files.push_back(path);
    m.target_files.push_back(targets.at(id));
  }
  return m;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  auto rng = make_rng(seed, 4, epoch);
  // Fisher-Yates spelled out so the permutation does not depend on the
  // standard library's shuffle.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

}  // namespace msgu
