#include "msgu/harness/gradscan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

namespace msgu {
namespace fs = std::filesystem;

const std::vector<double>& grad_bin_edges() {
  static const std::vector<double> edges = [] {
    std::vector<double> e{0.0};
    const double lo = std::log10(kNearZero);
    const double hi = 2.0;
    for (int i = 0; i < kGradBins; ++i) e.push_back(std::pow(10.0, lo + (hi - lo) * i / (kGradBins - 1)));
    return e;
  }();
  return edges;
}

int grad_bin(double magnitude) {
  const auto& e = grad_bin_edges();
  const auto it = std::upper_bound(e.begin(), e.end(), magnitude);
  const int bin = static_cast<int>(it - e.begin()) - 1;
  return std::clamp(bin, 0, kGradBins - 1);
}

std::string grad_group(const std::string& name) {
  const auto first = name.find('.');
  if (first == std::string::npos) return name;
  const auto second = name.find('.', first + 1);
  return second == std::string::npos ? name : name.substr(0, second);
}

std::vector<GroupHistogram> grad_histograms(const TensorList& params) {
  std::vector<GroupHistogram> out;
  std::vector<std::vector<double>> values;
  for (const auto& p : params) {
    const std::string g = grad_group(p.name);
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& h) { return h.group == g; });
    if (it == out.end()) {
      out.push_back({g, std::vector<std::uint64_t>(kGradBins, 0), 0, 0});
      values.emplace_back();
      it = out.end() - 1;
    }
    auto& vals = values[static_cast<std::size_t>(it - out.begin())];
    if (!p.tensor.has_grad()) {
      vals.insert(vals.end(), static_cast<std::size_t>(p.tensor.numel()), 0.0);
      continue;
    }
    for (Real v : p.tensor.grad()) vals.push_back(std::abs(static_cast<double>(v)));
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& vals = values[i];
    for (double v : vals) ++out[i].counts[static_cast<std::size_t>(grad_bin(v))];
    out[i].total = vals.size();
    std::sort(vals.begin(), vals.end());
    const std::size_t n = vals.size();
    out[i].median = n == 0 ? 0 : (n % 2 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]));
  }
  return out;
}

const GroupHistogram& GradscanRun::group(const std::string& name) const {
  for (const auto& g : groups) {
    if (g.group == name) return g;
  }
  throw std::out_of_range(fmt::format("no gradient group '{}'", name));
}

namespace {

std::vector<std::pair<const GradscanRun*, const GradscanRun*>> pairs(const std::vector<GradscanRun>& runs) {
  std::vector<std::pair<const GradscanRun*, const GradscanRun*>> out;
  for (const auto& on : runs) {
    if (!on.heads) continue;
    for (const auto& off : runs) {
      if (!off.heads && off.seed == on.seed) out.emplace_back(&on, &off);
    }
  }
  return out;
}

}  // namespace

int GradscanResult::seeds_with_larger_early_median() const {
  int n = 0;
  for (const auto& [on, off] : pairs(runs)) {
    if (on->group(earliest_group).median > off->group(earliest_group).median) ++n;
  }
  return n;
}

int GradscanResult::seeds_with_no_less_near_zero_mass() const {
  int n = 0;
  auto mass = [&](const GradscanRun& r) {
    double zero = 0, total = 0;
    for (const auto& g : deepest_groups) {
      zero += static_cast<double>(r.group(g).counts[0]);
      total += static_cast<double>(r.group(g).total);
    }
    return zero / total;
  };
  for (const auto& [on, off] : pairs(runs)) {
    if (mass(*off) >= mass(*on)) ++n;
  }
  return n;
}

std::string GradscanResult::histogram_csv(bool heads) const {
  const auto& e = grad_bin_edges();
  std::string out = "seed,group,bin,lower,upper,count\n";
  for (const auto& r : runs) {
    if (r.heads != heads) continue;
    for (const auto& g : r.groups) {
      for (int b = 0; b < kGradBins; ++b) {
        out += fmt::format("{},{},{},{:.6e},{:.6e},{}\n", r.seed, g.group, b, e[static_cast<std::size_t>(b)],
                           e[static_cast<std::size_t>(b) + 1], g.counts[static_cast<std::size_t>(b)]);
      }
    }
  }
  return out;
}

std::string GradscanResult::summary_csv() const {
  std::string out = "seed,heads,group,count,median_abs_grad,near_zero_fraction\n";
  for (const auto& r : runs) {
    for (const auto& g : r.groups) {
      out += fmt::format("{},{},{},{},{:.6e},{:.6f}\n", r.seed, r.heads ? "on" : "off", g.group, g.total, g.median,
                         g.near_zero_fraction());
    }
  }
  return out;
}

GradscanResult run_gradscan(const RunConfig& config, const TrainingSet& data, std::ostream* log) {
  config.validate();
  if (config.gradscan.seeds.empty()) throw std::invalid_argument("gradscan.seeds is empty");
  GradscanResult result;
  const int levels = config.architecture.level_count();
  result.earliest_group = "generator.enc0";
  // Groups next to the bottleneck: the longest path from the finest head.
  result.deepest_groups = {fmt::format("generator.enc{}", levels - 1), fmt::format("generator.dec{}", levels - 2)};
  for (std::uint64_t seed : config.gradscan.seeds) {
    for (bool heads : {true, false}) {
      RunConfig c = config;
      c.training.seed = seed;
      c.training.epochs = config.gradscan.epochs;
      c.architecture.intermediate_heads = heads;
      Trainer trainer(c, data);
      const auto total = trainer.total_steps();
      LossReport last;
      while (trainer.steps_done() < total) last = trainer.step();
      if (log) {
        *log << fmt::format("gradscan seed {} heads {}: {} steps, total_g {:.4f}\n", seed, heads ? "on" : "off",
                            total, last.total_g);
      }
      result.runs.push_back({seed, heads, grad_histograms(trainer.generator().parameters())});
    }
  }
  return result;
}

void write_gradscan(const GradscanResult& result, const fs::path& dir) {
  fs::create_directories(dir);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream f(dir / name, std::ios::trunc);
    f << text;
    if (!f) throw std::runtime_error(fmt::format("cannot write {}", (dir / name).string()));
  };
  write("gradscan_heads_on.csv", result.histogram_csv(true));
  write("gradscan_heads_off.csv", result.histogram_csv(false));
  write("gradscan_summary.csv", result.summary_csv());
}

}  // namespace msgu
