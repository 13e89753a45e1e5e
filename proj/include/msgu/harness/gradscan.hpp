#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "msgu/harness/run_config.hpp"
#include "msgu/harness/trainer.hpp"

namespace msgu {

inline constexpr int kGradBins = 64;
inline constexpr double kNearZero = 1e-8;

/// 65 edges shared by every histogram: 0, then 63 log-spaced bins from
/// 1e-8 to 1e2. Values beyond the last edge land in the last bin.
const std::vector<double>& grad_bin_edges();
int grad_bin(double magnitude);

/// |grad| statistics of one parameter group, e.g. "generator.enc0".
struct GroupHistogram {
  std::string group;
  std::vector<std::uint64_t> counts;  // kGradBins entries
  std::uint64_t total = 0;
  double median = 0;

  double near_zero_fraction() const { return total ? static_cast<double>(counts[0]) / static_cast<double>(total) : 0; }
};

/// Parameter names up to their block level: "generator.enc3.main0.weight" -> "generator.enc3".
std::string grad_group(const std::string& parameter_name);

/// Histograms of the gradients currently held by `params`, grouped, in
/// first-appearance order.
std::vector<GroupHistogram> grad_histograms(const TensorList& params);

struct GradscanRun {
  std::uint64_t seed = 0;
  bool heads = true;
  std::vector<GroupHistogram> groups;

  const GroupHistogram& group(const std::string& name) const;
};

struct GradscanResult {
  std::vector<GradscanRun> runs;  // per seed: heads on, then heads off
  std::string earliest_group;
  std::vector<std::string> deepest_groups;

  /// Seeds whose heads-on median in the earliest group beats heads-off.
  int seeds_with_larger_early_median() const;
  /// Seeds where heads-off has at least the heads-on near-zero mass, pooled
  /// over the deepest groups.
  int seeds_with_no_less_near_zero_mass() const;

  std::string histogram_csv(bool heads) const;
  std::string summary_csv() const;
};

/// Trains each seed with and without intermediate heads for gradscan.epochs
/// epochs and histograms the generator gradients of the final step.
GradscanResult run_gradscan(const RunConfig& config, const TrainingSet& data, std::ostream* log = nullptr);

/// Writes gradscan_heads_on.csv, gradscan_heads_off.csv and gradscan_summary.csv.
void write_gradscan(const GradscanResult& result, const std::filesystem::path& dir);

}  // namespace msgu
