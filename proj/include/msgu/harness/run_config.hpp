#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "msgu/losses.hpp"
#include "msgu/nets/config.hpp"

namespace msgu {

struct TrainingConfig {
  std::int64_t steps = 2000;
  std::int64_t epochs = 0;  // when > 0, overrides steps with epochs * batches per epoch
  std::int64_t batch_size = 1;
  Real learning_rate = Real(2e-4);
  Real beta1 = Real(0.5);
  Real beta2 = Real(0.999);
  std::uint64_t seed = 0;
  LossWeights weights;
  bool flip = false;
};

struct DataConfig {
  std::filesystem::path root;
  std::string split = "train";
};

struct OutputConfig {
  std::filesystem::path dir = "run";
  std::int64_t checkpoint_every = 0;  // 0 writes only the final checkpoint
  std::int64_t log_every = 1;
};

struct GradscanConfig {
  std::int64_t epochs = 20;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
};

/// Everything a run needs. Text form: one `section.key = value` per line,
/// '#' starts a comment, unknown or repeated keys are errors.
struct RunConfig {
  ArchitectureConfig architecture = ArchitectureConfig::toy();
  std::filesystem::path extractor_weights;  // empty selects seeded weights
  TrainingConfig training;
  DataConfig data;
  OutputConfig output;
  GradscanConfig gradscan;

  /// Relative paths are resolved against base_dir.
  static RunConfig parse(const std::string& text, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& file);

  /// Throws std::invalid_argument naming the offending key.
  void validate() const;

  /// Canonical text; parse(to_text()) reproduces this config.
  std::string to_text() const;

  /// Replaces training.seed with $MSGU_SEED when it is set.
  void apply_environment();
};

}  // namespace msgu
