#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "msgu/data.hpp"
#include "msgu/harness/checkpoint.hpp"
#include "msgu/harness/run_config.hpp"
#include "msgu/losses.hpp"
#include "msgu/nets/discriminator.hpp"
#include "msgu/nets/extractor.hpp"
#include "msgu/nets/generator.hpp"
#include "msgu/optim.hpp"

namespace msgu {

/// Source and target pyramids of every sample, built once up front.
struct TrainingSet {
  std::vector<std::string> ids;
  std::vector<ScalePyramid> sources;
  std::vector<ScalePyramid> targets;

  std::size_t size() const { return ids.size(); }
};

TrainingSet prepare_training_set(const DatasetManifest& manifest, const std::vector<Extent>& chain);

struct Batch {
  std::vector<std::size_t> samples;
  std::vector<bool> flipped;
  ScalePyramid x;
  ScalePyramid y;
};

/// Frozen extractor named by the config: loaded from extractor_weights when
/// set, seeded from training.seed otherwise.
FeatureExtractor make_extractor(const RunConfig& config);

/// Alternating one discriminator-bank update and one generator update per
/// batch. Every random choice derives from training.seed and the step index,
/// so a restored trainer continues exactly where the saved one stopped.
class Trainer {
 public:
  Trainer(RunConfig config, TrainingSet data);

  /// Number of optimization steps the config asks for.
  std::int64_t total_steps() const;
  std::int64_t steps_done() const { return step_; }
  Batch batch_for_step(std::int64_t step) const;

  /// Runs one step and returns its losses. Throws std::runtime_error naming
  /// the step when a loss is not finite.
  LossReport step();

  /// Called between the discriminator and the generator update.
  void set_after_d_update(std::function<void()> hook) { after_d_ = std::move(hook); }

  Checkpoint checkpoint() const;
  /// Fails without touching any state if the checkpoint does not match.
  void restore(const Checkpoint& ck);

  const RunConfig& config() const { return config_; }
  MsgUNetGenerator& generator() { return g_; }
  DiscriminatorBank& bank() { return bank_; }
  const FeatureExtractor& extractor() const { return extractor_; }
  const TrainingSet& data() const { return data_; }
  const OptimizerState& g_optimizer() const { return g_opt_; }
  const OptimizerState& d_optimizer() const { return d_opt_; }

 private:
  RunConfig config_;
  TrainingSet data_;
  MsgUNetGenerator g_;
  DiscriminatorBank bank_;
  FeatureExtractor extractor_;
  OptimizerState g_opt_;
  OptimizerState d_opt_;
  std::int64_t step_ = 0;
  std::function<void()> after_d_;
};

/// Generator in eval mode restored from a training checkpoint, plus the
/// config it was trained with.
struct LoadedModel {
  RunConfig config;
  MsgUNetGenerator generator;
};

LoadedModel load_model(const std::filesystem::path& checkpoint_path);

/// Mean absolute error between generator output and target at each head,
/// over the whole set, with batch norm in eval mode.
std::vector<double> per_scale_l1(MsgUNetGenerator& g, const TrainingSet& data);

struct TrainOptions {
  std::optional<std::filesystem::path> resume;
  std::ostream* log = nullptr;
};

/// Trains per config, writing losses.csv and checkpoints into output.dir.
/// Returns the path of the final checkpoint.
std::filesystem::path run_training(const RunConfig& config, const TrainOptions& options = {});

}  // namespace msgu
