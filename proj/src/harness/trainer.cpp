#include "msgu/harness/trainer.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "msgu/ops.hpp"

namespace msgu {
namespace fs = std::filesystem;

TrainingSet prepare_training_set(const DatasetManifest& manifest, const std::vector<Extent>& chain) {
  if (manifest.size() == 0) throw std::runtime_error("training set is empty");
  TrainingSet set;
  NoGradGuard guard;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto sample = manifest.load(i);
    set.ids.push_back(sample.id);
    set.sources.push_back(make_pyramid(sample.source, chain));
    set.targets.push_back(make_pyramid(sample.target, chain));
  }
  return set;
}

FeatureExtractor make_extractor(const RunConfig& config) {
  const auto& a = config.architecture;
  if (config.extractor_weights.empty()) {
    return FeatureExtractor::seeded(a.extractor_widths, a.leaky_slope, config.training.seed);
  }
  const auto ck = Checkpoint::load(config.extractor_weights);
  TensorList tensors;
  for (const auto& r : ck.records()) {
    if (r.name.rfind("extractor.", 0) != 0) continue;
    if (r.dims.size() != 4) throw std::runtime_error(fmt::format("extractor record '{}' is not rank 4", r.name));
    const Shape s{r.dims[0], r.dims[1], r.dims[2], r.dims[3]};
    tensors.push_back({r.name, Tensor(s, ck.values(r.name))});
  }
  if (tensors.empty()) {
    throw std::runtime_error(fmt::format("{} holds no extractor.* records", config.extractor_weights.string()));
  }
  return FeatureExtractor::from_parameters(tensors, a.leaky_slope);
}

namespace {

OptimizerState make_optimizer(const TrainingConfig& t) {
  OptimizerState s;
  s.learning_rate = t.learning_rate;
  s.beta1 = t.beta1;
  s.beta2 = t.beta2;
  return s;
}

void set_requires_grad(const TensorList& params, bool value) {
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.set_requires_grad(value);
  }
}

void check_finite(double v, std::int64_t step, const char* what) {
  if (!std::isfinite(v)) throw std::runtime_error(fmt::format("step {}: {} is not finite ({})", step, what, v));
}

Shape shape_of(const Tensor& t) { return t.shape(); }

// Moments are stored as tensors shaped like their parameter.
void put_optimizer(Checkpoint& ck, const std::string& prefix, const OptimizerState& s, const TensorList& params) {
  ck.put_i64(prefix + ".step", s.step);
  if (s.first_moment.empty()) return;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Shape shape = shape_of(params[i].tensor);
    ck.put(prefix + ".m." + params[i].name, Tensor(shape, s.first_moment[i]));
    ck.put(prefix + ".v." + params[i].name, Tensor(shape, s.second_moment[i]));
  }
}

}  // namespace

Trainer::Trainer(RunConfig config, TrainingSet data)
    : config_(std::move(config)),
      data_(std::move(data)),
      g_(config_.architecture, config_.training.seed),
      bank_(config_.architecture, config_.training.seed),
      extractor_(make_extractor(config_)),
      g_opt_(make_optimizer(config_.training)),
      d_opt_(make_optimizer(config_.training)) {
  config_.validate();
  if (data_.size() == 0) throw std::runtime_error("training set is empty");
  for (std::size_t i = 0; i < data_.size(); ++i) {
    check_pyramid(data_.sources[i], config_.architecture.scale_chain, "training source");
    check_pyramid(data_.targets[i], config_.architecture.scale_chain, "training target");
  }
}

std::int64_t Trainer::total_steps() const {
  const auto& t = config_.training;
  if (t.epochs <= 0) return t.steps;
  const auto n = static_cast<std::int64_t>(data_.size());
  return t.epochs * ((n + t.batch_size - 1) / t.batch_size);
}

Batch Trainer::batch_for_step(std::int64_t step) const {
  const auto& t = config_.training;
  const auto n = data_.size();
  Batch b;
  const std::size_t scales = config_.architecture.scale_chain.size();
  std::vector<std::vector<Tensor>> xs(scales), ys(scales);
  std::int64_t cached_epoch = -1;
  std::vector<std::size_t> order;
  for (std::int64_t j = 0; j < t.batch_size; ++j) {
    const auto i = static_cast<std::uint64_t>(step * t.batch_size + j);
    const auto epoch = static_cast<std::int64_t>(i / n);
    if (epoch != cached_epoch) {
      order = epoch_order(n, t.seed, static_cast<std::uint64_t>(epoch));
      cached_epoch = epoch;
    }
    const std::size_t sample = order[i % n];
    bool flip = false;
    if (t.flip) {
      auto rng = make_rng(t.seed, 5, i);
      flip = (rng() & 1) != 0;
    }
    b.samples.push_back(sample);
    b.flipped.push_back(flip);
    for (std::size_t k = 0; k < scales; ++k) {
      const Tensor& xs_k = data_.sources[sample][k];
      const Tensor& ys_k = data_.targets[sample][k];
      xs[k].push_back(flip ? flip_horizontal(xs_k) : xs_k);
      ys[k].push_back(flip ? flip_horizontal(ys_k) : ys_k);
    }
  }
  for (std::size_t k = 0; k < scales; ++k) {
    b.x.images.push_back(xs[k].size() == 1 ? xs[k][0] : stack_batch(xs[k]));
    b.y.images.push_back(ys[k].size() == 1 ? ys[k][0] : stack_batch(ys[k]));
  }
  return b;
}

LossReport Trainer::step() {
  const std::int64_t number = step_ + 1;
  const auto batch = batch_for_step(step_);
  const auto& heads = g_.head_scales();
  const auto& w = config_.training.weights;
  const TensorList g_params = g_.parameters();
  const TensorList d_params = bank_.parameters();

  const ScalePyramid z = g_.forward(batch.x, Mode::train);

  // Discriminator bank: real pairs against detached fakes.
  LossReport d_report;
  {
    zero_grad(d_params);
    std::vector<Tensor> d_terms;
    for (std::size_t j = 0; j < heads.size(); ++j) {
      const auto s = static_cast<std::size_t>(heads[j]);
      const auto real = bank_.forward(s, batch.x[s], batch.y[s], Mode::train);
      const auto fake = bank_.forward(s, batch.x[s], z[j].detach(), Mode::train);
      d_terms.push_back(adversarial_d_loss(real.logits, fake.logits));
    }
    const Tensor total_d = total_d_loss(d_terms, d_report);
    check_finite(d_report.total_d, number, "discriminator loss");
    backward(total_d);
    adam_step(d_params, d_opt_);
  }
  if (after_d_) after_d_();

  // Generator: the bank is held fixed while its gradients are switched off.
  GeneratorObjective objective;
  {
    set_requires_grad(d_params, false);
    zero_grad(g_params);
    std::vector<Tensor> adv;
    std::vector<std::vector<Tensor>> real_feats, fake_feats;
    ScalePyramid y_heads;
    for (std::size_t j = 0; j < heads.size(); ++j) {
      const auto s = static_cast<std::size_t>(heads[j]);
      y_heads.images.push_back(batch.y[s]);
      auto fake = bank_.forward(s, batch.x[s], z[j], Mode::train);
      adv.push_back(adversarial_g_loss(fake.logits));
      if (w.alpha != 0) {
        real_feats.push_back(bank_.forward(s, batch.x[s], batch.y[s], Mode::train).features);
        fake_feats.push_back(std::move(fake.features));
      }
    }
    const Tensor fm = w.alpha != 0 ? feature_matching_loss(real_feats, fake_feats) : Tensor{};
    const Tensor perc = w.beta != 0 ? perceptual_loss(extractor_, y_heads, z) : Tensor{};
    objective = total_g_loss(adv, fm, perc, w);
    set_requires_grad(d_params, true);
    check_finite(objective.report.total_g, number, "generator loss");
    backward(objective.total);
    adam_step(g_params, g_opt_);
  }

  step_ = number;
  LossReport report = objective.report;
  report.step = number;
  report.adv_d = d_report.adv_d;
  report.total_d = d_report.total_d;
  return report;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ck;
  ck.put_text("config", config_.to_text());
  ck.put_i64("step", step_);
  ck.put_all(g_.parameters());
  ck.put_all(g_.buffers());
  ck.put_all(bank_.parameters());
  ck.put_all(bank_.buffers());
  ck.put_all(extractor_.parameters());
  put_optimizer(ck, "adam.g", g_opt_, g_.parameters());
  put_optimizer(ck, "adam.d", d_opt_, bank_.parameters());
  return ck;
}

void Trainer::restore(const Checkpoint& ck) {
  const RunConfig saved = RunConfig::parse(ck.text("config"));
  if (!(saved.architecture == config_.architecture)) {
    throw std::runtime_error("checkpoint was written for a different architecture");
  }
  const std::int64_t step = ck.i64("step");
  const std::int64_t g_step = ck.i64("adam.g.step");
  const std::int64_t d_step = ck.i64("adam.d.step");

  // Stage moments as tensors so a single restore validates every record.
  TensorList targets;
  for (const auto& list : {g_.parameters(), g_.buffers(), bank_.parameters(), bank_.buffers()}) {
    targets.insert(targets.end(), list.begin(), list.end());
  }
  auto stage_moments = [&](const std::string& prefix, std::int64_t opt_step, const TensorList& params) {
    TensorList staged;
    if (opt_step == 0) return staged;
    for (const auto& p : params) {
      for (const char* kind : {".m.", ".v."}) {
        staged.push_back({prefix + kind + p.name, Tensor(p.tensor.shape())});
      }
    }
    return staged;
  };
  const TensorList g_moments = stage_moments("adam.g", g_step, g_.parameters());
  const TensorList d_moments = stage_moments("adam.d", d_step, bank_.parameters());
  targets.insert(targets.end(), g_moments.begin(), g_moments.end());
  targets.insert(targets.end(), d_moments.begin(), d_moments.end());
  ck.restore(targets);

  auto unstage = [](const TensorList& staged, std::int64_t opt_step, OptimizerState& s) {
    s.step = opt_step;
    s.first_moment.clear();
    s.second_moment.clear();
    for (std::size_t i = 0; i < staged.size(); i += 2) {
      const auto m = staged[i].tensor.data();
      const auto v = staged[i + 1].tensor.data();
      s.first_moment.emplace_back(m.begin(), m.end());
      s.second_moment.emplace_back(v.begin(), v.end());
    }
  };
  unstage(g_moments, g_step, g_opt_);
  unstage(d_moments, d_step, d_opt_);
  step_ = step;
}

LoadedModel load_model(const fs::path& checkpoint_path) {
  const auto ck = Checkpoint::load(checkpoint_path);
  RunConfig config = RunConfig::parse(ck.text("config"));
  MsgUNetGenerator g(config.architecture, config.training.seed);
  TensorList targets = g.parameters();
  const TensorList buffers = g.buffers();
  targets.insert(targets.end(), buffers.begin(), buffers.end());
  ck.restore(targets);
  return LoadedModel{std::move(config), std::move(g)};
}

std::vector<double> per_scale_l1(MsgUNetGenerator& g, const TrainingSet& data) {
  const auto& heads = g.head_scales();
  std::vector<double> total(heads.size(), 0.0);
  NoGradGuard guard;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto z = g.forward(data.sources[i], Mode::eval);
    for (std::size_t j = 0; j < heads.size(); ++j) {
      total[j] += l1_distance(z[j], data.targets[i][static_cast<std::size_t>(heads[j])]).item();
    }
  }
  for (double& v : total) v /= static_cast<double>(data.size());
  return total;
}

namespace {

// Keeps the header and every row up to `step` so a resumed run appends
// exactly where the checkpoint stopped.
void truncate_log(const fs::path& path, std::int64_t step) {
  std::ifstream in(path);
  if (!in) return;
  std::string line, kept;
  bool header = true;
  while (std::getline(in, line)) {
    if (header || std::stoll(line.substr(0, line.find(','))) <= step) kept += line + "\n";
    header = false;
  }
  in.close();
  std::ofstream(path, std::ios::trunc) << kept;
}

}  // namespace

fs::path run_training(const RunConfig& config, const TrainOptions& options) {
  config.validate();
  const auto manifest = load_dataset(config.data.root, config.data.split);
  Trainer trainer(config, prepare_training_set(manifest, config.architecture.scale_chain));
  if (options.resume) trainer.restore(Checkpoint::load(*options.resume));

  const fs::path dir = config.output.dir;
  fs::create_directories(dir);
  const fs::path log_path = dir / "losses.csv";
  const std::size_t heads = trainer.generator().head_scales().size();
  std::ofstream log;
  if (options.resume && fs::exists(log_path)) {
    truncate_log(log_path, trainer.steps_done());
    log.open(log_path, std::ios::app);
  } else {
    log.open(log_path, std::ios::trunc);
    log << LossReport::csv_header(heads) << "\n";
  }
  if (!log) throw std::runtime_error(fmt::format("cannot write {}", log_path.string()));

  const std::int64_t total = trainer.total_steps();
  const auto& out = config.output;
  while (trainer.steps_done() < total) {
    const LossReport r = trainer.step();
    if (r.step % out.log_every == 0 || r.step == total) {
      log << r.csv_row() << "\n";
      log.flush();
      if (!log) throw std::runtime_error(fmt::format("write to {} failed at step {}", log_path.string(), r.step));
      if (options.log) *options.log << fmt::format("step {}/{} g={:.4f} d={:.4f}\n", r.step, total, r.total_g, r.total_d);
    }
    if (out.checkpoint_every > 0 && r.step % out.checkpoint_every == 0 && r.step != total) {
      trainer.checkpoint().save(dir / fmt::format("step_{:06d}.ckpt", r.step));
    }
  }
  const fs::path final_path = dir / "final.ckpt";
  trainer.checkpoint().save(final_path);
  return final_path;
}

}  // namespace msgu
