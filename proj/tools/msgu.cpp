#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "msgu/harness/flops.hpp"
#include "msgu/harness/gradscan.hpp"
#include "msgu/harness/inference.hpp"
#include "msgu/harness/trainer.hpp"
#include "msgu/metrics.hpp"

namespace fs = std::filesystem;
using namespace msgu;

namespace {

void emit(const std::string& text, const std::string& csv_path) {
  if (csv_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(csv_path, std::ios::trunc);
  f << text;
  if (!f) throw std::runtime_error(fmt::format("cannot write {}", csv_path));
  std::cout << "wrote " << csv_path << "\n";
}

RunConfig load_config(const std::string& path) {
  RunConfig c = RunConfig::load(path);
  c.apply_environment();
  c.validate();
  return c;
}

std::optional<Extent> parse_degrade(const std::string& text) {
  if (text.empty()) return std::nullopt;
  return Extent::parse(text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-scale gradient U-Net: training, inference and evaluation"};
  app.require_subcommand(1);

  std::string config_path, resume, ckpt, input, degrade, out_dir, target_dir, data_root, split = "train",
                                                                               csv_path, levels;
  std::size_t count = 4;
  std::uint64_t seed = 0;
  std::string extent = "128x64";
  std::string infer_dir = "infer_out";

  auto* train = app.add_subcommand("train", "train from a config file");
  train->add_option("--config", config_path, "run config")->required()->check(CLI::ExistingFile);
  train->add_option("--resume", resume, "checkpoint to continue from")->check(CLI::ExistingFile);

  auto* infer_cmd = app.add_subcommand("infer", "translate images at every head scale");
  infer_cmd->add_option("--ckpt", ckpt, "checkpoint")->required()->check(CLI::ExistingFile);
  infer_cmd->add_option("--in", input, "image file or directory")->required()->check(CLI::ExistingPath);
  infer_cmd->add_option("--degrade", degrade, "downsample the input to this chain entry first (HxW)");
  infer_cmd->add_option("--out", infer_dir, "output directory")->capture_default_str();

  auto* eval_cmd = app.add_subcommand("eval", "PSNR, SSIM and VIF of outputs against targets");
  eval_cmd->add_option("--out", out_dir, "generated images")->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--target", target_dir, "reference images")->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--csv", csv_path, "write the report here instead of stdout");

  auto* ablate_cmd = app.add_subcommand("ablate", "SSIM grid of input resolution against output resolution");
  ablate_cmd->add_option("--ckpt", ckpt, "checkpoint")->required()->check(CLI::ExistingFile);
  ablate_cmd->add_option("--data", data_root, "dataset root")->required()->check(CLI::ExistingDirectory);
  ablate_cmd->add_option("--split", split, "dataset split (default train)");
  ablate_cmd->add_option("--levels", levels, "comma-separated degrade levels (default: every chain entry)");
  ablate_cmd->add_option("--csv", csv_path, "write the grid here instead of stdout");

  auto* gradscan_cmd = app.add_subcommand("gradscan", "gradient histograms with and without intermediate heads");
  gradscan_cmd->add_option("--config", config_path, "run config")->required()->check(CLI::ExistingFile);
  gradscan_cmd->add_option("--out", out_dir, "output directory (default: output.dir)");

  auto* flops_cmd = app.add_subcommand("flops", "analytic FLOPs of the configured networks");
  flops_cmd->add_option("--config", config_path, "run config")->required()->check(CLI::ExistingFile);
  flops_cmd->add_option("--csv", csv_path, "write the per-layer table here");

  auto* toy_cmd = app.add_subcommand("toy-data", "write a synthetic paired dataset");
  toy_cmd->add_option("--out", out_dir, "dataset root")->required();
  toy_cmd->add_option("--split", split, "split name (default train)");
  toy_cmd->add_option("--count", count, "number of pairs")->capture_default_str();
  toy_cmd->add_option("--extent", extent, "image size HxW")->capture_default_str();
  toy_cmd->add_option("--seed", seed, "scene seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      TrainOptions opts;
      opts.log = &std::cout;
      if (!resume.empty()) opts.resume = resume;
      const auto final_path = run_training(load_config(config_path), opts);
      std::cout << "final checkpoint: " << final_path.string() << "\n";
    } else if (*infer_cmd) {
      auto model = load_model(ckpt);
      for (const auto& p : infer(model.generator, input, parse_degrade(degrade), infer_dir)) {
        std::cout << p.string() << "\n";
      }
    } else if (*eval_cmd) {
      emit(evaluate_dataset(out_dir, target_dir).csv(), csv_path);
    } else if (*ablate_cmd) {
      auto model = load_model(ckpt);
      std::vector<Extent> degrade_levels;
      if (!levels.empty()) {
        std::stringstream ss(levels);
        std::string item;
        while (std::getline(ss, item, ',')) degrade_levels.push_back(Extent::parse(item));
      }
      emit(ablate(model.generator, load_dataset(data_root, split), degrade_levels).csv(), csv_path);
    } else if (*gradscan_cmd) {
      const RunConfig c = load_config(config_path);
      const auto data = prepare_training_set(load_dataset(c.data.root, c.data.split), c.architecture.scale_chain);
      const auto result = run_gradscan(c, data, &std::cout);
      const fs::path dir = out_dir.empty() ? c.output.dir : fs::path(out_dir);
      write_gradscan(result, dir);
      const auto seeds = c.gradscan.seeds.size();
      std::cout << fmt::format("earliest group {}: heads-on median larger in {}/{} seeds\n", result.earliest_group,
                               result.seeds_with_larger_early_median(), seeds);
      std::cout << fmt::format("deepest groups: heads-off near-zero mass >= heads-on in {}/{} seeds\n",
                               result.seeds_with_no_less_near_zero_mass(), seeds);
      std::cout << "wrote " << dir.string() << "\n";
    } else if (*flops_cmd) {
      const auto report = count_flops(load_config(config_path).architecture);
      if (!csv_path.empty()) emit(report.csv(), csv_path);
      std::cout << report.summary();
    } else if (*toy_cmd) {
      write_synthetic_dataset(out_dir, split, count, Extent::parse(extent), seed);
      std::cout << fmt::format("wrote {} pairs to {}\n", count, (fs::path(out_dir) / split).string());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
