#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"

using namespace s3d::cli;

int main(int argc, char** argv) {
  CLI::App app{"Semantic 3D voxel segmentation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--seed", seed, "RNG seed (overrides the config)");
  app.add_option("--set", sets, "override a config key, key=value")
      ->allow_extra_args(false);

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  std::size_t count = 8;
  std::string gen_out;
  gen->add_option("--count", count, "number of scenes");
  gen->add_option("--out", gen_out, "output root (default: dataset_root)");

  app.add_subcommand("train", "train and write a checkpoint plus log");

  auto* eval = app.add_subcommand("eval", "print metrics over a split");
  EvalOptions eval_opts;
  std::string pred_dir;
  eval->add_option("--split", eval_opts.split, "train, val or test");
  eval->add_option("--predictions", pred_dir,
                   "score <id>.pred.pgm files instead of running the model");
  eval->add_flag("--ground-truth", eval_opts.ground_truth,
                 "score the labels against themselves");

  auto* pred = app.add_subcommand("predict", "write predicted label maps");
  PredictOptions pred_opts;
  std::string out_stem, out_dir;
  pred->add_option("--split", pred_opts.split, "train, val or test");
  pred->add_option("--sample", pred_opts.sample, "sample id");
  pred->add_option("--out", out_stem, "output stem for one sample");
  pred->add_option("--out-dir", out_dir, "output directory for the split");

  app.add_subcommand("check-geometry", "quadric order preservation suite");
  app.add_subcommand("grad-check", "finite-difference gradient suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  return run_command(
      [&]() -> int {
        std::vector<std::string> overrides = sets;
        if (seed) overrides.push_back("seed=" + std::to_string(*seed));
        const RunConfig cfg = load_run_config(config_path, overrides);
        if (gen->parsed()) {
          cmd_gen_data(cfg, count, gen_out.empty() ? cfg.dataset_root : gen_out,
                       std::cout);
          return kExitOk;
        }
        if (app.got_subcommand("train")) {
          cmd_train(cfg, std::cout);
          return kExitOk;
        }
        if (eval->parsed()) {
          if (!pred_dir.empty()) eval_opts.predictions = pred_dir;
          cmd_eval(cfg, eval_opts, std::cout);
          return kExitOk;
        }
        if (pred->parsed()) {
          pred_opts.out_stem = out_stem;
          pred_opts.out_dir = out_dir;
          cmd_predict(cfg, pred_opts, std::cout);
          return kExitOk;
        }
        if (app.got_subcommand("check-geometry")) {
          return cmd_check_geometry(cfg, std::cout) ? kExitOk : kExitValidation;
        }
        return cmd_grad_check(cfg, std::cout) ? kExitOk : kExitValidation;
      },
      std::cerr);
}
